"""Simulated state tomography.

Two strategies share the same machinery. SSQST measures all ``3^n`` product
Pauli settings and fits the projector frequencies; MUBQST measures the
``2^n + 1`` groups of :func:`mipt.pauli.enumerate_mubs`, recovers every Pauli
expectation and solves ``A vec(rho) = P``. Both finish with the same
Hermitian, unit-trace, PSD projection. SSQST is used up to two qubits and
MUBQST beyond, unless a method is forced.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from . import qsim
from .pauli import PauliString, all_strings, enumerate_mubs

SSQST_MAX_QUBITS = 2


@dataclass
class MeasurementBasis:
    """Joint eigenbasis of a commuting group.

    ``vectors[:, k]`` is the state behind outcome ``k``; ``eigenvalues[k, j]``
    is the eigenvalue (+1 or -1) of ``strings[j]`` on it.
    """

    strings: list
    vectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.strings[0].n


@dataclass
class LinearSystem:
    a_matrix: np.ndarray
    p_vector: np.ndarray
    strings: list


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-9))
    return v * (abs(v[k]) / v[k])


def mub_eigenbasis(group) -> MeasurementBasis:
    """Simultaneously diagonalize pairwise-commuting Pauli strings.

    Eigenspaces are refined one string at a time in group order, the ``+1``
    half before the ``-1`` half, so the outcome index reads the signs of the
    independent strings with the first one most significant. Degenerate
    leftovers (non-maximal groups) keep the eigh basis of the last split.
    """
    strings = [s if isinstance(s, PauliString) else PauliString(s) for s in group]
    if not strings:
        raise ValueError("empty group")
    n = strings[0].n
    for a, b in itertools.combinations(strings, 2):
        if not a.commutes(b):
            raise ValueError(f"{a} and {b} do not commute")
    mats = [s.matrix() for s in strings]
    blocks = [np.eye(1 << n, dtype=complex)]
    for m in mats:
        refined = []
        for b in blocks:
            w, v = np.linalg.eigh(b.conj().T @ m @ b)
            plus = v[:, w > 0]
            minus = v[:, w < 0]
            for part in (plus, minus):
                if part.shape[1]:
                    refined.append(b @ part)
        blocks = refined
    vectors = np.column_stack([_fix_phase(col) for b in blocks for col in b.T])
    eig = np.array([[np.vdot(v, m @ v).real for m in mats] for v in vectors.T])
    eigenvalues = np.where(eig > 0, 1, -1).astype(int)
    if np.max(np.abs(eig - eigenvalues)) > 1e-8:
        raise RuntimeError("simultaneous diagonalization failed")
    return MeasurementBasis(strings, vectors, eigenvalues)


def setting_group(setting) -> list:
    """All non-identity strings measurable in a product Pauli setting like ``"XZ"``."""
    options = [("I", c) for c in setting]
    words = ["".join(w) for w in itertools.product(*options)]
    return sorted((PauliString(w) for w in words if set(w) != {"I"}), key=PauliString.sort_key)


def ssqst_settings(n: int) -> list:
    """The ``3^n`` product settings ``{X,Y,Z}^n`` as letter strings."""
    if n < 1:
        raise ValueError("n must be positive")
    return ["".join(w) for w in itertools.product("XYZ", repeat=n)]


def basis_probabilities(rho: np.ndarray, basis: MeasurementBasis) -> np.ndarray:
    v = basis.vectors
    probs = np.einsum("ik,ij,jk->k", v.conj(), rho, v).real
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def simulate_shots(state, subsystem, basis: MeasurementBasis, shots: int, rng) -> np.ndarray:
    """Multinomial outcome counts for measuring ``subsystem`` in ``basis``."""
    if shots < 1:
        raise ValueError("shots must be positive")
    rho = qsim.reduced_density_matrix(state, subsystem)
    return rng.multinomial(int(shots), basis_probabilities(rho, basis))


def expectations_from_counts(counts, basis: MeasurementBasis) -> dict:
    """Pauli expectation of every string in the basis' group from outcome counts."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty counts")
    values = counts @ basis.eigenvalues / total
    return {s.letters: float(np.clip(v, -1.0, 1.0)) for s, v in zip(basis.strings, values)}


def nearest_density_matrix(mu: np.ndarray) -> np.ndarray:
    """Closest unit-trace PSD matrix (Frobenius norm) to a Hermitian ``mu``.

    Negative eigenvalues are zeroed from the bottom up and their weight spread
    evenly over the surviving ones until none is negative.
    """
    mu = 0.5 * (mu + mu.conj().T)
    mu = mu / np.trace(mu).real
    w, v = np.linalg.eigh(mu)
    w = w[::-1].copy()
    v = v[:, ::-1]
    d = len(w)
    acc = 0.0
    i = d
    while i > 0 and w[i - 1] + acc / i < 0:
        acc += w[i - 1]
        w[i - 1] = 0.0
        i -= 1
    w[:i] += acc / i
    rho = (v * w) @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


def _solve(a_matrix: np.ndarray, data: np.ndarray, d: int) -> np.ndarray:
    vec, *_ = np.linalg.lstsq(a_matrix, data.astype(complex), rcond=None)
    # vec is the column-stacked density matrix
    return nearest_density_matrix(vec.reshape(d, d, order="F"))


def pauli_linear_system(expectations: dict, n: int) -> LinearSystem:
    """Rows are row-flattened Pauli operators, identity first."""
    strings = all_strings(n, include_identity=True)
    rows, values = [], []
    for s in strings:
        if s.letters not in expectations:
            raise ValueError(f"missing expectation for {s.letters}")
        rows.append(s.matrix().reshape(-1))
        values.append(expectations[s.letters])
    return LinearSystem(np.array(rows), np.array(values, dtype=float), strings)


def reconstruct(expectations: dict, n: int | None = None) -> np.ndarray:
    """Constrained least-squares density matrix from a full Pauli expectation map."""
    expectations = {str(k): float(v) for k, v in expectations.items()}
    if n is None:
        n = len(next(iter(expectations)))
    identity = "I" * n
    if abs(expectations.get(identity, np.nan) - 1.0) > 1e-6:
        raise ValueError("identity expectation must be 1")
    system = pauli_linear_system(expectations, n)
    return _solve(system.a_matrix, system.p_vector, 1 << n)


def reconstruct_from_projectors(frequencies: list, bases: list) -> np.ndarray:
    """Constrained least-squares fit of outcome frequencies to basis projectors."""
    rows, data = [], []
    for freq, basis in zip(frequencies, bases):
        freq = np.asarray(freq, dtype=float)
        freq = freq / freq.sum()
        for k in range(basis.vectors.shape[1]):
            v = basis.vectors[:, k]
            rows.append(np.outer(v, v.conj()).reshape(-1))
            data.append(freq[k])
    return _solve(np.array(rows), np.array(data), bases[0].vectors.shape[0])


@functools.lru_cache(maxsize=None)
def tomography_bases(n: int, method: str = "auto") -> tuple[str, list]:
    if method == "auto":
        method = "ssqst" if n <= SSQST_MAX_QUBITS else "mubqst"
    if method == "ssqst":
        return method, [mub_eigenbasis(setting_group(s)) for s in ssqst_settings(n)]
    if method == "mubqst":
        return method, [mub_eigenbasis(g) for g in enumerate_mubs(n).groups]
    raise ValueError(f"unknown tomography method {method!r}")


def reconstruct_from_counts(method: str, counts: list, bases: list) -> np.ndarray:
    if method == "ssqst":
        return reconstruct_from_projectors(counts, bases)
    n = bases[0].n
    expectations = {"I" * n: 1.0}
    for c, basis in zip(counts, bases):
        expectations.update(expectations_from_counts(c, basis))
    return reconstruct(expectations, n)


def state_tomography(state, subsystem, shots, rng, method="auto", count_hook=None) -> np.ndarray:
    """Estimate the reduced state of ``subsystem`` from simulated measurements.

    ``shots=None`` feeds exact outcome probabilities instead of samples.
    ``count_hook(counts, subsystem)`` may rewrite each setting's counts, which is
    where readout noise and its mitigation plug in.
    """
    n = len(subsystem)
    method, bases = tomography_bases(n, method)
    rho = qsim.reduced_density_matrix(state, subsystem)
    counts = []
    for basis in bases:
        probs = basis_probabilities(rho, basis)
        c = probs.copy() if shots is None else rng.multinomial(int(shots), probs).astype(float)
        if count_hook is not None:
            c = count_hook(c, subsystem)
        counts.append(c)
    return reconstruct_from_counts(method, counts, bases)
