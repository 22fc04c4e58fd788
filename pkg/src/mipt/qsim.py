"""Dense statevector engine.

Basis convention: qubit ``q`` is bit ``q`` of the basis-state index, so qubit 0
is the least-significant bit. Two-qubit matrices passed to :func:`apply_2q`
are written in the local basis ``|a b>`` where the *first* qubit argument is
the high bit of the 4x4 index (``kron(u_a, u_b)`` acts as ``u_a`` on the first
qubit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARY_TOL = 1e-8
# branch probabilities below this are treated as impossible
DEGENERATE_PROB = 1e-14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# control on the first (high) qubit of the local basis
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
# control on the second (low) qubit
CX_REVERSED = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class StateVector:
    """Pure state of ``n_qubits`` qubits stored as a flat complex array."""

    def __init__(self, n_qubits: int, amplitudes=None):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = int(n_qubits)
        dim = 1 << self.n_qubits
        if amplitudes is None:
            self.amplitudes = np.zeros(dim, dtype=complex)
            self.amplitudes[0] = 1.0
        else:
            amps = np.array(amplitudes, dtype=complex).ravel()
            if amps.shape[0] != dim:
                raise ValueError(f"expected {dim} amplitudes, got {amps.shape[0]}")
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("zero state vector")
            self.amplitudes = amps / norm

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        return cls(n_qubits)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> "StateVector":
        dim = 1 << n_qubits
        amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls(n_qubits, amps)

    def copy(self) -> "StateVector":
        out = StateVector.__new__(StateVector)
        out.n_qubits = self.n_qubits
        out.amplitudes = self.amplitudes.copy()
        return out

    def norm(self) -> float:
        """Squared norm ``<psi|psi>``."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


@dataclass(frozen=True)
class KrausPair:
    """Two-outcome generalized measurement ``{m_plus, m_minus}``."""

    eta: float
    m_plus: np.ndarray
    m_minus: np.ndarray

    @classmethod
    def null_type(cls, eta: float) -> "KrausPair":
        """Null-type weak measurement of strength ``eta``.

        The ``+`` branch leaves ``|0>`` alone and damps ``|1>`` by
        ``sqrt(1 - eta)``; the ``-`` branch keeps only ``sqrt(eta)|1>``.
        """
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        m_plus = np.diag([1.0, np.sqrt(1.0 - eta)]).astype(complex)
        m_minus = np.diag([0.0, np.sqrt(eta)]).astype(complex)
        return cls(float(eta), m_plus, m_minus)

    def completeness_error(self) -> float:
        total = self.m_plus.conj().T @ self.m_plus + self.m_minus.conj().T @ self.m_minus
        return float(np.max(np.abs(total - I2)))

    @property
    def is_diagonal(self) -> bool:
        return not (self.m_plus[0, 1] or self.m_plus[1, 0] or self.m_minus[0, 1] or self.m_minus[1, 0])


def coupling_unitary(eta: float) -> np.ndarray:
    """Exact system-ancilla coupling ``V(eta)`` in the local basis ``|sys anc>``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    g = np.arcsin(np.sqrt(eta))
    c, s = np.cos(g), np.sin(g)
    v = np.eye(4, dtype=complex)
    v[2:, 2:] = [[c, -s], [s, c]]
    return v


def _ry(phi: float) -> np.ndarray:
    # real rotation exp(-i phi Y)
    return np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]], dtype=complex)


def single_cx_coupling(eta: float) -> np.ndarray:
    """One-CX circuit agreeing with :func:`coupling_unitary` when the ancilla is ``|0>``.

    Ancilla rotation, CX from system to ancilla, inverse ancilla rotation. On the
    ancilla-``|1>`` sector it differs from ``V(eta)``.
    """
    g = np.arcsin(np.sqrt(eta))
    a = np.pi / 4 - g / 2
    pre = np.kron(I2, _ry(a))
    post = np.kron(I2, _ry(-a))
    return post @ CX @ pre


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"qubit {q} out of range for {state.n_qubits} qubits")


def _check_unitary(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {u.shape}")
    if np.max(np.abs(u @ u.conj().T - np.eye(dim))) > UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    return u


def _apply_1q_matrix(state: StateVector, m: np.ndarray, q: int) -> None:
    n = state.n_qubits
    psi = state.amplitudes.reshape(1 << (n - q - 1), 2, 1 << q)
    state.amplitudes = np.matmul(m, psi).reshape(-1)


def apply_1q(state: StateVector, u, q: int) -> StateVector:
    """Apply a single-qubit unitary to qubit ``q`` in place."""
    _check_qubit(state, q)
    _apply_1q_matrix(state, _check_unitary(u, 2), q)
    return state


def apply_2q(state: StateVector, u, qa: int, qb: int) -> StateVector:
    """Apply a 4x4 unitary to qubits ``(qa, qb)``; ``qa`` is the high local bit."""
    _check_qubit(state, qa)
    _check_qubit(state, qb)
    if qa == qb:
        raise ValueError("two-qubit gate needs distinct qubits")
    u = _check_unitary(u, 4)
    n = state.n_qubits
    if abs(qa - qb) == 1:
        hi, lo = max(qa, qb), min(qa, qb)
        if qa < qb:
            u = SWAP @ u @ SWAP
        psi = state.amplitudes.reshape(1 << (n - hi - 1), 4, 1 << lo)
        state.amplitudes = np.matmul(u, psi).reshape(-1)
        return state
    axes = (n - 1 - qa, n - 1 - qb)
    psi = np.moveaxis(state.amplitudes.reshape((2,) * n), axes, (0, 1))
    shape = psi.shape
    psi = (u @ psi.reshape(4, -1)).reshape(shape)
    state.amplitudes = np.moveaxis(psi, (0, 1), axes).reshape(-1)
    return state


def _bit_view(state: StateVector, q: int) -> np.ndarray:
    """View of the amplitudes with qubit ``q`` on the middle axis."""
    n = state.n_qubits
    return state.amplitudes.reshape(1 << (n - q - 1), 2, 1 << q)


def _branch_weights(state: StateVector, q: int) -> tuple[float, float]:
    psi = _bit_view(state, q)
    p0 = float(np.sum(np.abs(psi[:, 0, :]) ** 2))
    p1 = float(np.sum(np.abs(psi[:, 1, :]) ** 2))
    return p0, p1


def _pick(prob_one: float, prob_zero: float, u: float) -> int:
    outcome = int(u < prob_one)
    # clamp: never select a numerically empty branch
    if outcome == 1 and prob_one < DEGENERATE_PROB:
        outcome = 0
    elif outcome == 0 and prob_zero < DEGENERATE_PROB:
        outcome = 1
    return outcome


def measure_z(state: StateVector, q: int, rng: np.random.Generator) -> tuple[int, StateVector]:
    """Projective Z measurement of qubit ``q``; returns ``(outcome, state)``."""
    _check_qubit(state, q)
    p0, p1 = _branch_weights(state, q)
    outcome = _pick(p1, p0, rng.random())
    psi = _bit_view(state, q)
    psi[:, 1 - outcome, :] = 0.0
    psi *= 1.0 / np.sqrt(p1 if outcome else p0)
    return outcome, state


def apply_weak_kraus(
    state: StateVector, kraus: KrausPair, q: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Sample a two-outcome Kraus measurement on qubit ``q``.

    Returns ``(outcome, state)`` with outcome 0 for the ``+`` branch and 1 for
    the ``-`` branch. One uniform draw decides the branch, exactly as in
    :func:`measure_z`, so ``eta = 1`` reproduces projective runs seed for seed.
    """
    _check_qubit(state, q)
    if kraus.completeness_error() > 1e-10:
        raise ValueError("Kraus pair is not complete")
    if kraus.is_diagonal:
        p0, p1 = _branch_weights(state, q)
        mp, mm = kraus.m_plus, kraus.m_minus
        p_minus = abs(mm[0, 0]) ** 2 * p0 + abs(mm[1, 1]) ** 2 * p1
        p_plus = abs(mp[0, 0]) ** 2 * p0 + abs(mp[1, 1]) ** 2 * p1
    else:
        trial = state.copy()
        _apply_1q_matrix(trial, kraus.m_minus, q)
        p_minus = trial.norm()
        p_plus = max(0.0, 1.0 - p_minus)
    outcome = _pick(p_minus, p_plus, rng.random())
    prob = p_minus if outcome else p_plus
    if prob <= 0.0:
        raise RuntimeError("selected a zero-probability measurement branch")
    _apply_1q_matrix(state, kraus.m_minus if outcome else kraus.m_plus, q)
    state.amplitudes *= 1.0 / np.sqrt(prob)
    return outcome, state


def ancilla_mass(state: StateVector, q: int) -> float:
    """Probability that qubit ``q`` reads 1."""
    return _branch_weights(state, q)[1]


def apply_weak_ancilla(
    state: StateVector,
    eta: float,
    q_sys: int,
    q_anc: int,
    rng: np.random.Generator,
    decomposition: str = "exact",
) -> tuple[int, StateVector]:
    """Weak measurement through an ancilla: couple, measure the ancilla, reset it.

    ``decomposition`` selects the exact ``V(eta)`` or the single-CX form, which
    agree on the ancilla-``|0>`` sector this routine requires.
    """
    _check_qubit(state, q_sys)
    _check_qubit(state, q_anc)
    if ancilla_mass(state, q_anc) > 1e-10:
        raise ValueError(f"ancilla qubit {q_anc} is not in |0>")
    if decomposition == "exact":
        v = coupling_unitary(eta)
    elif decomposition == "single-cx":
        v = single_cx_coupling(eta)
    else:
        raise ValueError(f"unknown decomposition {decomposition!r}")
    apply_2q(state, v, q_sys, q_anc)
    outcome, state = measure_z(state, q_anc, rng)
    if outcome:
        _apply_1q_matrix(state, X, q_anc)
    return outcome, state


def reset_qubit(state: StateVector, q: int, rng: np.random.Generator) -> StateVector:
    """Measure ``q`` in Z and flip it back to ``|0>`` on outcome 1."""
    outcome, state = measure_z(state, q, rng)
    if outcome:
        _apply_1q_matrix(state, X, q)
    return state


def reduced_density_matrix(state: StateVector, subsystem) -> np.ndarray:
    """Reduced density matrix on ``subsystem``.

    ``subsystem[0]`` becomes the least-significant bit of the reduced index.
    """
    qubits = [int(q) for q in subsystem]
    if not qubits:
        raise ValueError("empty subsystem")
    if len(set(qubits)) != len(qubits):
        raise ValueError("subsystem qubits must be distinct")
    for q in qubits:
        _check_qubit(state, q)
    n = state.n_qubits
    k = len(qubits)
    # the last listed qubit becomes the leading (most significant) axis
    axes = [n - 1 - q for q in reversed(qubits)]
    psi = np.moveaxis(state.amplitudes.reshape((2,) * n), axes, list(range(k)))
    m = psi.reshape(1 << k, -1)
    rho = m @ m.conj().T
    return 0.5 * (rho + rho.conj().T)
