"""Synthetic device noise and its mitigation.

Readout (RO) mitigation inverts a column-stochastic calibration matrix
(``C[reported, true]``) under a simplex constraint. Residual-entropy (RE)
correction subtracts the entropy seen at the ``p = eta = 1`` reference, scaled
by the ratio of estimated circuit errors. Outcome index bit ``k`` always
refers to the ``k``-th listed qubit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COMPLETE_MAX_QUBITS = 5
# default gate/readout error magnitudes for the two device families
EPS_1Q = 3e-4
EPS_2Q = 4e-3
EPS_RO_SMALL_DEVICE = 5e-3
EPS_RO_LARGE_DEVICE = 8e-2


@dataclass
class ReadoutNoiseModel:
    """Per-qubit flip rates: ``p01`` reports 1 given 0, ``p10`` reports 0 given 1."""

    p01: np.ndarray
    p10: np.ndarray

    def __post_init__(self):
        self.p01 = np.atleast_1d(np.asarray(self.p01, dtype=float))
        self.p10 = np.atleast_1d(np.asarray(self.p10, dtype=float))
        if self.p01.shape != self.p10.shape:
            raise ValueError("p01 and p10 need one entry per qubit")
        rates = np.concatenate([self.p01, self.p10])
        if np.any(rates < 0) or np.any(rates >= 0.5):
            raise ValueError("flip rates must lie in [0, 0.5)")

    @classmethod
    def uniform(cls, n: int, rate: float) -> "ReadoutNoiseModel":
        return cls(np.full(n, rate), np.full(n, rate))

    @property
    def n(self) -> int:
        return len(self.p01)

    def subset(self, qubits) -> "ReadoutNoiseModel":
        qubits = list(qubits)
        return ReadoutNoiseModel(self.p01[qubits], self.p10[qubits])

    def qubit_matrix(self, k: int) -> np.ndarray:
        a, b = self.p01[k], self.p10[k]
        return np.array([[1 - a, b], [a, 1 - b]])


def _kron_factors(factors) -> np.ndarray:
    """Kronecker product with ``factors[0]`` acting on the least-significant bit."""
    out = np.ones((1, 1))
    for f in factors:
        out = np.kron(f, out)
    return out


def apply_readout_noise(counts, model: ReadoutNoiseModel, rng=None) -> np.ndarray:
    """Flip every reported bit independently with its qubit's rate.

    Integer counts are resampled shot by shot. Non-integer input is taken as a
    probability-like vector and pushed through the exact transition matrix.
    """
    counts = np.asarray(counts)
    n = model.n
    if counts.shape != (1 << n,):
        raise ValueError(f"expected {1 << n} outcome counts")
    if not np.issubdtype(counts.dtype, np.integer) and not np.all(counts == np.round(counts)):
        return _kron_factors([model.qubit_matrix(k) for k in range(n)]) @ counts
    if rng is None:
        raise ValueError("sampling readout noise needs an rng")
    shots = np.repeat(np.arange(1 << n), counts.astype(np.int64))
    return np.bincount(flip_bits(shots, model, rng), minlength=1 << n)


def flip_bits(outcomes, model: ReadoutNoiseModel, rng) -> np.ndarray:
    """Readout noise on an array of integer outcomes, one entry per shot."""
    outcomes = np.array(outcomes, dtype=np.int64)
    for k in range(model.n):
        bit = (outcomes >> k) & 1
        rate = np.where(bit == 0, model.p01[k], model.p10[k])
        flips = rng.random(outcomes.shape[0]) < rate
        outcomes ^= flips.astype(np.int64) << k
    return outcomes


@dataclass
class TensoredCalibration:
    """Calibration as independent sub-register factors.

    ``registers[i]`` lists the qubits of factor ``i`` (low bit first).
    """

    factors: list
    registers: list

    @property
    def n(self) -> int:
        return sum(len(r) for r in self.registers)

    def full(self) -> np.ndarray:
        if any(r != [q] for r, q in zip(self.registers, itertools.count())):
            raise NotImplementedError("full() needs consecutive single-qubit registers")
        return _kron_factors(self.factors)

    def apply(self, vec: np.ndarray, inverse: bool = False) -> np.ndarray:
        """Multiply ``vec`` (length ``2^n``) by the calibration or its inverse."""
        n = self.n
        t = np.asarray(vec, dtype=float).reshape((2,) * n)
        for f, reg in zip(self.factors, self.registers):
            m = np.linalg.inv(f) if inverse else f
            k = len(reg)
            axes = [n - 1 - q for q in reversed(reg)]
            t = np.moveaxis(t, axes, list(range(k)))
            shape = t.shape
            t = (m @ t.reshape(1 << k, -1)).reshape(shape)
            t = np.moveaxis(t, list(range(k)), axes)
        return t.reshape(-1)

    def spectral_norm(self) -> float:
        return float(np.prod([np.linalg.norm(f, 2) for f in self.factors]))


def calibration_matrix(model: ReadoutNoiseModel, mode: str = "complete", sub_register_size: int = 1):
    """Calibration from a noise model: a ``2^n x 2^n`` matrix or tensored factors."""
    n = model.n
    if mode == "complete":
        if n > COMPLETE_MAX_QUBITS:
            raise ValueError(f"complete calibration is limited to {COMPLETE_MAX_QUBITS} qubits")
        return _kron_factors([model.qubit_matrix(k) for k in range(n)])
    if mode == "tensored":
        registers = [list(range(i, min(i + sub_register_size, n))) for i in range(0, n, sub_register_size)]
        factors = [_kron_factors([model.qubit_matrix(q) for q in reg]) for reg in registers]
        return TensoredCalibration(factors, registers)
    raise ValueError(f"unknown calibration mode {mode!r}")


def calibration_from_counts(counts) -> np.ndarray:
    """Column-normalize calibration counts ``counts[reported, prepared]``."""
    counts = np.asarray(counts, dtype=float)
    cal = counts / counts.sum(axis=0, keepdims=True)
    if abs(np.linalg.det(cal)) < 1e-12:
        raise ValueError("calibration matrix is singular")
    return cal


def reduce_calibration(matrix, measured_subset):
    """Marginalize a calibration onto ``measured_subset``.

    Reported bits of unmeasured qubits are summed out and their prepared bits
    averaged, so the result stays column-stochastic. For tensored calibrations
    with single-qubit registers the measured factors are kept.
    """
    subset = [int(q) for q in measured_subset]
    if not subset:
        raise ValueError("measured subset is empty")
    if isinstance(matrix, TensoredCalibration):
        lookup = {tuple(r): f for r, f in zip(matrix.registers, matrix.factors)}
        try:
            factors = [lookup[(q,)] for q in subset]
        except KeyError as exc:
            raise NotImplementedError("reduction across multi-qubit registers") from exc
        return TensoredCalibration(factors, [[k] for k in range(len(subset))])
    matrix = np.asarray(matrix, dtype=float)
    n = int(round(math.log2(matrix.shape[0])))
    if subset == list(range(n)):
        return matrix.copy()
    t = matrix.reshape((2,) * (2 * n))
    # row axis of qubit q is n-1-q, column axis is 2n-1-q
    rest = [q for q in range(n) if q not in subset]
    t = t.sum(axis=tuple(n - 1 - q for q in rest))
    t = t.mean(axis=tuple(2 * n - len(rest) - 1 - q for q in rest))
    # surviving axes run over kept qubits in descending order; put subset[-1] first
    current = sorted(subset, reverse=True)
    perm = [current.index(q) for q in reversed(subset)]
    m = len(subset)
    t = np.transpose(t, perm + [m + k for k in perm])
    return t.reshape(1 << m, 1 << m)


def _project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = total}``."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def mitigate_counts(raw_counts, calibration, tol: float = 1e-12, max_iter: int = 50_000) -> np.ndarray:
    """Least-squares inversion of readout noise restricted to the count simplex.

    Solves ``min ||C x - raw||`` with ``x >= 0`` and ``sum x = sum raw``. The
    plain inverse is returned when already feasible; otherwise an accelerated
    projected-gradient loop finishes the job.
    """
    y = np.asarray(raw_counts, dtype=float)
    total = y.sum()
    if isinstance(calibration, TensoredCalibration):
        forward = calibration.apply
        x = calibration.apply(y, inverse=True)
        lipschitz = calibration.spectral_norm() ** 2
        adjoint = TensoredCalibration([f.T for f in calibration.factors], calibration.registers).apply
    else:
        c = np.asarray(calibration, dtype=float)
        forward = c.__matmul__
        x = np.linalg.solve(c, y)
        lipschitz = np.linalg.norm(c, 2) ** 2
        adjoint = c.T.__matmul__
    if x.min() >= -tol * max(total, 1.0):
        return np.clip(x, 0.0, None)
    x = _project_simplex(x, total)
    z, t = x.copy(), 1.0
    step = 1.0 / lipschitz
    for _ in range(max_iter):
        x_new = _project_simplex(z - step * adjoint(forward(z) - y), total)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = x_new + ((t - 1) / t_new) * (x_new - x)
        if np.max(np.abs(x_new - x)) <= tol * max(total, 1.0):
            x = x_new
            break
        x, t = x_new, t_new
    return x


@dataclass
class GateCounts:
    """Per-qubit numbers of 1-qubit gates, CX gates and measurements."""

    n1q: np.ndarray
    n2q: np.ndarray
    nro: np.ndarray

    def __post_init__(self):
        self.n1q = np.asarray(self.n1q, dtype=int)
        self.n2q = np.asarray(self.n2q, dtype=int)
        self.nro = np.asarray(self.nro, dtype=int)
        if np.any(self.n1q < 0) or np.any(self.n2q < 0) or np.any(self.nro < 0):
            raise ValueError("gate counts must be non-negative")

    @classmethod
    def zeros(cls, n: int) -> "GateCounts":
        return cls(np.zeros(n, int), np.zeros(n, int), np.zeros(n, int))


def gate_counts(circuit, subsystem=None, tail_1q: int = 1) -> GateCounts:
    """Count gates per qubit for a sampled circuit plus its tomography tail.

    Each brick is one rotation and one CX on each of its qubits. A projective
    measurement is one readout. A weak measurement is charged to ancilla
    ``L + j``: two rotations, one CX and one readout for the coupling and
    measurement, plus one conditional X for the reset, with the CX also
    counted on the system qubit. The tail adds ``tail_1q`` basis-change
    rotations and one readout per subsystem qubit.
    """
    L = circuit.L
    weak = circuit.kind == "weak"
    gc = GateCounts.zeros(2 * L if weak else L)
    for step in circuit.layers:
        for q, _ in step.layer_a + step.layer_b:
            for j in (q, q + 1):
                gc.n1q[j] += 1
                gc.n2q[j] += 1
        for j in step.measured:
            if weak:
                a = L + j
                gc.n1q[a] += 3
                gc.n2q[a] += 1
                gc.nro[a] += 1
                gc.n2q[j] += 1
            else:
                gc.nro[j] += 1
    for j in subsystem or []:
        gc.n1q[j] += tail_1q
        gc.nro[j] += 1
    return gc


def circuit_error(counts: GateCounts, eps_1q: float = EPS_1Q, eps_2q: float = EPS_2Q, eps_ro: float = EPS_RO_SMALL_DEVICE) -> float:
    """Worst per-qubit sum of rate times gate count."""
    if min(eps_1q, eps_2q, eps_ro) < 0:
        raise ValueError("error rates must be non-negative")
    per_qubit = eps_1q * counts.n1q + eps_2q * counts.n2q + eps_ro * counts.nro
    return float(per_qubit.max()) if per_qubit.size else 0.0


def residual_entropy_correct(s_alpha: float, s_ref: float, mean_error_ratio: float = 1.0, scheme: str = "linear") -> float:
    """Remove the anomalous entropy calibrated at the ``p = eta = 1`` reference.

    ``linear`` subtracts ``mean_error_ratio * s_ref``; ``trivial`` subtracts
    ``s_ref`` unscaled. Results are floored at zero.
    """
    if s_ref < 0:
        raise ValueError("reference entropy must be non-negative")
    if mean_error_ratio < 0:
        raise ValueError("error ratio must be non-negative")
    if scheme == "linear":
        shift = mean_error_ratio * s_ref
    elif scheme == "trivial":
        shift = s_ref
    else:
        raise ValueError(f"unknown RE scheme {scheme!r}")
    out = s_alpha - shift
    return out if out > 0 else 0.0


def inflate_entropy(entropies, errors, bits_per_error: float):
    """Synthetic decoherence: add entropy proportional to each circuit's error."""
    return np.asarray(entropies, dtype=float) + bits_per_error * np.asarray(errors, dtype=float)


@dataclass
class DeviceModel:
    """Qubit graph with per-qubit error rates, indexed by node position."""

    nodes: list
    edges: list
    eps_1q: np.ndarray
    eps_2q: np.ndarray
    eps_ro: np.ndarray
    _adj: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.eps_1q = np.asarray(self.eps_1q, dtype=float)
        self.eps_2q = np.asarray(self.eps_2q, dtype=float)
        self.eps_ro = np.asarray(self.eps_ro, dtype=float)
        if min(self.eps_1q.min(), self.eps_2q.min(), self.eps_ro.min()) < 0:
            raise ValueError("error rates must be non-negative")
        self._adj = {v: set() for v in self.nodes}
        for a, b in self.edges:
            if a not in self._adj or b not in self._adj:
                raise ValueError(f"edge ({a}, {b}) references an unknown node")
            self._adj[a].add(b)
            self._adj[b].add(a)

    def neighbors(self, v) -> set:
        return self._adj[v]

    def index(self, v) -> int:
        return self.nodes.index(v)

    def readout_model(self, qubits) -> ReadoutNoiseModel:
        rates = np.array([self.eps_ro[self.index(q)] for q in qubits])
        return ReadoutNoiseModel(rates, rates)

    @classmethod
    def uniform_graph(cls, edges, n_nodes, eps_1q=EPS_1Q, eps_2q=EPS_2Q, eps_ro=EPS_RO_SMALL_DEVICE) -> "DeviceModel":
        return cls(list(range(n_nodes)), [tuple(e) for e in edges], np.full(n_nodes, eps_1q), np.full(n_nodes, eps_2q), np.full(n_nodes, eps_ro))

    @classmethod
    def line(cls, n_nodes, **rates) -> "DeviceModel":
        return cls.uniform_graph([(i, i + 1) for i in range(n_nodes - 1)], n_nodes, **rates)

    @classmethod
    def ladder(cls, rungs, **rates) -> "DeviceModel":
        """Two rails ``0..r-1`` and ``r..2r-1`` joined rung by rung."""
        edges = [(i, i + 1) for i in range(rungs - 1)]
        edges += [(rungs + i, rungs + i + 1) for i in range(rungs - 1)]
        edges += [(i, rungs + i) for i in range(rungs)]
        return cls.uniform_graph(edges, 2 * rungs, **rates)

    @classmethod
    def from_text(cls, text: str) -> "DeviceModel":
        """Parse ``node <id> <eps_1q> <eps_2q> <eps_ro>`` and ``edge <a> <b>`` lines."""
        nodes, rates, edges = [], [], []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "node" and len(parts) == 5:
                    nodes.append(int(parts[1]))
                    rates.append([float(x) for x in parts[2:]])
                elif parts[0] == "edge" and len(parts) == 3:
                    edges.append((int(parts[1]), int(parts[2])))
                else:
                    raise ValueError(f"unrecognized record {parts[0]!r}")
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
        if not nodes:
            raise ValueError("device file lists no nodes")
        r = np.array(rates)
        return cls(nodes, edges, r[:, 0], r[:, 1], r[:, 2])

    @classmethod
    def load(cls, path) -> "DeviceModel":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        lines = ["# node <id> <eps_1q> <eps_2q> <eps_ro>; edge <a> <b>"]
        for v, a, b, c in zip(self.nodes, self.eps_1q, self.eps_2q, self.eps_ro):
            lines.append(f"node {v} {float(a)!r} {float(b)!r} {float(c)!r}")
        lines += [f"edge {a} {b}" for a, b in self.edges]
        return "\n".join(lines) + "\n"


def mean_counts(ensemble) -> tuple:
    ensemble = list(ensemble)
    if not ensemble:
        raise ValueError("empty circuit ensemble")
    return tuple(np.mean([getattr(g, f) for g in ensemble], axis=0) for f in ("n1q", "n2q", "nro"))


def _simple_paths(device: DeviceModel, length: int):
    def extend(path):
        if len(path) == length:
            yield tuple(path)
            return
        for nb in sorted(device.neighbors(path[-1])):
            if nb not in path:
                path.append(nb)
                yield from extend(path)
                path.pop()

    for start in sorted(device.nodes):
        yield from extend([start])


def select_qubits(device: DeviceModel, circuits, L_needed: int, layout: str = "chain") -> list:
    """Exhaustively pick the device qubits minimizing the mean summed error.

    ``circuits`` is an ensemble of :class:`GateCounts` whose entry ``i`` is the
    ``i``-th logical qubit (system chain first, then ancillas for the
    ``chain-with-ancillas`` layout). Returns the device qubits in logical order;
    ties go to the smallest qubit sequence.
    """
    n1q, n2q, nro = mean_counts(circuits)
    idx = {v: i for i, v in enumerate(device.nodes)}

    def cost(logical: int, v) -> float:
        i = idx[v]
        return device.eps_1q[i] * n1q[logical] + device.eps_2q[i] * n2q[logical] + device.eps_ro[i] * nro[logical]

    best = []
    for path in _simple_paths(device, L_needed):
        base = [cost(i, v) for i, v in enumerate(path)]
        if layout == "chain":
            best.append((math.fsum(base), path))
        elif layout == "chain-with-ancillas":
            choice = _best_ancillas(device, path, lambda i, v: cost(L_needed + i, v))
            if choice is not None:
                best.append((math.fsum(base) + choice[0], path + choice[1]))
        else:
            raise ValueError(f"unknown layout {layout!r}")
    if not best:
        raise ValueError("no feasible layout on this device")
    lowest = min(c for c, _ in best)
    ties = [seq for c, seq in best if c <= lowest + 1e-12 * max(abs(lowest), 1e-300)]
    return list(min(ties))


def _best_ancillas(device, path, cost):
    """Cheapest distinct ancilla per path qubit, each adjacent to its qubit."""
    used = set(path)
    best = None

    def assign(i, chosen, total):
        nonlocal best
        if i == len(path):
            key = (total, tuple(chosen))
            if best is None or key < best:
                best = key
            return
        for nb in sorted(device.neighbors(path[i])):
            if nb not in used and nb not in chosen:
                chosen.append(nb)
                assign(i + 1, chosen, total + cost(i, nb))
                chosen.pop()

    assign(0, [], 0.0)
    return best
