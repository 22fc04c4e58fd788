"""Hybrid random circuits on an open chain.

Each time step is a brickwork of randomized two-qubit gates (pairs ``(0,1),
(2,3), ...`` then ``(1,2), (3,4), ...``) followed by a measurement layer that
hits every qubit independently with probability ``p``. A two-qubit gate is a
pair of Haar single-qubit rotations followed by one CX of random direction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import qsim
from .rng import derive_seed, make_rng

KINDS = ("projective", "weak")
LOW_CONTROLS_HIGH = "low-controls-high"
HIGH_CONTROLS_LOW = "high-controls-low"
# bits of tolerated late-time excess in the saturation diagnostic
SATURATION_SLACK = 0.02


class SaturationError(RuntimeError):
    """Mean entropy did not plateau within the allowed depth."""


def sample_haar_1q(rng) -> np.ndarray:
    """Haar-random 2x2 unitary.

    The first column is uniform on the unit sphere of C^2 and the second is its
    orthogonal complement times a uniform phase, which is Haar on U(2).
    """
    rng = make_rng(rng)
    z = rng.normal(size=4)
    z /= np.sqrt(z @ z)
    a = complex(z[0], z[1])
    b = complex(z[2], z[3])
    phase = np.exp(2j * np.pi * rng.random())
    return np.array([[a, -b.conjugate() * phase], [b, a.conjugate() * phase]])


@dataclass(frozen=True)
class TwoQubitGateSpec:
    u_left: np.ndarray
    u_right: np.ndarray
    cx_direction: str

    def __post_init__(self):
        if self.cx_direction not in (LOW_CONTROLS_HIGH, HIGH_CONTROLS_LOW):
            raise ValueError(f"unknown CX direction {self.cx_direction!r}")
        cx = qsim.CX if self.cx_direction == LOW_CONTROLS_HIGH else qsim.CX_REVERSED
        object.__setattr__(self, "_matrix", cx @ np.kron(self.u_left, self.u_right))

    def matrix(self) -> np.ndarray:
        """4x4 unitary in the local basis ``|low high>`` (low qubit = high local bit).

        Rotations act first, then the CX.
        """
        return self._matrix


@dataclass
class Step:
    layer_a: list  # [(low qubit, TwoQubitGateSpec)]
    layer_b: list
    measured: tuple


@dataclass
class CircuitSpec:
    L: int
    T: int
    p: float
    eta: float
    kind: str
    layers: list
    seed: int

    def n_measurements(self) -> int:
        return sum(len(step.measured) for step in self.layers)


@dataclass
class TrajectoryRecord:
    final_state: qsim.StateVector
    measurement_outcomes: list = field(default_factory=list)  # (step, qubit, outcome)
    circuit: Optional[CircuitSpec] = None


def brick_pairs(L: int, layer: str) -> list:
    start = 0 if layer == "a" else 1
    return list(range(start, L - 1, 2))


def _sample_gate(rng) -> TwoQubitGateSpec:
    u_left = sample_haar_1q(rng)
    u_right = sample_haar_1q(rng)
    direction = LOW_CONTROLS_HIGH if rng.random() < 0.5 else HIGH_CONTROLS_LOW
    return TwoQubitGateSpec(u_left, u_right, direction)


def sample_circuit(L: int, T: int, p: float, eta: float = 1.0, kind: str = "projective", seed: int = 0) -> CircuitSpec:
    """Sample a circuit. The draw order is step-by-step, so the first ``t`` steps
    of a depth-``T`` circuit equal the depth-``t`` circuit with the same seed.
    Measurement placement uses one uniform per qubit per step regardless of
    ``p``, so circuits at different rates share their gates.
    """
    if L < 2:
        raise ValueError("need at least 2 qubits")
    if T < 1:
        raise ValueError("need at least one time step")
    if not (0.0 <= p <= 1.0 and 0.0 <= eta <= 1.0):
        raise ValueError("p and eta must lie in [0, 1]")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    rng = make_rng(seed)
    pairs_a = brick_pairs(L, "a")
    pairs_b = brick_pairs(L, "b")
    layers = []
    for _ in range(T):
        layer_a = [(q, _sample_gate(rng)) for q in pairs_a]
        layer_b = [(q, _sample_gate(rng)) for q in pairs_b]
        draws = rng.random(L)
        measured = tuple(int(q) for q in np.flatnonzero(draws < p))
        layers.append(Step(layer_a, layer_b, measured))
    return CircuitSpec(L, T, float(p), float(eta), kind, layers, int(seed))


def run_trajectory(
    circuit: CircuitSpec,
    seed,
    weak_path: str = "kraus",
    step_callback: Optional[Callable[[int, qsim.StateVector], None]] = None,
) -> TrajectoryRecord:
    """Evolve ``|0...0>`` through ``circuit``.

    ``weak_path`` is ``"kraus"`` (default) or ``"ancilla"``; the ancilla path
    appends one ancilla per system qubit (qubit ``L + j`` serves qubit ``j``).
    ``step_callback(t, state)`` runs after every step, ``t`` counting from 1.
    """
    rng = make_rng(seed)
    L = circuit.L
    use_ancilla = circuit.kind == "weak" and weak_path == "ancilla"
    state = qsim.StateVector(2 * L if use_ancilla else L)
    kraus = qsim.KrausPair.null_type(circuit.eta) if circuit.kind == "weak" else None
    outcomes = []
    for t, step in enumerate(circuit.layers, start=1):
        for q, gate in step.layer_a:
            qsim.apply_2q(state, gate.matrix(), q, q + 1)
        for q, gate in step.layer_b:
            qsim.apply_2q(state, gate.matrix(), q, q + 1)
        for q in step.measured:
            if circuit.kind == "projective":
                outcome, _ = qsim.measure_z(state, q, rng)
            elif use_ancilla:
                outcome, _ = qsim.apply_weak_ancilla(state, circuit.eta, q, L + q, rng)
            else:
                outcome, _ = qsim.apply_weak_kraus(state, kraus, q, rng)
            outcomes.append((t, q, outcome))
        if step_callback is not None:
            step_callback(t, state)
    if use_ancilla:
        # ancillas are reset to |0>, so the system factor is the leading block
        state = qsim.StateVector(L, state.amplitudes[: 1 << L])
    return TrajectoryRecord(state, outcomes, circuit)


def trajectory_seeds(master: int, index: int, *prefix: int) -> tuple:
    """(circuit seed, measurement seed) for trajectory ``index`` under ``master``."""
    return derive_seed(master, *prefix, index, 0), derive_seed(master, *prefix, index, 1)


def depth_profile(L, p, eta, kind, alpha, ensemble_size, seed, n_steps) -> np.ndarray:
    """Ensemble-mean half-chain Renyi entropy after each of ``n_steps`` steps.

    Entry ``t - 1`` is the mean at depth ``t``; returns shape ``(n_steps,)`` and
    the per-trajectory matrix as a second value.
    """
    from .entropy import renyi_entropy, subsystem_for

    sub = subsystem_for(L, "half")
    curves = np.zeros((ensemble_size, n_steps))
    for i in range(ensemble_size):
        c_seed, m_seed = trajectory_seeds(seed, i)
        circuit = sample_circuit(L, n_steps, p, eta, kind, c_seed)
        row = curves[i]

        def record(t, state, row=row):
            row[t - 1] = renyi_entropy(qsim.reduced_density_matrix(state, sub), alpha)

        run_trajectory(circuit, m_seed, step_callback=record)
    return curves.mean(axis=0), curves


@functools.lru_cache(maxsize=None)
def saturation_depth(L, p, eta=1.0, kind="projective", alpha=1.0, ensemble_size=50, seed=0, fraction=0.95) -> int:
    """Smallest depth whose mean half-chain entropy reaches ``fraction`` of the
    value at ``4L`` steps.

    The ensemble is run to ``8L`` steps. Saturation is diagnosed by comparing
    the mean over steps ``4L+1..8L`` with the mean over ``3L+1..4L``; if the
    later window is higher by more than 5% plus three standard errors plus
    ``SATURATION_SLACK`` bits (which absorbs flicker near zero entropy), the
    entropy is still growing and :class:`SaturationError` is raised.
    """
    if ensemble_size < 50:
        raise ValueError("ensemble_size must be at least 50")
    plateau_at = 4 * L
    mean, curves = depth_profile(L, p, eta, kind, alpha, ensemble_size, seed, 2 * plateau_at)
    plateau = mean[plateau_at - 1]
    window = curves[:, plateau_at - L:plateau_at].mean(axis=1)
    tail = curves[:, plateau_at:].mean(axis=1)
    n = len(tail)
    stderr = np.hypot(tail.std(ddof=1), window.std(ddof=1)) / np.sqrt(n)
    if tail.mean() > 1.05 * window.mean() + 3 * stderr + SATURATION_SLACK:
        raise SaturationError(
            f"entropy still growing past {plateau_at} steps (L={L}, p={p}, eta={eta})"
        )
    if plateau <= 1e-12:
        return 1
    hits = np.flatnonzero(mean[:plateau_at] >= fraction * plateau)
    return int(hits[0]) + 1
