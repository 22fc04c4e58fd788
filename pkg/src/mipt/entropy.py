"""Renyi entropies, ensemble statistics and subsystem conventions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

EIG_CUTOFF = 1e-12
SUBSYSTEM_RULES = ("half", "quarter-floor", "quarter-ceil", "quarter-interp")


def check_density_matrix(rho, tol=1e-10, eig_tol=1e-8) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix trace is not 1")
    if np.min(np.linalg.eigvalsh(rho)) < -eig_tol:
        raise ValueError("density matrix has negative eigenvalues")


def renyi_entropy(rho, alpha: float) -> float:
    """Renyi entropy of order ``alpha`` in bits.

    ``alpha = 1`` is the von Neumann limit, ``alpha = 0`` counts the rank above
    the cutoff and ``alpha = inf`` gives the min-entropy.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    lam = np.linalg.eigvalsh(np.asarray(rho))
    lam = lam[lam > EIG_CUTOFF]
    if lam.size == 0:
        return 0.0
    lam = lam / lam.sum()
    if alpha == 0:
        s = math.log2(lam.size)
    elif alpha == 1:
        s = float(-np.sum(lam * np.log2(lam)))
    elif math.isinf(alpha):
        s = float(-np.log2(lam.max()))
    else:
        s = float(np.log2(np.sum(lam**alpha)) / (1.0 - alpha))
    return s if s > 0 else 0.0


def subsystem_for(L: int, rule: str = "half") -> list:
    """Contiguous subsystem anchored at qubit 0."""
    if L < 2:
        raise ValueError("L must be at least 2")
    if rule == "half":
        size = L // 2
    elif rule == "quarter-floor":
        size = L // 4
    elif rule == "quarter-ceil":
        size = -(-L // 4)
    else:
        raise ValueError(f"unknown subsystem rule {rule!r}")
    if size == 0:
        raise ValueError(f"rule {rule!r} gives an empty subsystem for L={L}")
    return list(range(size))


def interpolate_quarter(s_floor: float, s_ceil: float, L: int) -> float:
    """Linear interpolation between the floor(L/4) and ceil(L/4) entropies."""
    frac = L / 4 - L // 4
    if frac == 0:
        return float(s_floor)
    return float(s_floor + frac * (s_ceil - s_floor))


def bootstrap_ci(samples, level: float = 0.90, n_resamples: int = 10_000, seed=0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("bootstrap needs at least 2 samples")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if np.all(x == x[0]):
        return float(x[0]), float(x[0])
    res = stats.bootstrap(
        (x,),
        np.mean,
        n_resamples=n_resamples,
        confidence_level=level,
        method="percentile",
        vectorized=True,
        batch=max(1, min(n_resamples, 4_000_000 // x.size)),
        random_state=np.random.default_rng(seed),
    )
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


@dataclass
class EntropyEstimate:
    alpha: float
    mean: float
    variance: float
    ci_low: float
    ci_high: float
    ci_level: float
    n_samples: int

    @classmethod
    def from_samples(cls, samples, alpha, level=0.90, n_resamples=10_000, seed=0) -> "EntropyEstimate":
        x = np.asarray(samples, dtype=float)
        if x.size < 2:
            raise ValueError("need at least 2 samples")
        mean = float(x.mean())
        low, high = bootstrap_ci(x, level, n_resamples, seed)
        # percentile intervals of a skewed mean can miss it by rounding
        return cls(float(alpha), mean, float(x.var(ddof=1)), min(low, mean), max(high, mean), float(level), int(x.size))

    def to_dict(self) -> dict:
        return asdict(self)


def trajectory_entropies(params, rule: str, alphas, n_samples: int, seed: int, prefix=()) -> np.ndarray:
    """Exact per-trajectory entropies, shape ``(n_samples, len(alphas))``.

    ``params`` is a :class:`CircuitParams`. The ``quarter-interp`` rule evaluates
    both quarter subsystems and interpolates per trajectory.
    """
    from . import circuits, qsim

    L = params.L
    T = params.depth()
    if rule == "quarter-interp":
        subs = [subsystem_for(L, "quarter-floor"), subsystem_for(L, "quarter-ceil")]
    else:
        subs = [subsystem_for(L, rule)]
    out = np.zeros((n_samples, len(alphas)))
    for i in range(n_samples):
        c_seed, m_seed = circuits.trajectory_seeds(seed, i, *prefix)
        circuit = circuits.sample_circuit(L, T, params.p, params.eta, params.kind, c_seed)
        state = circuits.run_trajectory(circuit, m_seed).final_state
        for k, alpha in enumerate(alphas):
            vals = [renyi_entropy(qsim.reduced_density_matrix(state, s), alpha) for s in subs]
            out[i, k] = interpolate_quarter(vals[0], vals[1], L) if len(vals) == 2 else vals[0]
    return out


@dataclass(frozen=True)
class CircuitParams:
    """Circuit ensemble parameters; ``T=None`` means auto saturation depth."""

    L: int
    p: float
    eta: float = 1.0
    kind: str = "projective"
    T: int | None = None
    alpha_for_depth: float = 1.0

    def depth(self) -> int:
        if self.T is not None:
            return int(self.T)
        from .circuits import saturation_depth

        return saturation_depth(self.L, self.p, self.eta, self.kind, self.alpha_for_depth)


def ensemble_entropy(params: CircuitParams, rule="half", alpha=1.0, n_samples=300, seed=0, level=0.90, n_resamples=10_000) -> EntropyEstimate:
    """Mean, unbiased variance and bootstrap CI of the trajectory entropies."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    samples = trajectory_entropies(params, rule, [alpha], n_samples, seed)[:, 0]
    return EntropyEstimate.from_samples(samples, alpha, level, n_resamples, seed)
