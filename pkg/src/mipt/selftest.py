"""Fast built-in oracle checks, runnable without the test suite.

Each check returns ``(name, ok, detail)``. Everything here finishes in a few
seconds; the full suites live under ``tests/``.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import collapse, mitigation, qsim, tomography
from .circuits import run_trajectory, sample_circuit
from .entropy import renyi_entropy
from .pauli import enumerate_mubs


def _brute_partial_trace(psi: np.ndarray, n: int, keep: list) -> np.ndarray:
    k = len(keep)
    rho = np.zeros((1 << k, 1 << k), dtype=complex)
    rest = [q for q in range(n) if q not in keep]
    for r in range(1 << len(rest)):
        v = np.zeros(1 << k, dtype=complex)
        for a in range(1 << k):
            idx = 0
            for j, q in enumerate(keep):
                idx |= ((a >> j) & 1) << q
            for j, q in enumerate(rest):
                idx |= ((r >> j) & 1) << q
            v[a] = psi[idx]
        rho += np.outer(v, v.conj())
    return rho


def check_partial_trace():
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in range(1, 7):
        s = qsim.StateVector.random(n, rng)
        for keep in ([0], [n - 1], list(range(0, n, 2)), [n - 1, 0]):
            keep = list(dict.fromkeys(keep))
            got = qsim.reduced_density_matrix(s, keep)
            worst = max(worst, np.abs(got - _brute_partial_trace(s.amplitudes, n, keep)).max())
    return "reduced density matrix vs brute force", worst < 1e-10, f"max deviation {worst:.1e}"


def check_kraus_completeness():
    worst = max(qsim.KrausPair.null_type(e).completeness_error() for e in np.linspace(0, 1, 100))
    return "Kraus completeness", worst < 1e-12, f"max deviation {worst:.1e}"


def check_projective_limit():
    c = sample_circuit(4, 6, 0.5, 1.0, "weak", seed=3)
    weak = run_trajectory(c, 11)
    c.kind = "projective"
    proj = run_trajectory(c, 11)
    same = weak.measurement_outcomes == proj.measurement_outcomes and np.allclose(
        weak.final_state.amplitudes, proj.final_state.amplitudes, atol=1e-12
    )
    return "eta = 1 weak path equals projective path", same, "matched seed"


def check_mubs():
    details = []
    ok = True
    for n in (2, 3):
        part = enumerate_mubs(n)
        words = [s.letters for g in part.groups for s in g]
        ok &= len(part.groups) == (1 << n) + 1 and len(words) == 4**n - 1 == len(set(words))
        ok &= all(a.commutes(b) for g in part.groups for a, b in itertools.combinations(g, 2))
        bases = [tomography.mub_eigenbasis(g).vectors for g in part.groups]
        worst = max(
            np.abs(np.abs(a.conj().T @ b) ** 2 - 1 / (1 << n)).max() for a, b in itertools.combinations(bases, 2)
        )
        ok &= worst < 1e-10
        details.append(f"n={n}: {len(part.groups)} groups, overlap dev {worst:.0e}")
    return "MUB partitions", bool(ok), "; ".join(details)


def check_tomography():
    rng = np.random.default_rng(2)
    s = qsim.StateVector.random(3, rng)
    rho = tomography.state_tomography(s, [0, 1, 2], None, rng, method="mubqst")
    err = np.abs(rho - np.outer(s.amplitudes, s.amplitudes.conj())).max()
    return "MUB tomography round trip (exact probabilities)", err < 1e-10, f"max deviation {err:.1e}"


def check_readout_inversion():
    model = mitigation.ReadoutNoiseModel([0.1, 0.05], [0.02, 0.08])
    cal = mitigation.calibration_matrix(model)
    ideal = np.array([0.4, 0.1, 0.2, 0.3])
    back = mitigation.mitigate_counts(cal @ ideal, cal)
    err = np.abs(back - ideal).max()
    return "readout mitigation inverts exact noise", err < 1e-10, f"max deviation {err:.1e}"


def check_entropy():
    bell = qsim.StateVector(2, [1, 0, 0, 1])
    s = renyi_entropy(qsim.reduced_density_matrix(bell, [0]), 1.0)
    return "Bell-pair entropy is 1 bit", abs(s - 1) < 1e-12, f"S1 = {s:.12f}"


def check_collapse():
    ps = np.round(np.arange(0, 1.0001, 0.05), 10)
    data = collapse.synthetic_dataset([5, 6, 7, 8], ps, 1.9, 2.1, 0.25)
    fit = collapse.fit_exponents(data)
    ok = abs(fit.gamma0 - 1.9) <= 0.05 and abs(fit.nu0 - 2.1) <= 0.05
    return "collapse recovers synthetic exponents", ok, f"gamma={fit.gamma0:.3f} nu={fit.nu0:.3f}"


CHECKS = [
    check_partial_trace,
    check_kraus_completeness,
    check_projective_limit,
    check_entropy,
    check_mubs,
    check_tomography,
    check_readout_inversion,
    check_collapse,
]


def run_all():
    for check in CHECKS:
        try:
            yield check()
        except Exception as exc:  # a crashing check is a failed check
            yield check.__name__, False, f"{type(exc).__name__}: {exc}"
