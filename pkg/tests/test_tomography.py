import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mipt import qsim, tomography
from mipt.pauli import PauliString, all_strings

from oracles import pauli_matrix, random_density_matrix


def assert_density_matrix(rho):
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert abs(np.trace(rho) - 1) < 1e-10
    assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_eigenbasis_z_and_x():
    b = tomography.mub_eigenbasis(["Z"])
    np.testing.assert_allclose(np.abs(b.vectors), np.eye(2), atol=1e-12)
    np.testing.assert_array_equal(b.eigenvalues[:, 0], [1, -1])
    b = tomography.mub_eigenbasis(["X"])
    np.testing.assert_allclose(np.abs(b.vectors), np.full((2, 2), 2**-0.5), atol=1e-12)
    plus = b.vectors[:, 0]
    np.testing.assert_allclose(pauli_matrix("X") @ plus, plus, atol=1e-12)


def test_bell_basis():
    b = tomography.mub_eigenbasis(["XX", "YY", "ZZ"])
    for k in range(4):
        v = b.vectors[:, k]
        # each vector is maximally entangled
        rho = qsim.reduced_density_matrix(qsim.StateVector(2, v), [0])
        np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-12)
        for j, w in enumerate(["XX", "YY", "ZZ"]):
            np.testing.assert_allclose(pauli_matrix(w) @ v, b.eigenvalues[k, j] * v, atol=1e-12)


def test_eigenbasis_rejects_noncommuting():
    with pytest.raises(ValueError):
        tomography.mub_eigenbasis(["X", "Z"])


def test_simulate_shots_examples():
    rng = np.random.default_rng(0)
    zb = tomography.mub_eigenbasis(["Z"])
    counts = tomography.simulate_shots(qsim.StateVector(1), [0], zb, 100, rng)
    np.testing.assert_array_equal(counts, [100, 0])
    counts = tomography.simulate_shots(qsim.StateVector(1, [1, 1]), [0], zb, 10_000, rng)
    assert abs(counts[0] / 10_000 - 0.5) < 4 * 0.005
    bell = qsim.StateVector(2, [1, 0, 0, 1])
    bb = tomography.mub_eigenbasis(["XX", "YY", "ZZ"])
    counts = tomography.simulate_shots(bell, [0, 1], bb, 1000, rng)
    assert counts.max() == 1000 and counts.sum() == 1000
    k = int(np.argmax(counts))
    np.testing.assert_array_equal(bb.eigenvalues[k], [1, -1, 1])  # Phi+ is +XX, -YY, +ZZ
    with pytest.raises(ValueError):
        tomography.simulate_shots(bell, [0, 1], bb, 0, rng)


def test_expectations_from_counts():
    b = tomography.mub_eigenbasis(["Z"])
    assert tomography.expectations_from_counts([10, 0], b) == {"Z": 1.0}
    bb = tomography.mub_eigenbasis(["XX", "YY", "ZZ"])
    assert all(v == 0 for v in tomography.expectations_from_counts([5, 5, 5, 5], bb).values())
    with pytest.raises(ValueError):
        tomography.expectations_from_counts([0, 0], b)


def test_expectations_from_exact_probabilities():
    rng = np.random.default_rng(3)
    rho = random_density_matrix(2, rng)
    for setting in tomography.ssqst_settings(2):
        b = tomography.mub_eigenbasis(tomography.setting_group(setting))
        exp = tomography.expectations_from_counts(tomography.basis_probabilities(rho, b), b)
        for word, value in exp.items():
            assert value == pytest.approx(np.trace(rho @ pauli_matrix(word)).real, abs=1e-10)


def _exact_expectations(rho, n):
    return {s.letters: float(np.trace(rho @ s.matrix()).real) for s in all_strings(n, include_identity=True)}


def test_reconstruct_examples():
    for n in (1, 2, 3):
        zero = np.zeros((1 << n, 1 << n))
        zero[0, 0] = 1
        np.testing.assert_allclose(tomography.reconstruct(_exact_expectations(zero, n)), zero, atol=1e-8)
        mixed = np.eye(1 << n) / (1 << n)
        np.testing.assert_allclose(tomography.reconstruct(_exact_expectations(mixed, n)), mixed, atol=1e-8)


def test_reconstruct_rejects_bad_identity():
    exp = _exact_expectations(np.eye(2) / 2, 1)
    exp["I"] = 0.9
    with pytest.raises(ValueError):
        tomography.reconstruct(exp)
    del exp["X"]
    exp["I"] = 1.0
    with pytest.raises(ValueError):
        tomography.reconstruct(exp)


def test_linear_system_uses_column_stacking():
    rng = np.random.default_rng(2)
    rho = random_density_matrix(2, rng)
    system = tomography.pauli_linear_system(_exact_expectations(rho, 2), 2)
    assert system.a_matrix.shape == (16, 16) and system.p_vector[0] == pytest.approx(1)
    np.testing.assert_allclose(system.a_matrix @ rho.reshape(-1, order="F"), system.p_vector, atol=1e-12)


def test_nearest_density_matrix_is_psd_projection():
    mu = np.diag([0.7, 0.5, -0.1, -0.1])
    rho = tomography.nearest_density_matrix(mu)
    assert_density_matrix(rho)
    np.testing.assert_allclose(np.diag(rho), [0.6, 0.4, 0, 0], atol=1e-12)


def test_reconstruction_residual_is_minimal_against_convex_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(8)
    for n in (1, 2):
        rho = random_density_matrix(n, rng, rank=1)
        exp = _exact_expectations(rho, n)
        noisy = {k: (v if set(k) == {"I"} else float(np.clip(v + rng.normal(0, 0.15), -1, 1))) for k, v in exp.items()}
        system = tomography.pauli_linear_system(noisy, n)
        ours = tomography.reconstruct(noisy)
        d = 1 << n
        x = cp.Variable((d, d), hermitian=True)
        a = system.a_matrix
        residual = a @ cp.vec(x, order="F") - system.p_vector
        prob = cp.Problem(cp.Minimize(cp.sum_squares(residual)), [x >> 0, cp.trace(x) == 1])
        prob.solve()
        best = np.linalg.norm(a @ x.value.reshape(-1, order="F") - system.p_vector)
        got = np.linalg.norm(a @ ours.reshape(-1, order="F") - system.p_vector)
        assert got <= best + 1e-6


@pytest.mark.parametrize("n,method", [(1, "ssqst"), (2, "ssqst"), (2, "mubqst"), (3, "mubqst"), (3, "ssqst")])
def test_exact_round_trip(n, method):
    rng = np.random.default_rng(n)
    for _ in range(3):
        s = qsim.StateVector.random(n + 1, rng)
        rho = qsim.reduced_density_matrix(s, list(range(n)))
        got = tomography.state_tomography(s, list(range(n)), None, rng, method)
        np.testing.assert_allclose(got, rho, atol=1e-8)


def test_auto_policy():
    assert tomography.tomography_bases(2)[0] == "ssqst"
    assert tomography.tomography_bases(3)[0] == "mubqst"
    with pytest.raises(ValueError):
        tomography.tomography_bases(2, "mle")


def test_settings_counts():
    assert len(tomography.ssqst_settings(1)) == 3
    assert len(tomography.ssqst_settings(2)) == 9
    covered = {s.letters for setting in tomography.ssqst_settings(2) for s in tomography.setting_group(setting)}
    assert covered == {s.letters for s in all_strings(2)}
    assert len(tomography.ssqst_settings(4)) / len(tomography.tomography_bases(4)[1]) == pytest.approx(81 / 17)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.sampled_from([200, 2000, None]))
def test_outputs_are_density_matrices(n, seed, shots):
    rng = np.random.default_rng(seed)
    s = qsim.StateVector.random(n, rng)
    assert_density_matrix(tomography.state_tomography(s, list(range(n)), shots, rng))


def test_mubqst_fidelity_three_qubits():
    rng = np.random.default_rng(12)
    s = qsim.StateVector.random(3, rng)
    rho = tomography.state_tomography(s, [0, 1, 2], 100_000, rng, "mubqst")
    assert_density_matrix(rho)
    assert np.vdot(s.amplitudes, rho @ s.amplitudes).real > 0.99


def test_count_hook_sees_every_setting():
    seen = []
    s = qsim.StateVector.random(2, np.random.default_rng(0))

    def hook(counts, subsystem):
        seen.append(tuple(subsystem))
        return counts

    tomography.state_tomography(s, [1, 0], 100, np.random.default_rng(1), count_hook=hook)
    assert seen == [(1, 0)] * 9
