import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from sptmbqc import mbqc, mps
from sptmbqc.errors import DeadDirection, IndexOutOfRange, ValidationError
from sptmbqc.linalg import Channel, pure_density, trace_distance

from conftest import PAULI


def rz(angle):
    return scipy.linalg.expm(-0.5j * angle * PAULI["z"])


@pytest.fixture(scope="module")
def dead_tensor():
    # b_y = 0 kills every nu entry involving y
    b = np.array([1, 0, 1], dtype=complex).reshape(3, 1, 1) / math.sqrt(2)
    return mps.spt_tensor(mps.aklt_tensor().ops, b, ("x", "y", "z"))


# ---------------------------------------------------------------- bases


def test_tilted_zero_is_wire(aklt):
    b = mbqc.tilted_basis(aklt, "x", "y", 0.0, 0.4)
    np.testing.assert_array_equal(b.vectors, np.eye(3))


@given(st.floats(-0.3, 0.3), st.floats(-math.pi, math.pi), st.sampled_from([(0, 1), (0, 2), (1, 2), (2, 0)]))
def test_tilted_basis_structure(dtheta, phi, pair):
    t = mps.aklt_tensor()
    i, j = pair
    b = mbqc.tilted_basis(t, i, j, dtheta, phi)
    v = b.vectors
    np.testing.assert_allclose(v.conj() @ v.T, np.eye(3), atol=1e-10)
    n = math.sqrt(1 + dtheta**2)
    ei, ej = np.eye(3)[i], np.eye(3)[j]
    np.testing.assert_allclose(v[i], (ei + dtheta * np.exp(1j * phi) * ej) / n, atol=1e-14)
    np.testing.assert_allclose(v[j], (ej - dtheta * np.exp(-1j * phi) * ei) / n, atol=1e-14)
    k = 3 - i - j
    np.testing.assert_array_equal(v[k], np.eye(3)[k])
    assert b.labels == (0, 1, 2)


def test_tilted_basis_errors(aklt):
    with pytest.raises(IndexOutOfRange):
        mbqc.tilted_basis(aklt, 0, 3, 0.1, 0.0)
    with pytest.raises(ValidationError):
        mbqc.tilted_basis(aklt, 0, 0, 0.1, 0.0)
    with pytest.raises(ValidationError):
        mbqc.tilted_basis(aklt, 0, 1, 0.31, 0.0)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.2, -0.7])
def test_aklt_basis(aklt, theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    expected = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    np.testing.assert_allclose(mbqc.aklt_basis(aklt, theta).vectors, expected, atol=1e-15)


def test_byproduct_frame():
    from sptmbqc.cohomology import FiniteAbelianGroup

    g = FiniteAbelianGroup((2, 2))
    f = mbqc.ByproductFrame.fresh(g)
    assert f.accumulated == (0, 0)
    assert f.compose((1, 0)).compose((1, 1)).accumulated == (0, 1)


# ---------------------------------------------------------------- steps


def test_wire_step_acts_on_junk_only(haldane, psi):
    rng = np.random.default_rng(1)
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    junk = z @ z.conj().T
    junk /= np.trace(junk)
    s0 = mbqc.MixedVirtualState.product(psi, junk)
    s1 = mbqc.sum_over_outcomes_step(s0, mbqc.wire_basis(haldane), haldane)
    expected = np.kron(pure_density(psi), Channel(list(haldane.junk))(junk))
    np.testing.assert_allclose(s1.rho, expected, atol=1e-14)
    assert abs(s1.pre_trace - 1) < 1e-10


@pytest.mark.parametrize("theta", [0.2, 0.7, 1.5, math.pi / 2])
def test_finite_angle_mixture(aklt, plus, theta):
    s = mbqc.sum_over_outcomes_step(mbqc.initial_state(aklt, plus), mbqc.aklt_basis(aklt, theta), aklt)
    l0 = pure_density(plus)
    u = rz(theta)
    ref = (2 / 3) * u @ l0 @ u.conj().T + (1 / 3) * l0
    assert s.trace_distance(ref) <= 1e-10


def test_small_angle_reduced_rotation(aklt, plus):
    d = 1e-3
    s = mbqc.sum_over_outcomes_step(mbqc.initial_state(aklt, plus), mbqc.aklt_basis(aklt, d), aklt)
    u = rz(2 * d / 3)
    assert s.trace_distance(u @ pure_density(plus) @ u.conj().T) <= 1e-6


@given(st.floats(-0.3, 0.3), st.floats(-3, 3))
def test_step_trace_preservation(dtheta, phi):
    t = mps.haldane_tensor(2, 8)
    s0 = mbqc.initial_state(t, np.array([0.6, 0.8j]))
    s1 = mbqc.sum_over_outcomes_step(s0, mbqc.tilted_basis(t, 0, 2, dtheta, phi), t)
    assert abs(s1.pre_trace - 1) < 1e-10
    assert abs(np.trace(s1.rho) - 1) < 1e-10
    assert s1.min_eigenvalue() >= -1e-10


def test_basis_dimension_mismatch(aklt):
    b = mbqc.MeasurementBasis(np.eye(2), (0, 1))
    with pytest.raises(ValidationError):
        mbqc.sum_over_outcomes_step(mbqc.initial_state(aklt, [1, 0]), b, aklt)


# ---------------------------------------------------------------- pumping


def test_pump_kappa1_identity(aklt, plus):
    s = mbqc.initial_state(aklt, plus)
    assert mbqc.pump_fixed_point(s, aklt, 17) is s


def test_pump_zero(haldane, plus):
    s = mbqc.MixedVirtualState.product(plus, np.diag([1.0, 0.0]))
    assert mbqc.pump_fixed_point(s, haldane, 0) is s


@pytest.mark.parametrize("seed", [7, 8])
def test_pump_converges(seed, plus):
    t = mps.haldane_tensor(2, seed)
    fp = mps.fixed_point_data(Channel(list(t.junk)))
    s = mbqc.MixedVirtualState.product(plus, np.diag([1.0, 0.0]))
    out = mbqc.pump_fixed_point(s, t, 30)
    err = trace_distance(out.junk, fp.rho_fix)
    assert err <= 1e-6
    # spectral bound with the decay constant of the junk channel
    assert err <= 2 * fp.decay_constant * fp.lambda1**30 + 1e-15


# ---------------------------------------------------------------- calibration


def test_nu_aklt(aklt_nu):
    np.testing.assert_allclose(aklt_nu.nu, np.full((3, 3), 1 / 3), atol=1e-12)
    assert aklt_nu.total == pytest.approx(1.0, abs=1e-12)
    assert not aklt_nu.dead.any()


@given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=3, max_size=3)
       .filter(lambda z: min(abs(x) for x in z) > 1e-2))
def test_nu_kappa1_outer_product(b):
    b = np.array(b)
    b = b / np.linalg.norm(b)
    t = mps.spt_tensor(mps.aklt_tensor().ops, b.reshape(3, 1, 1))
    nu = mbqc.calibrate_nu(t)
    np.testing.assert_allclose(nu.nu, np.outer(b, b.conj()), atol=1e-12)
    assert abs(nu.total - 1) < 1e-12


@pytest.mark.parametrize("seed", [7, 8, 11])
def test_nu_hermitian_and_iterative(seed):
    t = mps.haldane_tensor(2, seed)
    nu = mbqc.calibrate_nu(t)
    np.testing.assert_allclose(nu.nu, nu.nu.conj().T, atol=1e-10)
    assert np.all(np.real(np.diag(nu.nu)) >= 0)
    np.testing.assert_allclose(mbqc.calibrate_nu_iterative(t).nu, nu.nu, atol=1e-10)


def test_nu_dead(dead_tensor):
    nu = mbqc.calibrate_nu(dead_tensor)
    assert nu.dead[0, 1] and nu.dead[1, 2] and not nu.dead[0, 2]
    with pytest.raises(DeadDirection):
        mbqc.predicted_gate(dead_tensor, "x", "y", 1e-3, 0.0, nu)
    with pytest.raises(DeadDirection):
        mbqc.compile_rotation(dead_tensor, nu, "x", "y", 0.0, 0.5, 1e-2)


# ---------------------------------------------------------------- first-order gate


def test_predicted_gate_closed_form(aklt, aklt_nu):
    # the basis angle is twice the tilt coefficient
    d = 1e-3
    t = mbqc.predicted_gate(aklt, "x", "y", d / 2, math.pi, aklt_nu)
    nu = aklt_nu.nu
    ref = scipy.linalg.expm(-1j * d * np.real(nu[0, 1] + nu[1, 0]) / (2 * aklt_nu.total) * PAULI["z"])
    np.testing.assert_allclose(t, ref, atol=1e-15)


def test_predicted_gate_identity(haldane, haldane_nu):
    np.testing.assert_allclose(mbqc.predicted_gate(haldane, 0, 2, 0.0, 1.0, haldane_nu), np.eye(2), atol=1e-15)


@given(st.floats(-0.3, 0.3), st.floats(-4, 4), st.sampled_from([(0, 1), (0, 2), (1, 2)]))
def test_predicted_gate_unitary(dtheta, phi, pair):
    t = mps.haldane_tensor(2, 8)
    u = mbqc.predicted_gate(t, *pair, dtheta, phi, mbqc.calibrate_nu(t))
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)


def test_execute_and_compare_aklt(aklt, plus):
    c = mbqc.execute_and_compare(plus, aklt, "x", "y", 1e-3, math.pi, 0)
    assert c.residual <= 1e-5
    a, b = c  # iterates as (state, residual)
    assert b == c.residual


def test_execute_and_compare_zero_angle(haldane, psi):
    c = mbqc.execute_and_compare(psi, haldane, "x", "y", 0.0, math.pi, 10)
    assert c.residual <= c.pump_bound + 1e-15


@pytest.mark.parametrize("pair,phi", [(("x", "y"), math.pi), (("x", "z"), 0.4), (("y", "z"), 1.1)])
def test_first_order_quadratic(haldane, haldane_nu, psi, pair, phi):
    r1 = mbqc.execute_and_compare(psi, haldane, *pair, 1e-3, phi, 80, haldane_nu).residual
    r2 = mbqc.execute_and_compare(psi, haldane, *pair, 2e-3, phi, 80, haldane_nu).residual
    assert r2 / r1 >= 3
    assert r2 / r1 == pytest.approx(4, rel=0.05)


# ---------------------------------------------------------------- compilation


def test_compile_aklt_numbers(aklt, aklt_nu):
    theta = math.pi / 2
    p = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, theta, 1e-2)
    assert p.N == math.ceil(theta**2 / 1e-2) == 247
    assert p.m == 0
    assert p.cost == p.N * (p.m + 1)
    assert p.physical_angle == pytest.approx(1.5 * theta / p.N, rel=1e-4)


def test_compile_zero_angle(aklt, aklt_nu, plus):
    p = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, 0.0, 1e-2)
    assert p.N == 1 and p.dtheta == 0
    out = mbqc.run_program(p, plus, aklt)
    assert trace_distance(out.logical, pure_density(plus)) <= 1e-14


def test_compile_cost_scaling(aklt, aklt_nu):
    c1 = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, math.pi / 2, 1e-2).cost
    c2 = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, math.pi / 2, 5e-3).cost
    assert c2 / c1 == pytest.approx(2, rel=0.01)


def test_compile_step_cap(aklt, aklt_nu):
    # a loose epsilon would allow huge steps; the physical angle stays capped
    p = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, math.pi, 10.0)
    assert p.physical_angle <= mbqc.STEP_CAP + 1e-15


def test_compile_kappa2_pump_length(haldane, haldane_nu):
    p = mbqc.compile_rotation(haldane, haldane_nu, "x", "y", math.pi, math.pi / 2, 1e-2)
    fp = mps.fixed_point_data(Channel(list(haldane.junk)))
    assert p.m == math.ceil(max(2 * fp.xi * math.log(p.N), 1))


def test_program_validation(aklt, aklt_nu):
    with pytest.raises(ValidationError):
        mbqc.program_for(aklt, aklt_nu, "x", "y", 0.0, 1.0, 0, 0)
    with pytest.raises(ValidationError):
        mbqc.compile_rotation(aklt, aklt_nu, "x", "y", 0.0, 1.0, 0.0)


# ---------------------------------------------------------------- execution


def test_run_program_rotation(aklt, aklt_nu, plus):
    eps = 1e-2
    p = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, math.pi / 2, eps)
    out = mbqc.run_program(p, plus, aklt)
    u = rz(math.pi / 2)
    # the target is exp(-i pi sigma_z / 4) up to orientation of sigma_z
    err = min(trace_distance(out.logical, v @ pure_density(plus) @ v.conj().T) for v in (u, u.conj().T))
    assert err <= 3 * eps
    assert mbqc.logical_error(aklt, p, out, plus) == pytest.approx(err, abs=1e-12)


def test_run_empty_program(haldane):
    p = mbqc.GateProgram((0, 1), 0.0, 0.0, 0, 0, 0.0, 0.0, ())
    sigma0 = np.array([0.6, 0.8])
    out = mbqc.run_program(p, sigma0, haldane)
    fp = mps.fixed_point_data(Channel(list(haldane.junk)))
    np.testing.assert_allclose(out.rho, np.kron(pure_density(sigma0), fp.rho_fix), atol=1e-15)


def test_program_composition(aklt, aklt_nu, plus):
    eps = 1e-2
    whole = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, 1.2, eps)
    half = mbqc.compile_rotation(aklt, aklt_nu, "x", "y", math.pi, 0.6, eps)
    a = mbqc.run_program(whole, plus, aklt)
    b = mbqc.run_program(half, mbqc.run_program(half, plus, aklt), aklt)
    assert a.trace_distance(b) <= 2 * eps


def test_run_program_deterministic(haldane, haldane_nu, psi):
    p = mbqc.program_for(haldane, haldane_nu, "x", "z", 0.4, 0.5, 20, 3)
    assert np.array_equal(mbqc.run_program(p, psi, haldane).rho, mbqc.run_program(p, psi, haldane).rho)


@pytest.mark.parametrize("tensor", ["aklt", "haldane"])
def test_operational_nu(request, tensor):
    t = request.getfixturevalue(tensor)
    nu = mbqc.calibrate_nu(t)
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        est = mbqc.operational_nu(t, i, j)
        assert est.ratio == pytest.approx(nu.ratio(i, j), rel=1e-2)
        assert abs(np.angle(np.exp(1j * (est.phase - nu.phases[i, j])))) < 1e-2


# ---------------------------------------------------------------- trajectories


def test_trajectories_single_step(aklt, plus):
    basis = mbqc.aklt_basis(aklt, 0.1)
    rbar, log = mbqc.sample_trajectories([basis], plus, aklt, 100_000, 5)
    exact = mbqc.sum_over_outcomes_step(mbqc.initial_state(aklt, plus), basis, aklt)
    paulis = np.array([PAULI[k] for k in "xyz"])
    vals = np.real(np.einsum("sab,kba->sk", log.logical, paulis))
    sd = np.maximum(mbqc.bootstrap_sd(vals), 1e-12)
    ex = np.real(np.einsum("ab,kba->k", exact.logical, paulis))
    assert np.all(np.abs(vals.mean(axis=0) - ex) <= 5 * sd)
    assert rbar.trace_distance(exact) <= 5 * np.sqrt(np.sum(sd**2))


def test_trajectories_wire_only_bitwise(haldane, psi):
    _, log = mbqc.sample_trajectories([mbqc.wire_basis(haldane)] * 6, psi, haldane, 2000, 3)
    assert np.all(log.logical == log.logical[0])
    freq = log.frequencies()
    assert freq.shape == (6, 3)
    np.testing.assert_allclose(freq.sum(axis=1), 1)


def test_trajectories_seed_determinism(aklt, aklt_nu, plus):
    p = mbqc.program_for(aklt, aklt_nu, "x", "y", math.pi, 0.3, 3, 0)
    _, a = mbqc.sample_trajectories(p, plus, aklt, 500, 11)
    _, b = mbqc.sample_trajectories(p, plus, aklt, 500, 11)
    _, c = mbqc.sample_trajectories(p, plus, aklt, 200, 11)
    assert np.array_equal(a.outcomes, b.outcomes)
    assert np.array_equal(a.outcomes[:200], c.outcomes)


def test_trajectories_validation(aklt, plus):
    with pytest.raises(ValidationError):
        mbqc.sample_trajectories([mbqc.wire_basis(aklt)], plus, aklt, 0, 0)


# ---------------------------------------------------------------- readout


def test_readout_aklt_uniform(aklt):
    p = mbqc.readout_probabilities(mbqc.initial_state(aklt, [1, 0]), mbqc.wire_basis(aklt), aklt)
    np.testing.assert_allclose(p, [1 / 3] * 3, atol=1e-12)


@pytest.mark.parametrize("seed", [7, 8])
def test_readout_frame_invariance(seed, psi):
    t = mps.haldane_tensor(2, seed)
    nu = mbqc.calibrate_nu(t)
    sigma = mbqc.run_program(mbqc.program_for(t, nu, "x", "y", math.pi, 0.4, 16, 2), psi, t)
    basis = mbqc.tilted_basis(t, "x", "z", 0.2, 0.5)
    p0 = mbqc.readout_probabilities(sigma, basis, t)
    assert abs(p0.sum() - 1) < 1e-9
    for h in t.ops.irrep.group.elements:
        v = np.kron(t.ops.irrep(h), np.eye(t.junk_dim))
        ph = mbqc.readout_probabilities(v @ sigma.rho @ v.conj().T, basis.adapted(t.physical_rep(h)), t)
        np.testing.assert_allclose(ph, p0, atol=1e-10)


def test_readout_k_dependence(haldane, psi):
    fp = mps.fixed_point_data(Channel(list(haldane.junk)))
    sigma = mbqc.MixedVirtualState.product(psi, np.diag([1.0, 0.0]))
    basis = mbqc.tilted_basis(haldane, "x", "y", 0.2, 0.1)
    for k in (0, 3, 8):
        d = np.abs(mbqc.readout_probabilities(sigma, basis, haldane, k + 10)
                   - mbqc.readout_probabilities(sigma, basis, haldane, k))
        assert d.max() <= fp.decay_constant * fp.lambda1**k + 1e-12


def test_readout_negative_k(aklt):
    with pytest.raises(ValidationError):
        mbqc.readout_probabilities(mbqc.initial_state(aklt, [1, 0]), mbqc.wire_basis(aklt), aklt, -1)


# ---------------------------------------------------------------- scans


def test_scan_slope(aklt):
    rows = mbqc.error_scan(aklt, "x", "y", math.pi / 2, [50, 100, 200, 400, 800], [0])
    assert mbqc.loglog_slope(rows) == pytest.approx(-1, abs=0.15)
    text = mbqc.scan_csv(rows)
    assert text.splitlines()[0] == ",".join(mbqc.SCAN_COLUMNS)
    assert len(text.splitlines()) == 6


def test_scan_m_sweep_decay(haldane, psi):
    rows = mbqc.error_scan(haldane, "x", "y", math.pi / 2, [100], list(range(2, 31)), sigma0=psi)
    fp = mps.fixed_point_data(Channel(list(haldane.junk)))
    rate = mbqc.excess_decay_rate(rows)
    assert rate == pytest.approx(math.log(fp.lambda1), rel=0.05)


def test_scan_large_m_floor(haldane, psi):
    # at large m the remaining error is the pumping-free 1/N floor
    rows = mbqc.error_scan(haldane, "x", "y", math.pi / 2, [200], [40, 60], sigma0=psi)
    assert rows[0].error == pytest.approx(rows[1].error, abs=1e-12)


def test_scan_empty(aklt):
    with pytest.raises(ValidationError):
        mbqc.error_scan(aklt, "x", "y", 1.0, [], [0])
