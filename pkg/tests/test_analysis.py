import numpy as np
import pytest

from opendecay.analysis import (
    VerificationReport,
    apply_kraus,
    asymptotics_check,
    check_cp,
    check_positivity,
    check_trace,
    choi_matrix,
    kraus_amplitude_damping,
    mixedness,
)
from opendecay.errors import NotHermitianError
from opendecay.evolution import (
    IntegratorConfig,
    Trajectory,
    closed_form_1d,
    evolve_enlarged,
    propagate_exact,
)
from opendecay.linalg import unvec, vec
from opendecay.model import (
    SystemSpec,
    assemble_liouvillian,
    assemble_liouvillian_wwa,
    build_decay_operator,
    decompose_gamma,
    embed_operators,
    embed_state,
)
from opendecay.randmodel import random_system


def single_decay_model(m=1.0, gamma=1.0):
    spec = SystemSpec(d_s=1, d_f=1, hamiltonian=[[m]], decay_matrix=[[gamma]])
    decay = build_decay_operator(decompose_gamma([[gamma]]), 1)
    model = embed_operators(spec, decay)
    liouv = assemble_liouvillian(model.hamiltonian, model.lindblad_ops, model.decay_op)
    return spec, model, liouv


def closed_form_trajectory(gamma=1.0, t_max=5.0, n=51):
    times = np.linspace(0.0, t_max, n)
    states = tuple(closed_form_1d(1.0, gamma, t).to_full() for t in times)
    return Trajectory(times=times, states=states, d_s=1)


def exact_trajectory(liouv, rho0, t_max, n, d_s):
    h = t_max / n
    from opendecay.linalg import expm

    step = expm(liouv.matrix * h)
    v = vec(rho0)
    times = [0.0]
    states = [rho0.copy()]
    for k in range(1, n + 1):
        v = step @ v
        times.append(k * h)
        states.append(unvec(v, liouv.dim))
    return Trajectory(times=np.array(times), states=tuple(states), d_s=d_s)


# -- reports -------------------------------------------------------------------


def test_report_fails_iff_measured_exceeds_tolerance():
    ok = check_trace(closed_form_trajectory(), tol=1e-8)
    assert ok.status == "pass" and ok.measured <= ok.tolerance
    bad = check_trace(closed_form_trajectory(), tol=-1.0)
    assert bad.status == "fail" and bad.measured > bad.tolerance
    assert not bad.passed


# -- positivity ----------------------------------------------------------------


def test_positivity_closed_form():
    report = check_positivity(closed_form_trajectory(), tol=0.0)
    assert report.status == "pass"
    assert report.meta["min_eigenvalue"] >= 0.0


def test_positivity_random_trajectory():
    spec, rho0 = random_system(17, d_s=2, n_lindblad=1)
    decay = build_decay_operator(decompose_gamma(spec.decay_matrix), spec.d_f)
    model = embed_operators(spec, decay)
    cfg = IntegratorConfig(dt=1e-3, t_max=2.0, sample_stride=100)
    traj = evolve_enlarged(model, embed_state(rho0, spec.d_f), cfg)
    assert check_positivity(traj, tol=1e-8).status == "pass"


def test_positivity_flags_crafted_violation():
    traj = Trajectory(times=[0.0], states=(np.diag([-0.1, 1.1]),))
    report = check_positivity(traj, tol=1e-8)
    assert report.status == "fail"
    assert report.measured == pytest.approx(0.1)


def test_positivity_rejects_nonhermitian_sample():
    traj = Trajectory(times=[0.0], states=(np.array([[0.0, 1.0], [0.0, 1.0]]),))
    with pytest.raises(NotHermitianError):
        check_positivity(traj)


# -- Choi matrices and complete positivity ---------------------------------------


def test_choi_identity_map():
    choi = choi_matrix(lambda m: m, 2)
    lam = np.linalg.eigvalsh(choi.matrix)
    assert np.allclose(lam, [0.0, 0.0, 0.0, 2.0], atol=1e-12)
    assert check_cp(choi, tol=1e-10).status == "pass"


def test_choi_single_decay_survival():
    spec, model, liouv = single_decay_model(gamma=1.0)
    wwa = assemble_liouvillian_wwa(spec)
    t = 0.9

    def decay_map(rho):
        return propagate_exact(wwa, rho, t)

    choi = choi_matrix(decay_map, 1, t=t)
    assert choi.matrix.shape == (1, 1)
    assert abs(choi.matrix[0, 0] - np.exp(-t)) <= 1e-12


def test_choi_transpose_map_is_swap_and_fails_cp():
    # classical non-CP control: the Choi of transposition is the swap matrix
    choi = choi_matrix(lambda m: m.T, 2)
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2))
            unit[i, j] = 1.0
            swap += np.kron(unit, unit.T)
    assert np.abs(choi.matrix - swap).max() <= 1e-14
    report = check_cp(choi)
    assert report.status == "fail"
    assert report.meta["min_eigenvalue"] == pytest.approx(-1.0)


def test_choi_amplitude_damping_is_cp():
    pair = kraus_amplitude_damping(1.0, np.log(2.0))  # p = 0.5
    choi = choi_matrix(lambda rho: apply_kraus(rho, pair), 2)
    assert np.linalg.eigvalsh(choi.matrix)[0] >= -1e-9


def test_choi_enlarged_map_is_cp_and_trace_d():
    spec, rho0 = random_system(18, d_s=2, n_lindblad=2)
    decay = build_decay_operator(decompose_gamma(spec.decay_matrix), spec.d_f)
    model = embed_operators(spec, decay)
    liouv = assemble_liouvillian(model.hamiltonian, model.lindblad_ops, model.decay_op)
    d = model.d_tot
    for t in (0.5, 1.0, 5.0):
        choi = choi_matrix(lambda rho: propagate_exact(liouv, rho, t), d, t=t)
        assert check_cp(choi, tol=1e-10).status == "pass"
        assert abs(np.trace(choi.matrix).real - d) <= 1e-9


def test_choi_restricted_map_trace_non_increasing():
    spec, model, liouv = single_decay_model(gamma=1.0)

    def restricted(rho_ss):
        full = embed_state(rho_ss, 1)
        return propagate_exact(liouv, full, 1.0)[:1, :1]

    choi = choi_matrix(restricted, 1)
    assert np.trace(choi.matrix).real <= 1.0 + 1e-9


# -- mixedness -------------------------------------------------------------------


def test_mixedness_pure_at_boundaries():
    assert mixedness(closed_form_1d(1.0, 1.0, 0.0).to_full()) == pytest.approx(1.0)
    assert mixedness(closed_form_1d(1.0, 1.0, 60.0).to_full()) == pytest.approx(1.0)


def test_mixedness_minimum_half():
    # delta(x) = 1 - 2x + 2x^2 over x = exp(-t) is minimized at x = 1/2
    t_half = np.log(2.0)
    assert mixedness(closed_form_1d(1.0, 1.0, t_half).to_full()) == pytest.approx(0.5)
    for t in (t_half / 2, 2 * t_half):
        assert mixedness(closed_form_1d(1.0, 1.0, t).to_full()) > 0.5


def test_mixedness_matches_curve():
    gamma = 1.0
    cfg = IntegratorConfig(dt=1e-3, t_max=3.0, sample_stride=30)
    _, model, _ = single_decay_model(gamma=gamma)
    traj = evolve_enlarged(model, np.diag([1.0, 0.0]), cfg)
    for k, t in enumerate(traj.times):
        x = np.exp(-gamma * t)
        assert abs(mixedness(traj.states[k]) - (1 - 2 * x + 2 * x * x)) <= 1e-9


def test_mixedness_rejects_nonhermitian():
    with pytest.raises(NotHermitianError):
        mixedness(np.array([[0.0, 1.0], [0.0, 0.0]]))


# -- asymptotics ------------------------------------------------------------------


def test_asymptotics_single_decay():
    spec, model, liouv = single_decay_model(gamma=1.0)
    traj = exact_trajectory(liouv, np.diag([1.0, 0.0]).astype(complex), 25.0, 200, d_s=1)
    dec = decompose_gamma(spec.decay_matrix)
    report = asymptotics_check(traj, dec, spec)
    assert report.status == "pass"
    assert report.meta["final_ff_trace_gap"] <= 1e-7


def test_asymptotics_singular_not_applicable():
    spec = SystemSpec(d_s=2, d_f=1, hamiltonian=np.zeros((2, 2)), decay_matrix=np.diag([1.0, 0.0]))
    dec = decompose_gamma(spec.decay_matrix)
    traj = Trajectory(times=[0.0], states=(np.zeros((3, 3)),), d_s=2)
    report = asymptotics_check(traj, dec, spec)
    assert report.status == "not_applicable"
    assert report.passed


def test_asymptotics_short_horizon_fails():
    spec, model, liouv = single_decay_model(gamma=1.0)
    traj = exact_trajectory(liouv, np.diag([1.0, 0.0]).astype(complex), 5.0, 50, d_s=1)
    report = asymptotics_check(traj, decompose_gamma(spec.decay_matrix), spec)
    assert report.status == "fail"
    assert not report.meta["horizon_ok"]


def test_asymptotics_exponential_bound_random_model():
    spec, rho0 = random_system(19, d_s=2, n_lindblad=1)
    dec = decompose_gamma(spec.decay_matrix)
    assert dec.null_dim == 0
    decay = build_decay_operator(dec, spec.d_f)
    model = embed_operators(spec, decay)
    liouv = assemble_liouvillian(model.hamiltonian, model.lindblad_ops, model.decay_op)
    gamma0 = float(dec.rates.min())
    traj = exact_trajectory(liouv, embed_state(rho0, spec.d_f), 20.0 / gamma0, 200, d_s=2)
    report = asymptotics_check(traj, dec, spec)
    assert report.status == "pass"
    tr0 = float(np.trace(rho0).real)
    for k in range(len(traj)):
        tr = float(np.trace(traj.blocks(k).rho_ss).real)
        assert tr <= tr0 * np.exp(-gamma0 * traj.times[k]) + 1e-8


# -- Kraus pair -------------------------------------------------------------------


def test_kraus_no_decay_at_zero():
    pair = kraus_amplitude_damping(1.0, 0.0)
    assert pair.prob == 0.0
    assert np.array_equal(pair.m0, np.eye(2))
    assert np.abs(pair.m1).max() == 0.0


def test_kraus_half_life():
    pair = kraus_amplitude_damping(1.0, np.log(2.0))
    assert pair.prob == pytest.approx(0.5)
    assert pair.m1[1, 0] == pytest.approx(np.sqrt(0.5))


def test_kraus_long_time_limit():
    pair = kraus_amplitude_damping(1.0, 80.0)
    assert np.abs(pair.m0 - np.diag([0.0, 1.0])).max() <= 1e-12


def test_kraus_normalization_over_time():
    for t in np.linspace(0.0, 10.0, 21):
        pair = kraus_amplitude_damping(1.0, t)
        resid = pair.m0.conj().T @ pair.m0 + pair.m1.conj().T @ pair.m1 - np.eye(2)
        assert np.linalg.norm(resid) <= 1e-12


def test_apply_kraus_reproduces_closed_form():
    for t in (0.0, 0.4, 1.7, 6.0):
        pair = kraus_amplitude_damping(1.0, t)
        out = apply_kraus(np.diag([1.0, 0.0]), pair)
        assert np.abs(out - closed_form_1d(1.0, 1.0, t).to_full()).max() <= 1e-12


def test_apply_kraus_identity_at_p_zero():
    rng = np.random.default_rng(23)
    rho = rng.uniform(0, 1, (2, 2))
    rho = 0.5 * (rho + rho.T)
    assert np.array_equal(apply_kraus(rho, kraus_amplitude_damping(1.0, 0.0)), rho)


def test_apply_kraus_matches_exact_propagator():
    _, model, liouv = single_decay_model(m=1.0, gamma=1.0)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    for t in (0.1, 0.5, 1.0, 3.0, 8.0):
        via_kraus = apply_kraus(rho0, kraus_amplitude_damping(1.0, t))
        via_exact = propagate_exact(liouv, rho0, t)
        assert np.linalg.norm(via_kraus - via_exact) <= 1e-10


def test_apply_kraus_full_map_equality_without_hamiltonian():
    # with no energy term the channel matches the propagator on every state
    _, model, liouv = single_decay_model(m=0.0, gamma=1.0)
    rng = np.random.default_rng(24)
    for t in (0.2, 1.0, 2.5):
        pair = kraus_amplitude_damping(1.0, t)
        for _ in range(4):
            rho = rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2))
            rho = 0.5 * (rho + rho.conj().T)
            assert np.linalg.norm(apply_kraus(rho, pair) - propagate_exact(liouv, rho, t)) <= 1e-12
