import numpy as np
import pytest

from lpvet.data_engine import collect, identified_system_functions, uniform_input_law
from lpvet.lpv_core import (AffineMatrixFunction, LpvSystem, SchedulingBox,
                            bounded_noise_law, box_schedule_law, spectral_radius,
                            vertices, zero_noise_law)
from lpvet.stabilization_synthesis import (ChannelStructure, FQuad, ScriptF,
                                           SynthesisConfig,
                                           build_certificate_program, build_fq,
                                           build_synthesis_program, eval_F,
                                           iss_constants, monomial_stack,
                                           multiplier_value, recover_gains,
                                           simulate_closed_loop, solve_synthesis,
                                           verify_closed_loop)


def random_script_f(rng, n=2, ell=2, T=6):
    return ScriptF(rng.normal(size=(T, n * (1 + ell + ell * ell))), n, ell)


class TestScriptFAndFQuad:
    def test_eval_at_zero_is_first_block(self):
        rng = np.random.default_rng(0)
        sf = random_script_f(rng)
        assert np.array_equal(eval_F(sf, [0.0, 0.0]), sf.block0())

    def test_single_parameter_sum(self):
        rng = np.random.default_rng(1)
        sf = random_script_f(rng, n=2, ell=1, T=5)
        expect = sf.block0() + sf.block_lin(1) + sf.block_quad(1, 1)
        assert np.allclose(eval_F(sf, [1.0]), expect)

    def test_build_fq_zero_blocks(self):
        # only the constant block populated -> only Q00 nonzero
        n, ell, T = 2, 2, 4
        M = np.zeros((T, n * (1 + ell + ell * ell)))
        M[:, :n] = 1.0
        fq = build_fq(ScriptF(M, n, ell))
        assert fq.matrix[:T, :n].any()
        assert not fq.matrix[T:, :].any()
        assert not fq.matrix[:T, n:].any()

    def test_canonical_split_linear_block(self):
        # l = 1: the linear block lands in Q01, Q10 stays zero
        n, ell, T = 2, 1, 3
        rng = np.random.default_rng(2)
        M = np.zeros((T, n * 3))
        lin = rng.normal(size=(T, n))
        M[:, n:2 * n] = lin
        fq = build_fq(ScriptF(M, n, ell))
        assert np.array_equal(fq.matrix[:T, n:], lin)
        assert not fq.matrix[T:, :n].any()

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(100):
            sf = random_script_f(rng)
            fq = build_fq(sf)
            p = rng.uniform(-1, 1, 2)
            err = np.abs(fq.eval(p) - eval_F(sf, p)).max()
            worst = max(worst, err)
        assert worst < 1e-10

    def test_loop_matrix_matches_kron_stack(self):
        struct = ChannelStructure((2, 3), 2)
        p = np.array([0.3, -0.8])
        M = struct.loop_matrix(p)
        expect = np.zeros((sum((1 + 2) * c for c in (2, 3)), 5))
        expect[:6, :2] = np.vstack([np.eye(2)] + [pi * np.eye(2) for pi in p])
        expect[6:, 2:] = np.vstack([np.eye(3)] + [pi * np.eye(3) for pi in p])
        assert np.allclose(M, expect)


class TestRecoverGains:
    def test_zero_gains(self):
        K = recover_gains(np.eye(2), np.zeros((1, 2)), np.zeros((1, 4)))
        assert not K.base.any()
        assert not any(c.any() for c in K.coeffs)

    def test_identity_lyapunov(self):
        Z0 = np.array([[1.0, 2.0]])
        Zb = np.array([[3.0, 4.0, 5.0, 6.0]])
        K = recover_gains(np.eye(2), Z0, Zb)
        assert np.array_equal(K.base, Z0)
        assert np.array_equal(K.coeffs[0], Zb[:, :2])
        assert np.array_equal(K.coeffs[1], Zb[:, 2:])

    def test_algebraic_round_trip(self):
        rng = np.random.default_rng(4)
        M = rng.normal(size=(2, 2))
        P = M @ M.T + 0.5 * np.eye(2)
        Z0 = rng.normal(size=(1, 2))
        K = recover_gains(P, Z0, None)
        assert np.abs(K.base @ P - Z0).max() < 1e-10

    def test_singular_P_rejected(self):
        with pytest.raises(np.linalg.LinAlgError):
            recover_gains(np.zeros((2, 2)), np.zeros((1, 2)), None)


class TestIssConstants:
    def test_identity(self):
        out = iss_constants(np.eye(3), 0.2)
        assert out["overshoot"] == pytest.approx(1.0)
        assert out["c1"] == pytest.approx(1.0)

    def test_diagonal(self):
        out = iss_constants(np.diag([4.0, 1.0]), 0.2)
        assert out["overshoot"] == pytest.approx(2.0)
        assert out["c1"] == pytest.approx(2.0)

    def test_isotropic_scaling(self):
        for c in (0.3, 7.0):
            assert iss_constants(c * np.eye(2), 0.1)["overshoot"] == pytest.approx(1.0)


class TestSynthesisDemo:
    """Machinery validation on the reduced single-parameter plant."""

    def test_plug_in_residuals(self, demo_synthesis):
        sol = demo_synthesis.solution
        assert sol.psd_residual <= 10 * 1e-7
        assert sol.eq_residual <= 10 * 1e-7

    def test_gain_linking_identity(self, demo_synthesis, demo_data):
        from lpvet.data_engine import build_regressors
        n, ell = 2, 1
        G = build_regressors(demo_data).G
        P, Z0, Zb = demo_synthesis.P, demo_synthesis.Z0, demo_synthesis.Zbar
        rhs = np.block([
            [P, np.zeros((n, ell * n)), np.zeros((n, ell * ell * n))],
            [np.zeros((ell * n, n)), np.kron(np.eye(ell), P),
             np.zeros((ell * n, ell * ell * n))],
            [Z0, Zb, np.zeros((1, ell * ell * n))],
            [np.zeros((ell, n)), np.kron(np.eye(ell), Z0), np.kron(np.eye(ell), Zb)],
        ])
        assert np.abs(G @ demo_synthesis.script_f.matrix - rhs).max() < 1e-6
        # equivalent closed-loop form of the same equality
        K = demo_synthesis.gains
        ncl = np.block([
            [np.eye(n), np.zeros((n, ell * n)), np.zeros((n, ell * ell * n))],
            [np.zeros((ell * n, n)), np.eye(ell * n), np.zeros((ell * n, ell * ell * n))],
            [K.base, np.hstack(K.coeffs), np.zeros((1, ell * ell * n))],
            [np.zeros((ell, n)), np.kron(np.eye(ell), K.base),
             np.kron(np.eye(ell), np.hstack(K.coeffs))],
        ])
        scale = np.zeros((n * (1 + ell + ell * ell),) * 2)
        scale[:n, :n] = P
        scale[n:2 * n, n:2 * n] = P
        scale[2 * n:, 2 * n:] = P
        assert np.abs(G @ demo_synthesis.script_f.matrix - ncl @ scale).max() < 1e-6

    def test_vertex_multiplier_extends_to_interior(self, demo_synthesis, demo_box):
        # concavity in the parameter block: vertex positivity covers the hull
        struct = ChannelStructure((2, 2, 2, 2, 11), 1)
        rng = np.random.default_rng(5)
        for _ in range(50):
            p = demo_box.sample(rng)
            lam = np.linalg.eigvalsh(multiplier_value(demo_synthesis.Xi, struct, p))[0]
            assert lam >= -1e-6

    def test_frozen_vertex_radii(self, demo_synthesis, demo_sys, demo_box):
        for v in vertices(demo_box):
            Acl = demo_sys.A(v) + demo_sys.B(v) @ demo_synthesis.gains(v)
            assert spectral_radius(Acl) < 1.0

    def test_verify_closed_loop_passes(self, demo_synthesis, demo_sys, demo_data,
                                       demo_box, demo_cfg):
        rep = verify_closed_loop(demo_sys, demo_data, demo_synthesis.gains,
                                 demo_synthesis.P, demo_cfg, demo_box,
                                 trials=50, horizon=80, seed=1)
        assert rep["passed"], rep
        assert rep["matrix_source"] == "true"

    def test_verify_uses_identified_model_without_plant(self, demo_synthesis,
                                                        demo_data, demo_box, demo_cfg):
        rep = verify_closed_loop(None, demo_data, demo_synthesis.gains,
                                 demo_synthesis.P, demo_cfg, demo_box,
                                 trials=10, horizon=40, seed=2)
        assert rep["matrix_source"] == "identified"
        assert rep["passed"], rep

    def test_sign_flipped_gains_fail(self, demo_synthesis, demo_sys, demo_data,
                                     demo_box, demo_cfg):
        bad = AffineMatrixFunction(-demo_synthesis.gains.base,
                                   tuple(-c for c in demo_synthesis.gains.coeffs))
        rep = verify_closed_loop(demo_sys, demo_data, bad, demo_synthesis.P,
                                 demo_cfg, demo_box, trials=20, horizon=60, seed=3)
        assert not rep["passed"]
        assert rep["first_violation"] is not None

    def test_noise_free_decay(self, demo_synthesis, demo_sys, demo_box):
        trace = simulate_closed_loop(demo_sys, demo_synthesis.gains, demo_box,
                                     delta=0.0, x0=[2.0, -2.0], N=500, seed=4)
        assert np.linalg.norm(trace.states[-1]) <= 1e-3 * np.linalg.norm(trace.states[0])

    def test_noisy_decay_into_ball(self, demo_synthesis, demo_sys, demo_box):
        trace = simulate_closed_loop(demo_sys, demo_synthesis.gains, demo_box,
                                     delta=0.1, x0=[2.0, -2.0], N=200, seed=5)
        assert np.linalg.norm(trace.states[-1]) < np.linalg.norm(trace.states[0])


class TestZeroGainOnStablePlant:
    def test_decrease_holds_for_small_beta(self):
        # x+ = 0.5 x: with P = I the decrease holds whenever beta1 <= 0.75
        A = AffineMatrixFunction.constant(0.5 * np.eye(2), 0)
        B = AffineMatrixFunction.constant(np.zeros((2, 1)), 0)
        C = AffineMatrixFunction.constant(np.eye(2), 0)
        D = AffineMatrixFunction.constant(np.zeros((2, 1)), 0)
        sys = LpvSystem(A, B, C, D)
        box = SchedulingBox([], [])
        data = collect(sys, 5, uniform_input_law(1), lambda k, rng: np.zeros(0),
                       zero_noise_law(2), [1.0, 1.0], rng=0)
        zero_gain = AffineMatrixFunction.constant(np.zeros((1, 2)), 0)
        cfg = SynthesisConfig(sigma=4.0, beta1=0.7, eps1=0.01, delta=0.0)
        rep = verify_closed_loop(sys, data, zero_gain, np.eye(2), cfg, box,
                                 trials=5, horizon=30, seed=0)
        assert rep["decrease_ok"]
        cfg_hot = SynthesisConfig(sigma=4.0, beta1=0.8, eps1=0.01, delta=0.0)
        rep_hot = verify_closed_loop(sys, data, zero_gain, np.eye(2), cfg_hot, box,
                                     trials=5, horizon=30, seed=0)
        assert not rep_hot["decrease_ok"]


@pytest.fixture(scope="module")
def lti():
    A = AffineMatrixFunction.constant(np.array([[1.1, 0.4], [0.0, 0.9]]), 0)
    B = AffineMatrixFunction.constant(np.array([[0.0], [1.0]]), 0)
    C = AffineMatrixFunction.constant(np.eye(2), 0)
    D = AffineMatrixFunction.constant(np.zeros((2, 1)), 0)
    sys = LpvSystem(A, B, C, D)
    box = SchedulingBox([], [])
    data = collect(sys, 9, uniform_input_law(1, -5, 5),
                   lambda k, rng: np.zeros(0), bounded_noise_law(0.02, 2),
                   [1.0, -1.0], rng=12, delta=0.02)
    cfg = SynthesisConfig(sigma=4.0, beta1=0.2, eps1=0.1, delta=0.02,
                          trace_bounds=(0.1, 10.0))
    res = solve_synthesis(data, box, cfg)
    assert hasattr(res, "P"), f"LTI synthesis failed: {res}"
    return sys, data, res


class TestLtiReduction:
    """With no scheduling channel the program collapses to the
    time-invariant data-driven stabilization feasibility problem."""

    def test_open_loop_unstable(self, lti):
        sys, _, _ = lti
        assert spectral_radius(sys.A.base) > 1.0

    def test_gain_stabilizes_identified_model(self, lti):
        sys, data, res = lti
        A_hat, B_hat = identified_system_functions(data)
        Acl = A_hat(np.zeros(0)) + B_hat(np.zeros(0)) @ res.gains(np.zeros(0))
        assert spectral_radius(Acl) < 1.0

    def test_gain_stabilizes_true_model(self, lti):
        sys, _, res = lti
        K = res.gains(np.zeros(0))
        assert spectral_radius(sys.A.base + sys.B.base @ K) < 1.0

    def test_no_multiplier_declared(self, lti):
        _, data, res = lti
        assert res.Xi is None


class TestCertificateProgram:
    def test_zero_data_single_point_feasible(self):
        # degenerate guard: zero data and the single grid point p = 0
        T, n, ell = 6, 2, 1
        from lpvet.data_engine import ExperimentData
        zero = ExperimentData(U=np.zeros((1, T)), UP=np.zeros((1, T)),
                              X=np.zeros((n, T)), XP=np.zeros((n, T)),
                              Xplus=np.zeros((n, T)), W=np.zeros((n, T)),
                              WP=np.zeros((n, T)), Y=np.zeros((n, T)),
                              schedules=np.zeros((T, ell)), delta=0.0)
        sf = ScriptF(np.zeros((T, n * 3)), n, ell)
        cfg = SynthesisConfig(sigma=4.0, beta1=0.2, eps1=0.01, delta=0.0)
        prog = build_certificate_program(zero, sf, cfg, [np.zeros(1)])
        sol = prog.solve()
        assert sol.status == "feasible"

    def test_solved_parameterization_certifies(self, demo_synthesis, demo_data,
                                               demo_box, demo_cfg):
        grid = vertices(demo_box) + [np.zeros(1)]
        prog = build_certificate_program(demo_data, demo_synthesis.script_f,
                                         demo_cfg, grid)
        sol = prog.solve()
        assert sol.status == "feasible"

    def test_inflated_noise_bound_infeasible(self, demo_synthesis, demo_data,
                                             demo_box, demo_cfg):
        import dataclasses
        hostile = dataclasses.replace(demo_cfg, delta=1e6)
        prog = build_certificate_program(demo_data, demo_synthesis.script_f,
                                         hostile, vertices(demo_box))
        sol = prog.solve()
        assert sol.status == "infeasible"

    def test_empty_grid_rejected(self, demo_synthesis, demo_data, demo_cfg):
        with pytest.raises(ValueError):
            build_certificate_program(demo_data, demo_synthesis.script_f,
                                      demo_cfg, [])


class TestGracefulInfeasibility:
    def test_hostile_decay_rate_reported(self, demo_data, demo_box):
        cfg = SynthesisConfig(sigma=1.0001, beta1=0.999999, eps1=1e4, delta=0.1)
        res = solve_synthesis(demo_data, demo_box, cfg)
        assert not hasattr(res, "P")
        assert res.status in ("infeasible", "numerical-failure")


class TestConfigValidation:
    def test_bad_scalars_rejected(self):
        with pytest.raises(ValueError):
            SynthesisConfig(sigma=0.5)
        with pytest.raises(ValueError):
            SynthesisConfig(beta1=1.5)
        with pytest.raises(ValueError):
            SynthesisConfig(eps1=0.0)
        with pytest.raises(ValueError):
            SynthesisConfig(trace_bounds=(2.0, 1.0))
