import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpvet.data_engine import RankDeficiencyError, collect, uniform_input_law
from lpvet.event_trigger import (EtState, TriggerConfig, build_trigger_program,
                                 compute_nu, detector_soundness,
                                 extract_input_matrix, inter_event_stats,
                                 iss_practical_constant, practical_decrease_check,
                                 simulate_event_triggered, solve_trigger,
                                 trigger_fire, zoh_contract)
from lpvet.lpv_core import (AffineMatrixFunction, SimulationTrace,
                            bounded_noise_law, box_schedule_law,
                            walk_schedule_law, zero_noise_law)

PAPER_PSI1 = np.array([[166.7528, -14.2105], [-14.2105, 36.4492]])
PAPER_PSI2 = np.array([[0.0710, 0.0266], [0.0266, 0.0174]])


class TestExtractInputMatrix:
    def test_example1_recovery(self, ex1):
        data = collect(ex1.system, 23, uniform_input_law(1),
                       box_schedule_law(ex1.box), zero_noise_law(2),
                       [2.0, -2.0], rng=0)
        b_est = extract_input_matrix(data)
        assert np.abs(b_est.base - np.array([[0.3190], [-1.3080]])).max() < 1e-8
        assert np.abs(b_est.coeffs[0] - np.array([[0.3], [1.4]])).max() < 1e-8
        assert np.abs(b_est.coeffs[1]).max() < 1e-8

    def test_zero_input_matrix(self, demo_box):
        from lpvet.lpv_core import LpvSystem
        A = AffineMatrixFunction(0.5 * np.eye(2), (0.1 * np.eye(2),))
        B = AffineMatrixFunction.constant(np.zeros((2, 1)), 1)
        C = AffineMatrixFunction.constant(np.eye(2), 1)
        D = AffineMatrixFunction.constant(np.zeros((2, 1)), 1)
        sys = LpvSystem(A, B, C, D)
        data = collect(sys, 11, uniform_input_law(1), box_schedule_law(demo_box),
                       zero_noise_law(2), [1.0, -1.0], rng=1)
        if np.linalg.matrix_rank(np.vstack([data.U, data.UP, data.X, data.XP])) == 6:
            b_est = extract_input_matrix(data)
            assert np.abs(b_est.stacked()).max() < 1e-7

    def test_lti_reduction(self):
        from lpvet.lpv_core import LpvSystem, SchedulingBox
        A = AffineMatrixFunction.constant(np.array([[0.9, 0.1], [0.0, 0.8]]), 0)
        B = AffineMatrixFunction.constant(np.array([[0.5], [1.0]]), 0)
        C = AffineMatrixFunction.constant(np.eye(2), 0)
        D = AffineMatrixFunction.constant(np.zeros((2, 1)), 0)
        sys = LpvSystem(A, B, C, D)
        data = collect(sys, 7, uniform_input_law(1), lambda k, rng: np.zeros(0),
                       zero_noise_law(2), [1.0, 1.0], rng=2)
        b_est = extract_input_matrix(data)
        assert np.abs(b_est.base - B.base).max() < 1e-8

    def test_rank_deficient_rejected(self, ex1):
        data = collect(ex1.system, 23, lambda k, rng: np.zeros(1),
                       box_schedule_law(ex1.box), zero_noise_law(2),
                       np.zeros(2), rng=3)
        with pytest.raises(RankDeficiencyError):
            extract_input_matrix(data)


class TestComputeNu:
    def _gains(self, rng):
        return AffineMatrixFunction(rng.normal(size=(1, 2)),
                                    (rng.normal(size=(1, 2)),))

    def test_zero_after_transmission(self):
        rng = np.random.default_rng(4)
        b = AffineMatrixFunction(rng.normal(size=(2, 1)), (rng.normal(size=(2, 1)),))
        K = self._gains(rng)
        x = rng.normal(size=2)
        p = rng.normal(size=1)
        et = EtState(x_held=x.copy(), p_held=p.copy(), u_held=K(p) @ x, last_instant=0)
        assert np.abs(compute_nu(b, K, x, p, et)).max() < 1e-14

    def test_zero_gain(self):
        rng = np.random.default_rng(5)
        b = AffineMatrixFunction(rng.normal(size=(2, 1)), (rng.normal(size=(2, 1)),))
        K = AffineMatrixFunction.constant(np.zeros((1, 2)), 1)
        et = EtState(x_held=rng.normal(size=2), p_held=rng.normal(size=1),
                     u_held=np.zeros(1), last_instant=0)
        assert np.abs(compute_nu(b, K, rng.normal(size=2), rng.normal(size=1), et)).max() == 0.0

    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_held_minus_current_identity(self, data):
        draw = data.draw
        f = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
        arr = lambda *shape: np.array(draw(st.lists(f, min_size=int(np.prod(shape)),
                                                    max_size=int(np.prod(shape))))).reshape(shape)
        b = AffineMatrixFunction(arr(2, 1), (arr(2, 1),))
        K = AffineMatrixFunction(arr(1, 2), (arr(1, 2),))
        x, xh = arr(2), arr(2)
        p, ph = arr(1), arr(1)
        et = EtState(x_held=xh, p_held=ph, u_held=K(ph) @ xh, last_instant=0)
        nu = compute_nu(b, K, x, p, et)
        direct = b(p) @ (K(ph) @ xh - K(p) @ x)
        assert np.abs(nu - direct).max() < 1e-12


class TestTriggerFire:
    def _cfg(self, psi1, psi2, v):
        return TriggerConfig(psi1=psi1, psi2=psi2, v=v, mu=40.0, eps2=0.001, beta2=0.1)

    def test_zero_error_never_fires(self):
        cfg = self._cfg(np.eye(2), np.eye(2), 0.01)
        assert not trigger_fire(np.zeros(2), np.array([5.0, -3.0]), cfg)

    def test_boundary_inclusive(self):
        cfg = self._cfg(np.eye(2), np.eye(2), 4.0)
        assert trigger_fire(np.array([2.0, 0.0]), np.zeros(2), cfg)

    def test_printed_detector_arithmetic(self):
        cfg = self._cfg(PAPER_PSI1, PAPER_PSI2, 0.01)
        # nu = [0.1, 0], x = 0: quadratic form is 166.7528/100 = 1.667...
        nu = np.array([0.1, 0.0])
        assert nu @ PAPER_PSI1 @ nu == pytest.approx(1.667528)
        assert trigger_fire(nu, np.zeros(2), cfg)

    def test_printed_weights_positive_definite(self):
        assert np.linalg.eigvalsh(PAPER_PSI1)[0] > 0
        assert np.linalg.eigvalsh(PAPER_PSI2)[0] > 0

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            TriggerConfig(psi1=-np.eye(2), psi2=np.eye(2), v=1.0, mu=1.0,
                          eps2=1e-3, beta2=0.1)
        with pytest.raises(ValueError):
            TriggerConfig(psi1=np.eye(2), psi2=np.eye(2), v=0.0, mu=1.0,
                          eps2=1e-3, beta2=0.1)


class TestTriggerProgram:
    def test_plug_in_residuals(self, demo_trigger):
        sol = demo_trigger.solution
        assert sol.psd_residual <= 10 * 1e-7
        assert sol.eq_residual <= 10 * 1e-7

    def test_weights_positive_definite(self, demo_trigger):
        assert np.linalg.eigvalsh(demo_trigger.config.psi1)[0] > 0
        assert np.linalg.eigvalsh(demo_trigger.config.psi2)[0] > 0

    def test_independent_reevaluation(self, demo_synthesis, demo_trigger,
                                      demo_data, demo_box):
        prog = build_trigger_program(demo_synthesis.P, demo_synthesis.f_quad,
                                     demo_data, demo_box, mu=40.0, eps2=0.001,
                                     beta2=0.1, delta=0.1)
        vals = {prog.variable("Psi1").vid: demo_trigger.config.psi1,
                prog.variable("Psi2").vid: demo_trigger.config.psi2,
                prog.variable("XiT").vid: demo_trigger.Xi}
        psd, eq = prog.residuals(vals)
        assert psd <= 10 * 1e-7
        assert eq <= 10 * 1e-7

    def test_invalid_scalars_rejected(self, demo_synthesis, demo_data, demo_box):
        with pytest.raises(ValueError):
            build_trigger_program(demo_synthesis.P, demo_synthesis.f_quad,
                                  demo_data, demo_box, mu=0.0, eps2=0.001,
                                  beta2=0.1, delta=0.1)

    def test_inflated_noise_infeasible(self, demo_synthesis, demo_data, demo_box):
        res = solve_trigger(demo_synthesis.P, demo_synthesis.f_quad, demo_data,
                            demo_box, mu=40.0, eps2=0.001, beta2=0.1, v=0.01,
                            delta=0.1 * 1e4)
        assert not hasattr(res, "config")


@pytest.fixture(scope="module")
def demo_trace(demo_sys, demo_synthesis, demo_trigger, demo_b_est, demo_box):
    return simulate_event_triggered(demo_sys, demo_synthesis.gains,
                                    demo_trigger.config, demo_b_est,
                                    walk_schedule_law(demo_box, 0.05),
                                    bounded_noise_law(0.1, 2), [2.0, -2.0], 200,
                                    rng=42)


class TestEventTriggeredSimulation:
    def test_initial_transmission(self, demo_trace):
        assert bool(demo_trace.triggered[0])

    def test_detector_soundness(self, demo_trace, demo_trigger):
        assert detector_soundness(demo_trace, demo_trigger.config)

    def test_zoh_contract(self, demo_trace, demo_synthesis):
        assert zoh_contract(demo_trace, demo_synthesis.gains)

    def test_interval_exceeds_one(self, demo_trace):
        stats = inter_event_stats(demo_trace)
        assert stats["mean_interval"] > 1.0
        assert stats["count"] < demo_trace.horizon

    def test_practical_decrease(self, demo_trace, demo_synthesis, demo_trigger,
                                demo_cfg):
        rep = practical_decrease_check(demo_trace, demo_synthesis.P,
                                       demo_trigger.config, demo_cfg.sigma)
        assert rep["passed"], rep

    def test_mismatched_lyapunov_matrix_fails(self, demo_trace, demo_trigger,
                                              demo_cfg):
        wrong_P = np.diag([1e-4, 1e3])
        rep = practical_decrease_check(demo_trace, wrong_P, demo_trigger.config,
                                       demo_cfg.sigma)
        assert not rep["passed"]
        assert rep["first_violation"] is not None

    def test_detector_never_trips_with_huge_threshold(self, demo_sys, demo_synthesis,
                                                      demo_b_est, demo_box,
                                                      demo_trigger):
        lazy = TriggerConfig(psi1=demo_trigger.config.psi1,
                             psi2=1e9 * np.eye(2), v=1e9, mu=40.0, eps2=0.001,
                             beta2=0.1)
        trace = simulate_event_triggered(demo_sys, demo_synthesis.gains, lazy,
                                         demo_b_est, walk_schedule_law(demo_box),
                                         bounded_noise_law(0.1, 2), [2.0, -2.0],
                                         50, rng=6)
        stats = inter_event_stats(trace)
        assert stats["count"] == 1
        assert stats["max_interval"] == 50

    def test_hair_trigger_fires_every_step(self, demo_sys, demo_synthesis,
                                           demo_b_est, demo_box, demo_trigger):
        eager = TriggerConfig(psi1=1e12 * np.eye(2),
                              psi2=demo_trigger.config.psi2, v=1e-12, mu=40.0,
                              eps2=0.001, beta2=0.1)
        trace = simulate_event_triggered(demo_sys, demo_synthesis.gains, eager,
                                         demo_b_est, walk_schedule_law(demo_box),
                                         bounded_noise_law(0.1, 2), [2.0, -2.0],
                                         50, rng=7)
        stats = inter_event_stats(trace)
        assert stats["count"] >= 49
        assert stats["mean_interval"] <= 50 / 49


class TestInterEventStats:
    def _trace(self, triggered):
        N = len(triggered)
        return SimulationTrace(states=np.zeros((N + 1, 1)), inputs=np.zeros((N, 1)),
                               schedules=np.zeros((N, 1)),
                               perturbations=np.zeros((N, 1)),
                               outputs=np.zeros((N, 1)),
                               triggered=np.asarray(triggered, dtype=bool),
                               nu=np.zeros((N, 1)))

    def test_every_step(self):
        stats = inter_event_stats(self._trace([True] * 10))
        assert stats["count"] == 10
        assert stats["mean_interval"] == pytest.approx(1.0)

    def test_single_transmission(self):
        stats = inter_event_stats(self._trace([True] + [False] * 9))
        assert stats["count"] == 1
        assert stats["max_interval"] == 10

    def test_two_transmissions(self):
        flags = [True] + [False] * 4 + [True] + [False] * 4
        stats = inter_event_stats(self._trace(flags))
        assert stats["count"] == 2
        assert stats["mean_interval"] == pytest.approx(5.0)
        assert stats["instants"] == [0, 5]


class TestIssPracticalConstant:
    def test_closed_form_point(self):
        beta2 = 2.0 * np.log(2.0)  # exp(-beta2/2) = 0.5
        assert iss_practical_constant(np.eye(2), 1.0, beta2) == pytest.approx(2.0)

    def test_monotone_in_mu(self):
        a = iss_practical_constant(np.eye(2), 1.0, 0.2)
        b = iss_practical_constant(np.eye(2), 100.0, 0.2)
        assert b < a

    def test_scaled_lyapunov(self):
        # P = 4I: lmin(P^-1) = 0.25, c1 = 2
        c0 = iss_practical_constant(4.0 * np.eye(2), 1.0, 2.0 * np.log(2.0))
        assert c0 == pytest.approx(4.0)  # c1 = 2 doubles the baseline

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            iss_practical_constant(np.eye(2), 0.0, 0.1)
        with pytest.raises(ValueError):
            iss_practical_constant(np.eye(2), 1.0, 0.0)


class TestPracticalDecreaseEquilibrium:
    def test_zero_trace_passes(self, demo_trigger):
        N = 10
        trace = SimulationTrace(states=np.zeros((N + 1, 2)), inputs=np.zeros((N, 1)),
                                schedules=np.zeros((N, 1)),
                                perturbations=np.zeros((N, 2)),
                                outputs=np.zeros((N, 2)),
                                triggered=np.ones(N, dtype=bool),
                                nu=np.zeros((N, 2)))
        rep = practical_decrease_check(trace, np.eye(2), demo_trigger.config, 4.0)
        assert rep["passed"]
