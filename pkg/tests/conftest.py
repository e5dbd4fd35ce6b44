"""Shared fixtures.

The LMI solves are the expensive part of the suite, so every synthesized
pipeline is session-scoped and reused: a reduced single-parameter variant of
the stabilization demo plant (fast, well-conditioned) carries most of the
machinery tests, and the bundled tracking pipelines are solved once each.
"""
import numpy as np
import pytest

from lpvet.data_engine import collect, uniform_input_law
from lpvet.examples import example1, example2, example3
from lpvet.lpv_core import (AffineMatrixFunction, LpvSystem, SchedulingBox,
                            bounded_noise_law, box_schedule_law)
from lpvet.stabilization_synthesis import SynthesisConfig, solve_synthesis
from lpvet.event_trigger import extract_input_matrix, solve_trigger
from lpvet.tracking import collect_aug, make_reference, solve_tracking_synthesis, \
    solve_tracking_trigger


@pytest.fixture(scope="session")
def ex1():
    return example1()


@pytest.fixture(scope="session")
def ex2():
    return example2()


@pytest.fixture(scope="session")
def ex3():
    return example3()


@pytest.fixture(scope="session")
def demo_sys(ex1):
    """Single-parameter variant of the stabilization demo plant (drop the
    second scheduling channel, which duplicates the first with a zero input
    coefficient); small enough for fast interior-point solves."""
    A = AffineMatrixFunction(ex1.system.A.base, (ex1.system.A.coeffs[0],))
    B = AffineMatrixFunction(ex1.system.B.base, (ex1.system.B.coeffs[0],))
    C = AffineMatrixFunction.constant(np.eye(2), 1)
    D = AffineMatrixFunction.constant(np.zeros((2, 1)), 1)
    return LpvSystem(A, B, C, D)


@pytest.fixture(scope="session")
def demo_box():
    return SchedulingBox.symmetric(0.5, 1)


@pytest.fixture(scope="session")
def demo_data(demo_sys, demo_box):
    return collect(demo_sys, 11, uniform_input_law(1, -10, 10),
                   box_schedule_law(demo_box), bounded_noise_law(0.1, 2),
                   [2.0, -2.0], rng=5, delta=0.1)


@pytest.fixture(scope="session")
def demo_cfg():
    return SynthesisConfig(sigma=4.0, beta1=0.2, eps1=0.01, delta=0.1)


@pytest.fixture(scope="session")
def demo_synthesis(demo_data, demo_box, demo_cfg):
    res = solve_synthesis(demo_data, demo_box, demo_cfg,
                          trigger_headroom=(40.0, 0.001, 0.1))
    assert hasattr(res, "P"), f"demo synthesis failed: {res}"
    return res


@pytest.fixture(scope="session")
def demo_trigger(demo_synthesis, demo_data, demo_box):
    trig = solve_trigger(demo_synthesis.P, demo_synthesis.f_quad, demo_data,
                         demo_box, mu=40.0, eps2=0.001, beta2=0.1, v=20.0,
                         delta=0.1)
    assert hasattr(trig, "config"), f"demo trigger failed: {trig}"
    return trig


@pytest.fixture(scope="session")
def demo_b_est(demo_data):
    return extract_input_matrix(demo_data)


def _tracking_pipeline(ex, refkind, N, input_range, seed, syn, trig, x0,
                       solvers=("CLARABEL", "SCS")):
    params = dict(ex.references[refkind])
    params.pop("x0", None)
    kind = params.pop("kind")
    reference = make_reference(kind, params, N)
    data = collect_aug(ex.augsys, ex.data_length,
                       uniform_input_law(ex.augsys.m, -input_range, input_range),
                       box_schedule_law(ex.box),
                       bounded_noise_law(ex.delta, ex.augsys.n_base),
                       reference, x0, rng=seed, delta=ex.delta)
    cfg = SynthesisConfig(sigma=syn["sigma"], beta1=syn["beta1"], eps1=syn["eps1"],
                          delta=data.delta, trace_bounds=(0.1, 10.0))
    res = solve_tracking_synthesis(data, ex.box, cfg, solvers=solvers,
                                   trigger_headroom=(trig["mu"], trig["eps2"],
                                                     trig["beta2"]))
    assert hasattr(res, "P"), f"{ex.name}/{refkind} synthesis failed: {res}"
    tsn = solve_tracking_trigger(res.P, res.f_quad, data, ex.box, mu=trig["mu"],
                                 eps4=trig["eps2"], beta4=trig["beta2"],
                                 v=trig["v"], delta_hat=data.delta, solvers=solvers)
    assert hasattr(tsn, "config"), f"{ex.name}/{refkind} trigger failed: {tsn}"
    return dict(ex=ex, reference=reference, data=data, cfg=cfg, synthesis=res,
                trigger=tsn, seed=seed, N=N)


@pytest.fixture(scope="session")
def ex2_sine_pipeline(ex2):
    return _tracking_pipeline(ex2, "sine", 600, 300.0, 7,
                              dict(sigma=4.0, beta1=0.2, eps1=0.01),
                              dict(mu=9.0, eps2=0.001, beta2=0.1, v=20.0),
                              [1.0, 1.0])


@pytest.fixture(scope="session")
def ex2_square_pipeline(ex2):
    return _tracking_pipeline(ex2, "square", 600, 300.0, 7,
                              dict(sigma=4.0, beta1=0.2, eps1=0.01),
                              dict(mu=9.0, eps2=0.001, beta2=0.1, v=20.0),
                              [1.0, 1.0])


@pytest.fixture(scope="session")
def ex3_circle_pipeline(ex3):
    return _tracking_pipeline(ex3, "circle", 3000, 1000.0, 0,
                              dict(sigma=4.0, beta1=0.5, eps1=0.0001),
                              dict(mu=15.0, eps2=0.001, beta2=0.25, v=500.0),
                              [3.0, -2.0, 3.0], solvers=("CLARABEL",))


@pytest.fixture(scope="session")
def ex3_fig8_pipeline(ex3):
    return _tracking_pipeline(ex3, "figure8", 3000, 1000.0, 0,
                              dict(sigma=4.0, beta1=0.5, eps1=0.0001),
                              dict(mu=15.0, eps2=0.001, beta2=0.25, v=500.0),
                              [1.0, 1.0, 1.0], solvers=("CLARABEL",))
