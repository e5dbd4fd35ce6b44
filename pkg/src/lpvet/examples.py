"""Built-in demo systems and their pipeline parameter sets.

Example 1 is a two-state, single-input stabilization plant with two
scheduling parameters; Examples 2 and 3 are tracking plants specified
directly through their integrator-augmented matrices (scalar output and
planar output respectively).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lpv_core import AffineMatrixFunction, LpvSystem, SchedulingBox
from .tracking import AugmentedSystem, from_augmented_matrices


@dataclass(frozen=True)
class StabilizationExample:
    name: str
    system: LpvSystem
    box: SchedulingBox
    data_length: int
    delta: float
    synthesis: dict
    trigger: dict
    simulation: dict


@dataclass(frozen=True)
class TrackingExample:
    name: str
    augsys: AugmentedSystem
    box: SchedulingBox
    data_length: int
    delta: float
    synthesis: dict
    trigger: dict
    simulation: dict
    references: dict = field(default_factory=dict)
    input_range: float = 1.0


def example1() -> StabilizationExample:
    A = AffineMatrixFunction(
        np.array([[0.2485, -1.0355], [0.8910, 0.4065]]),
        (np.array([[-0.0063, -0.0938], [0.0, 0.0188]]),
         np.array([[-0.0063, -0.0938], [0.0, 0.0188]])))
    B = AffineMatrixFunction(
        np.array([[0.3190], [-1.3080]]),
        (np.array([[0.3], [1.4]]), np.array([[0.0], [0.0]])))
    C = AffineMatrixFunction.constant(np.eye(2), nsched=2)
    D = AffineMatrixFunction.constant(np.zeros((2, 1)), nsched=2)
    return StabilizationExample(
        name="example1",
        system=LpvSystem(A, B, C, D),
        box=SchedulingBox.symmetric(1.0, 2),
        data_length=23,
        delta=0.1,
        synthesis=dict(sigma=4.0, beta1=0.2, eps1=0.01, trace_bounds=(0.1, 10.0)),
        trigger=dict(mu=40.0, eps2=0.001, beta2=0.1, v=0.01),
        simulation=dict(horizon=200, x0=[2.0, -2.0]),
    )


def example2() -> TrackingExample:
    A_hat = AffineMatrixFunction(
        np.array([[0.3023, 0.0], [0.1885, 1.0]]),
        (np.array([[0.5469, 0.0], [0.0997, 0.0]]),))
    B_hat = AffineMatrixFunction(
        np.array([[0.9902], [0.9672]]),
        (np.array([[0.6914], [0.0470]]),))
    return TrackingExample(
        name="example2",
        augsys=from_augmented_matrices(A_hat, B_hat, n_base=1),
        box=SchedulingBox.symmetric(1.0, 1),
        data_length=17,
        delta=0.1,
        synthesis=dict(sigma=4.0, beta1=0.2, eps1=0.01, trace_bounds=(0.1, 10.0)),
        trigger=dict(mu=9.0, eps2=0.001, beta2=0.1, v=20.0),
        simulation=dict(horizon=600, x0=[1.0, 1.0]),
        references=dict(
            sine=dict(kind="sinusoid", amplitude=1.0, period=150),
            square=dict(kind="square", levels=(-1.0, 1.0), period=150),
        ),
        # strong excitation: the robustness terms scale with the declared
        # disturbance envelope, so the experiment must dominate it
        input_range=10.0,
    )


def example3() -> TrackingExample:
    A_hat = AffineMatrixFunction(
        np.array([[0.5387, 0.0, 0.0], [0.2466, 1.0, 0.0], [0.3765, 0.0, 1.0]]),
        (np.array([[0.8871, 0.0, 0.0], [0.8401, 0.0, 0.0], [0.8190, 0.0, 0.0]]),))
    B_hat = AffineMatrixFunction(
        np.array([[0.5450, 0.2260], [0.6290, 0.0160], [0.9022, 0.9636]]),
        (np.array([[0.5289, 0.2227], [0.2676, 0.8512], [0.7303, 0.4969]]),))
    return TrackingExample(
        name="example3",
        augsys=from_augmented_matrices(A_hat, B_hat, n_base=1),
        box=SchedulingBox.symmetric(1.0, 1),
        data_length=29,
        delta=0.1,
        synthesis=dict(sigma=4.0, beta1=0.5, eps1=0.0001, trace_bounds=(0.1, 10.0)),
        trigger=dict(mu=15.0, eps2=0.001, beta2=0.25, v=500.0),
        simulation=dict(horizon=3000, x0=None),  # per-reference initial states
        references=dict(
            circle=dict(kind="circle", radius=2.5, period=1000, x0=[3.0, -2.0, 3.0]),
            figure8=dict(kind="figure8", amplitude=2.5, period=1000, x0=[1.0, 1.0, 1.0]),
        ),
        input_range=30.0,
    )


REGISTRY = {"example1": example1, "example2": example2, "example3": example3}
