"""Test objectives behind a name-indexed registry.

All raw functions are vectorized over numpy arrays. Registry objectives
always *minimize*: maximization problems are negated at the registry
boundary and their specs carry kind="max" so reports can flip the sign
back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Bounds, ConfigurationError, Objective

# Peak locations (one column per peak; rows are coordinates) and peak
# sharpness constants for the four-dimensional multi-peak landscape.
SHEKEL_A = np.array(
    [
        [4, 1, 8, 6, 3, 2, 5, 8, 6, 7],
        [4, 1, 8, 6, 7, 9, 5, 1, 2, 3.6],
        [4, 1, 8, 6, 3, 2, 5, 8, 6, 7],
        [4, 1, 8, 6, 7, 9, 3, 1, 2, 3],
    ],
    dtype=float,
)
SHEKEL_C = np.array([1, 2, 2, 4, 4, 6, 3, 7, 5, 5], dtype=float) / 10.0


def sphere(x) -> np.ndarray:
    """Sum of squared coordinates; minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    return (x**2).sum(axis=-1)


def rosenbrock(x, y, a: float = 1.0, b: float = 100.0) -> np.ndarray:
    """(a - x)^2 + b (y - x^2)^2: a curved valley of near-minima with the
    single global minimum 0 at (a, a^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (a - x) ** 2 + b * (y - x**2) ** 2


def schaffer(x, y) -> np.ndarray:
    """0.5 + (sin^2(x^2 - y^2) - 0.5) / (1 + 0.001 (x^2 + y^2)).

    Oscillatory with many local minima; the single global minimum is 0
    at the origin.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 + (np.sin(x**2 - y**2) ** 2 - 0.5) / (1.0 + 0.001 * (x**2 + y**2))


def two_well(t, x, y, tau: float = 1000.0) -> np.ndarray:
    """Two Gaussian wells, one fixed and one deepening with time.

    f(t, x, y) = -2 exp(-((x+2.5)^2 + (y+2.5)^2))
                 - (t/tau) exp(-((x-2)^2 + (y-2)^2))

    The well at (-2.5, -2.5) has constant depth 2; the well at (2, 2)
    has depth t/tau and overtakes it for t > 2*tau.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    first = -2.0 * np.exp(-((x + 2.5) ** 2 + (y + 2.5) ** 2))
    second = -(t / tau) * np.exp(-((x - 2.0) ** 2 + (y - 2.0) ** 2))
    return first + second


def shekel(x, a_matrix: np.ndarray = SHEKEL_A, c: np.ndarray = SHEKEL_C) -> np.ndarray:
    """Multi-peak landscape S(x) = sum_i 1 / (c_i + sum_j (x_j - a_ji)^2).

    This is the quantity to MAXIMIZE: each column of `a_matrix` is a peak
    of height 1/c_i, finite everywhere because c_i > 0.
    """
    x = np.asarray(x, dtype=float)
    a_matrix = np.asarray(a_matrix, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.shape[-1] != a_matrix.shape[0]:
        raise ValueError(
            f"point has {x.shape[-1]} coordinates, peak matrix has "
            f"{a_matrix.shape[0]} rows"
        )
    if a_matrix.shape[1] != c.size:
        raise ValueError("peak matrix columns and c lengths differ")
    sq = ((x[..., None, :] - a_matrix.T) ** 2).sum(axis=-1)
    return (1.0 / (c + sq)).sum(axis=-1)


@dataclass(frozen=True)
class Optimum:
    point: tuple
    value: float
    kind: str  # "min" or "max"


@dataclass(frozen=True)
class BenchmarkSpec:
    """A named objective with its default search box and known optimum."""

    name: str
    arity: int
    bounds: Bounds
    objective: Objective
    known_optimum: Optional[Optimum] = None
    parameters: dict = field(default_factory=dict)


def _sphere_spec(dim: int = 2) -> BenchmarkSpec:
    obj = Objective(lambda t, p: sphere(p), arity=dim, name="sphere")
    return BenchmarkSpec(
        name="sphere",
        arity=dim,
        bounds=Bounds(np.full(dim, -3.0), np.full(dim, 3.0)),
        objective=obj,
        known_optimum=Optimum(tuple([0.0] * dim), 0.0, "min"),
        parameters={"dim": dim},
    )


def _rosenbrock_spec(a: float = 1.0, b: float = 100.0) -> BenchmarkSpec:
    obj = Objective(
        lambda t, p: rosenbrock(p[:, 0], p[:, 1], a=a, b=b),
        arity=2,
        name="rosenbrock",
    )
    return BenchmarkSpec(
        name="rosenbrock",
        arity=2,
        bounds=Bounds([-3.0, -3.0], [3.0, 3.0]),
        objective=obj,
        known_optimum=Optimum((a, a * a), 0.0, "min"),
        parameters={"a": a, "b": b},
    )


def _schaffer_spec() -> BenchmarkSpec:
    obj = Objective(lambda t, p: schaffer(p[:, 0], p[:, 1]), arity=2, name="schaffer")
    return BenchmarkSpec(
        name="schaffer",
        arity=2,
        bounds=Bounds([-3.0, -3.0], [3.0, 3.0]),
        objective=obj,
        known_optimum=Optimum((0.0, 0.0), 0.0, "min"),
    )


def _two_well_spec(tau: float = 1000.0) -> BenchmarkSpec:
    obj = Objective(
        lambda t, p: two_well(t, p[:, 0], p[:, 1], tau=tau),
        arity=2,
        time_varying=True,
        name="two_well",
    )
    # the recorded optimum is the t=0 landscape; the (2, 2) well is
    # deeper once t > 2*tau
    return BenchmarkSpec(
        name="two_well",
        arity=2,
        bounds=Bounds([-6.0, -6.0], [6.0, 6.0]),
        objective=obj,
        known_optimum=Optimum((-2.5, -2.5), -2.0, "min"),
        parameters={"tau": tau},
    )


def _shekel_spec() -> BenchmarkSpec:
    obj = Objective(lambda t, p: -shekel(p), arity=4, name="shekel")
    peak = (4.0, 4.0, 4.0, 4.0)
    return BenchmarkSpec(
        name="shekel",
        arity=4,
        bounds=Bounds(np.zeros(4), np.full(4, 10.0)),
        objective=obj,
        known_optimum=Optimum(peak, float(shekel(np.array(peak))), "max"),
        parameters={"m": SHEKEL_A.shape[1]},
    )


_BUILDERS = {
    "sphere": _sphere_spec,
    "rosenbrock": _rosenbrock_spec,
    "schaffer": _schaffer_spec,
    "two_well": _two_well_spec,
    "shekel": _shekel_spec,
}

BENCHMARK_NAMES = tuple(sorted(_BUILDERS))


def make_benchmark(name: str, **params) -> BenchmarkSpec:
    """Build a benchmark spec, optionally overriding its constants
    (e.g. ``make_benchmark("two_well", tau=500.0)``)."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown benchmark {name!r}; valid names: {', '.join(BENCHMARK_NAMES)}"
        ) from None
    return builder(**params)


def registry_lookup(name: str) -> BenchmarkSpec:
    """Look up a benchmark by name with its default constants."""
    return make_benchmark(name)
