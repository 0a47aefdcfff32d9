import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spingates.errors import ContractError
from spingates.nelder_mead import nelder_mead


def rosenbrock(x):
    return 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2


def test_quadratic_minimum():
    target = np.array([1.0, 2.0])
    res = nelder_mead(lambda x: np.sum((x - target) ** 2), [0.0, 0.0], 500)
    assert np.max(np.abs(res.x - target)) < 1e-6
    assert res.n_evals <= 500


def test_rosenbrock():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], 2000)
    assert res.fun <= 1e-6
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-3)


def test_constant_objective_collapses():
    res = nelder_mead(lambda x: 3.5, [0.3, -0.2, 1.0], 5000)
    assert res.fun == 3.5
    assert res.reason == "collapse"
    assert res.n_evals < 5000


def test_budget_is_respected():
    calls = []

    def f(x):
        calls.append(1)
        return rosenbrock(x)

    res = nelder_mead(f, [-1.2, 1.0], 37)
    assert len(calls) == 37 == res.n_evals
    assert res.reason == "budget"


def test_nonfinite_values_are_rejected_and_counted():
    def f(x):
        return np.nan if x[0] < 0 else (x[0] - 1) ** 2 + x[1] ** 2

    res = nelder_mead(f, [0.5, 0.5], 400, scale=-1.0)
    assert res.n_nonfinite > 0
    assert np.isfinite(res.fun) and res.fun < 1e-8


def test_first_evaluation_is_x0_and_trace_is_monotone():
    seen = []

    def f(x):
        seen.append(np.array(x))
        return float(np.sum(np.asarray(x) ** 2))

    res = nelder_mead(f, [1.0, 2.0], 200)
    assert np.array_equal(seen[0], [1.0, 2.0])
    best = [b for _, b in res.trace]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert res.trace[-1][1] == res.fun


def test_deterministic():
    a = nelder_mead(rosenbrock, [-1.2, 1.0], 300)
    b = nelder_mead(rosenbrock, [-1.2, 1.0], 300)
    assert np.array_equal(a.x, b.x) and a.trace == b.trace


def test_budget_too_small():
    with pytest.raises(ContractError):
        nelder_mead(rosenbrock, [0.0, 0.0], 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.integers(10, 200))
def test_never_worse_than_start(x0, budget):
    x0 = np.array(x0)
    budget = max(budget, x0.size + 2)
    f = lambda x: float(np.sum((x - 0.3) ** 2) + np.sum(np.cos(3 * x)))
    res = nelder_mead(f, x0, budget)
    assert res.fun <= f(x0)
    assert res.fun == pytest.approx(f(res.x))


def test_adaptive_coefficients():
    from spingates.nelder_mead import coefficients
    assert coefficients(2) == (1.0, 2.0, 0.5, 0.5)
    assert coefficients(2, adaptive=True) == (1.0, 2.0, 0.5, 0.5)
    r, e, c, s = coefficients(10, adaptive=True)
    assert (r, e, c, s) == pytest.approx((1.0, 1.2, 0.7, 0.9))


def test_adaptive_high_dimensional_quadratic():
    rng = np.random.default_rng(0)
    target = rng.normal(size=12)
    f = lambda x: float(np.sum((x - target) ** 2 * np.arange(1, 13)))
    plain = nelder_mead(f, np.zeros(12), 3000)
    adaptive = nelder_mead(f, np.zeros(12), 3000, adaptive=True)
    assert adaptive.fun < 1e-6
    assert adaptive.fun <= plain.fun
