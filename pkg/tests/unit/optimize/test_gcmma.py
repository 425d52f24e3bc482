import numpy as np
import pytest

from foamopt.optimize import GCMMA, gcmma_step


def quadratic_1d(x):
    return float((x[0] - 3.0) ** 2), np.zeros(0)


def minimize(optimizer, x, lo, hi, fun, grad, n_steps, conservative=True):
    for _ in range(n_steps):
        f0, f = fun(x)
        df0, df = grad(x)
        x = optimizer.step(x, lo, hi, f0, df0, f, df, evaluate=fun if conservative else None)
        assert np.all(x >= lo) and np.all(x <= hi)
    return x


class TestUnconstrained:
    def test_interior_optimum(self):
        x = minimize(
            GCMMA(),
            np.array([8.0]),
            np.array([0.0]),
            np.array([10.0]),
            quadratic_1d,
            lambda x: (np.array([2.0 * (x[0] - 3.0)]), np.zeros((0, 1))),
            60,
        )
        assert x[0] == pytest.approx(3.0, abs=1e-3)

    def test_active_bound(self):
        def fun(x):
            return float(x[0]), np.zeros(0)

        x = minimize(
            GCMMA(),
            np.array([5.0]),
            np.array([2.0]),
            np.array([10.0]),
            fun,
            lambda x: (np.array([1.0]), np.zeros((0, 1))),
            30,
        )
        assert x[0] == pytest.approx(2.0, abs=1e-4)


def test_constrained():
    # min x1^2 + x2^2  s.t.  1 - x1 - x2 <= 0
    def fun(x):
        return float(x @ x), np.array([1.0 - x.sum()])

    def grad(x):
        return 2.0 * x, -np.ones((1, 2))

    x = minimize(GCMMA(), np.array([1.5, 0.2]), np.zeros(2), np.full(2, 2.0), fun, grad, 100)
    assert np.allclose(x, [0.5, 0.5], atol=5e-3)
    assert x.sum() >= 1.0 - 1e-3


def test_plain_mma_stays_in_bounds():
    rng = np.random.default_rng(2)
    optimizer = GCMMA(max_inner=0)
    lo, hi = np.zeros(6), np.ones(6)
    x = rng.random(6)
    for _ in range(10):
        x = gcmma_step(optimizer, x, lo, hi, 1.0, rng.normal(size=6), np.array([0.1]), rng.normal(size=(1, 6)))
        assert np.all(x >= lo) and np.all(x <= hi)


def test_state_dict():
    def step(opt, x):
        return opt.step(x, np.zeros(2), np.ones(2), 1.0, np.array([1.0, -2.0]), np.array([-0.5]), np.array([[1.0, 1.0]]))

    a = GCMMA()
    x = np.array([0.5, 0.5])
    for _ in range(3):
        x = step(a, x)
    b = GCMMA()
    b.load_state_dict(a.state_dict())
    assert np.allclose(step(a, x), step(b, x))


class TestInvalid:
    @pytest.mark.parametrize(
        "kwargs", [dict(move=0.0), dict(move=1.5), dict(asyincr=0.9), dict(asydecr=1.1), dict(max_inner=-1)]
    )
    def test_settings(self, kwargs):
        with pytest.raises(ValueError):
            GCMMA(**kwargs)

    def test_bounds(self):
        with pytest.raises(ValueError, match="lo > hi"):
            GCMMA().step(np.zeros(1), np.ones(1), np.zeros(1), 0.0, np.ones(1), np.zeros(0), np.zeros((0, 1)))

    def test_gradient(self):
        with pytest.raises(ValueError, match="finite"):
            GCMMA().step(np.zeros(1), np.zeros(1), np.ones(1), 0.0, np.array([np.nan]), np.zeros(0), np.zeros((0, 1)))
