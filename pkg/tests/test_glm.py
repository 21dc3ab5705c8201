import numpy as np
import pytest

from anxiometer.glm import PoissonGLM, poisson_loglik

import oracles


def planted(n=1000, seed=0, b0=9.5, b1=-0.6):
    rng = np.random.default_rng(seed)
    x = rng.uniform(1.5, 3.5, size=n)
    return x, rng.poisson(np.exp(b0 + b1 * x))


def test_recovery_ci_and_score_equations():
    x, y = planted()
    m = PoissonGLM().fit(x[:, None], y)
    lo, hi = m.conf_int()[1]
    assert lo <= -0.6 <= hi
    assert m.converged_ and np.max(np.abs(m.score_)) < 1e-6
    assert m.zvalues_ == pytest.approx(m.params_ / m.bse_)


def test_matches_likelihood_grid():
    x, y = planted(n=300, seed=2)
    m = PoissonGLM().fit(x[:, None], y)
    b0, b1 = oracles.poisson_grid_mle(y, x, (9.0, 0.0), 2.0)
    assert abs(b0 - m.params_[0]) < 1e-3 and abs(b1 - m.params_[1]) < 1e-3


def test_constant_outcome():
    x = np.linspace(1, 4, 50)
    m = PoissonGLM().fit(x[:, None], np.full(50, 7))
    assert abs(m.coef_[0]) < 1e-8 and abs(m.pseudo_r2_) < 1e-10


def test_intercept_only_pseudo_r2_exactly_zero():
    y = np.array([0, 3, 5, 2, 9])
    m = PoissonGLM().fit(np.empty((5, 0)), y)
    assert m.pseudo_r2_ == 0.0 and m.intercept_ == pytest.approx(np.log(y.mean()))


def test_errors_and_nonconvergence():
    with pytest.raises(ValueError):
        PoissonGLM().fit(np.ones((3, 1)), [-1, 2, 3])
    with pytest.raises(ValueError):
        PoissonGLM().fit(np.arange(3.0)[:, None], [0, 0, 0])
    x, y = planted(n=200)
    m = PoissonGLM(max_iter=1).fit(x[:, None], y)
    assert not m.converged_


def test_robust_se_close_for_true_poisson():
    x, y = planted(n=2000, seed=5)
    a = PoissonGLM().fit(x[:, None], y)
    b = PoissonGLM(robust=True).fit(x[:, None], y)
    assert np.allclose(a.params_, b.params_)
    assert b.bse_[1] == pytest.approx(a.bse_[1], rel=0.2)


def test_loglik_definition():
    assert poisson_loglik([0, 2], [1.0, 2.0]) == pytest.approx(-1 + 2 * np.log(2) - 2 - np.log(2))
