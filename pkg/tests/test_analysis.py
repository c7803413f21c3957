import numpy as np
import pytest
from scipy import integrate

from translasso.datagen import ParameterError
from translasso.experiments.analysis import (
    contour_value,
    log_normalizer,
    prior_density,
    run_contours,
    run_priors,
)

TILDE = np.array([0.5, 2.0])


class TestContours:
    def test_origin(self):
        assert contour_value([0, 0], 1.0, 0.7, 0, 0, TILDE) == pytest.approx(0.7 * 2.5)

    def test_anchor(self):
        assert contour_value(TILDE, 1.3, 0.7, 1, 1, TILDE) == pytest.approx(1.3 * 2)

    def test_weighted_example(self):
        assert contour_value([1, 1], 1, 1, 1, 1, TILDE) == pytest.approx(4.75)

    def test_grid_output(self):
        res = run_contours()
        assert {r["method"] for r in res.rows} == {"lasso", "adaptive_lasso", "transfer_lasso",
                                                 "adaptive_transfer_lasso"}
        assert len(res.rows) == 16 * 41 * 41


def printed_normalizer(a, c, t):
    return (2 * a * np.exp(-c * t) - 2 * c * np.exp(-a * t)) / (a * a - c * c)


class TestPrior:
    def test_laplace(self):
        b = np.linspace(-3, 3, 13)
        assert np.allclose(prior_density(b, 1.7, 0.0, 1.0, 1.0, 2.0), 0.85 * np.exp(-1.7 * np.abs(b)))

    def test_zero_anchor_is_laplace(self):
        b = np.linspace(-3, 3, 13)
        assert np.allclose(prior_density(b, 1.0, 0.5, 1.0, 2.0, 0.0), np.exp(-2 * np.abs(b)))

    def test_matches_printed_normalizer(self):
        for a, c, t in [(1.0, 0.7, 2.0), (0.3, 2.0, 1.5), (4.0, 1.0, 0.2)]:
            assert np.exp(log_normalizer(a, c, 1, 1, t)) == pytest.approx(printed_normalizer(a, c, t), rel=1e-12)

    def test_equal_strength_limit(self):
        a, t = 1.3, 0.8
        expected = np.exp(-a * t) * (1 + a * t) / a
        assert np.exp(log_normalizer(a, a, 1, 1, t)) == pytest.approx(expected, rel=1e-14)
        near = np.exp(log_normalizer(a, a * (1 + 1e-9), 1, 1, t))
        assert near == pytest.approx(expected, rel=1e-8)

    def test_quadrature(self):
        f = lambda b: prior_density(b, 1.0, 0.7, 1.0, 1.0, 2.0)
        total = integrate.quad(f, -50, 50, points=[0.0, 2.0], epsabs=1e-12)[0]
        assert abs(total - 1) < 1e-6

    def test_improper(self):
        with pytest.raises(ParameterError):
            prior_density(0.0, 0.0, 0.0, 1, 1, 1)

    def test_maxima_at_kinks(self):
        b = np.linspace(-2, 4, 6001)
        for lam, eta in [(1.0, 0.5), (0.5, 1.0), (1.0, 1.0)]:
            d = prior_density(b, lam, eta, 1.0, 1.0, 2.0)
            top = b[np.argmax(d)]
            assert top == pytest.approx(0.0, abs=1e-9) or top == pytest.approx(2.0, abs=1e-9) or lam == eta

    def test_priors_table(self):
        res = run_priors()
        assert len(res.rows) == 2 * 5 * 2 * 161
        assert all(r["mean"] >= 0 for r in res.rows)
