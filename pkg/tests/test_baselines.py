"""Ridge-regularized linear, Gaussian naive Bayes, and RBF-kernel SVM."""

import math

import numpy as np
import pytest

from covexplain import (ConvergenceError, DataError, decision_scores, fit_gnb,
                        fit_linear, fit_svm_rbf, gnb_log_posteriors,
                        kkt_residuals)
from covexplain.baselines import VAR_FLOOR, _rbf_kernel, predict

# XOR with C=10, gamma=1: symmetry forces equal alphas; a dual grid search
# gives the optimum alpha* = 4 / (4 + 4e^-2 - 8e^-1) = 2.502649...,
# dual objective W* = 2 alpha* = 5.005299...
XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([0, 0, 1, 1])
XOR_ALPHA = 4.0 / (4.0 + 4.0 * math.exp(-2.0) - 8.0 * math.exp(-1.0))


# ---------------------------------------------------------------- linear

def _line_data():
    x = np.array([[1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1])  # signed targets -1, -1, +1
    return x, y


def test_linear_unregularized_closed_form():
    x, y = _line_data()
    model = fit_linear(x, y, ridge=0.0)
    assert model.w[0] == pytest.approx(1.0, rel=1e-9)
    assert model.b == pytest.approx(-7.0 / 3.0, rel=1e-9)


def test_linear_ridge_shrinks_slope_only():
    x, y = _line_data()
    model = fit_linear(x, y, ridge=1.0)
    assert model.w[0] == pytest.approx(2.0 / 3.0, rel=1e-9)
    assert model.b == pytest.approx(-5.0 / 3.0, rel=1e-9)


def test_linear_huge_ridge_collapses_to_bias_class():
    # unpenalized intercept: weights -> 0, intercept -> mean signed target
    x, y = _line_data()
    model = fit_linear(x, y, ridge=1e8)
    assert abs(model.w[0]) < 1e-6
    assert model.b == pytest.approx(-1.0 / 3.0, rel=1e-4)
    assert predict(model, x).tolist() == [0, 0, 0]


def test_linear_separable_data_classifies():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, size=200)
    x = rng.normal(size=(200, 5))
    x[:, 2] += 6.0 * (y - 0.5)
    model = fit_linear(x, y, ridge=1e-3)
    assert (predict(model, x) == y).mean() > 0.97


def test_linear_rejects_negative_ridge():
    x, y = _line_data()
    with pytest.raises(DataError):
        fit_linear(x, y, ridge=-0.1)


def test_linear_accepts_signed_labels():
    x, _ = _line_data()
    a = fit_linear(x, np.array([0, 0, 1]))
    b = fit_linear(x, np.array([-1, -1, 1]))
    assert np.allclose(a.w, b.w) and np.allclose(a.b, b.b)


# ---------------------------------------------------------------- gnb

def test_gnb_closed_form_means_and_variances():
    x = np.array([[-1.0], [1.0], [9.0], [11.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_gnb(x, y)
    assert model.means.tolist() == [[0.0], [10.0]]
    assert model.variances.tolist() == [[1.0], [1.0]]  # biased
    assert model.priors.tolist() == [0.5, 0.5]


def test_gnb_log_posterior_oracle():
    # at x=2 with unit variances: log p0 - log p1 = (64 - 4) / 2 = 30
    x = np.array([[-1.0], [1.0], [9.0], [11.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_gnb(x, y)
    lp = gnb_log_posteriors(model, np.array([[2.0]]))
    assert lp[0, 0] - lp[0, 1] == pytest.approx(30.0, rel=1e-12)
    assert predict(model, np.array([[2.0]])).tolist() == [0]
    assert predict(model, np.array([[6.0]])).tolist() == [1]


def test_gnb_variance_floor():
    # a constant feature would give variance 0; the floor keeps it finite
    x = np.array([[5.0, -1.0], [5.0, 1.0], [5.0, 9.0], [5.0, 11.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_gnb(x, y)
    assert model.variances[:, 0].tolist() == [VAR_FLOOR, VAR_FLOOR]
    lp = gnb_log_posteriors(model, x)
    assert np.isfinite(lp).all()


def test_gnb_unequal_priors():
    x = np.array([[0.0], [0.2], [-0.2], [10.0], [10.4]])
    y = np.array([0, 0, 0, 1, 1])
    model = fit_gnb(x, y)
    assert model.priors.tolist() == pytest.approx([0.6, 0.4], rel=1e-6)


def test_gnb_single_class_errors():
    with pytest.raises(DataError, match="single-class"):
        fit_gnb(np.zeros((4, 2)), np.zeros(4, dtype=int))


def test_gnb_needs_two_per_class():
    with pytest.raises(DataError, match="fewer than 2"):
        fit_gnb(np.zeros((3, 2)), np.array([0, 0, 1]))


# ---------------------------------------------------------------- rbf svm

def test_rbf_kernel_values():
    k = _rbf_kernel(np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]), 1.0)
    assert k[0, 0] == pytest.approx(math.exp(-2.0), rel=1e-12)
    k = _rbf_kernel(XOR_X, XOR_X, 0.5)
    assert np.allclose(k, k.T)
    assert np.allclose(np.diag(k), 1.0)


def test_svm_xor_separates():
    model = fit_svm_rbf(XOR_X, XOR_Y, c=10.0, gamma=1.0)
    assert (predict(model, XOR_X) == XOR_Y).all()
    # a linear model cannot do this
    lin = fit_linear(XOR_X, XOR_Y)
    assert (predict(lin, XOR_X) == XOR_Y).mean() <= 0.75


def test_svm_xor_reaches_symmetric_dual_optimum():
    model = fit_svm_rbf(XOR_X, XOR_Y, c=10.0, gamma=1.0, tol=1e-3)
    assert model.sv.shape == (4, 2)  # every point is a support vector
    alphas = np.abs(model.coef)
    assert np.allclose(alphas, XOR_ALPHA, atol=0.05)
    assert abs(model.b) < 0.05  # symmetry
    # dual objective: sum alpha - 0.5 coef^T K coef, near the grid optimum
    k = _rbf_kernel(model.sv, model.sv, model.gamma)
    dual = alphas.sum() - 0.5 * float(model.coef @ k @ model.coef)
    assert dual == pytest.approx(2.0 * XOR_ALPHA, abs=0.01)


def test_svm_xor_kkt_residuals():
    model = fit_svm_rbf(XOR_X, XOR_Y, c=10.0, gamma=1.0, tol=1e-3)
    res = kkt_residuals(model, XOR_X, XOR_Y, c=10.0)
    assert res.max() <= 2e-3


def test_svm_gamma_defaults_to_inverse_dim():
    model = fit_svm_rbf(XOR_X, XOR_Y, c=1.0)
    assert model.gamma == pytest.approx(0.5)


def test_svm_deterministic():
    rng = np.random.default_rng(3)
    y = rng.integers(0, 2, size=60)
    x = rng.normal(size=(60, 3))
    x[:, 0] += 2.0 * (y - 0.5)
    a = fit_svm_rbf(x, y, c=1.0)
    b = fit_svm_rbf(x, y, c=1.0)
    assert np.array_equal(a.sv, b.sv)
    assert np.array_equal(a.coef, b.coef)
    assert a.b == b.b


def test_svm_learns_blobs():
    rng = np.random.default_rng(4)
    y = rng.integers(0, 2, size=120)
    x = rng.normal(scale=0.7, size=(120, 2))
    x += 2.5 * np.stack([y - 0.5, 0.5 - y], axis=1)
    model = fit_svm_rbf(x, y, c=1.0)
    assert (predict(model, x) == y).mean() > 0.95


def test_svm_iteration_cap_raises():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 2))
    y = rng.integers(0, 2, size=40)  # pure noise, slow to converge
    with pytest.raises(ConvergenceError) as exc:
        fit_svm_rbf(x, y, c=100.0, gamma=50.0, max_iter=3)
    assert exc.value.iterations == 3


# ---------------------------------------------------------------- scores

def test_decision_scores_sign_convention():
    x, y = _line_data()
    lin = fit_linear(x, y)
    s = decision_scores(lin, x)
    assert (s > 0).tolist() == [False, False, True]
    gnb = fit_gnb(np.array([[-1.0], [1.0], [9.0], [11.0]]),
                  np.array([0, 0, 1, 1]))
    s = decision_scores(gnb, np.array([[2.0], [6.0]]))
    assert s[0] < 0 < s[1]


def test_predict_tie_is_anti():
    x = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    lin = fit_linear(x, y)
    assert predict(lin, np.array([[0.0]])).tolist() == [0]  # score == 0
