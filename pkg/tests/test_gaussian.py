"""Tests for the gaussian module."""

import math

import numpy as np
import pytest

from opgauss.exceptions import DomainError, NumericalError
from opgauss.gaussian import (
    JointSample,
    NoiseStream,
    cholesky_with_jitter,
    empirical_cov,
    gram_matrix,
    sample_model_data,
    sample_path,
    sample_paths,
    sample_process,
    sample_set_noise,
    sample_white_noise_basis,
)
from opgauss.grid import GridFunction, indicator, midpoints
from opgauss.likelihood import ModelParams
from opgauss.operators import (
    FORWARD,
    Identity,
    Scaled,
    Triangular,
    matrix_approx,
    ou_kernel,
)

REPS = 100_000


def _values(samples):
    return np.stack([s.values for s in samples])


# ==========
# NoiseStream
# ==========


def test_stream_reproducible():
    """Same seed and block index give identical draws."""
    a = NoiseStream(seed=7)
    b = NoiseStream(seed=7)
    assert np.array_equal(a.normals((3, 4)), b.normals((3, 4)))
    assert np.array_equal(a.normals(5), b.normals(5))
    block = NoiseStream(7).block(9, 6)
    assert np.array_equal(block, NoiseStream(7, counter=9).normals(6))


def test_stream_blocks_differ():
    """Consecutive blocks and different seeds give different draws."""
    s = NoiseStream(seed=1)
    first, second = s.normals(8), s.normals(8)
    assert not np.array_equal(first, second)
    assert not np.array_equal(NoiseStream(2).normals(8), first)
    assert s.counter == 2


def test_stream_validation():
    """Seeds outside 64 bits are rejected."""
    with pytest.raises(DomainError):
        NoiseStream(seed=-1)
    with pytest.raises(DomainError):
        NoiseStream(seed=2**64)


# ==========
# White noise
# ==========


def test_white_noise_zero_function(stream):
    """W(0) = 0 on every draw."""
    draws = sample_white_noise_basis([GridFunction.constant(0.0, 5)], stream, reps=10)
    assert not np.any(_values(draws))


def test_white_noise_variances(stream):
    """Var W(f) = ||f||^2 for f = 1 and f = sqrt(2)."""
    fs = [GridFunction.constant(1.0, 8), GridFunction.constant(math.sqrt(2.0), 8)]
    cov = empirical_cov(sample_white_noise_basis(fs, stream, reps=REPS))
    for j, expected in enumerate([1.0, 2.0]):
        se = expected * math.sqrt(2.0 / REPS)
        assert abs(cov[j, j] - expected) <= 3 * se


def test_white_noise_linearity(stream):
    """W(a f + g) - a W(f) - W(g) vanishes draw by draw."""
    f = GridFunction(np.linspace(-1, 1, 10))
    g = indicator(0.2, 0.55, 10)
    draws = _values(sample_white_noise_basis([2.5 * f + g, f, g], stream, reps=50))
    assert np.allclose(draws[:, 0] - 2.5 * draws[:, 1] - draws[:, 2], 0.0, atol=1e-12)


def test_white_noise_third_moment(stream):
    """Standardized third moment of W(f) is consistent with zero."""
    x = _values(sample_white_noise_basis([indicator(0.0, 0.3, 10)], stream, REPS))[:, 0]
    z = (x - x.mean()) / x.std()
    assert abs(np.mean(z**3)) <= 4 * math.sqrt(15.0 / REPS)


def test_white_noise_empty(stream):
    """At least one test function is needed, all on one grid."""
    with pytest.raises(DomainError):
        sample_white_noise_basis([], stream)
    with pytest.raises(DomainError):
        sample_white_noise_basis(
            [GridFunction.constant(1.0, 2), GridFunction.constant(1.0, 3)], stream
        )


# ==========
# Sets
# ==========


def test_set_noise_unit_interval(stream):
    """Var W([0, 1]) within 1 +- 3 sqrt(2 / reps)."""
    x = _values(sample_set_noise([(0.0, 1.0)], stream, REPS))[:, 0]
    assert abs(np.var(x, ddof=1) - 1.0) <= 3 * math.sqrt(2.0 / REPS)


def test_set_noise_disjoint_halves(stream):
    """Disjoint halves are uncorrelated and additive draw by draw."""
    sets = [(0.0, 0.5), (0.5, 1.0), (0.0, 1.0)]
    draws = _values(sample_set_noise(sets, stream, REPS))
    corr = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert abs(corr) <= 3 / math.sqrt(REPS)
    residual = draws[:, 2] - draws[:, 0] - draws[:, 1]
    assert np.var(residual) <= 1e-20


def test_set_noise_same_set(stream):
    """A = B gives correlation one."""
    draws = _values(sample_set_noise([(0.1, 0.4), (0.1, 0.4)], stream, 10))
    assert np.array_equal(draws[:, 0], draws[:, 1])


def test_set_noise_overlap_covariance(stream):
    """Cov(W(A), W(B)) = mu(A & B) for overlapping intervals."""
    draws = sample_set_noise([(0.0, 0.6), (0.3, 0.9)], stream, REPS)
    cov = empirical_cov(draws)
    se = math.sqrt((0.6 * 0.6 + 0.3**2) / REPS)
    assert abs(cov[0, 1] - 0.3) <= 4 * se


def test_set_noise_bad_interval(stream):
    """Intervals must lie in [0, 1]."""
    with pytest.raises(DomainError):
        sample_set_noise([(0.5, 1.5)], stream)


# ==========
# Operator-defined processes
# ==========


def test_process_identity_matches_basis_route():
    """Gram-Cholesky and basis routes agree within 4 standard errors."""
    n = 12
    fs = [
        indicator(0.0, 0.5, n),
        GridFunction(np.linspace(0.0, 2.0, n)),
        GridFunction(np.cos(np.pi * midpoints(n))),
    ]
    basis = empirical_cov(sample_white_noise_basis(fs, NoiseStream(1), REPS))
    gram = empirical_cov(sample_process(Identity(), fs, NoiseStream(2), REPS))
    sigma = gram_matrix(Identity(), fs)
    se = np.sqrt((np.outer(np.diag(sigma), np.diag(sigma)) + sigma**2) / REPS)
    assert np.all(np.abs(basis - gram) <= 4 * math.sqrt(2.0) * se)


def test_process_scaled_variance(stream):
    """Var O(f) = lambda^2 ||f||^2 for O = lambda I."""
    f = indicator(0.0, 0.5, 8)
    gram = gram_matrix(Scaled(3.0, Identity()), [f])
    assert gram[0, 0] == pytest.approx(9 * 0.5)
    x = _values(sample_process(Scaled(3.0, Identity()), [f], stream, REPS))[:, 0]
    assert abs(np.var(x, ddof=1) - 4.5) <= 3 * 4.5 * math.sqrt(2.0 / REPS)


def test_process_volterra_gram():
    """For O = 1{s<t} and f_j = 1_[0,t_j], Gamma_jk = int (t_j - s)+ (t_k - s)+ ds."""
    n = 400
    t = [0.25, 0.5, 1.0]
    fs = [indicator(0.0, tj, n) for tj in t]
    gram = gram_matrix(Triangular(FORWARD), fs)
    for j, a in enumerate(t):
        for k, b in enumerate(t):
            lo = min(a, b)
            exact = a * b * lo - (a + b) * lo**2 / 2 + lo**3 / 3
            assert gram[j, k] == pytest.approx(exact, rel=1e-4)


def test_cholesky_jitter():
    """Near-singular matrices are factorized; indefinite ones are rejected."""
    v = np.array([1.0, 1.0, 1.0])
    chol = cholesky_with_jitter(np.outer(v, v))
    assert np.allclose(chol @ chol.T, np.outer(v, v), atol=1e-6)
    assert not np.any(cholesky_with_jitter(np.zeros((2, 2))))
    with pytest.raises(NumericalError, match="covariance not PSD"):
        cholesky_with_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))


# ==========
# Paths
# ==========


def test_brownian_path_law():
    """lambda = 1: Var at 0.5 is 0.5 and Cov(0.25, 0.75) is 0.25."""
    n, reps = 128, 10_000
    paths = sample_paths(Triangular(FORWARD), n, NoiseStream(11), reps=reps)
    data = np.stack([p.values for p in paths])
    m = midpoints(n)
    i, j, k = 63, 31, 95  # midpoints 0.49609, 0.24609, 0.74609
    var = np.var(data[:, i], ddof=1)
    assert abs(var - m[i]) <= 3 * m[i] * math.sqrt(2.0 / reps)
    cov = np.cov(data[:, j], data[:, k], ddof=1)[0, 1]
    se = math.sqrt((m[j] * m[k] + m[j] ** 2) / reps)
    assert abs(cov - m[j]) <= 3 * se


def test_zero_path(stream):
    """lambda = 0 gives the zero path."""
    path = sample_path(Triangular(FORWARD.scaled(0.0)), 16, stream)
    assert not np.any(path.values)


def test_ou_path_covariance():
    """Lag covariance alpha^2 / (2 lambda) exp(-lambda h) in the interior."""
    n, reps, length = 64, 20_000, 10.0
    op = Triangular(ou_kernel(1.0, 1.0))
    paths = sample_paths(op, n, NoiseStream(5), reps=reps, n_quad=512, length=length)
    data = np.stack([p.values for p in paths])
    i, lag = 40, 6  # cells of width 10/64, lag 0.9375
    h = lag * length / n
    expected = 0.5 * math.exp(-h)
    cov = np.cov(data[:, i], data[:, i + lag], ddof=1)[0, 1]
    se = math.sqrt((0.25 + expected**2) / reps)
    assert abs(cov - expected) <= 4 * se


def test_sample_model_data_covariance():
    """y ~ N(0, M_n) for the mixed model."""
    model = ModelParams.mixed(2.0, 1.0)
    y = sample_model_data(model, 4, NoiseStream(3), reps=REPS)
    target = matrix_approx(model.operator(), 4).matrix
    cov = np.cov(y, rowvar=False)
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target**2) / REPS)
    assert np.all(np.abs(cov - target) <= 4 * se)
    with pytest.raises(DomainError):
        sample_model_data(ModelParams.ou(1.0, 1.0), 4, NoiseStream(3))


# ==========
# empirical_cov
# ==========


def test_empirical_cov_examples():
    """Constant samples, the (x, -x) pair, and too few replicates."""
    same = [JointSample(np.array([1.0, 2.0]), r) for r in range(5)]
    assert not np.any(empirical_cov(same))
    pair = [JointSample(np.array([3.0]), 0), JointSample(np.array([-3.0]), 1)]
    assert empirical_cov(pair)[0, 0] == pytest.approx(18.0)
    with pytest.raises(DomainError):
        empirical_cov(pair[:1])


def test_empirical_cov_identity_stream(stream):
    """Independent normals: off-diagonals within 3 / sqrt(reps)."""
    samples = [JointSample(row, r) for r, row in enumerate(stream.normals((REPS, 3)))]
    cov = empirical_cov(samples)
    off = cov[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) <= 3 / math.sqrt(REPS))
