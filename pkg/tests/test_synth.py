import numpy as np
import pytest

from wavescale.synth import CascadeSpec, FbmSpec, fgn_autocovariance, gen_cascade, gen_fbm, rng_for


def test_brownian_increments_are_white():
    x = gen_fbm(FbmSpec(0.5, 4096, 0))
    inc = np.diff(x)
    z = inc - inc.mean()
    rho = (z[:-1] @ z[1:]) / (z @ z)
    assert abs(rho) < 3 / np.sqrt(len(z))


@pytest.mark.parametrize("H", [0.3, 0.5, 0.8])
def test_increment_variance_and_stationarity(H):
    var, ratio = [], []
    for s in range(20):
        inc = np.diff(gen_fbm(FbmSpec(H, 2048, s)))
        var.append(inc.var())
        ratio.append(inc[:1000].var() / inc[1000:].var())
    assert abs(np.mean(var) - 1) < 0.1
    assert abs(np.mean(ratio) - 1) < 0.15


def test_autocovariance_at_lag_zero_and_one():
    g = fgn_autocovariance(0.7, 3)
    assert g[0] == 1.0
    assert g[1] == pytest.approx(0.5 * (2**1.4 - 2))


def test_same_seed_same_path():
    a = gen_fbm(FbmSpec(0.4, 1024, 9))
    b = gen_fbm(FbmSpec(0.4, 1024, 9))
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, gen_fbm(FbmSpec(0.4, 1024, 10)))


def test_substreams_are_independent():
    a = rng_for(1, 0).standard_normal(4)
    b = rng_for(1, 1).standard_normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, rng_for(1, 0).standard_normal(4))


@pytest.mark.parametrize("depth", [1, 5, 12])
def test_cascade_mass_conserved(depth):
    m = gen_cascade(CascadeSpec(0.7, depth, 3))
    assert len(m) == 2**depth
    assert abs(m.sum() - 1) < 1e-12
    # parents are the pairwise sums at every coarser depth
    for _ in range(depth):
        m = m.reshape(-1, 2).sum(axis=1)
        assert abs(m.sum() - 1) < 1e-12


def test_uniform_cascade():
    m = gen_cascade(CascadeSpec(0.5, 8, 0))
    assert np.allclose(m, 2.0**-8, rtol=0, atol=1e-15)


@pytest.mark.parametrize("bad", [dict(hurst=1.0, n=8), dict(hurst=0.5, n=12)])
def test_bad_fbm_spec(bad):
    with pytest.raises(ValueError):
        FbmSpec(**bad)


def test_bad_cascade_spec():
    with pytest.raises(ValueError):
        CascadeSpec(0.4, 5)
