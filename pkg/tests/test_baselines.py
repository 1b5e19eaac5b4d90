import math

import numpy as np
import pytest

from dpboot.baselines import BaselineConfig, noisycov_ci, noisyvar_ci
from dpboot.mechanisms import Dataset


@pytest.fixture
def unit_data():
    return Dataset.from_arrays(np.random.default_rng(0).random(500))


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(mu=0)
    with pytest.raises(ValueError):
        BaselineConfig(mu=1, nsim=50)
    with pytest.raises(ValueError):
        BaselineConfig(mu=1, level=1.0)
    with pytest.raises(ValueError):
        BaselineConfig(mu=1, noise_mode="as_printed")
    with pytest.raises(ValueError):
        BaselineConfig(mu=1, noise_mode="other")


def test_budget_split_composes_to_mu():
    n, mu = 3000, 0.7
    cfg = BaselineConfig(mu)
    for k in (2, 3):
        var = cfg.noise_var(n, k)
        assert var == pytest.approx(k * (1 / n) ** 2 / mu**2)
        per_release_mu = (1 / n) / math.sqrt(var)
        assert math.sqrt(k * per_release_mu**2) == pytest.approx(mu)


def test_as_printed_scale():
    cfg = BaselineConfig(1.0, noise_mode="as_printed", B=200)
    assert cfg.noise_var(3000, 2) == pytest.approx(2 * 200 / 3000**2)
    assert cfg.noise_var(3000, 3) == pytest.approx(3 * 200 / 3000**2)


def test_noisyvar_deterministic(unit_data):
    cfg = BaselineConfig(1.0, nsim=200)
    a = noisyvar_ci(unit_data, cfg, np.random.default_rng(4))
    b = noisyvar_ci(unit_data, cfg, np.random.default_rng(4))
    assert a == b


def test_noisyvar_symmetric(unit_data):
    ci = noisyvar_ci(unit_data, BaselineConfig(1.0, nsim=200), np.random.default_rng(1))
    assert (ci.lower + ci.upper) / 2 == pytest.approx(ci.flags["M1"])
    assert ci.width >= 0 and ci.method == "noisyvar"


def test_noisyvar_simulated_data_clamped(unit_data, monkeypatch):
    seen = []
    real_clip = np.clip

    def spy(x, lo, hi, *args, **kwargs):
        out = real_clip(x, lo, hi, *args, **kwargs)
        seen.append(out)
        return out

    monkeypatch.setattr(np, "clip", spy)
    noisyvar_ci(unit_data, BaselineConfig(0.05, nsim=200), np.random.default_rng(2))
    assert seen
    assert all(np.all((s >= 0) & (s <= 1)) for s in seen)


def test_noisyvar_rejects_unbounded():
    d = Dataset.from_arrays(np.linspace(0, 5, 20), (0, 5))
    with pytest.raises(ValueError):
        noisyvar_ci(d, BaselineConfig(1.0, nsim=100), np.random.default_rng(0))


def test_noisycov_clamp():
    rng = np.random.default_rng(3)
    x = rng.random(200)
    d = Dataset.from_arrays([x, x])
    for seed in range(20):
        ci = noisycov_ci(d, BaselineConfig(0.05, nsim=100), np.random.default_rng(seed))
        m1, m2, m3 = ci.flags["M1"], ci.flags["M2"], ci.flags["M3"]
        assert abs(m3) <= math.sqrt(m1 * m2) + 1e-15
        assert (ci.lower + ci.upper) / 2 == pytest.approx(m3)


def test_noisycov_independent_coverage():
    rng = np.random.default_rng(5)
    cfg = BaselineConfig(5.0, nsim=200)
    hits = [
        noisycov_ci(Dataset.from_arrays(rng.random((2, 2000))), cfg, rng).covers(0.0)
        for _ in range(60)
    ]
    # 90% nominal; 60 replicates give a binomial sd of about 0.04
    assert 0.75 <= np.mean(hits) <= 1.0


def test_noisycov_arity(unit_data):
    with pytest.raises(ValueError):
        noisycov_ci(unit_data, BaselineConfig(1.0, nsim=100), np.random.default_rng(0))
