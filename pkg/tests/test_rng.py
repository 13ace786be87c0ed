import numpy as np
from scipy import stats

from bonusruin._rng import PathStream, stream_key, stream_keys, uniform_scalar, uniforms


def test_scalar_matches_vector():
    keys = stream_keys(2024, 0, 100)
    for i in (0, 1, 7, 99):
        assert stream_key(2024, i) == int(keys[i])
        for j in (0, 1, 1000):
            assert uniform_scalar(int(keys[i]), j) == uniforms(keys, j)[i]


def test_deterministic_and_seed_sensitive():
    a = uniforms(stream_keys(5, 0, 1000), 3)
    b = uniforms(stream_keys(5, 0, 1000), 3)
    c = uniforms(stream_keys(6, 0, 1000), 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_range_and_moments():
    keys = stream_keys(11, 0, 200_000)
    u = uniforms(keys, 0)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(u.var() - 1.0 / 12.0) < 0.002


def test_uniformity_ks():
    u = uniforms(stream_keys(17, 0, 100_000), 42)
    assert stats.kstest(u, "uniform").pvalue > 1e-4


def test_no_cross_stream_or_cross_draw_correlation():
    keys = stream_keys(3, 0, 50_000)
    u0 = uniforms(keys, 0)
    u1 = uniforms(keys, 1)
    other = uniforms(stream_keys(3, 50_000, 100_000), 0)
    assert abs(np.corrcoef(u0, u1)[0, 1]) < 0.02
    assert abs(np.corrcoef(u0, other)[0, 1]) < 0.02


def test_path_stream_cursor():
    s = PathStream(9, 4)
    first = s.next_uniform()
    second = s.next_uniform()
    assert s.cursor == 2
    assert first == uniform_scalar(stream_key(9, 4), 0)
    assert second == uniform_scalar(stream_key(9, 4), 1)
