import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctmhopfield.dynamics import IterationConfig, QuadratureGrid
from ctmhopfield.errors import UndefinedMetricError
from ctmhopfield.synth import (
    ContinuousModel,
    CorruptionSpec,
    DiscreteModel,
    PatternSpec,
    benchmark_retrieval,
    corrupt,
    cosine_similarity,
    generate,
    row_cosines,
    subsample,
)

NO_NOISE = CorruptionSpec("gaussian_noise", sigma=0.0)


class TestGenerate:
    def test_circle_four(self):
        np.testing.assert_allclose(
            generate(PatternSpec("circle", 4)), [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15
        )

    def test_circle_twenty(self):
        x = generate(PatternSpec("circle", 20))
        assert x.shape == (20, 2)
        np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-12)
        angles = np.unwrap(np.arctan2(x[:, 1], x[:, 0]))
        np.testing.assert_allclose(np.diff(angles), 2 * np.pi / 20, atol=1e-12)

    def test_line(self):
        x = generate(PatternSpec("line", 3, params={"start": (0, 0), "end": (1, 1)}))
        np.testing.assert_allclose(x, [[0, 0], [0.5, 0.5], [1, 1]], atol=1e-15)

    def test_sinusoid(self):
        x = generate(PatternSpec("sinusoid", 5, params={"amplitude": 2.0, "frequency": 1.0, "scale": 4.0}))
        t = np.linspace(0, 1, 5)
        np.testing.assert_allclose(x[:, 0], 4 * t, atol=1e-15)
        np.testing.assert_allclose(x[:, 1], 2 * np.sin(2 * np.pi * t), atol=1e-15)

    def test_smooth_embedding_shape_and_determinism(self):
        spec = PatternSpec("smooth_embedding", 300, 16, seed=7)
        a, b = generate(spec), generate(spec)
        assert a.shape == (300, 16)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, generate(PatternSpec("smooth_embedding", 300, 16, seed=8)))

    def test_smooth_embedding_is_smooth(self):
        x = generate(PatternSpec("smooth_embedding", 2048, 32, seed=1))
        step = np.linalg.norm(np.diff(x, axis=0), axis=1).mean()
        spread = np.linalg.norm(x - x.mean(axis=0), axis=1).mean()
        assert step < 0.05 * spread

    def test_smooth_embedding_amplitude(self):
        x = generate(PatternSpec("smooth_embedding", 4096, 256, seed=2, params={"amplitude": 3.0}))
        assert 2.5 < np.sqrt(np.mean(x**2)) < 3.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "spiral", "l": 4},
            {"kind": "circle", "l": 0},
            {"kind": "circle", "l": 4, "d": 3},
            {"kind": "circle", "l": 4, "params": {"amplitude": 1.0}},
        ],
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            PatternSpec(**kwargs)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            generate(PatternSpec("circle", 4, params={"radius": -1.0}))
        with pytest.raises(ValueError):
            generate(PatternSpec("smooth_embedding", 4, 3, params={"k": 0}))


class TestCorrupt:
    def test_mask_half(self):
        out = corrupt([[1.0, 2.0, 3.0, 4.0]], CorruptionSpec("mask_fraction", fraction=0.5))
        np.testing.assert_array_equal(out, [[1, 2, 0, 0]])

    def test_mask_rounds_down(self):
        out = corrupt([[1.0, 2.0, 3.0]], CorruptionSpec("mask_fraction", fraction=0.5))
        np.testing.assert_array_equal(out, [[1, 2, 0]])

    def test_zero_sigma_is_identity(self):
        x = np.random.default_rng(0).normal(size=(5, 3))
        np.testing.assert_array_equal(corrupt(x, NO_NOISE), x)

    def test_noise_statistics(self):
        x = np.zeros((8, 1024))
        out = corrupt(x, CorruptionSpec("gaussian_noise", sigma=5.0, seed=3))
        stds = out.std(axis=1)
        assert np.all((stds >= 4.5) & (stds <= 5.5))

    def test_noise_deterministic(self):
        x = np.ones((4, 10))
        spec = CorruptionSpec("gaussian_noise", sigma=1.0, seed=11)
        np.testing.assert_array_equal(corrupt(x, spec), corrupt(x, spec))

    def test_does_not_mutate(self):
        x = np.random.default_rng(1).normal(size=(6, 4))
        before = x.copy()
        corrupt(x, CorruptionSpec("mask_fraction", fraction=0.75))
        corrupt(x, CorruptionSpec("gaussian_noise", sigma=2.0))
        np.testing.assert_array_equal(x, before)

    @given(st.floats(0.0, 1.0), st.integers(1, 40))
    @settings(max_examples=50)
    def test_mask_idempotent(self, fraction, d):
        x = np.arange(1, 3 * d + 1, dtype=float).reshape(3, d)
        spec = CorruptionSpec("mask_fraction", fraction=fraction)
        once = corrupt(x, spec)
        np.testing.assert_array_equal(corrupt(once, spec), once)
        assert np.count_nonzero(once[0] == 0) == math.floor(fraction * d)

    @pytest.mark.parametrize("kwargs", [{"kind": "blur"}, {"kind": "mask_fraction", "fraction": 1.5}, {"kind": "gaussian_noise", "sigma": -1}])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            CorruptionSpec(**kwargs)


class TestCosine:
    def test_identity(self):
        v = np.array([0.3, -2.0, 5.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("a, b", [([1, 0], [0, 1]), ([1, 1], [1, -1])])
    def test_orthogonal(self, a, b):
        assert cosine_similarity(a, b) == 0.0

    def test_zero_vector(self):
        with pytest.raises(UndefinedMetricError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_rows(self):
        a = np.array([[1.0, 0.0], [1.0, 1.0]])
        b = np.array([[2.0, 0.0], [1.0, -1.0]])
        np.testing.assert_allclose(row_cosines(a, b), [1.0, 0.0], atol=1e-15)
        with pytest.raises(UndefinedMetricError):
            row_cosines(a, np.zeros((2, 2)))


class TestSubsample:
    def test_identity(self):
        x = np.random.default_rng(0).normal(size=(7, 2))
        np.testing.assert_array_equal(subsample(x, 7), x)

    def test_endpoints(self):
        x = np.arange(4.0)[:, None]
        np.testing.assert_array_equal(subsample(x, 2)[:, 0], [0, 3])

    def test_512_to_128(self):
        x = np.arange(512.0)[:, None]
        idx = subsample(x, 128)[:, 0].astype(int)
        expected = [math.floor(i * 511 / 127 + 0.5) for i in range(128)]
        np.testing.assert_array_equal(idx, expected)
        assert idx[0] == 0 and idx[-1] == 511 and np.all(np.diff(idx) > 0)

    @pytest.mark.parametrize("l_sub", [0, 8])
    def test_out_of_range(self, l_sub):
        with pytest.raises(ValueError):
            subsample(np.ones((7, 2)), l_sub)

    @given(st.integers(1, 300), st.data())
    def test_ordered_distinct(self, l, data):
        l_sub = data.draw(st.integers(1, l))
        idx = subsample(np.arange(float(l))[:, None], l_sub)[:, 0]
        assert idx.size == l_sub and idx[0] == 0
        assert np.all(np.diff(idx) > 0)
        if l_sub > 1:
            assert idx[-1] == l - 1


class TestBenchmarkRetrieval:
    def test_clean_queries_discrete_sharp(self):
        x = generate(PatternSpec("circle", 8, params={"radius": 2.0}))
        res = benchmark_retrieval(x, NO_NOISE, DiscreteModel(), IterationConfig(beta=10.0))
        assert res.mean >= 0.999
        assert res.cosines.shape == (8,)
        assert res.wall_ms >= 0

    def test_baseline_sanity_anchor(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(20, 32))
        x /= np.linalg.norm(x, axis=1, keepdims=True) / 2.0
        gram = x @ x.T / 4.0
        assert gram[~np.eye(20, dtype=bool)].max() <= 0.9
        res = benchmark_retrieval(x, NO_NOISE, DiscreteModel(), IterationConfig(beta=10.0))
        assert res.mean >= 0.99

    def test_continuous_equals_discrete_when_uncompressed(self):
        x = generate(PatternSpec("smooth_embedding", 64, 8, seed=3))
        corruption = CorruptionSpec("gaussian_noise", sigma=0.5, seed=3)
        cfg = IterationConfig(beta=1.0)
        cont = benchmark_retrieval(x, corruption, ContinuousModel(64, 1e-10), cfg, QuadratureGrid.exact())
        disc = benchmark_retrieval(x, corruption, DiscreteModel(64), cfg)
        assert cont.mean == pytest.approx(disc.mean, abs=1e-6)
        np.testing.assert_allclose(cont.cosines, disc.cosines, atol=1e-6)

    def test_aggregates_exact(self):
        x = generate(PatternSpec("smooth_embedding", 50, 4, seed=4))
        res = benchmark_retrieval(
            x, CorruptionSpec("mask_fraction", fraction=0.5), ContinuousModel(10), IterationConfig(beta=2.0)
        )
        assert res.mean == float(np.mean(res.cosines))
        assert res.std == float(np.std(res.cosines))

    @pytest.mark.slow
    def test_smooth_embedding_continuous_not_worse(self):
        x = generate(PatternSpec("smooth_embedding", 2048, 64, seed=0))
        corruption = CorruptionSpec("gaussian_noise", sigma=5.0, seed=0)
        cfg = IterationConfig(beta=1 / math.sqrt(64))
        cont = benchmark_retrieval(x, corruption, ContinuousModel(256), cfg, QuadratureGrid.trapezoid(500))
        disc = benchmark_retrieval(x, corruption, DiscreteModel(256), cfg)
        assert cont.mean >= disc.mean
