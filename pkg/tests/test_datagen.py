"""The generator's central promise: inside a noise-free task block every
derived region is exactly the planted mixture of lower-indexed regions,
so plain least squares hands the mixing row back."""

import numpy as np
import pytest

from meshwave.datagen import DEFAULT_TASK_BLOCKS, SynthSpec, generate_session, make_synth_spec
from meshwave.mesh import fit_local_mesh


class TestShape:
    def test_default_layout(self):
        spec = SynthSpec()
        assert spec.n_scans == 1940
        sess = generate_session(spec, 0)
        assert sess.signals.data.shape == (20, 1940)
        assert [sp.label for sp in sess.spans] == [lb for lb, _ in DEFAULT_TASK_BLOCKS]
        assert sess.spans[0].start == 0
        assert sess.spans[-1].end == 1940

    def test_spans_follow_block_table(self):
        sess = generate_session(SynthSpec(), 1)
        for sp, (label, length) in zip(sess.spans, DEFAULT_TASK_BLOCKS):
            assert sp.label == label
            assert sp.length == length

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SynthSpec(n_regions=1)
        with pytest.raises(ValueError):
            SynthSpec(source_count=20)
        with pytest.raises(ValueError):
            SynthSpec(weight_low=0.0)
        with pytest.raises(ValueError):
            SynthSpec(noise_sigma=-0.1)
        with pytest.raises(ValueError):
            SynthSpec(task_blocks=())

    def test_make_synth_spec_overrides(self):
        spec = make_synth_spec(n_regions=6, source_count=2, noise_sigma=0.0)
        assert spec.n_regions == 6
        assert spec.task_blocks == DEFAULT_TASK_BLOCKS


class TestDeterminism:
    def test_same_seed_same_session(self):
        a = generate_session(SynthSpec(), 5)
        b = generate_session(SynthSpec(), 5)
        np.testing.assert_array_equal(a.signals.data, b.signals.data)

    def test_different_seeds_differ(self):
        a = generate_session(SynthSpec(), 5)
        b = generate_session(SynthSpec(), 6)
        assert not np.array_equal(a.signals.data, b.signals.data)


SMALL = SynthSpec(
    n_regions=8,
    source_count=3,
    parents=2,
    noise_sigma=0.0,
    task_blocks=(("one", 90), ("two", 110)),
)


class TestPlantedStructure:
    def test_mixture_holds_identically_without_noise(self):
        sess, structures = generate_session(SMALL, 3, return_structure=True)
        t = 0
        for label, length in SMALL.task_blocks:
            g = structures[label]
            x = sess.signals.data[:, t : t + length]
            np.testing.assert_allclose(x[3:], (g @ x)[3:], atol=1e-9)
            t += length

    def test_matrices_are_strictly_lower_and_stable(self):
        _, structures = generate_session(SMALL, 4, return_structure=True)
        for g in structures.values():
            assert np.all(np.triu(g) == 0.0)
            radius = np.abs(np.linalg.eigvals(g)).max()
            assert radius < 1.0
            # derived rows carry the requested number of parents
            for r in range(3, 8):
                assert int((g[r] != 0).sum()) == min(2, r)

    def test_tasks_get_distinct_structures(self):
        _, structures = generate_session(SMALL, 5, return_structure=True)
        assert not np.array_equal(structures["one"], structures["two"])

    def test_least_squares_recovers_mixing_row(self):
        # the advertised oracle: noise-free block + true parents + no ridge
        sess, structures = generate_session(SMALL, 7, return_structure=True)
        g = structures["one"]
        window = sess.signals.data[:, 10:70]
        for r in range(3, 8):
            parents = np.flatnonzero(g[r])
            coef = fit_local_mesh(window, r, parents, ridge=0.0)
            np.testing.assert_allclose(coef, g[r, parents], atol=1e-8)

    def test_observation_noise_breaks_exactness_gently(self):
        noisy_spec = SynthSpec(
            n_regions=8,
            source_count=3,
            parents=2,
            noise_sigma=0.05,
            task_blocks=(("one", 90), ("two", 110)),
        )
        sess, structures = generate_session(noisy_spec, 3, return_structure=True)
        g = structures["one"]
        x = sess.signals.data[:, :90]
        resid = x[3:] - (g @ x)[3:]
        assert 0.0 < np.abs(resid).max() < 1.0


class TestDrivers:
    def test_sources_standardized(self):
        spec = SynthSpec(n_regions=6, source_count=3, noise_sigma=0.0,
                         task_blocks=(("a", 400),))
        sess = generate_session(spec, 9)
        for s in range(3):
            row = sess.signals.data[s]
            assert abs(row.mean()) < 1e-12
            assert abs(row.std() - 1.0) < 1e-12

    def test_smoothing_adds_autocorrelation(self):
        smooth = SynthSpec(n_regions=4, source_count=2, driver_smoothing=7,
                           noise_sigma=0.0, task_blocks=(("a", 600),))
        rough = SynthSpec(n_regions=4, source_count=2, driver_smoothing=1,
                          noise_sigma=0.0, task_blocks=(("a", 600),))
        xs = generate_session(smooth, 11).signals.data[0]
        xr = generate_session(rough, 11).signals.data[0]
        lag1 = lambda v: np.corrcoef(v[:-1], v[1:])[0, 1]  # noqa: E731
        assert lag1(xs) > 0.5
        assert abs(lag1(xr)) < 0.2
