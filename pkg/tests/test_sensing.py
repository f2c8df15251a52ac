import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfpsim.scenario import StatusAttributes
from mfpsim.sensing import learning_gain, qod, sample_yield


def attrs(a, b):
    return StatusAttributes(a=a, b=b, rho_tar=0.0, label_dist=None)


class TestSampleYield:
    def test_zero_resources(self):
        assert sample_yield(attrs(1, 1), 0, 0, 0) == 0

    def test_both_modalities(self):
        assert sample_yield(attrs(1, 1), 2, 1, 2) == 4

    def test_visual_only_floors(self):
        a = (100 / 250_000) * np.pi * 50**2 * 20  # 62.83...
        assert sample_yield(attrs(a, 0), 1, 0, 0) == 62

    def test_wireless_time_capped_by_visual(self):
        with pytest.raises(ValueError):
            sample_yield(attrs(1, 1), 1, 1, 2)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            sample_yield(attrs(1, 1), -1, 0, 0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(0, 50), st.floats(0, 50), st.floats(0, 20), st.floats(0, 20),
        st.floats(0, 4),
    )
    def test_monotone_and_superadditive(self, a, b, x, y, extra):
        z = min(x, y * 0 + x)  # wireless rides the full visual window
        base = sample_yield(attrs(a, b), x, y, z)
        assert sample_yield(attrs(a, b), x + extra, y, z) >= base
        assert sample_yield(attrs(a, b), x, y + extra, z) >= base
        # joint run beats the two single-modality runs up to one floor unit
        solo_v = sample_yield(attrs(a, 0), x, 0, 0)
        solo_w = sample_yield(attrs(0, b), x, y, z)
        assert base >= solo_v + solo_w - 1


class TestQod:
    def test_identical_distributions(self):
        p = np.full(10, 0.1)
        assert qod(p, p) == pytest.approx(1.0)

    def test_one_hot_versus_uniform(self):
        local = np.zeros(10)
        local[0] = 1.0
        assert qod(local, np.full(10, 0.1)) == pytest.approx(0.1)

    def test_disjoint_supports(self):
        a = np.array([1.0, 0.0])
        b = np.array([0.0, 1.0])
        assert qod(a, b) == pytest.approx(0.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            qod(np.array([1.0]), np.array([0.5, 0.5]))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12), st.data())
    def test_bounds_and_symmetry(self, raw, data):
        raw2 = data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(raw), max_size=len(raw)))
        if sum(raw) == 0 or sum(raw2) == 0:
            return
        p = np.array(raw) / sum(raw)
        q = np.array(raw2) / sum(raw2)
        v = qod(p, q)
        assert 0.0 - 1e-12 <= v <= 1.0 + 1e-12
        assert v == pytest.approx(qod(q, p))
        if np.abs(p - q).max() < 1e-15:
            assert v == pytest.approx(1.0, abs=1e-12)

    def test_equal_iff_one(self):
        p = np.array([0.25, 0.75])
        q = np.array([0.250001, 0.749999])
        assert qod(p, q) < 1.0

    def test_pooling_complementary_clients_improves_fit(self):
        glob = np.full(4, 0.25)
        heavy_front = np.array([0.4, 0.4, 0.1, 0.1])
        heavy_back = np.array([0.1, 0.1, 0.4, 0.4])
        pooled = 0.5 * (heavy_front + heavy_back)
        assert qod(pooled, glob) > max(qod(heavy_front, glob), qod(heavy_back, glob))


class TestLearningGain:
    def test_zero_samples(self):
        assert learning_gain(0, 1.0, 0.01) == 0.0

    def test_linear_form(self):
        assert learning_gain(100, 1.0, 0.01) == pytest.approx(1.0)

    def test_zero_quality_kills_gain(self):
        assert learning_gain(10_000, 0.0, 0.01) == 0.0

    def test_linear_in_samples(self):
        g1 = learning_gain(10, 0.5, 0.02)
        g2 = learning_gain(20, 0.5, 0.02)
        assert g2 == pytest.approx(2 * g1)

    def test_validation(self):
        with pytest.raises(ValueError):
            learning_gain(-1, 0.5, 0.01)
        with pytest.raises(ValueError):
            learning_gain(1, 1.5, 0.01)
        with pytest.raises(ValueError):
            learning_gain(1, 0.5, 0.0)
