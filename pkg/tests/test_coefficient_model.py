from __future__ import annotations

import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scmspec.coefficient_model import (
    ChangeSegment,
    CoefficientSchedule,
    ExplosiveSegmentWarning,
    PanelData,
    VarianceSchedule,
    coefficient_at,
    load_schedule,
    pooled_lag1_autocorrelation,
    row_seeds,
    save_schedule,
    simulate_hetero_path,
    simulate_panel,
    simulate_path,
)
from scmspec.errors import InvalidArgumentError

SCM = CoefficientSchedule.single(0.3, 0.2, 50)


def test_coefficient_at_examples():
    assert coefficient_at(CoefficientSchedule(0.3), 7) == 0.3
    assert coefficient_at(SCM, 50) == pytest.approx(0.5)
    assert coefficient_at(SCM, 51) == 0.3
    with pytest.raises(InvalidArgumentError):
        coefficient_at(SCM, 0)


def test_coefficients_vector_matches_pointwise():
    s = CoefficientSchedule(0.4, [ChangeSegment(3, 2, 0.1), ChangeSegment(8, 1, -0.2)])
    v = s.coefficients(10)
    assert v.tolist() == pytest.approx([coefficient_at(s, t) for t in range(1, 11)])


@pytest.mark.parametrize(
    "bad",
    [
        dict(rho=0.0, segments=()),
        dict(rho=1.0, segments=()),
        dict(rho=0.3, segments=((5, 3, 0.1), (7, 1, 0.1))),  # overlap
        dict(rho=0.3, segments=((9, 1, 0.1), (5, 1, 0.1))),  # unordered
    ],
)
def test_schedule_validation(bad):
    with pytest.raises(InvalidArgumentError):
        CoefficientSchedule(**bad)


@pytest.mark.parametrize("k,h,eps", [(0, 1, 0.1), (1, 0, 0.1), (1, 1, 0.0), (1.5, 1, 0.1)])
def test_segment_validation(k, h, eps):
    with pytest.raises(InvalidArgumentError):
        ChangeSegment(k, h, eps)


def test_explosive_segment_warns_but_is_allowed():
    with pytest.warns(ExplosiveSegmentWarning):
        s = CoefficientSchedule.single(0.5, 1.0, 10)
    y = simulate_path(s, 20, 1.0, seed=1)
    assert np.all(np.isfinite(y))


def test_zero_noise_path_is_zero():
    assert simulate_path(SCM, 5, 0.0, seed=3).tolist() == [0.0] * 5


def test_path_is_deterministic_and_obeys_recursion():
    a = simulate_path(SCM, 200, 2.0, seed=11)
    b = simulate_path(SCM, 200, 2.0, seed=11)
    np.testing.assert_array_equal(a, b)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(11)))
    z = np.sqrt(2.0) * rng.standard_normal(200)
    r = SCM.coefficients(200)
    prev = 0.0
    for t in range(200):
        prev = r[t] * prev + z[t]
        assert a[t] == pytest.approx(prev, abs=1e-12)


def test_path_rejects_bad_length():
    with pytest.raises(InvalidArgumentError):
        simulate_path(SCM, 0)


def test_stationary_variance():
    y = simulate_path(CoefficientSchedule(0.5), 100_000, 1.0, seed=2024)
    assert np.var(y[1000:]) == pytest.approx(1 / (1 - 0.25), rel=0.02)


def test_long_path_autocorrelation_within_three_se():
    n = 200_000
    y = simulate_path(CoefficientSchedule(-0.6), n, 1.0, seed=9)
    r = pooled_lag1_autocorrelation(y[100:])
    se = np.sqrt((1 - 0.36) / n)
    assert abs(r + 0.6) < 3 * se


def test_panel_zero_noise_and_reproducible():
    p = simulate_panel(SCM, 10, 3, 0.0, seed=1)
    assert p.series.shape == (3, 10) and not p.series.any()
    a = simulate_panel(SCM, 60, 4, 1.0, seed=5).series
    b = simulate_panel(SCM, 60, 4, 1.0, seed=5).series
    assert a.tobytes() == b.tobytes()
    with pytest.raises(InvalidArgumentError):
        simulate_panel(SCM, 10, 0)


def test_panel_rows_match_single_paths():
    seqs = row_seeds(77, 3)
    panel = simulate_panel(SCM, 80, 3, 1.0, seed=77)
    for j, s in enumerate(seqs):
        np.testing.assert_array_equal(panel.series[j], simulate_path(SCM, 80, 1.0, seed=s))


def test_panel_lag1_autocorrelation():
    p = simulate_panel(CoefficientSchedule(0.3), 50, 5000, 1.0, seed=123)
    assert pooled_lag1_autocorrelation(p.series) == pytest.approx(0.3, abs=0.02)


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(5))), st.integers(0, 2**32 - 1))
def test_panel_rows_exchangeable(perm, seed):
    seqs = row_seeds(seed, 5)
    base = simulate_panel(SCM, 30, 5, 1.0, seed=seqs).series
    permuted = simulate_panel(SCM, 30, 5, 1.0, seed=[seqs[i] for i in perm]).series
    np.testing.assert_array_equal(permuted, base[list(perm)])


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-0.95, 0.95).filter(lambda r: abs(r) > 1e-3),
    st.lists(st.tuples(st.integers(1, 5), st.integers(1, 4), st.floats(-0.5, 0.5).filter(lambda e: abs(e) > 1e-3)), max_size=4),
    st.integers(1, 60),
)
def test_membership_is_unique(rho, raw, t):
    segs, k = [], 1
    for gap, h, eps in raw:
        k += gap
        segs.append(ChangeSegment(k, h, eps))
        k += h
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExplosiveSegmentWarning)
        s = CoefficientSchedule(rho, segs)
    inside = [g for g in segs if g.k <= t <= g.end]
    assert len(inside) <= 1
    expected = rho + inside[0].eps if inside else rho
    assert coefficient_at(s, t) == pytest.approx(expected)


def test_variance_schedule_and_hetero_path():
    with pytest.raises(InvalidArgumentError):
        VarianceSchedule(1.0, ((5, 1, -1.0),))
    with pytest.raises(InvalidArgumentError):
        VarianceSchedule(0.0)
    vs = VarianceSchedule(1.0, ((5, 1, 0.3),))
    assert vs.variances(6).tolist() == pytest.approx([1, 1, 1, 1, 1.3, 1])
    y = simulate_hetero_path(0.3, vs, 10, seed=4)
    y0 = simulate_path(CoefficientSchedule(0.3), 10, 1.0, seed=4)
    # identical before t=5, then differ only through the scaled innovation at t=5
    np.testing.assert_array_equal(y[:4], y0[:4])
    z5 = y0[4] - 0.3 * y0[3]
    diff = (np.sqrt(1.3) - 1.0) * z5
    np.testing.assert_allclose(y[4:] - y0[4:], diff * 0.3 ** np.arange(6), atol=1e-12)
    np.testing.assert_array_equal(simulate_hetero_path(0.3, VarianceSchedule(1.0), 10, seed=4), y0)


def test_schedule_json_round_trip(tmp_path):
    s = CoefficientSchedule(0.3, [ChangeSegment(5, 2, 0.2), ChangeSegment(20, 1, -0.1)])
    save_schedule(s, tmp_path / "s.json", sigma2=2.0)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert set(doc) == {"rho", "segments", "sigma2"}
    s2, sigma2 = load_schedule(tmp_path / "s.json")
    assert s2 == s and sigma2 == 2.0
    with pytest.raises(InvalidArgumentError):
        CoefficientSchedule.from_dict({"segments": []})


def test_panel_csv_round_trip(tmp_path):
    p = simulate_panel(SCM, 55, 3, 1.0, seed=8)
    p.to_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "j,t,y"
    q = PanelData.from_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(p.series, q.series)
    (tmp_path / "bad.csv").write_text("j,t,y\n1,1,0.5\n1,3,0.1\n")
    with pytest.raises(InvalidArgumentError):
        PanelData.from_csv(tmp_path / "bad.csv")
