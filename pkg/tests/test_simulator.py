import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edadecomp.errors import DataError
from edadecomp.simulator import (SimConfig, add_awgn, noise_power, sample_event_indices,
                                 sample_events, segment_seeds, snr_label, synthesize)


def realized_snr_db(clean, noisy, reference="variance"):
    p = np.var(clean) if reference == "variance" else np.mean(clean ** 2)
    return 10 * np.log10(p / np.mean((noisy - clean) ** 2))


def test_default_events(rng):
    events = sample_events(SimConfig(), rng)
    times = np.array([e.time for e in events])
    amps = np.array([e.amplitude for e in events])
    assert len(events) == 30
    assert np.all(np.diff(times) >= 2.0 - 1e-12)
    assert np.all((times >= 0) & (times < 300))
    assert np.all((amps >= 0.01) & (amps <= 1.0))


def test_single_event(rng):
    events = sample_events(SimConfig(n_events=1, duration=1.0), rng)
    assert len(events) == 1
    assert 0 <= events[0].time < 1.0


def test_events_deterministic():
    a = sample_events(SimConfig(), np.random.default_rng(3))
    b = sample_events(SimConfig(), np.random.default_rng(3))
    assert a == b


def test_infeasible_packing(rng):
    with pytest.raises(DataError, match="infeasible packing"):
        sample_events(SimConfig(duration=10.0, n_events=5), rng)
    with pytest.raises(DataError, match="infeasible packing"):
        sample_event_indices(10, 4, 4, rng)


def test_spacing_transform_is_uniform():
    # all feasible placements of 2 events with gap 3 in 7 slots are equally likely
    rng = np.random.default_rng(11)
    feasible = {(i, j) for i in range(7) for j in range(i + 3, 7)}
    counts = {}
    for _ in range(20000):
        key = tuple(sample_event_indices(7, 2, 3, rng))
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == feasible
    freq = np.array(list(counts.values())) / 20000
    assert np.max(np.abs(freq - 1 / len(feasible))) < 0.015


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 400), st.integers(0, 20), st.integers(1, 15), st.integers(0, 2 ** 32 - 1))
def test_spacing_transform_contract(n, k, gap, seed):
    rng = np.random.default_rng(seed)
    if n - (k - 1) * (gap - 1) < k:
        with pytest.raises(DataError):
            sample_event_indices(n, k, gap, rng)
        return
    idx = sample_event_indices(n, k, gap, rng)
    assert idx.size == k
    assert np.all(np.diff(idx) >= gap)
    assert np.all((idx >= 0) & (idx < n))


def test_zero_amplitudes():
    gt = synthesize(SimConfig(amp_range=(0.0, 0.0), seed=4))
    assert np.all(gt.phasic == 0)
    assert np.array_equal(gt.clean_composite, gt.tonic)


def test_constant_tonic():
    cfg = SimConfig(slope_range=(0, 0), sine_amp_range=(0, 0), offset_range=(4.2, 4.2))
    gt = synthesize(cfg)
    assert np.all(gt.tonic == 4.2)


def test_synthesis_deterministic():
    a, b = synthesize(SimConfig(seed=9)), synthesize(SimConfig(seed=9))
    for name in ("tonic", "phasic", "clean_composite", "driver"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert a.events == b.events
    assert all(a.noisy[k].tobytes() == b.noisy[k].tobytes() for k in a.noisy)


def test_postconditions_over_seeds():
    cfg = SimConfig()
    for seed in segment_seeds(2024, 100):
        gt = synthesize(cfg, np.random.default_rng(seed))
        assert gt.tonic.min() >= 0.5
        assert gt.phasic.min() >= 0
        assert np.array_equal(gt.clean_composite - gt.tonic, gt.phasic) or \
            np.max(np.abs(gt.clean_composite - gt.tonic - gt.phasic)) < 1e-12
        first = int(round(gt.events[0].time * cfg.fs))
        # the response is zero at lag 0, so it begins one sample after the event
        assert np.all(gt.phasic[: first + 1] == 0)
        assert 2 <= gt.tau2 <= 4
        assert set(gt.noisy) == {"snr30", "snr20", "snr10"}
        assert np.all(np.array([e.amplitude for e in gt.events]) >= 0.01)


def test_composite_is_exact_sum():
    gt = synthesize(SimConfig(seed=1))
    assert np.array_equal(gt.clean_composite, gt.tonic + gt.phasic)


def test_irf_not_normalized():
    cfg = SimConfig(n_events=1, amp_range=(1.0, 1.0), tau2_range=(2.0, 2.0), seed=2)
    gt = synthesize(cfg)
    assert gt.phasic.sum() > 1.5


def test_clean_passthrough(rng):
    x = rng.normal(size=50)
    y = add_awgn(x, np.inf, rng)
    assert np.array_equal(x, y) and y is not x


@pytest.mark.parametrize("reference", ["variance", "mean_square"])
def test_noise_power_definition(rng, reference):
    x = 3 + rng.normal(size=500)
    p = np.var(x) if reference == "variance" else np.mean(x ** 2)
    assert noise_power(x, 20.0, reference) == pytest.approx(p / 100, rel=1e-14)


@pytest.mark.parametrize("snr", [10.0, 20.0, 30.0])
def test_realized_snr_long_segment(rng, snr):
    gt = synthesize(SimConfig(duration=2500.0, n_events=250, seed=5))
    assert gt.clean_composite.size == 10000
    noisy = add_awgn(gt.clean_composite, snr, rng)
    assert abs(realized_snr_db(gt.clean_composite, noisy) - snr) <= 0.3


def test_empty_signal_rejected(rng):
    with pytest.raises(DataError):
        add_awgn(np.zeros(0), 10.0, rng)


def test_config_validation():
    with pytest.raises(DataError, match="ordered"):
        SimConfig(amp_range=(1.0, 0.1))
    with pytest.raises(DataError, match="unknown"):
        SimConfig.from_dict({"bogus": 1})
    cfg = SimConfig(seed=3)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg


def test_labels():
    assert snr_label(np.inf) == "clean"
    assert snr_label(20.0) == "snr20"


def test_segment_seeds_prefix_stable():
    assert segment_seeds(7, 5) == segment_seeds(7, 10)[:5]
    assert len(set(segment_seeds(7, 1000))) == 1000
