import json
import math

import numpy as np
import pytest

import meetbrain as mb


def test_default_config_round_trips():
    cfg = mb.default_config()
    assert mb.validate_config(cfg) == cfg


def test_unknown_config_key_rejected():
    with pytest.raises(mb.MeetBrainError):
        mb.validate_config({"no_such_key": 1})


def test_screening_boundaries():
    assert mb.select_clip(7.0, 7.0, 1, "HAHV")
    assert mb.select_clip(4.4, 1.0, 5, "LALV")
    assert not mb.select_clip(5.0, 5.0, 10, "HAHV")


def test_label_fallback_uses_music_quadrant():
    label = mb.derive_label(5, 3, 5, "HAHV")
    assert label["quadrant"] == "LAHV"
    assert label["source"] != "self_report"
    assert mb.derive_label(7, 3, 5, "HALV")["quadrant"] == "LAHV"


def test_mbll_round_trip():
    rng = np.random.default_rng(3)
    for hbo, hbr in rng.uniform(-10, 10, size=(200, 2)):
        got = mb.mbll_inverse(*mb.mbll_forward(hbo, hbr))
        assert math.hypot(got[0] - hbo, got[1] - hbr) <= 1e-9 * math.hypot(hbo, hbr)


def test_bandpass_keeps_passband_tone():
    t = np.arange(250 * 30) / 250.0
    x = np.sin(2 * np.pi * 10 * t)
    y = np.asarray(mb.bandpass(x.tolist(), 0.1, 40.0, 250.0))
    mid = slice(len(x) // 4, 3 * len(x) // 4)
    assert np.std(y[mid]) == pytest.approx(np.std(x[mid]), rel=0.05)


def test_alpha_dominates_pure_tone():
    t = np.arange(7500) / 250.0
    tone = (15 * np.sin(2 * np.pi * 10 * t)).tolist()
    powers = mb.relative_band_power(tone, tone)
    assert powers[2] > 0.9
    assert sum(powers) == pytest.approx(1.0)


def test_stats_match_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    groups = [[1, 2, 3], [2, 3, 4], [10, 11, 12]]
    res = mb.one_way_anova(groups)
    ref = scipy_stats.f_oneway(*groups)
    assert res["f"] == pytest.approx(ref.statistic, rel=1e-9)
    assert res["p"] == pytest.approx(ref.pvalue, abs=1e-9)
    x = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    y = [2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8, 16.1, 18.0, 19.9]
    r, p = mb.pearson(x, y)
    ref = scipy_stats.pearsonr(x, y)
    assert r == pytest.approx(ref[0], abs=1e-12)
    assert p == pytest.approx(ref[1], rel=1e-6)
    assert len(mb.tukey_hsd(groups)) == 3


def test_degenerate_pearson_raises():
    with pytest.raises(mb.MeetBrainError):
        mb.pearson([1, 1, 1], [1, 2, 3])


def test_audio_features():
    fs = 22050
    n = fs * 12
    clicks = np.zeros(n)
    for k in range(0, n, fs // 2):
        clicks[k : k + 200] = np.hanning(200)
    assert mb.estimate_tempo(clicks.tolist(), fs) == pytest.approx(120, abs=2)
    t = np.arange(fs * 3) / fs
    major = sum(np.sin(2 * np.pi * 440 * 2 ** ((m - 69) / 12) * t) for m in (60, 64, 67))
    assert mb.detect_mode(major.tolist(), fs)[0] == "major"
    scaled = mb.scale_to_range([3.0, -1.0, 10.0, 4.5])
    assert min(scaled) == 1.0 and max(scaled) == 7.0


def test_prompts_are_deterministic():
    a = mb.enumerate_prompts("HAHV", 5, seed=1)
    b = mb.enumerate_prompts("HAHV", 5, seed=1)
    assert a == b and len(set(a)) == 5


def test_pipeline_end_to_end(tmp_path):
    assert mb.simulate(2, tmp_path / "bundles") == ["P01", "P02"]
    assert mb.preprocess(tmp_path / "bundles", tmp_path / "pre") > 0
    assert mb.analyze(tmp_path / "pre", tmp_path / "ana") == 80
    report = mb.classify(tmp_path / "ana" / "features.csv", tmp_path / "cls")
    assert "protocols" in report
    assert (tmp_path / "cls" / "ablation.md").exists()
    json.loads((tmp_path / "cls" / "ablation.json").read_text())
