"""Python bindings for the meetbrain core library."""

import json

from ._meetbrain import (
    MeetBrainError,
    analyze,
    bandpass,
    derive_label,
    detect_mode,
    enumerate_prompts,
    estimate_tempo,
    mbll_forward,
    mbll_inverse,
    melodic_direction,
    one_way_anova,
    pearson,
    pitch_range,
    preprocess,
    read_wav,
    relative_band_power,
    scale_to_range,
    select_clip,
    simulate,
    technical_screen,
    tukey_hsd,
)
from ._meetbrain import classify as _classify
from ._meetbrain import default_config as _default_config
from ._meetbrain import validate_config as _validate_config

QUADRANTS = ("HAHV", "HALV", "LAHV", "LALV")


def default_config():
    return json.loads(_default_config())


def validate_config(config):
    return json.loads(_validate_config(json.dumps(config)))


def classify(features, out_dir, config="", jobs=0):
    if not isinstance(config, str):
        config = json.dumps(config)
    return json.loads(_classify(str(features), str(out_dir), config, jobs))


__all__ = [name for name in dir() if not name.startswith("_")]
