"""Open RAN closed-loop lab: simulator, E2-lite codec, analysis and experiments."""

import json as _json

from ._core import (
    Cell,
    ConfigError,
    EncodeError,
    KpmRecord,
    correlations,
    decode,
    encode_control,
    encode_indication,
    linear_fit,
    pearson,
)
from . import _core

__all__ = [
    "Cell",
    "ConfigError",
    "EncodeError",
    "KpmRecord",
    "correlations",
    "decode",
    "default_spec",
    "encode_control",
    "encode_indication",
    "linear_fit",
    "pearson",
    "run",
]


def default_spec():
    """Experiment spec with every default filled in, as a dict."""
    return _json.loads(_core.default_spec())


def run(mode, spec=None, **overrides):
    """Run one experiment.

    mode is one of collect, train-offline, train-online, evaluate, analyze.
    spec uses the same keys as the colctl --config file; keyword arguments
    override top-level keys. Returns a summary dict.
    """
    merged = dict(spec or {})
    merged.update(overrides)
    for key in ("out", "dataset", "checkpoint"):
        if key in merged:
            merged[key] = str(merged[key])
    return _json.loads(_core._run(mode, _json.dumps(merged)))
