"""
Experiment presets reproducing the three standard simulation regimes.

Each preset fixes one quality support / population setting, sweeps one axis
and draws one series per value of a secondary parameter.

Mappings:
- SWEEP_PRESETS: preset name -> sweep axis, axis values, fixed params, series
"""

from typing import Any, Dict, List


def _steps(start: float, stop: float, step: float) -> List[float]:
    count = int(round((stop - start) / step)) + 1
    return [round(start + k * step, 10) for k in range(count)]


# ============================================================================
# SWEEP PRESETS
# ============================================================================

SWEEP_PRESETS: Dict[str, Dict[str, Any]] = {
    "vary-n": {
        "axis": "n",
        "values": [float(v) for v in range(100, 1001, 100)],
        "fixed": {"qstar": 1.0},
        "series": {"r": [0.2, 0.5, 0.8]},
    },
    "vary-r": {
        "axis": "r",
        "values": _steps(0.05, 0.95, 0.05),
        "fixed": {"qstar": 1.0},
        "series": {"n": [100, 500, 1000]},
    },
    "vary-qstar": {
        "axis": "qstar",
        "values": _steps(0.05, 1.0, 0.05),
        "fixed": {"n": 100, "r": 0.5},
        "series": {},
    },
}

DEFAULT_INSTANCES_PER_POINT: int = 1000


def get_sweep_preset(name: str) -> Dict[str, Any]:
    """
    Look up a sweep preset by name.

    Args:
        name: Preset name (vary-n, vary-r, vary-qstar)

    Returns:
        Dict with axis, values, fixed and series entries

    Raises:
        KeyError: If the preset is unknown
    """
    if name not in SWEEP_PRESETS:
        raise KeyError(f"Unknown sweep preset '{name}'. Choose from {sorted(SWEEP_PRESETS)}")
    return SWEEP_PRESETS[name]


def expand_preset(name: str) -> List[Dict[str, Any]]:
    """
    Expand a preset into one (axis, values, fixed) triple per series value.

    Example:
        >>> [s["fixed"]["r"] for s in expand_preset("vary-n")]
        [0.2, 0.5, 0.8]
    """
    preset = get_sweep_preset(name)
    sweeps = []
    if not preset["series"]:
        return [{"axis": preset["axis"], "values": list(preset["values"]), "fixed": dict(preset["fixed"])}]
    for key, series_values in preset["series"].items():
        for value in series_values:
            fixed = dict(preset["fixed"])
            fixed[key] = value
            sweeps.append({"axis": preset["axis"], "values": list(preset["values"]), "fixed": fixed})
    return sweeps
