"""Flat key-value run configuration.

File format: one ``key = value`` pair per line, ``#`` comments, blank
lines ignored. Keys are dotted paths; unknown keys are rejected so
typos fail loudly. Command-line flags override file values.

Recognized keys::

    problem            3class | 2class
    fusion             kalman | soft | hard | single
    delta              float in [0, 1]
    k                  branch count kept by selection (default 3)
    seed               integer RNG seed
    window_s           window length, seconds (default 60)
    slide_s            window step, seconds (default 5)
    kalman.x0          comma-separated floats
    kalman.gamma       comma-separated floats
    kalman.epsilon     float in [0, 1]
    kalman.r_factor    float
    kalman.p0_scale    float
    kalman.q_var       float
    filter.bvp_band    two comma-separated floats, Hz
    filter.bvp_order   integer
    filter.eda_cutoff  float, Hz
    filter.eda_order   integer
    filter.temp_window integer, samples
    cost.gate          float
    cost.extraction.<MODALITY>    float (ACC, BVP, EDA, TEMP)
    cost.classifier.<KIND>        float (DT, RF, AB, LDA, KNN)
    cost.override.<BRANCH>.<KIND> float (e.g. cost.override.B1.RF)
"""

from dataclasses import replace

from .classifiers import CLASSIFIER_KINDS
from .datamodel import MODALITIES
from .energy import CostModel, DEFAULT_COST_MODEL
from .errors import ConfigurationError
from .eval import FUSION_KINDS, PipelineConfig
from .fusion import default_kalman_config
from .gating import BRANCH_IDS
from .preprocess import DEFAULT_FILTERS

PROBLEM_CLASSES = {"3class": 3, "2class": 2}

_SIMPLE_KEYS = {
    "problem",
    "fusion",
    "delta",
    "k",
    "seed",
    "window_s",
    "slide_s",
    "kalman.x0",
    "kalman.gamma",
    "kalman.epsilon",
    "kalman.r_factor",
    "kalman.p0_scale",
    "kalman.q_var",
    "filter.bvp_band",
    "filter.bvp_order",
    "filter.eda_cutoff",
    "filter.eda_order",
    "filter.temp_window",
    "cost.gate",
}


def _known_key(key):
    if key in _SIMPLE_KEYS:
        return True
    parts = key.split(".")
    if len(parts) == 3 and parts[0] == "cost" and parts[1] == "extraction":
        return parts[2] in MODALITIES
    if len(parts) == 3 and parts[0] == "cost" and parts[1] == "classifier":
        return parts[2] in CLASSIFIER_KINDS
    if len(parts) == 4 and parts[0] == "cost" and parts[1] == "override":
        return parts[2] in BRANCH_IDS and parts[3] in CLASSIFIER_KINDS
    return False


def parse_config_file(path):
    """Read a config file into an ordered {key: raw string} mapping."""
    mapping = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"{path}:{line_no}: expected 'key = value', got {raw.strip()!r}"
                )
            key, value = (part.strip() for part in line.split("=", 1))
            if not _known_key(key):
                raise ConfigurationError(f"{path}:{line_no}: unknown key {key!r}")
            if key in mapping:
                raise ConfigurationError(f"{path}:{line_no}: duplicate key {key!r}")
            mapping[key] = value
    return mapping


def _parse(value, kind, key):
    try:
        if kind is float:
            return float(value)
        if kind is int:
            return int(value)
        if kind == "floats":
            return tuple(float(v) for v in value.split(","))
    except ValueError:
        raise ConfigurationError(f"bad value {value!r} for {key}") from None
    raise AssertionError(kind)


def config_from_mapping(mapping, **overrides):
    """Build a :class:`PipelineConfig` from parsed file values plus
    keyword overrides (CLI flags). Overrides with value ``None`` are
    ignored."""
    values = dict(mapping)
    for key, value in overrides.items():
        if value is not None:
            values[key] = value

    problem = str(values.pop("problem", "3class"))
    if problem not in PROBLEM_CLASSES:
        raise ConfigurationError(
            f"problem must be one of {sorted(PROBLEM_CLASSES)}, got {problem!r}"
        )
    n_classes = PROBLEM_CLASSES[problem]

    fusion = str(values.pop("fusion", "kalman"))
    if fusion not in FUSION_KINDS:
        raise ConfigurationError(f"fusion must be one of {FUSION_KINDS}")

    def take(key, kind, default=None):
        if key in values:
            raw = values.pop(key)
            if isinstance(raw, str):
                return _parse(raw, kind, key)
            return raw
        return default

    delta = take("delta", float)
    k = take("k", int, 3)
    seed = take("seed", int, 0)
    window_s = take("window_s", float, 60.0)
    slide_s = take("slide_s", float, 5.0)

    kalman = default_kalman_config(n_classes)
    kalman_fields = {}
    if "kalman.x0" in values:
        kalman_fields["x0"] = take("kalman.x0", "floats")
    if "kalman.gamma" in values:
        kalman_fields["gamma"] = take("kalman.gamma", "floats")
    for name in ("epsilon", "r_factor", "p0_scale", "q_var"):
        if f"kalman.{name}" in values:
            kalman_fields[name] = take(f"kalman.{name}", float)
    if kalman_fields:
        kalman = replace(kalman, **kalman_fields)

    filters = DEFAULT_FILTERS
    filter_fields = {}
    if "filter.bvp_band" in values:
        band = take("filter.bvp_band", "floats")
        if len(band) != 2:
            raise ConfigurationError("filter.bvp_band needs exactly two values")
        filter_fields["bvp_band_hz"] = band
    if "filter.bvp_order" in values:
        filter_fields["bvp_order"] = take("filter.bvp_order", int)
    if "filter.eda_cutoff" in values:
        filter_fields["eda_cutoff_hz"] = take("filter.eda_cutoff", float)
    if "filter.eda_order" in values:
        filter_fields["eda_order"] = take("filter.eda_order", int)
    if "filter.temp_window" in values:
        filter_fields["temp_window"] = take("filter.temp_window", int)
    if filter_fields:
        filters = replace(filters, **filter_fields)

    extraction = dict(DEFAULT_COST_MODEL.extraction)
    classifier = dict(DEFAULT_COST_MODEL.classifier)
    cost_overrides = {}
    gate_cost = take("cost.gate", float, DEFAULT_COST_MODEL.gate_cost)
    for key in list(values):
        parts = key.split(".")
        if parts[:2] == ["cost", "extraction"]:
            extraction[parts[2]] = _parse(values.pop(key), float, key)
        elif parts[:2] == ["cost", "classifier"]:
            classifier[parts[2]] = _parse(values.pop(key), float, key)
        elif parts[:2] == ["cost", "override"]:
            cost_overrides[(parts[2], parts[3])] = _parse(values.pop(key), float, key)
    cost_model = CostModel(
        extraction=extraction,
        classifier=classifier,
        gate_cost=gate_cost,
        overrides=cost_overrides,
    )

    if values:
        raise ConfigurationError(f"unhandled config keys {sorted(values)}")

    return PipelineConfig(
        n_classes=n_classes,
        fusion=fusion,
        delta=delta,
        k=k,
        seed=seed,
        kalman=kalman,
        cost_model=cost_model,
        window_s=window_s,
        slide_s=slide_s,
        filters=filters,
    )


def load_pipeline_config(config_path=None, **overrides):
    mapping = parse_config_file(config_path) if config_path else {}
    return config_from_mapping(mapping, **overrides)
