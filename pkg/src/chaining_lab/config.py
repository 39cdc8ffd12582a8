"""JSON schemas and parsers for input files and experiment configs."""
import jsonschema

from .covariance import CovarianceConfig, MatrixClass
from .empirical import DEFAULT_LEVELS, FunctionClass, TailConfig, symmetrize_class
from .ensembles import Ensemble
from .errors import ConfigInvalid
from .metric import FiniteMetricSpace, validate_metric

_U64 = {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

SPACE_SCHEMA = {
    "type": "object",
    "required": ["labels", "dist"],
    "properties": {
        "labels": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "dist": _MATRIX,
    },
}

DISTRIBUTION_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["gaussian", "rademacher", "sphere"]},
        "cholesky_factor": _MATRIX,
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "p": {"type": "integer", "minimum": 1},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "gaussian"}}},
         "then": {"required": ["cholesky_factor"]}},
    ],
}

CLASS_SCHEMA = {
    "type": "object",
    "required": ["p", "k", "matrices"],
    "properties": {
        "p": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "matrices": {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"type": "number"}}},
        "symmetrize": {"type": "boolean"},
        "norm": {
            "oneOf": [
                {"enum": ["euclidean", "max"]},
                {"type": "object", "required": ["p_norm"],
                 "properties": {"p_norm": {"type": "number", "minimum": 1}},
                 "additionalProperties": False},
            ]
        },
    },
}

_EXPERIMENT_COMMON = {
    "seed": _U64,
    "n_grid": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
    "replications": {"type": "integer", "minimum": 1},
    "distribution": DISTRIBUTION_SCHEMA,
    "class": CLASS_SCHEMA,
    "quantiles": {"type": "array", "minItems": 1,
                  "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
    "metric_samples": {"type": "integer", "minimum": 1},
    "chaining_method": {"enum": ["exact", "greedy", "auto"]},
}

TAIL_SCHEMA = {
    "type": "object",
    "required": ["n_grid", "replications", "distribution", "class"],
    "properties": dict(_EXPERIMENT_COMMON),
}

COVARIANCE_SCHEMA = {
    "type": "object",
    "required": ["n_grid", "replications", "distribution", "class"],
    "properties": dict(_EXPERIMENT_COMMON, width_reps={"type": "integer", "minimum": 100}),
}


def validate(instance, schema) -> None:
    """Raise :class:`ConfigInvalid` carrying the JSON path of the first error."""
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigInvalid(err.message, err.absolute_path)


def parse_space(payload: dict) -> FiniteMetricSpace:
    validate(payload, SPACE_SCHEMA)
    return validate_metric(payload["labels"], payload["dist"])


def _function_class(spec: dict) -> FunctionClass:
    norm = spec.get("norm", "euclidean")
    kind, q = (norm, 2.0) if isinstance(norm, str) else ("p_norm", float(norm["p_norm"]))
    mats = MatrixClass.from_dict({**spec, "symmetrize": False})
    G = FunctionClass.linear(mats.matrices, kind, q)
    return symmetrize_class(G) if spec.get("symmetrize", False) else G


def _seed(payload: dict, seed_override):
    seed = seed_override if seed_override is not None else payload.get("seed")
    if seed is None:
        raise ConfigInvalid("no seed given (config, --seed or CHAINING_LAB_SEED)", ("seed",))
    validate(seed, _U64)
    return int(seed)


def parse_tail_config(payload: dict, seed=None) -> TailConfig:
    validate(payload, TAIL_SCHEMA)
    seed = _seed(payload, seed)
    G = _function_class(payload["class"])
    ens = Ensemble.from_dict(payload["distribution"], p=G.p)
    return TailConfig(
        seed=seed,
        n_grid=tuple(payload["n_grid"]),
        replications=payload["replications"],
        distribution=ens,
        function_class=G,
        quantiles=tuple(payload.get("quantiles", DEFAULT_LEVELS)),
        metric_samples=payload.get("metric_samples", 20_000),
        chaining_method=payload.get("chaining_method", "auto"),
        payload={**payload, "seed": seed},
    )


def parse_covariance_config(payload: dict, seed=None) -> CovarianceConfig:
    validate(payload, COVARIANCE_SCHEMA)
    seed = _seed(payload, seed)
    cls = MatrixClass.from_dict(payload["class"])
    ens = Ensemble.from_dict(payload["distribution"], p=cls.p)
    return CovarianceConfig(
        seed=seed,
        n_grid=tuple(payload["n_grid"]),
        replications=payload["replications"],
        distribution=ens,
        matrix_class=cls,
        quantiles=tuple(payload.get("quantiles", DEFAULT_LEVELS)),
        width_reps=payload.get("width_reps", 10_000),
        metric_samples=payload.get("metric_samples", 20_000),
        chaining_method=payload.get("chaining_method", "auto"),
        payload={**payload, "seed": seed},
    )
