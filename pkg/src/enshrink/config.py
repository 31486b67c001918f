"""Experiment configuration: schema, validation, and (de)serialisation.

Configs are plain nested dicts on disk (YAML) with a pinned schema version.
Unknown keys anywhere are an immediate error, so typos cannot silently fall
back to defaults.  ``ExperimentConfig.to_dict`` emits every field resolved,
and re-parsing that dict reproduces the config exactly.
"""

import copy
from dataclasses import dataclass, replace

import yaml

from .errors import ConfigError
from .filters import FilterConfig
from .models import ModelConfig
from .shrinkage import GammaPolicy

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "load_config",
    "gamma_policy_label",
    "gamma_policy_from_dict",
]

SCHEMA_VERSION = 1

OPERATOR_NAMES = ("identity", "square")
NOISE_TYPES = ("scalar", "diagonal")
CLIMATOLOGY_SOURCES = ("generate", "file")
SWEEP_AXES = ("ensemble_size", "synthetic_size", "inflation", "gamma")


def _check_keys(section, mapping, allowed):
    if not isinstance(mapping, dict):
        raise ConfigError("section %r must be a mapping" % section)
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError("unknown keys in %r: %s" % (section, ", ".join(unknown)))


def _require(section, mapping, key):
    if key not in mapping:
        raise ConfigError("section %r is missing required key %r" % (section, key))
    return mapping[key]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one twin experiment needs, fully resolved."""

    model: ModelConfig
    steps: int
    spinup: int
    dt: float
    operator: str
    noise: dict
    ensemble_size: int
    filter: FilterConfig
    climatology: dict
    replicates: int
    base_seed: int
    rank_variable: int = 17
    output: str | None = None
    experiment_id: str | None = None
    sweep: dict | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError("assimilation steps must be positive")
        if not 0 <= self.spinup < self.steps:
            raise ConfigError("spinup must satisfy 0 <= spinup < steps")
        per_cycle = self.dt / self.model.step
        if abs(per_cycle - round(per_cycle)) > 1e-9 or round(per_cycle) < 1:
            raise ConfigError(
                "assimilation interval dt=%r must be a positive multiple of the "
                "model step %r" % (self.dt, self.model.step)
            )
        if self.ensemble_size < 2:
            raise ConfigError("ensemble size must be at least 2")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not 0 <= self.rank_variable < self.model.dimension:
            raise ConfigError(
                "rank variable %d outside state dimension %d"
                % (self.rank_variable, self.model.dimension)
            )
        if self.operator not in OPERATOR_NAMES:
            raise ConfigError(
                "operator must be one of %r, got %r" % (OPERATOR_NAMES, self.operator)
            )
        _validate_noise(self.noise)
        _validate_climatology(self.climatology)
        if self.sweep is not None:
            _validate_sweep(self.sweep)

    @property
    def steps_per_cycle(self):
        return int(round(self.dt / self.model.step))

    def label(self):
        """Stable one-line identifier used in CSV rows and derived paths."""
        if self.experiment_id:
            return self.experiment_id
        parts = [self.filter.variant, "N%d" % self.ensemble_size]
        if self.filter.variant.startswith("shrink"):
            parts.append("M%d" % self.filter.synthetic_size)
            parts.append(gamma_policy_label(self.filter.gamma))
        parts.append("a%g" % self.filter.inflation)
        return "-".join(parts)

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)

    def to_dict(self):
        d = {
            "schema_version": SCHEMA_VERSION,
            "model": {
                "dimension": self.model.dimension,
                "forcing": float(self.model.forcing),
                "step": float(self.model.step),
            },
            "assimilation": {
                "steps": self.steps,
                "spinup": self.spinup,
                "dt": float(self.dt),
            },
            "observations": {
                "operator": self.operator,
                "noise": copy.deepcopy(self.noise),
            },
            "ensemble_size": self.ensemble_size,
            "filter": _filter_to_dict(self.filter),
            "climatology": copy.deepcopy(self.climatology),
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "rank_variable": self.rank_variable,
        }
        if self.experiment_id is not None:
            d["experiment_id"] = self.experiment_id
        if self.output is not None:
            d["output"] = self.output
        if self.sweep is not None:
            d["sweep"] = copy.deepcopy(self.sweep)
        return d

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_yaml())

    @classmethod
    def from_dict(cls, raw):
        _check_keys(
            "config",
            raw,
            (
                "schema_version",
                "experiment_id",
                "model",
                "assimilation",
                "observations",
                "ensemble_size",
                "filter",
                "climatology",
                "replicates",
                "base_seed",
                "rank_variable",
                "output",
                "sweep",
            ),
        )
        version = _require("config", raw, "schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                "unsupported schema_version %r (this build reads %d)"
                % (version, SCHEMA_VERSION)
            )
        model_raw = raw.get("model", {})
        _check_keys("model", model_raw, ("dimension", "forcing", "step"))
        model = ModelConfig(
            dimension=int(model_raw.get("dimension", 40)),
            forcing=float(model_raw.get("forcing", 8.0)),
            step=float(model_raw.get("step", 0.05)),
        )
        assim = raw.get("assimilation", {})
        _check_keys("assimilation", assim, ("steps", "spinup", "dt"))
        obs = raw.get("observations", {})
        _check_keys("observations", obs, ("operator", "noise"))
        noise = copy.deepcopy(obs.get("noise", {"type": "scalar", "value": 1.0}))
        clim = copy.deepcopy(raw.get("climatology", {"source": "generate"}))
        clim = _normalise_climatology(clim)
        return cls(
            model=model,
            steps=int(assim.get("steps", 2200)),
            spinup=int(assim.get("spinup", 200)),
            dt=float(assim.get("dt", model.step)),
            operator=obs.get("operator", "identity"),
            noise=noise,
            ensemble_size=int(_require("config", raw, "ensemble_size")),
            filter=_filter_from_dict(raw.get("filter", {})),
            climatology=clim,
            replicates=int(raw.get("replicates", 1)),
            base_seed=int(raw.get("base_seed", 0)),
            rank_variable=int(raw.get("rank_variable", min(17, model.dimension - 1))),
            output=raw.get("output"),
            experiment_id=raw.get("experiment_id"),
            sweep=copy.deepcopy(raw.get("sweep")),
        )


def _validate_noise(noise):
    _check_keys("observations.noise", noise, ("type", "value", "values"))
    kind = _require("observations.noise", noise, "type")
    if kind not in NOISE_TYPES:
        raise ConfigError(
            "noise type must be one of %r, got %r" % (NOISE_TYPES, kind)
        )
    if kind == "scalar":
        value = _require("observations.noise", noise, "value")
        if value <= 0:
            raise ConfigError("scalar noise variance must be positive")
    else:
        values = _require("observations.noise", noise, "values")
        if not values or any(v <= 0 for v in values):
            raise ConfigError("diagonal noise variances must all be positive")


def _validate_climatology(clim):
    _check_keys(
        "climatology",
        clim,
        ("source", "path", "snapshots", "spinup_steps", "interval_steps", "mode"),
    )
    source = _require("climatology", clim, "source")
    if source not in CLIMATOLOGY_SOURCES:
        raise ConfigError(
            "climatology source must be one of %r, got %r"
            % (CLIMATOLOGY_SOURCES, source)
        )
    if source == "file" and not clim.get("path"):
        raise ConfigError("climatology source 'file' needs a path")
    if source == "generate" and clim.get("mode") not in ("trajectory", "independent"):
        raise ConfigError("climatology mode must be 'trajectory' or 'independent'")


def _normalise_climatology(clim):
    if clim.get("source", "generate") == "generate":
        out = {
            "source": "generate",
            "snapshots": int(clim.get("snapshots", 2000)),
            "spinup_steps": int(clim.get("spinup_steps", 200)),
            "interval_steps": int(clim.get("interval_steps", 1)),
            "mode": clim.get("mode", "trajectory"),
        }
        return out
    return {"source": "file", "path": clim.get("path")}


def _validate_sweep(sweep):
    _check_keys("sweep", sweep, SWEEP_AXES)
    if not sweep:
        raise ConfigError("sweep section must name at least one axis")
    for axis, values in sweep.items():
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep axis %r must be a non-empty list" % axis)


def _filter_from_dict(raw):
    _check_keys(
        "filter",
        raw,
        (
            "variant",
            "inflation",
            "gamma",
            "synthetic_size",
            "distribution",
            "taper",
            "recenter_analysis",
            "localize_extended",
        ),
    )
    taper_raw = raw.get("taper", {})
    _check_keys("filter.taper", taper_raw, ("kind", "radius"))
    radius = taper_raw.get("radius", 4.0)
    return FilterConfig(
        variant=raw.get("variant", "etkf"),
        inflation=float(raw.get("inflation", 1.0)),
        gamma=gamma_policy_from_dict(raw.get("gamma", {"policy": "rblw"})),
        synthetic_size=int(raw.get("synthetic_size", 100)),
        distribution=raw.get("distribution", "gaussian"),
        taper=taper_raw.get("kind", "gaspari_cohn"),
        radius=float("inf") if radius in ("inf", float("inf")) else float(radius),
        recenter_analysis=bool(raw.get("recenter_analysis", False)),
        localize_extended=bool(raw.get("localize_extended", False)),
    )


def _filter_to_dict(cfg):
    d = {
        "variant": cfg.variant,
        "inflation": float(cfg.inflation),
        "gamma": _gamma_to_dict(cfg.gamma),
        "synthetic_size": cfg.synthetic_size,
        "distribution": cfg.distribution,
        "taper": {
            "kind": cfg.taper,
            "radius": "inf" if cfg.radius == float("inf") else float(cfg.radius),
        },
        "recenter_analysis": cfg.recenter_analysis,
        "localize_extended": cfg.localize_extended,
    }
    return d


def gamma_policy_from_dict(raw):
    if isinstance(raw, GammaPolicy):
        return raw
    _check_keys("filter.gamma", raw, ("policy", "value"))
    kind = raw.get("policy", "rblw")
    value = raw.get("value")
    return GammaPolicy(kind=kind, value=None if value is None else float(value))


def _gamma_to_dict(policy):
    d = {"policy": policy.kind}
    if policy.value is not None:
        d["value"] = float(policy.value)
    return d


def gamma_policy_label(policy):
    if policy.kind == "static":
        return "static:%g" % policy.value
    return policy.kind


def load_config(path):
    """Read and validate a YAML experiment config."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config file %r does not hold a mapping" % path)
    return ExperimentConfig.from_dict(raw)
