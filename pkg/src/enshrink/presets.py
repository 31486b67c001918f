"""Built-in experiment presets for the standard Lorenz '96 benchmarks.

Each preset is a full config dict (same schema as the YAML files) so it can
be dumped, edited, and fed back through ``enshrink run --config``.  All use
the 40-site ring with forcing 8, unit observation noise on every site,
inflation 1.1, 2200 assimilation steps with 200 discarded, 20 replicates.
"""

import copy

from .errors import ConfigError

__all__ = ["PRESETS", "get_preset", "list_presets"]


def _base(variant, n_mem, **filter_extra):
    fdict = {"variant": variant, "inflation": 1.1}
    fdict.update(filter_extra)
    return {
        "schema_version": 1,
        "model": {"dimension": 40, "forcing": 8.0, "step": 0.05},
        "assimilation": {"steps": 2200, "spinup": 200, "dt": 0.05},
        "observations": {"operator": "identity", "noise": {"type": "scalar", "value": 1.0}},
        "ensemble_size": n_mem,
        "filter": fdict,
        "climatology": {"source": "generate", "snapshots": 2000, "mode": "trajectory"},
        "replicates": 20,
        "base_seed": 1000,
    }


def _undersampled():
    cfg = _base("shrink_symmetric", 5, gamma={"policy": "rblw"}, synthetic_size=100)
    cfg["sweep"] = {
        "synthetic_size": [25, 50, 100],
        "gamma": [{"policy": "rblw"}, {"policy": "static", "value": 0.85}],
    }
    return cfg


def _sufficient():
    cfg = _base("shrink_symmetric", 14, gamma={"policy": "rblw"}, synthetic_size=100)
    cfg["sweep"] = {
        "synthetic_size": [25, 50, 100],
        "gamma": [{"policy": "rblw"}, {"policy": "static", "value": 0.1}],
    }
    return cfg


def _gamma_sweep():
    cfg = _base(
        "shrink_symmetric",
        5,
        gamma={"policy": "static", "value": 0.5},
        synthetic_size=100,
    )
    cfg["sweep"] = {
        "gamma": [{"policy": "static", "value": round(0.1 * k, 1)} for k in range(1, 10)]
        + [{"policy": "rblw"}]
    }
    return cfg


def _size_sweep():
    cfg = _base("shrink_symmetric", 5, gamma={"policy": "rblw"}, synthetic_size=100)
    cfg["sweep"] = {
        "ensemble_size": [5, 8, 11, 14],
        "synthetic_size": [25, 50, 100],
    }
    return cfg


PRESETS = {
    "etkf-baseline": (
        "Plain ETKF, N=14",
        lambda: _base("etkf", 14),
    ),
    "letkf-baseline": (
        "LETKF, N=5, Gaspari-Cohn taper with radius 4",
        lambda: _base("letkf", 5, taper={"kind": "gaspari_cohn", "radius": 4.0}),
    ),
    "shrink-undersampled": (
        "Shrinkage ETKF, N=5: M in {25,50,100} x gamma in {RBLW, static 0.85}",
        _undersampled,
    ),
    "shrink-sufficient": (
        "Shrinkage ETKF, N=14: M in {25,50,100} x gamma in {RBLW, static 0.1}",
        _sufficient,
    ),
    "shrink-gamma-sweep": (
        "Shrinkage ETKF, N=5, M=100: static gamma 0.1..0.9 plus adaptive RBLW",
        _gamma_sweep,
    ),
    "shrink-size-sweep": (
        "Shrinkage ETKF with RBLW gamma over N in {5,8,11,14}, M in {25,50,100}",
        _size_sweep,
    ),
}


def list_presets():
    return [(name, desc) for name, (desc, _) in sorted(PRESETS.items())]


def get_preset(name):
    if name not in PRESETS:
        raise ConfigError(
            "unknown preset %r; available: %s" % (name, ", ".join(sorted(PRESETS)))
        )
    return copy.deepcopy(PRESETS[name][1]())
