"""Lorenz '96 dynamics, RK4 stepping, and stochastic member forecasts."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import IntegrationBlowupError, ModelDimensionError

__all__ = [
    "ModelConfig",
    "ModelState",
    "ModelErrorSpec",
    "lorenz96_tendency",
    "rk4_step",
    "integrate_block",
    "forecast_member",
    "forecast_ensemble",
]


@dataclass(frozen=True)
class ModelConfig:
    """Lorenz '96 ring with constant forcing, advanced by RK4.

    dimension : number of grid sites (at least 4, cyclic coupling).
    forcing   : constant forcing term F.
    step      : integrator step size h.
    """

    dimension: int = 40
    forcing: float = 8.0
    step: float = 0.05

    def __post_init__(self):
        if self.dimension < 4:
            raise ModelDimensionError(
                "Lorenz '96 needs at least 4 sites, got %d" % self.dimension
            )
        if self.step <= 0:
            raise ValueError("step size must be positive")


@dataclass
class ModelState:
    """A state vector tagged with model time."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("state values must be a 1-d vector")


@dataclass
class ModelErrorSpec:
    """Additive Gaussian model error with covariance Q.

    Q is symmetric positive semi-definite; ``None`` or an omitted spec means
    a perfect model.  Draws use an eigenfactor of Q so singular covariances
    are fine.
    """

    covariance: np.ndarray | None = None
    _factor: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.covariance is None:
            return
        q = np.asarray(self.covariance, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be a square matrix")
        if not np.allclose(q, q.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(q).max())):
            raise ValueError("Q must be symmetric")
        w, v = np.linalg.eigh(0.5 * (q + q.T))
        if w.min() < -1e-10 * max(1.0, w.max()):
            raise ValueError("Q must be positive semi-definite")
        w = np.clip(w, 0.0, None)
        self.covariance = q
        self._factor = v * np.sqrt(w)

    def draw(self, rng, count=1):
        """Sample ``count`` error vectors, returned as an (n, count) array."""
        if self.covariance is None:
            raise ValueError("cannot draw from a perfect-model spec")
        xi = rng.standard_normal((self._factor.shape[1], count))
        return self._factor @ xi


def _as_block(values):
    """Coerce state values to a float64 C-contiguous (n, cols) block."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("expected a vector or an (n, cols) block of states")
    return arr, squeeze


def lorenz96_tendency(values, forcing=8.0):
    """Lorenz '96 time derivative, cyclic in the site index.

    Accepts a single state vector or an (n, cols) block of states; the
    return matches the input shape.
    """
    arr, squeeze = _as_block(values)
    if arr.shape[0] < 4:
        raise ModelDimensionError(
            "Lorenz '96 needs at least 4 sites, got %d" % arr.shape[0]
        )
    out = kernels.l96_tendency2d(arr, float(forcing))
    return out[:, 0] if squeeze else out


def rk4_step(tendency, state, h):
    """One classical RK4 step of a generic autonomous tendency.

    Raises IntegrationBlowupError, carrying the state time, if any stage
    goes non-finite.
    """
    y = state.values
    hh = h / 2.0
    h6 = h / 6.0
    k1 = tendency(y)
    k2 = tendency(y + hh * k1)
    k3 = tendency(y + hh * k2)
    k4 = tendency(y + h * k3)
    out = y + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationBlowupError(state.time)
    return ModelState(values=out, time=state.time + h)


def integrate_block(values, config, steps, t0=0.0):
    """Advance a block of states ``steps`` RK4 steps with the fused kernel.

    Raises IntegrationBlowupError (reporting the end of the window) when
    the result is non-finite.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    arr, squeeze = _as_block(values)
    if arr.shape[0] != config.dimension:
        raise ModelDimensionError(
            "state has %d sites but config says %d" % (arr.shape[0], config.dimension)
        )
    out = kernels.rk4_l96(arr, float(config.forcing), float(config.step), int(steps))
    if not np.all(np.isfinite(out)):
        raise IntegrationBlowupError(t0 + steps * config.step)
    return out[:, 0] if squeeze else out


def forecast_member(state, steps, config, rng=None, model_error=None):
    """Forecast one member ``steps`` model steps, optionally adding a single
    model-error draw at the end of the window.

    With ``model_error`` None (or a perfect-model spec) the forecast is
    deterministic and ``rng`` is never consumed.
    """
    values = integrate_block(state.values, config, steps, t0=state.time)
    if model_error is not None and model_error.covariance is not None:
        if rng is None:
            raise ValueError("model error requested but no rng given")
        values = values + model_error.draw(rng, 1)[:, 0]
    return ModelState(values=values, time=state.time + steps * config.step)


def forecast_ensemble(members, steps, config, rng=None, model_error=None, t0=0.0):
    """Forecast all columns of an (n, N) member block in one fused call."""
    out = integrate_block(members, config, steps, t0=t0)
    if model_error is not None and model_error.covariance is not None:
        if rng is None:
            raise ValueError("model error requested but no rng given")
        out = out + model_error.draw(rng, out.shape[1])
    return out
