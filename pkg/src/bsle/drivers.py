"""Driving-function samplers.

* plain BSLE: lambda = sqrt(kappa) * B on a uniform grid;
* BSLE(rho+, rho-) with force points x > 0 > y, integrated jointly with the
  force-point images X = f(x) - lambda, Y = f(y) - lambda until both collapse;
* the extension past the lifetime by an independent Brownian motion;
* the reduced diffusion W = cos V in its time-changed clock u, together with the
  lifetime functional T = ((x-y)^2/(4 kappa)) int exp(-4u/kappa) (1 - W^2) du.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import core
from ._pycore import DEPTH_CAP, DONE, STEP_CAP, level_for
from .loewner import DrivingPath
from .rng import (DOMAIN_BESSEL, DOMAIN_BROWNIAN, DOMAIN_EXTEND, DOMAIN_RHO, RngSpec)

__all__ = [
    "RhoDriverResult",
    "BesselPath",
    "LifetimeEstimate",
    "HorizonError",
    "SamplerError",
    "sample_brownian_driver",
    "sample_rho_driver",
    "extend_driver",
    "sample_cos_bessel",
    "lifetime_from_bessel",
    "bessel_lifetimes",
    "rho_lifetimes",
    "time_change_u",
    "u_rate",
    "w_from_xy",
    "expected_remaining_lifetime",
    "bessel_level",
    "bessel_horizon",
]

DEFAULT_MAX_STEPS = 50_000_000
DEFAULT_RATIO_FLOOR = 1e-3


class HorizonError(RuntimeError):
    """The simulated horizon cannot certify the requested tail tolerance."""


class SamplerError(RuntimeError):
    """A sampler hit its safety cap instead of finishing."""


def _check_kappa(kappa):
    if not 0.0 < kappa <= 4.0:
        raise ValueError("kappa must lie in (0, 4]")


# ------------------------------------------------------------ plain BSLE ----

def sample_brownian_driver(kappa: float, step: float, t_max: float, rng: RngSpec) -> DrivingPath:
    """lambda = sqrt(kappa) B sampled every ``step`` up to t_max (rounded up)."""
    _check_kappa(kappa)
    if not step > 0:
        raise ValueError("step must be positive")
    n = int(math.ceil(t_max / step - 1e-9))
    z = core.sequential_normals(rng.seed, rng.stream, DOMAIN_BROWNIAN, n)
    vals = np.empty(n + 1)
    vals[0] = 0.0
    vals[1:] = np.cumsum(math.sqrt(kappa * step) * z)
    return DrivingPath(step, vals)


# ------------------------------------------------------------ rho driver ----

def w_from_xy(X, Y):
    return (X + Y) / (X - Y)


def u_rate(X, Y, kappa):
    """du/dt = -kappa/(X Y) > 0."""
    return -kappa / (X * Y)


def time_change_u(X, Y, x, y, kappa):
    """u = -(kappa/2) log((X-Y)/(x-y)); u(0) = 0."""
    return -0.5 * kappa * np.log((X - Y) / (x - y))


def expected_remaining_lifetime(X, Y, kappa):
    """E[T - t | X_t = X, Y_t = Y] for rho+ = rho- = -4.

    From the reduced diffusion: v(u) = E[1 - W_u^2] solves
    v' = 8/kappa - (1 + 8/kappa) v, and the lifetime functional is linear in v.
    """
    c = 4.0 / kappa
    b = 1.0 + 8.0 / kappa
    v_inf = (8.0 / kappa) / b
    W = w_from_xy(X, Y)
    v0 = 1.0 - W * W
    D2 = (X - Y) ** 2
    return D2 / (4.0 * kappa) * (v_inf / c + (v0 - v_inf) / (c + b))


def _remainder(X, Y, kappa, rho_plus, rho_minus):
    if rho_plus == -4.0 and rho_minus == -4.0:
        return expected_remaining_lifetime(X, Y, kappa)
    # midpoint of the deterministic interval [0, (X-Y)^2/16]
    return (X - Y) ** 2 / 32.0


@dataclass(frozen=True, eq=False)
class RhoDriverResult:
    """One BSLE(rho+, rho-) path up to its lifetime.

    The traces are recorded at the sampler's own (adaptive) steps; ``driver`` is
    the same path on a uniform grid of spacing ``out_step``. ``T`` is the time the
    integration stopped plus an estimate of the remaining lifetime, and ``T_upper``
    adds the deterministic bound (X-Y)^2/16 instead.
    """

    driver: DrivingPath
    t_trace: np.ndarray
    lam_trace: np.ndarray
    X_trace: np.ndarray
    Y_trace: np.ndarray
    T: float
    T_upper: float
    t_stop: float
    x: float
    y: float
    kappa: float
    rho_plus: float
    rho_minus: float
    n_steps: int
    rng: RngSpec = field(default_factory=lambda: RngSpec(0))

    @property
    def lam_T(self) -> float:
        return float(self.lam_trace[-1])

    def lam_at(self, t):
        """Driving value at times t <= T (linear between recorded steps)."""
        t = np.asarray(t, dtype=np.float64)
        return np.interp(np.minimum(t, self.t_stop), self.t_trace, self.lam_trace)

    def sidecar(self) -> dict:
        return {
            "T": self.T,
            "T_upper": self.T_upper,
            "t_stop": self.t_stop,
            "x": self.x,
            "y": self.y,
            "kappa": self.kappa,
            "rho_plus": self.rho_plus,
            "rho_minus": self.rho_minus,
            "n_steps": self.n_steps,
            "seed": self.rng.seed,
            "stream": self.rng.stream,
            "t_trace": self.t_trace.tolist(),
            "X_trace": self.X_trace.tolist(),
            "Y_trace": self.Y_trace.tolist(),
        }


def _eps_default(x, y, eps_stop):
    return 1e-5 * (x - y) if eps_stop is None else eps_stop


def _check_rho_args(kappa, x, y, step):
    _check_kappa(kappa)
    if not x > 0 > y:
        raise ValueError("need x > 0 > y")
    if not 0 < step <= (x - y) ** 2 / 64:
        raise ValueError("step must lie in (0, (x-y)^2/64]")


def sample_rho_driver(kappa: float, rho_plus: float, rho_minus: float, x: float, y: float,
                      step: float, rng: RngSpec, *, out_step: float | None = None,
                      eps_stop: float | None = None, ratio_floor: float = DEFAULT_RATIO_FLOOR,
                      max_steps: int = DEFAULT_MAX_STEPS) -> RhoDriverResult:
    """Integrate BSLE(rho+, rho-) until X - Y < eps_stop.

    ``step`` is the largest capacity-time step (used while the force points are
    far from the driver); steps shrink with min(X^2, Y^2). The uniform-grid driver
    has spacing ``out_step`` (default ``step``).
    """
    _check_rho_args(kappa, x, y, step)
    eps = _eps_default(x, y, eps_stop)
    end, rec = core.rho_trace(kappa, rho_plus, rho_minus, x, y, step, ratio_floor, eps,
                              max_steps, rng.seed, rng.stream, DOMAIN_RHO)
    t_stop, X, Y, lam, n_steps, status = end
    if status != DONE:
        raise SamplerError(f"rho driver stopped with status {status} after {n_steps} steps")
    t_tr, l_tr, x_tr, y_tr = rec
    T = t_stop + _remainder(X, Y, kappa, rho_plus, rho_minus)
    T_upper = t_stop + (X - Y) ** 2 / 16.0
    h_out = step if out_step is None else out_step
    k_T = int(math.floor(T / h_out))
    grid = np.arange(k_T + 1) * h_out
    vals = np.interp(np.minimum(grid, t_stop), t_tr, l_tr)
    driver = DrivingPath(h_out, vals, lifetime_index=k_T)
    return RhoDriverResult(driver, t_tr, l_tr, x_tr, y_tr, float(T), float(T_upper),
                           float(t_stop), x, y, kappa, rho_plus, rho_minus, int(n_steps), rng)


def rho_lifetimes(kappa, rho_plus, rho_minus, x, y, step, seed, streams, *, eps_stop=None,
                  ratio_floor=DEFAULT_RATIO_FLOOR, max_steps=DEFAULT_MAX_STEPS,
                  t_stop=math.inf):
    """Vectorised lifetimes of many rho-driver paths.

    Returns a dict of arrays: T (estimate), T_upper, t_stop, X, Y, lam, steps, status.
    With a finite ``t_stop`` the paths alive at t_stop end exactly there
    (status REACHED_T) and ``lam`` is the driving value at t_stop.
    """
    _check_rho_args(kappa, x, y, step)
    eps = _eps_default(x, y, eps_stop)
    t, X, Y, lam, steps, status = core.rho_lifetimes(
        kappa, rho_plus, rho_minus, x, y, step, ratio_floor, eps, max_steps, t_stop, seed,
        np.asarray(streams, dtype=np.uint64), DOMAIN_RHO)
    if np.any((status == STEP_CAP) | (status == DEPTH_CAP)):
        bad = int(np.sum((status == STEP_CAP) | (status == DEPTH_CAP)))
        raise SamplerError(f"{bad} rho-driver paths hit the safety cap")
    done = status == DONE
    rem = np.where(done, _remainder(X, Y, kappa, rho_plus, rho_minus), 0.0)
    return {
        "T": t + rem,
        "T_upper": t + np.where(done, (X - Y) ** 2 / 16.0, 0.0),
        "t_stop": t,
        "X": X,
        "Y": Y,
        "lam": lam,
        "steps": steps,
        "status": status,
    }


def extend_driver(result: RhoDriverResult, step: float, t_max: float, rng: RngSpec) -> DrivingPath:
    """The path on [0, t_max]: the rho driver up to T, then lambda(T) + sqrt(kappa) B-hat.

    B-hat comes from its own random domain, so it is independent of the pre-T path.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    T = result.T
    if not math.isfinite(T):
        raise ValueError("result has no finite lifetime")
    n = int(math.ceil(max(t_max, T) / step - 1e-9))
    grid = np.arange(n + 1) * step
    k_T = int(math.floor(T / step))
    vals = np.empty(n + 1)
    if step == result.driver.step:
        vals[: k_T + 1] = result.driver.values[: k_T + 1]
    else:
        vals[: k_T + 1] = result.lam_at(grid[: k_T + 1])
    n_after = n - k_T
    if n_after > 0:
        z = core.sequential_normals(rng.seed, rng.stream, DOMAIN_EXTEND, n_after)
        dt = np.full(n_after, step)
        dt[0] = grid[k_T + 1] - T
        vals[k_T + 1:] = result.lam_T + np.cumsum(np.sqrt(result.kappa * dt) * z)
    return DrivingPath(step, vals, lifetime_index=k_T)


# ---------------------------------------------------------------- bessel ----

def bessel_level(step: float) -> int:
    """Dyadic level whose spacing 2**-level is the largest not exceeding ``step``."""
    if not 0 < step <= 1:
        raise ValueError("bessel step must lie in (0, 1]")
    return level_for(step)


def bessel_horizon(kappa: float, tail_tol: float, scale2: float = 1.0) -> float:
    """Smallest u-horizon with scale2/16 * exp(-4u/kappa) <= tail_tol."""
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    return max(0.0, 0.25 * kappa * math.log(scale2 / (16.0 * tail_tol)))


@dataclass(frozen=True, eq=False)
class BesselPath:
    """V = arccos W sampled every ``step`` units of the u-clock."""

    step: float
    V_values: np.ndarray
    w0: float
    kappa: float = 4.0

    @property
    def W_values(self) -> np.ndarray:
        return np.cos(self.V_values)

    @property
    def horizon(self) -> float:
        return (self.V_values.size - 1) * self.step


def sample_cos_bessel(kappa: float, w0: float, step: float, t_max: float, rng: RngSpec) -> BesselPath:
    """Reduced diffusion dW = -sqrt(1-W^2) dB - (4/kappa) W du in V = arccos W.

    Each step adds the Brownian increment to V (reflected into [0, pi]), then
    applies the drift exactly: cos V <- cos V * exp(-a du), a = (8/kappa - 1)/2.
    The drift step maps [0, pi] strictly inside (0, pi), so W stays in (-1, 1).
    ``step`` is rounded down to a power of two so that paths nest under halving.
    """
    _check_kappa(kappa)
    if not -1.0 <= w0 <= 1.0:
        raise ValueError("w0 must lie in [-1, 1]")
    level = bessel_level(step)
    h = math.ldexp(1.0, -level)
    n = int(math.ceil(t_max / h - 1e-9))
    V = core.bessel_trace(kappa, w0, level, n, rng.seed, rng.stream, DOMAIN_BESSEL)
    return BesselPath(h, V, w0, kappa)


@dataclass(frozen=True)
class LifetimeEstimate:
    value: float
    tail_bound: float
    lower: float
    upper: float


def lifetime_from_bessel(path: BesselPath, x: float, y: float, kappa: float,
                         tail_tol: float) -> LifetimeEstimate:
    """T from the reduced diffusion, with a certified interval for the truncated tail.

    The integrand exp(-cu)(1 - W^2), c = 4/kappa, is integrated exactly for
    piecewise-linear (1 - W^2) on each step. The tail beyond the horizon lies in
    [0, (x-y)^2/16 * exp(-c U)]; the point value uses the last integrand value.
    """
    scale2 = (x - y) ** 2
    U = path.horizon
    tail = scale2 / 16.0 * math.exp(-4.0 * U / kappa)
    if tail > tail_tol:
        raise HorizonError(f"horizon {U} leaves a tail bound {tail:.3g} > tail_tol {tail_tol:.3g}")
    g = 1.0 - np.cos(path.V_values) ** 2
    c = 4.0 / kappa
    dt = path.step
    e = math.exp(-c * dt)
    i0 = (1.0 - e) / c
    i1 = (1.0 - e * (1.0 + c * dt)) / (c * c)
    wb = i1 / dt
    wa = i0 - wb
    n = g.size - 1
    decay = np.exp(-c * dt * np.arange(n))
    integral = float(np.sum(decay * (wa * g[:-1] + wb * g[1:])))
    base = scale2 / (4.0 * kappa) * integral
    value = base + float(g[-1]) * tail
    return LifetimeEstimate(value, tail, base, base + tail)


def bessel_lifetimes(kappa: float, x: float, y: float, seed: int, streams, *, step: float = 2.0 ** -8,
                     tail_tol: float = 1e-7, horizon: float | None = None,
                     threshold: float | None = None):
    """Vectorised lifetimes from the reduced diffusion started at W = (x+y)/(x-y).

    Returns a dict with T (point estimate), lower/upper (certified interval) and
    ``decided``: with a threshold, 1 means T <= threshold, 0 means T > threshold
    (both certified), -1 undecided at the horizon.
    """
    _check_kappa(kappa)
    if not x > 0 > y:
        raise ValueError("need x > 0 > y")
    scale2 = (x - y) ** 2
    level = bessel_level(step)
    h = math.ldexp(1.0, -level)
    U = bessel_horizon(kappa, tail_tol, scale2) if horizon is None else horizon
    n = int(math.ceil(U / h - 1e-9))
    thr = -1.0 if threshold is None else threshold / scale2
    integ, tail, glast, decided, wmax, nsteps = core.bessel_lifetimes(
        kappa, w_from_xy(x, y), level, n, thr, seed, np.asarray(streams, dtype=np.uint64),
        DOMAIN_BESSEL)
    full = decided < 0
    if horizon is not None and np.any(full & (scale2 * tail > tail_tol)):
        raise HorizonError("horizon too short for tail_tol")
    return {
        "T": scale2 * (integ + glast * tail),
        "lower": scale2 * integ,
        "upper": scale2 * (integ + tail),
        "decided": decided,
        "wmax": wmax,
        "steps": nsteps,
        "horizon": n * h,
        "step": h,
    }
