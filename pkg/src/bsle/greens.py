"""Green's functions, the Girsanov local martingale and lifetime estimators."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._backend import core
from ._pycore import REACHED_T
from .drivers import bessel_lifetimes, rho_lifetimes
from .montecarlo import Runner
from .rng import DOMAIN_BROWNIAN, RngSpec

__all__ = [
    "GreenParams",
    "EstimateReport",
    "Comparison",
    "green",
    "martingale_M",
    "estimate_Gt",
    "mean_inverse_lifetime",
    "inverse_lifetime_moments",
    "scaling_check",
    "martingale_check",
    "girsanov_check",
    "BESSEL_STEP",
    "TAIL_TOL",
]

BESSEL_STEP = 2.0 ** -8
TAIL_TOL = 1e-7


@dataclass(frozen=True)
class GreenParams:
    kappa: float = 4.0
    rho_plus: float = -4.0
    rho_minus: float = -4.0

    def __post_init__(self):
        if not 0.0 < self.kappa <= 4.0:
            raise ValueError("kappa must lie in (0, 4]")

    @property
    def alpha_plus(self) -> float:
        return self.rho_plus / -self.kappa

    @property
    def alpha_minus(self) -> float:
        return self.rho_minus / -self.kappa

    @property
    def gamma(self) -> float:
        return self.rho_plus * self.rho_minus / (-2.0 * self.kappa)

    @property
    def q_plus(self) -> float:
        return self.rho_plus * (self.rho_plus + 4.0 + self.kappa) / (-4.0 * self.kappa)

    @property
    def q_minus(self) -> float:
        return self.rho_minus * (self.rho_minus + 4.0 + self.kappa) / (-4.0 * self.kappa)

    @property
    def degree(self) -> float:
        return self.alpha_plus + self.alpha_minus + self.gamma


def green(params: GreenParams, x, y):
    """|x|^a+ |y|^a- |x-y|^gamma for x > 0 > y (vectorised)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y >= 0):
        raise ValueError("need x > 0 > y")
    out = np.exp(params.alpha_plus * np.log(x) + params.alpha_minus * np.log(-y)
                 + params.gamma * np.log(x - y))
    return float(out) if out.ndim == 0 else out


def martingale_M(params: GreenParams, X, Y, dfx, dfy):
    """G(X, Y) f'(x)^q+ f'(y)^q- ; f'(y) is the derivative at the negative force point."""
    dfx = np.asarray(dfx, dtype=np.float64)
    dfy = np.asarray(dfy, dtype=np.float64)
    if np.any(dfx <= 0) or np.any(dfy <= 0):
        raise ValueError("derivatives must be positive")
    out = green(params, X, Y) * dfx ** params.q_plus * dfy ** params.q_minus
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EstimateReport:
    value: float
    std_error: float
    n: int
    seed: int
    stream_base: int
    step: float
    horizon: float
    tail_tol: float

    def __post_init__(self):
        if not self.std_error >= 0 and not math.isnan(self.std_error):
            raise ValueError("std_error must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("value", "std_error", "step", "horizon", "tail_tol"):
            d[k] = float(d[k])
        d["n"] = int(d["n"])
        d["seed"] = int(d["seed"])
        d["stream_base"] = int(d["stream_base"])
        return d

    @classmethod
    def from_dict(cls, d) -> "EstimateReport":
        return cls(**{k: d[k] for k in ("value", "std_error", "n", "seed", "stream_base", "step",
                                       "horizon", "tail_tol")})


@dataclass(frozen=True)
class Comparison:
    """Two estimates of the same quantity; ``z`` = difference / combined SE."""

    left: EstimateReport
    right: EstimateReport
    diff: float
    se: float

    @property
    def z(self) -> float:
        return self.diff / self.se if self.se > 0 else (0.0 if self.diff == 0 else math.inf)

    def agrees(self, n_se: float = 3.0) -> bool:
        return abs(self.diff) <= n_se * self.se

    def to_dict(self) -> dict:
        return {"left": self.left.to_dict(), "right": self.right.to_dict(), "diff": float(self.diff),
                "se": float(self.se), "z": float(self.z)}


def _compare(a: EstimateReport, b: EstimateReport) -> Comparison:
    return Comparison(a, b, a.value - b.value, math.hypot(a.std_error, b.std_error))


def _horizon(kappa, tail_tol, scale2=1.0):
    return max(0.0, 0.25 * kappa * math.log(scale2 / (16.0 * tail_tol)))


# ------------------------------------------------------- lifetime estimators -

def _prob_lifetime_below(kappa, x, y, t, n, rng, step, tail_tol, runner, key):
    """P_{x,y}[T <= t] from threshold-mode Bessel paths."""
    runner = runner or Runner()

    def sample(start, count):
        out = bessel_lifetimes(kappa, x, y, rng.seed, rng.streams(start, count), step=step,
                               tail_tol=tail_tol, threshold=t)
        dec = out["decided"]
        return np.where(dec >= 0, dec == 1, out["T"] <= t).astype(np.float64)

    m = runner.moments(key, sample, n)
    return float(m.mean[0]), float(m.se[0])


def estimate_Gt(kappa: float, x: float, y: float, t: float, n: int, rng: RngSpec, *,
                step: float = BESSEL_STEP, tail_tol: float = TAIL_TOL,
                runner: Runner | None = None, key: str = "Gt") -> EstimateReport:
    """G(x,y) P_{x,y}[T <= t], simulated at (s, s-1), s = x/(x-y), with T rescaled by (x-y)^2."""
    if not x > 0 > y:
        raise ValueError("need x > 0 > y")
    g = green(GreenParams(kappa), x, y)
    L2 = (x - y) ** 2
    s = x / (x - y)
    p, se = _prob_lifetime_below(kappa, s, s - 1.0, t / L2, n, rng, step, tail_tol / L2,
                                 runner, key)
    return EstimateReport(g * p, g * se, n, rng.seed, rng.stream, step,
                          _horizon(kappa, tail_tol, L2), tail_tol)


def inverse_lifetime_moments(kappa, s, n, rng, *, step=BESSEL_STEP, tail_tol=TAIL_TOL,
                             horizon=None, runner=None, key="inv"):
    """Moments of (1/T, 1/T_lower - 1/T_upper) at (x, y) = (s, s-1)."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    runner = runner or Runner()

    def sample(start, count):
        out = bessel_lifetimes(kappa, s, s - 1.0, rng.seed, rng.streams(start, count), step=step,
                               tail_tol=tail_tol, horizon=horizon)
        return np.column_stack([1.0 / out["T"], 1.0 / out["lower"] - 1.0 / out["upper"]])

    return runner.moments(key, sample, n)


def mean_inverse_lifetime(kappa: float, s: float, n: int, rng: RngSpec, *, horizon: float | None = None,
                          tail_tol: float = TAIL_TOL, step: float = BESSEL_STEP,
                          runner: Runner | None = None, key: str = "inv") -> EstimateReport:
    """E_s[1/T] at (x, y) = (s, s-1).

    Each 1/T lies in the certified interval [1/T_upper, 1/T_lower]; its mean width
    (at most tail_tol-sized) is folded into the reported standard error.
    """
    m = inverse_lifetime_moments(kappa, s, n, rng, step=step, tail_tol=tail_tol, horizon=horizon,
                                 runner=runner, key=key)
    width = float(m.mean[1])
    se = math.hypot(float(m.se[0]), 0.5 * width)
    U = _horizon(kappa, tail_tol) if horizon is None else horizon
    return EstimateReport(float(m.mean[0]), se, n, rng.seed, rng.stream, step, U, tail_tol)


@dataclass(frozen=True)
class ScalingResult:
    s: float
    r: float
    comparison: Comparison

    @property
    def left(self) -> EstimateReport:
        return self.comparison.left

    @property
    def right(self) -> EstimateReport:
        return self.comparison.right

    def to_dict(self) -> dict:
        return {"s": self.s, "r": self.r, **self.comparison.to_dict()}


def scaling_check(kappa: float, s: float, r: float, n: int, rng: RngSpec, *, step: float = BESSEL_STEP,
                  tail_tol: float = TAIL_TOL, independent: bool = True,
                  runner: Runner | None = None, key: str = "scaling") -> ScalingResult:
    """P_{rs, r(s-1)}[T <= 1] against P_{s, s-1}[T <= r^-2].

    The left side simulates the reduced diffusion for the scaled force points, the
    right side for the unit pair with a rescaled threshold. With
    ``independent=True`` the two sides use disjoint stream families; otherwise
    they share paths (and are then equal for r = 1 by construction).
    """
    if not 0.0 < s < 1.0 or not r > 0:
        raise ValueError("need 0 < s < 1 and r > 0")
    rng_r = rng.family(1) if independent else rng
    pl, sl = _prob_lifetime_below(kappa, r * s, r * (s - 1.0), 1.0, n, rng, step, tail_tol, runner,
                                  key + "/left")
    pr, sr = _prob_lifetime_below(kappa, s, s - 1.0, r ** -2, n, rng_r, step, tail_tol, runner,
                                  key + "/right")
    U = _horizon(kappa, tail_tol)
    left = EstimateReport(pl, sl, n, rng.seed, rng.stream, step, U, tail_tol)
    right = EstimateReport(pr, sr, n, rng_r.seed, rng_r.stream, step, U, tail_tol)
    return ScalingResult(s, r, _compare(left, right))


# ---------------------------------------------------------- girsanov checks -

@dataclass(frozen=True)
class MartingaleResult:
    times: tuple
    ratios: tuple  # EstimateReport of E[M_{t ^ tau_cap}] / M_0 per time
    cap: float
    M0: float

    def to_dict(self) -> dict:
        return {"times": list(self.times), "cap": self.cap, "M0": self.M0,
                "ratios": [r.to_dict() for r in self.ratios],
                "z": [(r.value - 1.0) / r.std_error if r.std_error > 0 else 0.0 for r in self.ratios]}

    def passes(self, n_se: float = 3.0) -> bool:
        return all(abs(r.value - 1.0) <= n_se * r.std_error for r in self.ratios)


def _marks(times, step):
    marks = [int(round(t / step)) for t in times]
    for t, m in zip(times, marks):
        if m < 1 or abs(m * step - t) > 1e-9 * max(1.0, t):
            raise ValueError("times must be positive multiples of step")
    return marks


def martingale_check(kappa: float, x: float, y: float, times, cap: float, n: int, rng: RngSpec, *,
                     step: float = 1e-4, rho_plus: float = -4.0, rho_minus: float = -4.0,
                     runner: Runner | None = None, key: str = "martingale") -> MartingaleResult:
    """E[M_{t ^ tau_cap}] / M_0 under plain BSLE drivers.

    M is frozen when it first reaches ``cap`` (an absolute level) and is 0 after
    a force point is swallowed.
    """
    runner = runner or Runner()
    params = GreenParams(kappa, rho_plus, rho_minus)
    times = tuple(float(t) for t in times)
    marks = _marks(times, step)
    M0 = green(params, x, y)

    def sample(start, count):
        M, _, _ = core.bsle_martingale(kappa, rho_plus, rho_minus, x, y, step, marks, cap, rng.seed,
                                       rng.streams(start, count), DOMAIN_BROWNIAN)
        return M / M0

    m = runner.moments(key, sample, n)
    reps = tuple(EstimateReport(float(m.mean[i]), float(m.se[i]), n, rng.seed, rng.stream, step, t,
                                0.0) for i, t in enumerate(times))
    return MartingaleResult(times, reps, cap, M0)


def _clip_functional(lam):
    return np.clip(lam, -1.0, 1.0)


@dataclass(frozen=True)
class GirsanovResult:
    x: float
    y: float
    t: float
    comparison: Comparison

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "t": self.t, **self.comparison.to_dict()}


def girsanov_check(kappa: float, x: float, y: float, t: float, n: int, rng: RngSpec, *,
                   step: float = 1e-4, rho_step: float | None = None,
                   runner: Runner | None = None, key: str = "girsanov") -> GirsanovResult:
    """E_B[1{T>t} (M_t/G) h] against E_rho[1{T>t} h] with h = clip(lambda_t, -1, 1).

    The left side reweights plain BSLE drivers on a uniform grid; the right side
    runs the (-4, -4) driver directly up to time t. The two use different stream
    families, so they are independent.
    """
    if not 0 < t < (x - y) ** 2 / 16:
        raise ValueError("need 0 < t < (x-y)^2/16")
    runner = runner or Runner()
    params = GreenParams(kappa)
    marks = _marks([t], step)
    G0 = green(params, x, y)
    rho_step = step if rho_step is None else rho_step
    rng_rho = rng.family(1)

    def plain(start, count):
        M, lam, alive = core.bsle_martingale(kappa, -4.0, -4.0, x, y, step, marks, math.inf, rng.seed,
                                             rng.streams(start, count), DOMAIN_BROWNIAN)
        return alive[:, 0] * (M[:, 0] / G0) * _clip_functional(lam[:, 0])

    def direct(start, count):
        out = rho_lifetimes(kappa, -4.0, -4.0, x, y, rho_step, rng_rho.seed,
                            rng_rho.streams(start, count), t_stop=t)
        alive = out["status"] == REACHED_T
        return alive * _clip_functional(out["lam"])

    ml = runner.moments(key + "/plain", plain, n)
    md = runner.moments(key + "/direct", direct, n)
    left = EstimateReport(float(ml.mean[0]), float(ml.se[0]), n, rng.seed, rng.stream, step, t, 0.0)
    right = EstimateReport(float(md.mean[0]), float(md.se[0]), n, rng_rho.seed, rng_rho.stream,
                           rho_step, t, 0.0)
    return GirsanovResult(x, y, t, _compare(left, right))
