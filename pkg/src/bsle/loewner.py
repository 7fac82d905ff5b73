"""Backward chordal Loewner flow for sampled driving functions.

The driving value is held at its left grid value on every step, and each step is
solved exactly: for constant driving the offset w = f - lambda obeys
(w')^2 = w^2 - 4h. Real points are swallowed mid-step when w^2 <= 4h, at
t_step + w^2/4. The zero driver is therefore reproduced to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _pycore
from ._backend import core

__all__ = [
    "DrivingPath",
    "FlowPoint",
    "Swallowed",
    "Incomplete",
    "WeldingRecord",
    "step_map",
    "step_derivative",
    "evolve_point",
    "evolve_points",
    "swallowing_time",
    "swallowing_times",
    "geometric_mesh",
    "welding_curve",
    "rect_occupation",
    "occupation_from_taus",
    "hcap_probe",
    "zero_path",
]


@dataclass(frozen=True, eq=False)
class DrivingPath:
    """Driving function sampled at t_k = k*step."""

    step: float
    values: np.ndarray
    lifetime_index: int | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.lifetime_index is not None and not 0 <= self.lifetime_index < vals.size:
            raise ValueError("lifetime_index outside the path")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "step", float(self.step))

    @property
    def n_steps(self) -> int:
        return self.values.size - 1

    @property
    def duration(self) -> float:
        return self.n_steps * self.step

    @property
    def start(self) -> float:
        return float(self.values[0])

    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.step

    def shifted(self, k0: int) -> "DrivingPath":
        """lambda(t0 + .) - lambda(t0) for the grid time t0 = k0*step."""
        if not 0 <= k0 <= self.n_steps:
            raise ValueError("shift outside the path")
        vals = self.values[k0:] - self.values[k0]
        return DrivingPath(self.step, vals)

    def __eq__(self, other):
        if not isinstance(other, DrivingPath):
            return NotImplemented
        return (self.step == other.step and self.lifetime_index == other.lifetime_index
                and np.array_equal(self.values, other.values))

    # -- csv ---------------------------------------------------------------
    def to_csv(self, path, header: Iterable[str] = ()) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv_text(header))

    def to_csv_text(self, header: Iterable[str] = ()) -> str:
        lines = [f"# {h}" for h in header]
        lines.append(f"step={self.step!r}")
        lines.extend(repr(float(v)) for v in self.values)
        if self.lifetime_index is not None:
            lines.append(f"lifetime_index={self.lifetime_index}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path) -> "DrivingPath":
        with open(path) as fh:
            return cls.from_csv_text(fh.read())

    @classmethod
    def from_csv_text(cls, text: str) -> "DrivingPath":
        step = None
        lifetime_index = None
        vals = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("step="):
                step = float(line[5:])
            elif line.startswith("lifetime_index="):
                lifetime_index = int(line[15:])
            else:
                vals.append(float(line))
        if step is None:
            raise ValueError("missing step= header")
        return cls(step, np.array(vals), lifetime_index)


def zero_path(step: float, t_max: float) -> DrivingPath:
    n = int(math.ceil(t_max / step - 1e-9))
    return DrivingPath(step, np.zeros(n + 1))


@dataclass(frozen=True)
class Swallowed:
    """Result of a step that ends on the driving value after dtau."""

    dtau: float


@dataclass(frozen=True)
class Incomplete:
    """Rectangle occupation that the path horizon does not determine."""

    lower: float
    unswallowed: tuple = field(default=())


@dataclass(frozen=True)
class FlowPoint:
    origin: complex
    image: complex
    derivative: float | None
    tau: float | None = None

    @property
    def alive(self) -> bool:
        return self.tau is None

    @property
    def status(self) -> str:
        return "alive" if self.tau is None else "swallowed"


def step_map(w, h: float):
    """One exact step of constant driving for the offset w = f - lambda."""
    if not h > 0:
        raise ValueError("h must be positive")
    if isinstance(w, complex) or np.iscomplexobj(w):
        w = complex(w)
        if w.imag > 0:
            a, b = w.real, w.imag
            re, im = _pycore._csqrt_upper(a * a - b * b - 4.0 * h, 2.0 * a * b)
            return complex(re, im)
        if w.imag < 0:
            raise ValueError("complex offsets must lie in the upper half-plane")
        w = w.real
    w = float(w)
    if w == 0.0:
        raise ValueError("offset 0: the point sits on the driving value")
    w2 = w * w
    if w2 <= 4.0 * h:
        return Swallowed(0.25 * w2)
    return math.copysign(math.sqrt(w2 - 4.0 * h), w)


def step_derivative(w: float, w_next: float) -> float:
    """Factor |w|/|w_next| by which f' grows over one exact step."""
    if w == 0 or w_next == 0 or (w > 0) != (w_next > 0):
        raise ValueError("offsets must be nonzero and of the same sign")
    if abs(w_next) > abs(w):
        raise ValueError("|w_next| > |w|: not a backward Loewner step")
    return abs(w) / abs(w_next)


def _split_time(path: DrivingPath, t_end: float):
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    dur = path.duration
    if t_end > dur * (1 + 1e-12) + 1e-15:
        raise ValueError(f"t_end={t_end} beyond the path duration {dur}")
    n_full = int(math.floor(t_end / path.step + 1e-9))
    if n_full > path.n_steps:
        n_full = path.n_steps
    rem = t_end - n_full * path.step
    if rem < 1e-12 * path.step:
        rem = 0.0
    return n_full, rem


def evolve_points(points: Sequence[float], path: DrivingPath, t_end: float | None = None):
    """Images, derivatives and swallowing times (inf if alive) of real points."""
    pts = np.asarray(points, dtype=np.float64)
    if np.any(pts == path.start):
        raise ValueError("real points must differ from the starting driving value")
    if t_end is None:
        t_end = path.duration
    n_full, rem = _split_time(path, t_end)
    return core.flow_real(path.values, path.step, n_full, rem, pts)


def evolve_point(z, path: DrivingPath, t_end: float) -> FlowPoint:
    if isinstance(z, complex) and z.imag != 0.0:
        if z.imag < 0:
            raise ValueError("complex points must lie in the upper half-plane")
        n_full, rem = _split_time(path, t_end)
        re, im = core.flow_complex(path.values, path.step, n_full, rem,
                                   np.array([z.real]), np.array([z.imag]))
        return FlowPoint(z, complex(re[0], im[0]), None, None)
    x = float(z.real if isinstance(z, complex) else z)
    image, deriv, tau = evolve_points([x], path, t_end)
    tau0 = float(tau[0])
    return FlowPoint(x, complex(image[0]), float(deriv[0]), None if math.isinf(tau0) else tau0)


def swallowing_times(points: Sequence[float], path: DrivingPath) -> np.ndarray:
    return evolve_points(points, path)[2]


def swallowing_time(x: float, path: DrivingPath) -> float:
    """Swallowing time of a real point; math.inf if alive at the end of the path."""
    return float(swallowing_times([x], path)[0])


def geometric_mesh(r_min: float, r_max: float, n: int) -> np.ndarray:
    """n points from r_min to r_max, geometrically spaced (finest near 0)."""
    if not 0 < r_min < r_max or n < 2:
        raise ValueError("need 0 < r_min < r_max and n >= 2")
    return np.geomspace(r_min, r_max, n)


@dataclass(frozen=True, eq=False)
class WeldingRecord:
    origin: float
    mesh_pos: np.ndarray
    mesh_neg: np.ndarray
    tau_pos: np.ndarray
    tau_neg: np.ndarray

    @property
    def unswallowed(self) -> int:
        return int(np.isinf(self.tau_pos).sum() + np.isinf(self.tau_neg).sum())

    def phi(self, t):
        """Welding-curve samples (d_t, c_t), interpolating the monotone maps x -> tau_x."""
        t = np.asarray(t, dtype=np.float64)
        d = self._invert(t, self.mesh_pos, self.tau_pos)
        c = self._invert(t, self.mesh_neg, self.tau_neg)
        return d, c

    def _invert(self, t, mesh, tau):
        ok = np.isfinite(tau)
        xs = np.concatenate(([self.origin], mesh[ok]))
        ts = np.concatenate(([0.0], tau[ok]))
        out = np.interp(t, ts, xs)
        # beyond the last swallowed mesh point the curve is not determined
        return np.where(t > ts[-1], np.nan, out)

    def welding_pairs(self):
        """Matched (x, phi(x)) pairs: each positive mesh point with its partner."""
        ok = np.isfinite(self.tau_pos)
        partner = self.phi(self.tau_pos[ok])[1]
        return self.mesh_pos[ok], partner


def welding_curve(path: DrivingPath, mesh_pos: Sequence[float] | None = None,
                  mesh_neg: Sequence[float] | None = None, *, r_min: float = 1e-3,
                  r_max: float = 4.0, n: int = 200) -> WeldingRecord:
    """Swallowing times of a two-sided mesh around the starting driving value."""
    lam0 = path.start
    if mesh_pos is None:
        mesh_pos = lam0 + geometric_mesh(r_min, r_max, n)
    if mesh_neg is None:
        mesh_neg = lam0 - (np.asarray(mesh_pos) - lam0)
    mp = np.asarray(mesh_pos, dtype=np.float64)
    mn = np.asarray(mesh_neg, dtype=np.float64)
    if np.any(mp <= lam0) or np.any(mn >= lam0):
        raise ValueError("mesh must straddle the starting driving value")
    if np.any(np.diff(mp) <= 0) or np.any(np.diff(mn) >= 0):
        raise ValueError("mesh_pos must increase and mesh_neg decrease")
    taus = swallowing_times(np.concatenate((mp, mn)), path)
    return WeldingRecord(lam0, mp, mn, taus[: mp.size], taus[mp.size:])


def occupation_from_taus(t_x1, t_x2, t_y1, t_y2):
    """Leb{t : d_t in [x1,x2], c_t in [y1,y2]} from the four corner swallowing times.

    d_t >= x iff t >= tau_x and c_t <= y iff t >= tau_y, with both maps monotone.
    """
    return np.maximum(0.0, np.minimum(t_x2, t_y1) - np.maximum(t_x1, t_y2))


def rect_occupation(path: DrivingPath, rect):
    """Capacity time the welding curve spends in [x1,x2] x [y1,y2].

    Returns a float, or Incomplete when a relevant corner survives the horizon.
    """
    x1, x2, y1, y2 = map(float, rect)
    lam0 = path.start
    if not (lam0 < x1 <= x2 and y1 <= y2 < lam0):
        raise ValueError("rectangle must lie strictly inside the fourth quadrant")
    if x1 == x2 or y1 == y2:
        return 0.0
    t_x1, t_x2, t_y1, t_y2 = swallowing_times([x1, x2, y1, y2], path)
    start = max(t_x1, t_y2)
    end = min(t_x2, t_y1)
    if math.isinf(end):
        missing = tuple(n for n, v in zip(("x1", "x2", "y1", "y2"), (t_x1, t_x2, t_y1, t_y2))
                        if math.isinf(v))
        lower = 0.0 if math.isinf(start) else max(0.0, path.duration - start)
        return Incomplete(lower, missing)
    # end is known; an unknown start lies beyond the horizon, hence after end
    return float(max(0.0, end - start))


def hcap_probe(path: DrivingPath, t: float, R: float) -> float:
    """|f_t(iR) - (iR - 2t/(iR))|: deviation from the capacity-2t expansion."""
    fp = evolve_point(complex(0.0, R), path, t)
    expected = complex(0.0, R) - 2.0 * t / complex(0.0, R)
    return abs(fp.image - expected)
