"""Pure-Python kernels.

Reference implementation of every hot loop. The compiled core in ``_core.pyx``
mirrors these functions operation for operation, so both backends produce the
same numbers (bit-for-bit on the same platform). This module is selected when
the extension is missing or when ``BSLE_BACKEND=python`` is set.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
M0 = 0xD2E7470EE14C6C93
M1 = 0xCA5A826395121157
W0 = 0x9E3779B97F4A7C15
W1 = 0xBB67AE8584CAA73B
TWO_PI = 6.283185307179586
INV_2_53 = 1.1102230246251565e-16
MAX_LEVEL = 60
BRIDGE_BIT = 1 << 32

INF = math.inf

# status codes shared with the compiled core
DONE = 0
REACHED_T = 1
STEP_CAP = 2
DEPTH_CAP = 3

NAME = "python"


def philox4x64(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r:
            k0 = (k0 + W0) & MASK64
            k1 = (k1 + W1) & MASK64
        p0 = M0 * c0
        p1 = M1 * c2
        hi0, lo0 = p0 >> 64, p0 & MASK64
        hi1, lo1 = p1 >> 64, p1 & MASK64
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def normal_pair(seed, stream, domain, block, pair):
    o = philox4x64(pair & MASK64, block & MASK64, domain & MASK64, 0,
                   seed & MASK64, stream & MASK64)
    u1 = (float(o[0] >> 11) + 0.5) * INV_2_53
    u2 = float(o[1] >> 11) * INV_2_53
    r = math.sqrt(-2.0 * math.log(u1))
    th = TWO_PI * u2
    return r * math.cos(th), r * math.sin(th)


class NormalSource:
    """Standard normals addressed by (block, node); siblings share one Philox call."""

    __slots__ = ("seed", "stream", "domain", "_cache")

    def __init__(self, seed, stream, domain):
        self.seed = seed & MASK64
        self.stream = stream & MASK64
        self.domain = domain & MASK64
        self._cache = {}

    def node(self, block, node):
        pair = node >> 1
        slot = node.bit_length()
        hit = self._cache.get(slot)
        if hit is not None and hit[0] == block and hit[1] == pair:
            zc, zs = hit[2], hit[3]
        else:
            zc, zs = normal_pair(self.seed, self.stream, self.domain, block, pair)
            self._cache[slot] = (block, pair, zc, zs)
        return zs if node & 1 else zc


class Walker:
    """Lazy dyadic Brownian path (Levy midpoint construction).

    Base intervals have length ``h0``; the cell (level m, index i) of base
    interval k bisects with the normal at node ``2**m + i``. Values at dyadic
    times do not depend on how finely the path is later refined, which is what
    couples runs at step h and h/2.
    """

    __slots__ = ("src", "h0", "k", "b_base", "stack")

    def __init__(self, src, h0):
        self.src = src
        self.h0 = h0
        self.k = 0
        self.b_base = 0.0
        self.stack = []

    def top(self, j):
        st = self.stack
        if not st:
            br = self.b_base + math.sqrt(self.h0) * self.src.node(self.k, 0)
            st.append((0, 0, self.b_base, br))
        while st[-1][0] < j:
            if not self.split():
                break
        return st[-1]

    def split(self):
        st = self.stack
        m, i, bl, br = st[-1]
        if m >= MAX_LEVEL:
            return False
        st.pop()
        length = math.ldexp(self.h0, -m)
        mid = 0.5 * (bl + br) + math.sqrt(0.25 * length) * self.src.node(self.k, (1 << m) + i)
        st.append((m + 1, 2 * i + 1, mid, br))
        st.append((m + 1, 2 * i, bl, mid))
        return True

    def pop(self):
        cell = self.stack.pop()
        if not self.stack:
            self.k += 1
            self.b_base = cell[3]
        return cell


def level_for(h_allowed):
    """Smallest level j with 2**-j <= h_allowed (clamped to [0, MAX_LEVEL])."""
    if h_allowed >= 1.0:
        return 0
    if h_allowed <= 0.0:
        return MAX_LEVEL
    _, e = math.frexp(h_allowed)
    j = 1 - e
    return MAX_LEVEL if j > MAX_LEVEL else j


def _csqrt_upper(a, b):
    # root of a + ib with nonnegative imaginary part
    r = math.sqrt(a * a + b * b)
    if a >= 0.0:
        re = math.sqrt(0.5 * (r + a))
        im = b / (2.0 * re) if re > 0.0 else 0.0
    else:
        im = math.sqrt(0.5 * (r - a))
        if b < 0.0:
            im = -im
        re = b / (2.0 * im)
    if im < 0.0:
        re = -re
        im = -im
    return re, im


# ---------------------------------------------------------------- engine ---

def flow_real(values, step, n_full, rem, points):
    """Backward flow of real points under a piecewise-constant driver."""
    values = np.asarray(values, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    npt = pts.shape[0]
    image = np.empty(npt)
    deriv = np.empty(npt)
    tau = np.empty(npt)
    four_h = 4.0 * step
    four_r = 4.0 * rem
    for p in range(npt):
        f = float(pts[p])
        side = 1.0 if f > values[0] else -1.0
        d = 1.0
        ta = INF
        t = 0.0
        for k in range(n_full + (1 if rem > 0.0 else 0)):
            lam = float(values[k])
            w = f - lam
            if w * side <= 0.0:
                ta = t
                break
            fh = four_h if k < n_full else four_r
            w2 = w * w
            if w2 <= fh:
                ta = t + 0.25 * w2
                break
            wn = math.sqrt(w2 - fh)
            d = d * (abs(w) / wn)
            f = lam + side * wn
            t = t + (step if k < n_full else rem)
        else:
            # driver may have jumped across the point on the last step
            if rem == 0.0 and n_full < values.shape[0]:
                if (f - float(values[n_full])) * side <= 0.0:
                    ta = t
        image[p] = f
        deriv[p] = d
        tau[p] = ta
    return image, deriv, tau


def flow_complex(values, step, n_full, rem, zr, zi):
    values = np.asarray(values, dtype=np.float64)
    zr = np.asarray(zr, dtype=np.float64)
    zi = np.asarray(zi, dtype=np.float64)
    n = zr.shape[0]
    out_r = np.empty(n)
    out_i = np.empty(n)
    four_h = 4.0 * step
    four_r = 4.0 * rem
    for p in range(n):
        a = float(zr[p])
        b = float(zi[p])
        for k in range(n_full + (1 if rem > 0.0 else 0)):
            lam = float(values[k])
            fh = four_h if k < n_full else four_r
            wa = a - lam
            sa = wa * wa - b * b - fh
            sb = 2.0 * wa * b
            ra, rb = _csqrt_upper(sa, sb)
            a = lam + ra
            b = rb
        out_r[p] = a
        out_i[p] = b
    return out_r, out_i


def sequential_normals(seed, stream, domain, n):
    src = NormalSource(seed, stream, domain)
    return np.array([src.node(0, k) for k in range(n)], dtype=np.float64)


def tree_values(seed, stream, domain, h0, level, n_cells):
    """Brownian values on the dyadic grid of the given level (testing aid)."""
    w = Walker(NormalSource(seed, stream, domain), h0)
    out = np.empty(n_cells + 1)
    out[0] = 0.0
    for c in range(n_cells):
        cell = w.top(level)
        w.pop()
        out[c + 1] = cell[3]
    return out


# ------------------------------------------------------------ occupation ---

def occupation_taus(kappa, pos, neg, eta, h_min, t_max, max_steps, seed, streams,
                    domain, stop_outer):
    """Swallowing times of tracked real points under adaptive BSLE drivers.

    ``pos`` ascending positive points, ``neg`` descending negative points.
    Column layout of the result: pos points then neg points; inf = alive at stop.
    """
    pos = [float(v) for v in pos]
    neg = [float(v) for v in neg]
    npos, nneg = len(pos), len(neg)
    streams = np.asarray(streams, dtype=np.uint64)
    n = streams.shape[0]
    taus = np.full((n, npos + nneg), INF)
    steps_out = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    sk = math.sqrt(kappa)
    for s in range(n):
        walker = Walker(NormalSource(seed, int(streams[s]), domain), 1.0)
        wp = list(pos)
        wn = list(neg)
        ip = 0
        jn = 0
        t = 0.0
        steps = 0
        st = DONE
        while True:
            if ip == npos and jn == nneg:
                break
            if stop_outer and (ip == npos or jn == nneg):
                break
            if t >= t_max:
                st = REACHED_T
                break
            if steps >= max_steps:
                st = STEP_CAP
                break
            d2 = INF
            if ip < npos:
                d2 = wp[ip] * wp[ip]
            if jn < nneg and wn[jn] * wn[jn] < d2:
                d2 = wn[jn] * wn[jn]
            h_allowed = eta * d2
            if h_allowed < h_min:
                h_allowed = h_min
            cell = walker.top(level_for(h_allowed))
            h = math.ldexp(1.0, -cell[0])
            four_h = 4.0 * h
            q = ip
            while q < npos:
                w2 = wp[q] * wp[q]
                if w2 <= four_h:
                    taus[s, q] = t + 0.25 * w2
                    q += 1
                else:
                    break
            ip = q
            q = jn
            while q < nneg:
                w2 = wn[q] * wn[q]
                if w2 <= four_h:
                    taus[s, npos + q] = t + 0.25 * w2
                    q += 1
                else:
                    break
            jn = q
            dl = sk * (cell[3] - cell[2])
            for q in range(ip, npos):
                wp[q] = math.sqrt(wp[q] * wp[q] - four_h) - dl
            for q in range(jn, nneg):
                wn[q] = -math.sqrt(wn[q] * wn[q] - four_h) - dl
            t = t + h
            walker.pop()
            steps += 1
            while ip < npos and wp[ip] <= 0.0:
                taus[s, ip] = t
                ip += 1
            while jn < nneg and wn[jn] >= 0.0:
                taus[s, npos + jn] = t
                jn += 1
        steps_out[s] = steps
        status[s] = st
    return taus, steps_out, status


# -------------------------------------------------------------- rho driver --

def _rho_single(kappa, rp, rm, x, y, step, ratio_floor, eps_stop, max_steps, t_stop, seed,
                stream, domain, record):
    """One BSLE(rp, rm) path: exact Loewner steps for the force points plus Euler drift.

    Noise comes from a dyadic tree in an intrinsic clock: a cell of length
    d = 2**-m advances capacity time by h = d*K, where
    K = min(1, 4 max(min(X^2, Y^2), ratio_floor*X|Y|)/L^2), and the driver increment
    is sqrt(kappa*K) times the tree increment. Steps shrink with the distance of the
    nearer force point without deep t-levels, and halving ``step`` refines the same
    tree. The force drift is evaluated after the flow step, which keeps the scheme
    from drifting into the boundary in the critical case kappa = 4.
    """
    src = NormalSource(seed, stream, domain)
    bridge = NormalSource(seed, stream, domain | BRIDGE_BIT)
    walker = Walker(src, 1.0)
    j0 = level_for(step)
    X = x
    Y = y
    lam = 0.0
    t = 0.0
    L = x - y
    scale = 4.0 / (L * L)
    sk = math.sqrt(kappa)
    steps = 0
    st = DONE
    rec = []
    if record:
        rec.append((0.0, 0.0, X, Y))
    while True:
        if X - Y < eps_stop:
            st = DONE
            break
        if steps >= max_steps:
            st = STEP_CAP
            break
        m2 = X * X
        if Y * Y < m2:
            m2 = Y * Y
        if m2 < ratio_floor * (X * -Y):
            m2 = ratio_floor * (X * -Y)
        K = scale * m2
        if K > 1.0:
            K = 1.0
        m, i, bl, br = walker.top(j0)
        d = math.ldexp(1.0, -m)
        h = d * K
        sq = math.sqrt(K)
        partial = t + h > t_stop
        if partial:
            theta = (t_stop - t) / h
            h = t_stop - t
            db = theta * (br - bl) + math.sqrt(theta * (1.0 - theta) * d) * bridge.node(walker.k, (1 << m) + i)
        else:
            db = br - bl
        four_h = 4.0 * h
        if X * X <= four_h or Y * Y <= four_h:
            if not walker.split():
                st = DEPTH_CAP
                break
            continue
        Xf = math.sqrt(X * X - four_h)
        Yf = -math.sqrt(Y * Y - four_h)
        dl = sk * sq * db + (rp / Xf + rm / Yf) * h
        Xn = Xf - dl
        Yn = Yf - dl
        if Xn <= 0.0 or Yn >= 0.0:
            if not walker.split():
                st = DEPTH_CAP
                break
            continue
        X = Xn
        Y = Yn
        lam = lam + dl
        steps += 1
        if partial:
            t = t_stop
            st = REACHED_T
            break
        t = t + h
        walker.pop()
        if record:
            rec.append((t, lam, X, Y))
    return (t, X, Y, lam, steps, st), rec


def rho_lifetimes(kappa, rp, rm, x, y, step, ratio_floor, eps_stop, max_steps, t_stop, seed, streams,
                  domain):
    streams = np.asarray(streams, dtype=np.uint64)
    n = streams.shape[0]
    t_out = np.empty(n)
    x_out = np.empty(n)
    y_out = np.empty(n)
    l_out = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    for s in range(n):
        (t, X, Y, lam, k, st), _ = _rho_single(kappa, rp, rm, x, y, step, ratio_floor, eps_stop,
                                               max_steps, t_stop, seed, int(streams[s]),
                                               domain, False)
        t_out[s] = t
        x_out[s] = X
        y_out[s] = Y
        l_out[s] = lam
        steps[s] = k
        status[s] = st
    return t_out, x_out, y_out, l_out, steps, status


def rho_trace(kappa, rp, rm, x, y, step, ratio_floor, eps_stop, max_steps, seed, stream, domain):
    end, rec = _rho_single(kappa, rp, rm, x, y, step, ratio_floor, eps_stop, max_steps, INF, seed,
                           stream, domain, True)
    arr = np.asarray(rec, dtype=np.float64).reshape(-1, 4)
    return end, tuple(arr[:, c].copy() for c in range(4))


# ------------------------------------------------------------------ bessel --

def _bessel_single(kappa, w0, level, n_steps, threshold, seed, stream, domain, record):
    walker = Walker(NormalSource(seed, stream, domain), 1.0)
    a = 0.5 * (8.0 / kappa - 1.0)
    c = 4.0 / kappa
    dt = math.ldexp(1.0, -level)
    decay = math.exp(-a * dt)
    e = math.exp(-c * dt)
    i0 = (1.0 - e) / c
    i1 = (1.0 - e * (1.0 + c * dt)) / (c * c)
    wb = i1 / dt
    wa = i0 - wb
    pref = 0.25 / kappa
    if w0 > 1.0:
        w0 = 1.0
    if w0 < -1.0:
        w0 = -1.0
    V = math.acos(w0)
    cv = w0
    g = 1.0 - cv * cv
    acc = 0.0
    ew = 1.0
    wmax = 0.0
    decided = -1
    path = [V] if record else None
    k = 0
    while k < n_steps:
        cell = walker.top(level)
        walker.pop()
        vh = V + (cell[3] - cell[2])
        while vh < 0.0 or vh > math.pi:
            if vh < 0.0:
                vh = -vh
            else:
                vh = 2.0 * math.pi - vh
        cv = math.cos(vh) * decay
        V = math.acos(cv)
        gn = 1.0 - cv * cv
        acc = acc + pref * ew * (wa * g + wb * gn)
        ew = ew * e
        g = gn
        k += 1
        acv = abs(cv)
        if acv > wmax:
            wmax = acv
        if record:
            path.append(V)
        if threshold >= 0.0:
            if acc > threshold:
                decided = 0
                break
            if acc + ew * 0.0625 <= threshold:
                decided = 1
                break
    return acc, ew * 0.0625, g, decided, wmax, k, path


def bessel_lifetimes(kappa, w0, level, n_steps, threshold, seed, streams, domain):
    streams = np.asarray(streams, dtype=np.uint64)
    n = streams.shape[0]
    integ = np.empty(n)
    tail = np.empty(n)
    glast = np.empty(n)
    decided = np.empty(n, dtype=np.int64)
    wmax = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    for s in range(n):
        r = _bessel_single(kappa, w0, level, n_steps, threshold, seed, int(streams[s]),
                           domain, False)
        integ[s], tail[s], glast[s], decided[s], wmax[s], steps[s] = r[:6]
    return integ, tail, glast, decided, wmax, steps


def bessel_trace(kappa, w0, level, n_steps, seed, stream, domain):
    r = _bessel_single(kappa, w0, level, n_steps, -1.0, seed, stream, domain, True)
    return np.asarray(r[6], dtype=np.float64)


# -------------------------------------------------------------- martingale --

def bsle_martingale(kappa, rp, rm, x, y, step, marks, cap, seed, streams, domain):
    """Girsanov local martingale along plain BSLE drivers on a uniform grid.

    Returns (M, lam, alive) at each mark (mark = number of steps). M is frozen
    once it reaches ``cap`` and set to 0 once a force point is swallowed.
    """
    marks = [int(v) for v in marks]
    streams = np.asarray(streams, dtype=np.uint64)
    n = streams.shape[0]
    nm = len(marks)
    M_out = np.empty((n, nm))
    l_out = np.empty((n, nm))
    a_out = np.empty((n, nm), dtype=np.int64)
    ea = rp / (-kappa)
    eb = rm / (-kappa)
    ec = rp * rm / (-2.0 * kappa)
    qp = rp * (rp + 4.0 + kappa) / (-4.0 * kappa)
    qm = rm * (rm + 4.0 + kappa) / (-4.0 * kappa)
    four_h = 4.0 * step
    sdl = math.sqrt(kappa * step)
    last = marks[-1] if marks else 0
    for s in range(n):
        src = NormalSource(seed, int(streams[s]), domain)
        X = x
        Y = y
        lfx = 0.0
        lfy = 0.0
        lam = 0.0
        alive = 1
        capped = 0
        M = math.exp(ea * math.log(X) + eb * math.log(-Y) + ec * math.log(X - Y))
        if M >= cap:
            capped = 1
        r = 0
        for k in range(last):
            z = src.node(0, k)
            dl = sdl * z
            if alive and not capped:
                x2 = X * X - four_h
                y2 = Y * Y - four_h
                if x2 <= 0.0 or y2 <= 0.0:
                    alive = 0
                    M = 0.0
                else:
                    xf = math.sqrt(x2)
                    yf = -math.sqrt(y2)
                    lfx = lfx + math.log(X / xf)
                    lfy = lfy + math.log(Y / yf)
                    X = xf - dl
                    Y = yf - dl
                    if X <= 0.0 or Y >= 0.0:
                        alive = 0
                        M = 0.0
                    else:
                        M = math.exp(ea * math.log(X) + eb * math.log(-Y)
                                     + ec * math.log(X - Y) + qp * lfx + qm * lfy)
                        if M >= cap:
                            capped = 1
            lam = lam + dl
            while r < nm and marks[r] == k + 1:
                M_out[s, r] = M
                l_out[s, r] = lam
                a_out[s, r] = alive
                r += 1
        while r < nm:
            M_out[s, r] = M
            l_out[s, r] = lam
            a_out[s, r] = alive
            r += 1
    return M_out, l_out, a_out
