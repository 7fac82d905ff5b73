# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; a line-by-line mirror of ``_pycore``."""

import numpy as np

from libc.math cimport sqrt, log, exp, cos, acos, fabs, ldexp, frexp, INFINITY, M_PI
from libc.stdint cimport uint64_t, int64_t

cdef extern from "_philox.h" nogil:
    void bsle_philox4x64(const uint64_t ctr_in[4], uint64_t k0, uint64_t k1, uint64_t out[4])
    void bsle_normal_pair(uint64_t seed, uint64_t stream, uint64_t domain, uint64_t block,
                          uint64_t pair, double *z_cos, double *z_sin)

cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil

cdef enum:
    MAX_LEVEL = 60
    STACK = 64
    SLOTS = 66

cdef enum:
    DONE = 0
    REACHED_T = 1
    STEP_CAP = 2
    DEPTH_CAP = 3

NAME = "cython"
cdef uint64_t BRIDGE_BIT = (<uint64_t>1) << 32


cdef struct Source:
    uint64_t seed
    uint64_t stream
    uint64_t domain
    uint64_t c_block[SLOTS]
    uint64_t c_pair[SLOTS]
    int c_valid[SLOTS]
    double c_cos[SLOTS]
    double c_sin[SLOTS]


cdef inline void src_init(Source *s, uint64_t seed, uint64_t stream, uint64_t domain) noexcept nogil:
    cdef int q
    s.seed = seed
    s.stream = stream
    s.domain = domain
    for q in range(SLOTS):
        s.c_valid[q] = 0


cdef inline double src_node(Source *s, uint64_t block, uint64_t node) noexcept nogil:
    cdef uint64_t pair = node >> 1
    cdef int slot = 0
    if node:
        slot = 64 - __builtin_clzll(node)
    if not (s.c_valid[slot] and s.c_block[slot] == block and s.c_pair[slot] == pair):
        bsle_normal_pair(s.seed, s.stream, s.domain, block, pair, &s.c_cos[slot], &s.c_sin[slot])
        s.c_valid[slot] = 1
        s.c_block[slot] = block
        s.c_pair[slot] = pair
    if node & 1:
        return s.c_sin[slot]
    return s.c_cos[slot]


cdef struct Walker:
    Source *src
    double h0
    uint64_t k
    double b_base
    int n
    int lev[STACK]
    uint64_t idx[STACK]
    double bl[STACK]
    double br[STACK]


cdef inline void walker_init(Walker *w, Source *src, double h0) noexcept nogil:
    w.src = src
    w.h0 = h0
    w.k = 0
    w.b_base = 0.0
    w.n = 0


cdef inline int walker_split(Walker *w) noexcept nogil:
    cdef int t = w.n - 1
    cdef int m = w.lev[t]
    cdef uint64_t i = w.idx[t]
    cdef double bl = w.bl[t]
    cdef double br = w.br[t]
    cdef double length, mid
    if m >= MAX_LEVEL:
        return 0
    length = ldexp(w.h0, -m)
    mid = 0.5 * (bl + br) + sqrt(0.25 * length) * src_node(w.src, w.k, ((<uint64_t>1) << m) + i)
    w.lev[t] = m + 1
    w.idx[t] = 2 * i + 1
    w.bl[t] = mid
    w.br[t] = br
    w.lev[t + 1] = m + 1
    w.idx[t + 1] = 2 * i
    w.bl[t + 1] = bl
    w.br[t + 1] = mid
    w.n = t + 2
    return 1


cdef inline void walker_top(Walker *w, int j) noexcept nogil:
    if w.n == 0:
        w.lev[0] = 0
        w.idx[0] = 0
        w.bl[0] = w.b_base
        w.br[0] = w.b_base + sqrt(w.h0) * src_node(w.src, w.k, 0)
        w.n = 1
    while w.lev[w.n - 1] < j:
        if not walker_split(w):
            break


cdef inline void walker_pop(Walker *w) noexcept nogil:
    w.n -= 1
    if w.n == 0:
        w.k += 1
        w.b_base = w.br[0]


cdef inline int level_for(double h_allowed) noexcept nogil:
    cdef int e
    cdef int j
    if h_allowed >= 1.0:
        return 0
    if h_allowed <= 0.0:
        return MAX_LEVEL
    frexp(h_allowed, &e)
    j = 1 - e
    if j > MAX_LEVEL:
        return MAX_LEVEL
    return j


cdef inline void csqrt_upper(double a, double b, double *re_out, double *im_out) noexcept nogil:
    cdef double r = sqrt(a * a + b * b)
    cdef double re, im
    if a >= 0.0:
        re = sqrt(0.5 * (r + a))
        if re > 0.0:
            im = b / (2.0 * re)
        else:
            im = 0.0
    else:
        im = sqrt(0.5 * (r - a))
        if b < 0.0:
            im = -im
        re = b / (2.0 * im)
    if im < 0.0:
        re = -re
        im = -im
    re_out[0] = re
    im_out[0] = im


# ------------------------------------------------------------------ rng -----

def philox4x64(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3, uint64_t k0, uint64_t k1):
    cdef uint64_t ctr[4]
    cdef uint64_t out[4]
    ctr[0] = c0
    ctr[1] = c1
    ctr[2] = c2
    ctr[3] = c3
    bsle_philox4x64(ctr, k0, k1, out)
    return int(out[0]), int(out[1]), int(out[2]), int(out[3])


def normal_pair(uint64_t seed, uint64_t stream, uint64_t domain, uint64_t block, uint64_t pair):
    cdef double zc, zs
    bsle_normal_pair(seed, stream, domain, block, pair, &zc, &zs)
    return zc, zs


def sequential_normals(uint64_t seed, uint64_t stream, uint64_t domain, Py_ssize_t n):
    cdef Source src
    cdef Py_ssize_t k
    out = np.empty(n)
    cdef double[::1] o = out
    src_init(&src, seed, stream, domain)
    with nogil:
        for k in range(n):
            o[k] = src_node(&src, 0, <uint64_t>k)
    return out


def tree_values(uint64_t seed, uint64_t stream, uint64_t domain, double h0, int level,
                Py_ssize_t n_cells):
    cdef Source src
    cdef Walker w
    cdef Py_ssize_t c
    out = np.empty(n_cells + 1)
    cdef double[::1] o = out
    src_init(&src, seed, stream, domain)
    walker_init(&w, &src, h0)
    o[0] = 0.0
    with nogil:
        for c in range(n_cells):
            walker_top(&w, level)
            o[c + 1] = w.br[w.n - 1]
            walker_pop(&w)
    return out


# ---------------------------------------------------------------- engine ---

def flow_real(values, double step, Py_ssize_t n_full, double rem, points):
    cdef const double[::1] lamv = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t npt = pts.shape[0]
    cdef Py_ssize_t nv = lamv.shape[0]
    image = np.empty(npt)
    deriv = np.empty(npt)
    tau = np.empty(npt)
    cdef double[::1] im = image
    cdef double[::1] de = deriv
    cdef double[::1] ta_v = tau
    cdef double four_h = 4.0 * step
    cdef double four_r = 4.0 * rem
    cdef Py_ssize_t p, k, n_iter
    cdef double f, side, d, ta, t, lam, w, fh, w2, wn
    cdef int broke
    n_iter = n_full + (1 if rem > 0.0 else 0)
    with nogil:
        for p in range(npt):
            f = pts[p]
            side = 1.0 if f > lamv[0] else -1.0
            d = 1.0
            ta = INFINITY
            t = 0.0
            broke = 0
            for k in range(n_iter):
                lam = lamv[k]
                w = f - lam
                if w * side <= 0.0:
                    ta = t
                    broke = 1
                    break
                fh = four_h if k < n_full else four_r
                w2 = w * w
                if w2 <= fh:
                    ta = t + 0.25 * w2
                    broke = 1
                    break
                wn = sqrt(w2 - fh)
                d = d * (fabs(w) / wn)
                f = lam + side * wn
                t = t + (step if k < n_full else rem)
            if not broke:
                if rem == 0.0 and n_full < nv:
                    if (f - lamv[n_full]) * side <= 0.0:
                        ta = t
            im[p] = f
            de[p] = d
            ta_v[p] = ta
    return image, deriv, tau


def flow_complex(values, double step, Py_ssize_t n_full, double rem, zr, zi):
    cdef const double[::1] lamv = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] ar = np.ascontiguousarray(zr, dtype=np.float64)
    cdef const double[::1] ai = np.ascontiguousarray(zi, dtype=np.float64)
    cdef Py_ssize_t n = ar.shape[0]
    out_r = np.empty(n)
    out_i = np.empty(n)
    cdef double[::1] orv = out_r
    cdef double[::1] oiv = out_i
    cdef double four_h = 4.0 * step
    cdef double four_r = 4.0 * rem
    cdef Py_ssize_t p, k, n_iter
    cdef double a, b, lam, fh, wa, sa, sb, ra, rb
    n_iter = n_full + (1 if rem > 0.0 else 0)
    with nogil:
        for p in range(n):
            a = ar[p]
            b = ai[p]
            for k in range(n_iter):
                lam = lamv[k]
                fh = four_h if k < n_full else four_r
                wa = a - lam
                sa = wa * wa - b * b - fh
                sb = 2.0 * wa * b
                csqrt_upper(sa, sb, &ra, &rb)
                a = lam + ra
                b = rb
            orv[p] = a
            oiv[p] = b
    return out_r, out_i


# ------------------------------------------------------------ occupation ---

def occupation_taus(double kappa, pos, neg, double eta, double h_min, double t_max,
                    int64_t max_steps, uint64_t seed, streams, uint64_t domain, bint stop_outer):
    cdef const double[::1] pos0 = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] neg0 = np.ascontiguousarray(neg, dtype=np.float64)
    cdef const uint64_t[::1] sv = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef Py_ssize_t npos = pos0.shape[0]
    cdef Py_ssize_t nneg = neg0.shape[0]
    cdef Py_ssize_t n = sv.shape[0]
    taus_a = np.full((n, npos + nneg), np.inf)
    steps_a = np.zeros(n, dtype=np.int64)
    status_a = np.zeros(n, dtype=np.int64)
    wp_a = np.empty(max(npos, 1))
    wn_a = np.empty(max(nneg, 1))
    cdef double[:, ::1] taus = taus_a
    cdef int64_t[::1] steps_v = steps_a
    cdef int64_t[::1] status_v = status_a
    cdef double[::1] wp = wp_a
    cdef double[::1] wn = wn_a
    cdef double sk = sqrt(kappa)
    cdef Source src
    cdef Walker w
    cdef Py_ssize_t s, q, ip, jn
    cdef int64_t steps
    cdef int st, top
    cdef double t, d2, h_allowed, h, four_h, w2, dl
    with nogil:
        for s in range(n):
            src_init(&src, seed, sv[s], domain)
            walker_init(&w, &src, 1.0)
            for q in range(npos):
                wp[q] = pos0[q]
            for q in range(nneg):
                wn[q] = neg0[q]
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
                d2 = INFINITY
                if ip < npos:
                    d2 = wp[ip] * wp[ip]
                if jn < nneg and wn[jn] * wn[jn] < d2:
                    d2 = wn[jn] * wn[jn]
                h_allowed = eta * d2
                if h_allowed < h_min:
                    h_allowed = h_min
                walker_top(&w, level_for(h_allowed))
                top = w.n - 1
                h = ldexp(1.0, -w.lev[top])
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
                dl = sk * (w.br[top] - w.bl[top])
                for q in range(ip, npos):
                    wp[q] = sqrt(wp[q] * wp[q] - four_h) - dl
                for q in range(jn, nneg):
                    wn[q] = -sqrt(wn[q] * wn[q] - four_h) - dl
                t = t + h
                walker_pop(&w)
                steps += 1
                while ip < npos and wp[ip] <= 0.0:
                    taus[s, ip] = t
                    ip += 1
                while jn < nneg and wn[jn] >= 0.0:
                    taus[s, npos + jn] = t
                    jn += 1
            steps_v[s] = steps
            status_v[s] = st
    return taus_a, steps_a, status_a


# -------------------------------------------------------------- rho driver --

cdef struct RhoState:
    double t
    double X
    double Y
    double lam
    int64_t steps
    int status


cdef int rho_run(double kappa, double rp, double rm, double x, double y, double step,
                 double ratio_floor,
                 double eps_stop, int64_t max_steps, double t_stop, uint64_t seed,
                 uint64_t stream, uint64_t domain, int record,
                 double *rec, Py_ssize_t rec_cap, Py_ssize_t *n_rec, RhoState *out) noexcept nogil:
    cdef Source src
    cdef Source bridge
    cdef Walker w
    cdef int j0 = level_for(step)
    cdef double X = x
    cdef double Y = y
    cdef double lam = 0.0
    cdef double t = 0.0
    cdef double L = x - y
    cdef double scale = 4.0 / (L * L)
    cdef double sk = sqrt(kappa)
    cdef int64_t steps = 0
    cdef int st = DONE
    cdef double m2, K, d, h, sq, theta, db, four_h, Xf, Yf, dl, Xn, Yn, bl, br
    cdef int m, top, partial
    cdef uint64_t i
    cdef Py_ssize_t nr = 0
    src_init(&src, seed, stream, domain)
    src_init(&bridge, seed, stream, domain | BRIDGE_BIT)
    walker_init(&w, &src, 1.0)
    if record:
        if nr < rec_cap:
            rec[0] = 0.0
            rec[1] = 0.0
            rec[2] = X
            rec[3] = Y
        nr += 1
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
        walker_top(&w, j0)
        top = w.n - 1
        m = w.lev[top]
        i = w.idx[top]
        bl = w.bl[top]
        br = w.br[top]
        d = ldexp(1.0, -m)
        h = d * K
        sq = sqrt(K)
        partial = t + h > t_stop
        if partial:
            theta = (t_stop - t) / h
            h = t_stop - t
            db = theta * (br - bl) + sqrt(theta * (1.0 - theta) * d) * src_node(&bridge, w.k, ((<uint64_t>1) << m) + i)
        else:
            db = br - bl
        four_h = 4.0 * h
        if X * X <= four_h or Y * Y <= four_h:
            if not walker_split(&w):
                st = DEPTH_CAP
                break
            continue
        Xf = sqrt(X * X - four_h)
        Yf = -sqrt(Y * Y - four_h)
        dl = sk * sq * db + (rp / Xf + rm / Yf) * h
        Xn = Xf - dl
        Yn = Yf - dl
        if Xn <= 0.0 or Yn >= 0.0:
            if not walker_split(&w):
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
        walker_pop(&w)
        if record:
            if nr < rec_cap:
                rec[4 * nr] = t
                rec[4 * nr + 1] = lam
                rec[4 * nr + 2] = X
                rec[4 * nr + 3] = Y
            nr += 1
    out.t = t
    out.X = X
    out.Y = Y
    out.lam = lam
    out.steps = steps
    out.status = st
    n_rec[0] = nr
    return 0


def rho_lifetimes(double kappa, double rp, double rm, double x, double y, double step,
                  double ratio_floor,
                  double eps_stop, int64_t max_steps, double t_stop, uint64_t seed, streams,
                  uint64_t domain):
    cdef const uint64_t[::1] sv = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef Py_ssize_t n = sv.shape[0]
    t_a = np.empty(n)
    x_a = np.empty(n)
    y_a = np.empty(n)
    l_a = np.empty(n)
    k_a = np.empty(n, dtype=np.int64)
    s_a = np.empty(n, dtype=np.int64)
    cdef double[::1] tv = t_a
    cdef double[::1] xv = x_a
    cdef double[::1] yv = y_a
    cdef double[::1] lv = l_a
    cdef int64_t[::1] kv = k_a
    cdef int64_t[::1] stv = s_a
    cdef RhoState res
    cdef Py_ssize_t s, nr
    with nogil:
        for s in range(n):
            rho_run(kappa, rp, rm, x, y, step, ratio_floor, eps_stop, max_steps, t_stop, seed, sv[s],
                    domain, 0, NULL, 0, &nr, &res)
            tv[s] = res.t
            xv[s] = res.X
            yv[s] = res.Y
            lv[s] = res.lam
            kv[s] = res.steps
            stv[s] = res.status
    return t_a, x_a, y_a, l_a, k_a, s_a


def rho_trace(double kappa, double rp, double rm, double x, double y, double step,
              double ratio_floor,
              double eps_stop, int64_t max_steps, uint64_t seed, uint64_t stream,
              uint64_t domain):
    cdef RhoState res
    cdef Py_ssize_t nr = 0
    cdef Py_ssize_t cap = 1024
    cdef double[::1] buf
    while True:
        buf_a = np.empty(4 * cap)
        buf = buf_a
        with nogil:
            rho_run(kappa, rp, rm, x, y, step, ratio_floor, eps_stop, max_steps, INFINITY, seed, stream,
                    domain, 1, &buf[0], cap, &nr, &res)
        if nr <= cap:
            break
        cap = nr
    rec = buf_a[:4 * nr].reshape(nr, 4)
    end = (res.t, res.X, res.Y, res.lam, int(res.steps), int(res.status))
    return end, (rec[:, 0].copy(), rec[:, 1].copy(), rec[:, 2].copy(), rec[:, 3].copy())


# ------------------------------------------------------------------ bessel --

cdef struct BesselOut:
    double acc
    double tail
    double g
    int decided
    double wmax
    int64_t steps


cdef void bessel_run(double kappa, double w0, int level, int64_t n_steps, double threshold,
                     uint64_t seed, uint64_t stream, uint64_t domain, double *path,
                     BesselOut *out) noexcept nogil:
    cdef Source src
    cdef Walker w
    cdef double a = 0.5 * (8.0 / kappa - 1.0)
    cdef double c = 4.0 / kappa
    cdef double dt = ldexp(1.0, -level)
    cdef double decay = exp(-a * dt)
    cdef double e = exp(-c * dt)
    cdef double i0 = (1.0 - e) / c
    cdef double i1 = (1.0 - e * (1.0 + c * dt)) / (c * c)
    cdef double wb = i1 / dt
    cdef double wa = i0 - wb
    cdef double pref = 0.25 / kappa
    cdef double V, cv, g, gn, acc, ew, wmax, vh, acv
    cdef int decided = -1
    cdef int64_t k = 0
    cdef int top
    src_init(&src, seed, stream, domain)
    walker_init(&w, &src, 1.0)
    if w0 > 1.0:
        w0 = 1.0
    if w0 < -1.0:
        w0 = -1.0
    V = acos(w0)
    cv = w0
    g = 1.0 - cv * cv
    acc = 0.0
    ew = 1.0
    wmax = 0.0
    if path != NULL:
        path[0] = V
    while k < n_steps:
        walker_top(&w, level)
        top = w.n - 1
        vh = V + (w.br[top] - w.bl[top])
        walker_pop(&w)
        while vh < 0.0 or vh > M_PI:
            if vh < 0.0:
                vh = -vh
            else:
                vh = 2.0 * M_PI - vh
        cv = cos(vh) * decay
        V = acos(cv)
        gn = 1.0 - cv * cv
        acc = acc + pref * ew * (wa * g + wb * gn)
        ew = ew * e
        g = gn
        k += 1
        acv = fabs(cv)
        if acv > wmax:
            wmax = acv
        if path != NULL:
            path[k] = V
        if threshold >= 0.0:
            if acc > threshold:
                decided = 0
                break
            if acc + ew * 0.0625 <= threshold:
                decided = 1
                break
    out.acc = acc
    out.tail = ew * 0.0625
    out.g = g
    out.decided = decided
    out.wmax = wmax
    out.steps = k


def bessel_lifetimes(double kappa, double w0, int level, int64_t n_steps, double threshold,
                     uint64_t seed, streams, uint64_t domain):
    cdef const uint64_t[::1] sv = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef Py_ssize_t n = sv.shape[0]
    integ_a = np.empty(n)
    tail_a = np.empty(n)
    g_a = np.empty(n)
    dec_a = np.empty(n, dtype=np.int64)
    wm_a = np.empty(n)
    st_a = np.empty(n, dtype=np.int64)
    cdef double[::1] iv = integ_a
    cdef double[::1] tv = tail_a
    cdef double[::1] gv = g_a
    cdef int64_t[::1] dv = dec_a
    cdef double[::1] wv = wm_a
    cdef int64_t[::1] sv2 = st_a
    cdef BesselOut res
    cdef Py_ssize_t s
    with nogil:
        for s in range(n):
            bessel_run(kappa, w0, level, n_steps, threshold, seed, sv[s], domain, NULL, &res)
            iv[s] = res.acc
            tv[s] = res.tail
            gv[s] = res.g
            dv[s] = res.decided
            wv[s] = res.wmax
            sv2[s] = res.steps
    return integ_a, tail_a, g_a, dec_a, wm_a, st_a


def bessel_trace(double kappa, double w0, int level, int64_t n_steps, uint64_t seed,
                 uint64_t stream, uint64_t domain):
    path_a = np.empty(n_steps + 1)
    cdef double[::1] pv = path_a
    cdef BesselOut res
    with nogil:
        bessel_run(kappa, w0, level, n_steps, -1.0, seed, stream, domain, &pv[0], &res)
    return path_a


# -------------------------------------------------------------- martingale --

def bsle_martingale(double kappa, double rp, double rm, double x, double y, double step,
                    marks, double cap, uint64_t seed, streams, uint64_t domain):
    cdef const int64_t[::1] mk = np.ascontiguousarray(marks, dtype=np.int64)
    cdef const uint64_t[::1] sv = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef Py_ssize_t n = sv.shape[0]
    cdef Py_ssize_t nm = mk.shape[0]
    M_a = np.empty((n, nm))
    l_a = np.empty((n, nm))
    a_a = np.empty((n, nm), dtype=np.int64)
    cdef double[:, ::1] Mv = M_a
    cdef double[:, ::1] lv = l_a
    cdef int64_t[:, ::1] av = a_a
    cdef double ea = rp / (-kappa)
    cdef double eb = rm / (-kappa)
    cdef double ec = rp * rm / (-2.0 * kappa)
    cdef double qp = rp * (rp + 4.0 + kappa) / (-4.0 * kappa)
    cdef double qm = rm * (rm + 4.0 + kappa) / (-4.0 * kappa)
    cdef double four_h = 4.0 * step
    cdef double sdl = sqrt(kappa * step)
    cdef int64_t last = mk[nm - 1] if nm > 0 else 0
    cdef Source src
    cdef Py_ssize_t s, r
    cdef int64_t k
    cdef double X, Y, lfx, lfy, lam, M, z, dl, x2, y2, xf, yf
    cdef int alive, capped
    with nogil:
        for s in range(n):
            src_init(&src, seed, sv[s], domain)
            X = x
            Y = y
            lfx = 0.0
            lfy = 0.0
            lam = 0.0
            alive = 1
            capped = 0
            M = exp(ea * log(X) + eb * log(-Y) + ec * log(X - Y))
            if M >= cap:
                capped = 1
            r = 0
            for k in range(last):
                z = src_node(&src, 0, <uint64_t>k)
                dl = sdl * z
                if alive and not capped:
                    x2 = X * X - four_h
                    y2 = Y * Y - four_h
                    if x2 <= 0.0 or y2 <= 0.0:
                        alive = 0
                        M = 0.0
                    else:
                        xf = sqrt(x2)
                        yf = -sqrt(y2)
                        lfx = lfx + log(X / xf)
                        lfy = lfy + log(Y / yf)
                        X = xf - dl
                        Y = yf - dl
                        if X <= 0.0 or Y >= 0.0:
                            alive = 0
                            M = 0.0
                        else:
                            M = exp(ea * log(X) + eb * log(-Y)
                                    + ec * log(X - Y) + qp * lfx + qm * lfy)
                            if M >= cap:
                                capped = 1
                lam = lam + dl
                while r < nm and mk[r] == k + 1:
                    Mv[s, r] = M
                    lv[s, r] = lam
                    av[s, r] = alive
                    r += 1
            while r < nm:
                Mv[s, r] = M
                lv[s, r] = lam
                av[s, r] = alive
                r += 1
    return M_a, l_a, a_a
