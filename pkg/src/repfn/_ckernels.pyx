# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: tuple enumeration, weighted tuple sums, pair correlations.

Semantics and output order match ``repfn._pykernels`` exactly.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    MAXLEN = 16


cdef long long _gcd(long long a, long long b) nogil:
    while b:
        a, b = b, a % b
    return a


cdef struct Walk:
    int ell
    long long *b
    long long *caps
    long long *sg
    const unsigned char *member
    bint use_member
    long long k[MAXLEN]
    # output
    long long count
    long long *out
    bint fill
    # weighted sums (Neumaier)
    const double *p
    bint weigh
    long long threshold
    double tot, tot_c, sml, sml_c, ext, ext_c


cdef inline void _neu(double *s, double *c, double x) nogil:
    cdef double t = s[0] + x
    if abs(s[0]) >= abs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


cdef void _leaf(Walk *w) nogil:
    cdef int i, j, ell = w.ell
    cdef bint fresh, exact = True
    cdef double prod = 1.0
    cdef long long mn
    if w.fill:
        for i in range(ell):
            w.out[w.count * ell + i] = w.k[i]
    w.count += 1
    if w.weigh:
        mn = w.k[0]
        for j in range(ell):
            if w.k[j] < mn:
                mn = w.k[j]
            fresh = True
            for i in range(j):
                if w.k[i] == w.k[j]:
                    fresh = False
                    break
            if fresh:
                prod *= w.p[w.k[j]]
            else:
                exact = False
        _neu(&w.tot, &w.tot_c, prod)
        if mn < w.threshold:
            _neu(&w.sml, &w.sml_c, prod)
        if exact:
            _neu(&w.ext, &w.ext_c, prod)


cdef void _rec(Walk *w, int i, long long rem) nogil:
    cdef long long b = w.b[i], kk, hi, last
    if i == w.ell - 1:
        if rem % b:
            return
        last = rem // b
        if last > w.caps[i]:
            return
        if w.use_member and not w.member[last]:
            return
        w.k[i] = last
        _leaf(w)
        return
    hi = rem // b
    if w.caps[i] < hi:
        hi = w.caps[i]
    kk = 0
    while kk <= hi:
        if (not w.use_member or w.member[kk]) and (rem - b * kk) % w.sg[i + 1] == 0:
            w.k[i] = kk
            _rec(w, i + 1, rem - b * kk)
        kk += 1


cdef void _setup(Walk *w, long long[::1] b, long long[::1] caps, long long[::1] sg,
                 const unsigned char[::1] member, bint use_member):
    w.ell = b.shape[0]
    w.b = &b[0]
    w.caps = &caps[0]
    w.sg = &sg[0]
    w.use_member = use_member
    w.member = &member[0] if use_member else NULL
    w.count = 0
    w.fill = False
    w.out = NULL
    w.weigh = False
    w.p = NULL
    w.threshold = 0
    w.tot = w.tot_c = w.sml = w.sml_c = w.ext = w.ext_c = 0.0


def _prepare(coeffs, n, caps):
    b = np.ascontiguousarray(coeffs, dtype=np.int64)
    ell = b.shape[0]
    if ell > MAXLEN:
        raise ValueError("equation too long for the compiled kernel")
    if caps is None:
        caps_a = np.array([n // int(x) for x in b], dtype=np.int64)
    else:
        caps_a = np.ascontiguousarray(caps, dtype=np.int64)
    sg = np.zeros(ell + 1, dtype=np.int64)
    for i in range(ell - 1, -1, -1):
        sg[i] = _gcd(sg[i + 1], b[i])
    return b, caps_a, sg


def enumerate_tuples(coeffs, long long n, member=None, caps=None):
    cdef Walk w
    b, caps_a, sg = _prepare(coeffs, n, caps)
    cdef const unsigned char[::1] mem
    dummy = np.ones(1, dtype=np.uint8)
    use_member = member is not None
    mem = np.ascontiguousarray(member, dtype=np.uint8) if use_member else dummy
    cdef long long[::1] bv = b, cv = caps_a, sv = sg
    _setup(&w, bv, cv, sv, mem, use_member)
    if n % sg[0] == 0:
        with nogil:
            _rec(&w, 0, n)
    out = np.empty((w.count, bv.shape[0]), dtype=np.int64)
    cdef long long[:, ::1] ov = out
    if w.count == 0:
        return out
    _setup(&w, bv, cv, sv, mem, use_member)
    w.fill = True
    w.out = &ov[0, 0]
    with nogil:
        _rec(&w, 0, n)
    return out


def tuple_weight_sums(coeffs, long long n, p, long long threshold):
    cdef Walk w
    b, caps_a, sg = _prepare(coeffs, n, None)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    if pv.shape[0] < n + 1:
        raise ValueError("probability array shorter than n + 1")
    dummy = np.ones(1, dtype=np.uint8)
    cdef const unsigned char[::1] mem = dummy
    cdef long long[::1] bv = b, cv = caps_a, sv = sg
    _setup(&w, bv, cv, sv, mem, False)
    w.weigh = True
    w.p = &pv[0]
    w.threshold = threshold
    if n % sg[0] == 0:
        with nogil:
            _rec(&w, 0, n)
    return w.tot + w.tot_c, w.sml + w.sml_c, w.ext + w.ext_c


cdef double _union(const long long *R, const long long *S, int ell, const double *p) nogil:
    cdef long long vals[2 * MAXLEN]
    cdef int m = 0, i, j
    cdef long long v
    cdef bint seen
    cdef double prod = 1.0
    for i in range(2 * ell):
        v = R[i] if i < ell else S[i - ell]
        seen = False
        for j in range(m):
            if vals[j] == v:
                seen = True
                break
        if not seen:
            vals[m] = v
            m += 1
            prod *= p[v]
    return prod


def _index(long long[:, ::1] sols, long long nv):
    """CSR map value -> solution rows containing it (each row listed once per value)."""
    cdef Py_ssize_t r, i, j, ell = sols.shape[1]
    cdef long long v
    cdef bint dup
    starts = np.zeros(nv + 1, dtype=np.int64)
    cdef long long[::1] st = starts
    for r in range(sols.shape[0]):
        for i in range(ell):
            v = sols[r, i]
            dup = False
            for j in range(i):
                if sols[r, j] == v:
                    dup = True
                    break
            if not dup:
                st[v + 1] += 1
    for i in range(nv):
        st[i + 1] += st[i]
    rows = np.empty(st[nv], dtype=np.int64)
    cdef long long[::1] rw = rows
    fillp = starts[:-1].copy()
    cdef long long[::1] fp = fillp
    for r in range(sols.shape[0]):
        for i in range(ell):
            v = sols[r, i]
            dup = False
            for j in range(i):
                if sols[r, j] == v:
                    dup = True
                    break
            if not dup:
                rw[fp[v]] = r
                fp[v] += 1
    return starts, rows


cdef double _pair_sum(long long[:, ::1] A, long long[:, ::1] B, long long[::1] st,
                      long long[::1] rows, const double[::1] p, bint same):
    cdef Py_ssize_t i, j, t, ell = A.shape[1]
    cdef long long v, s
    cdef double tot = 0.0, cc = 0.0
    stamp_arr = np.zeros(B.shape[0], dtype=np.int64)
    cdef long long[::1] stamp = stamp_arr
    cdef long long nv = st.shape[0] - 1
    for i in range(A.shape[0]):
        for j in range(ell):
            v = A[i, j]
            if v >= nv:
                continue
            for t in range(st[v], st[v + 1]):
                s = rows[t]
                if same and s == i:
                    continue
                if stamp[s] == i + 1:
                    continue
                stamp[s] = i + 1
                _neu(&tot, &cc, _union(&A[i, 0], &B[s, 0], <int>ell, &p[0]))
    return tot + cc


def delta_sums(sols_n, sols_m, p):
    cdef long long[:, ::1] A = np.ascontiguousarray(sols_n, dtype=np.int64)
    cdef long long[:, ::1] B = np.ascontiguousarray(sols_m, dtype=np.int64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    if A.shape[1] > MAXLEN:
        raise ValueError("solutions too long for the compiled kernel")
    nv = pv.shape[0]
    st_a, rows_a = _index(A, nv)
    st_b, rows_b = _index(B, nv)
    wn = _pair_sum(A, A, st_a, rows_a, pv, True) if A.shape[0] else 0.0
    cross = _pair_sum(A, B, st_b, rows_b, pv, False) if A.shape[0] and B.shape[0] else 0.0
    wm = _pair_sum(B, B, st_b, rows_b, pv, True) if B.shape[0] else 0.0
    return wn, cross, wm
