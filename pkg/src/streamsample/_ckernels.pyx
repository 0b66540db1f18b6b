# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_pykernels``: same algorithms, same variate order."""

from cpython.array cimport array, resize_smart
from cpython.object cimport PyObject
from cpython.ref cimport Py_DECREF
from libc.math cimport ceil, exp, expm1, log, log1p, INFINITY
from libc.stdint cimport uint64_t, int64_t

from .errors import InvalidWeightError, TruncatedStreamError
from .rng import seed_state

BACKEND = "cython"
SKIP_CAP = 1 << 62

cdef int64_t _SKIP_CAP = 1LL << 62
cdef double _DSKIP_CAP = <double>(1LL << 62)
cdef double _INV53 = 1.0 / 9007199254740992.0
cdef object _END = object()

cdef extern from "Python.h":
    # NULL with no error set means the iterator is exhausted
    PyObject* PyIter_Next(object o) except? NULL


cdef inline object _next_or_end(object it):
    # next(it, _END) without the builtin call; propagates iterator errors
    cdef PyObject* p = PyIter_Next(it)
    if p == NULL:
        return _END
    item = <object>p
    Py_DECREF(item)
    return item

cdef extern from *:
    """
    static inline uint64_t ss_mul128(uint64_t a, uint64_t b, uint64_t *lo) {
        unsigned __int128 m = (unsigned __int128)a * b;
        *lo = (uint64_t)m;
        return (uint64_t)(m >> 64);
    }
    """
    uint64_t ss_mul128(uint64_t a, uint64_t b, uint64_t *lo) nogil


cdef inline uint64_t _rotl(uint64_t x, int r) nogil:
    return (x << r) | (x >> (64 - r))


cdef class CRng:
    """xoshiro256** with a draw counter (compiled)."""

    cdef uint64_t s0, s1, s2, s3
    cdef public object seed
    cdef public long long draws

    def __init__(self, seed=0):
        self.seed = seed
        self.s0, self.s1, self.s2, self.s3 = seed_state(seed)
        self.draws = 0

    def __repr__(self):
        return f"CRng(seed={self.seed}, draws={self.draws})"

    cdef inline uint64_t _next(self) nogil:
        cdef uint64_t result = _rotl(self.s1 * 5, 7) * 9
        cdef uint64_t t = self.s1 << 17
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        self.draws += 1
        return result

    cdef inline double _u01(self) nogil:
        return (<double>(self._next() >> 11) + 0.5) * _INV53

    cdef inline uint64_t _below(self, uint64_t n) nogil:
        cdef uint64_t lo, t
        cdef uint64_t hi = ss_mul128(self._next(), n, &lo)
        if lo < n:
            t = (0 - n) % n
            while lo < t:
                hi = ss_mul128(self._next(), n, &lo)
        return hi

    def next_u64(self):
        return self._next()

    def uniform01(self):
        """Uniform variate on the open interval (0, 1)."""
        return self._u01()

    def randbelow(self, n):
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        return self._below(n)

    def getstate(self):
        return (self.s0, self.s1, self.s2, self.s3, self.draws)

    def setstate(self, state):
        self.s0, self.s1, self.s2, self.s3, self.draws = state


cpdef double check_weight(object w) except? -1.0:
    cdef double x = float(w)
    if not (0.0 < x < INFINITY):
        raise InvalidWeightError(f"weight must be positive and finite, got {x!r}")
    return x


cdef int64_t _consume(object it, int64_t s) except -1:
    cdef int64_t taken = 0
    cdef PyObject* p
    while taken < s:
        p = PyIter_Next(it)
        if p == NULL:
            break
        Py_DECREF(<object>p)
        taken += 1
    return taken


def consume(it, int64_t s):
    """Advance ``it`` by up to ``s`` items; return how many were taken."""
    return _consume(iter(it), s)


cdef inline int64_t _capped(double x):
    if x >= _DSKIP_CAP:
        return _SKIP_CAP
    return <int64_t>x


cdef int64_t _geometric_skip(CRng rng, double p):
    cdef double lq = log1p(-p)
    if lq == 0.0:
        return _SKIP_CAP
    return _capped(log(rng._u01()) / lq)


def geometric_skip(CRng rng, double p):
    return _geometric_skip(rng, p)


cdef void _replace_slots(list buf, Py_ssize_t k, double p, object item, CRng rng) except *:
    cdef Py_ssize_t j
    cdef double lq, at_least_one, first, g
    if p >= 1.0:
        for j in range(k):
            buf[j] = item
        return
    lq = log1p(-p)
    at_least_one = -expm1(k * lq)
    first = ceil(log1p(-rng._u01() * at_least_one) / lq)
    if first < 1.0:
        first = 1.0
    if first > k:
        first = <double>k
    j = <Py_ssize_t>first - 1
    buf[j] = item
    j += 1
    while j < k:
        g = log(rng._u01()) / lq
        if g >= k - j:
            break
        j += <Py_ssize_t>g
        buf[j] = item
        j += 1


def replace_slots(list buf, Py_ssize_t k, double p, item, CRng rng):
    _replace_slots(buf, k, p, item, rng)


# -- unweighted reservoirs ------------------------------------------------

def fit_r(st, it):
    cdef list buf = st.buffer
    cdef int64_t k = st.k
    cdef CRng rng = st.rng
    cdef int64_t n = st.n_seen
    cdef uint64_t j
    try:
        for item in it:
            n += 1
            if n <= k:
                buf.append(item)
            else:
                j = rng._below(<uint64_t>n)
                if j < <uint64_t>k:
                    buf[j] = item
    finally:
        st.n_seen = n


def fit_l(st, it):
    cdef list buf = st.buffer
    cdef int64_t k = st.k
    cdef CRng rng = st.rng
    cdef int64_t n = st.n_seen
    cdef int64_t skip = st.skip
    cdef double w = st.aux_w
    cdef int64_t taken
    it = iter(it)
    try:
        while True:
            if skip > 0 and n >= k:
                taken = _consume(it, skip)
                n += taken
                skip -= taken
                if skip > 0:
                    break
            item = _next_or_end(it)
            if item is _END:
                break
            n += 1
            if n <= k:
                buf.append(item)
                if n == k:
                    w = exp(log(rng._u01()) / k)
                    skip = _geometric_skip(rng, w)
            else:
                buf[rng._below(<uint64_t>k)] = item
                w *= exp(log(rng._u01()) / k)
                skip = _geometric_skip(rng, w)
    finally:
        st.n_seen, st.skip, st.aux_w = n, skip, w


cdef inline int64_t _rswr_skip(CRng rng, int64_t n, int64_t k):
    return _capped(n * expm1(-log(rng._u01()) / k))


def rswr_skip(CRng rng, n, k):
    return _rswr_skip(rng, n, k)


def fit_rswr(st, it):
    cdef list buf = st.buffer
    cdef int64_t k = st.k
    cdef CRng rng = st.rng
    cdef int64_t n = st.n_seen
    cdef int64_t skip = st.skip
    cdef int64_t taken
    it = iter(it)
    try:
        while True:
            if skip > 0:
                taken = _consume(it, skip)
                n += taken
                skip -= taken
                if skip > 0:
                    break
            item = _next_or_end(it)
            if item is _END:
                break
            n += 1
            if n == 1:
                buf.extend([item] * k)
            else:
                _replace_slots(buf, k, 1.0 / n, item, rng)
            skip = _rswr_skip(rng, n, k)
    finally:
        st.n_seen, st.skip = n, skip


# -- weighted reservoirs --------------------------------------------------

cdef inline void _heap_push(double* keys, list items, double key, object item):
    cdef Py_ssize_t i = len(items)
    cdef Py_ssize_t parent
    items.append(item)
    while i > 0:
        parent = (i - 1) >> 1
        if keys[parent] <= key:
            break
        keys[i] = keys[parent]
        items[i] = items[parent]
        i = parent
    keys[i] = key
    items[i] = item


cdef inline void _heap_replace_min(double* keys, list items, double key, object item):
    cdef Py_ssize_t size = len(items)
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t c
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and keys[c + 1] < keys[c]:
            c += 1
        if keys[c] >= key:
            break
        keys[i] = keys[c]
        items[i] = items[c]
        i = c
    keys[i] = key
    items[i] = item


cdef double* _key_ptr(st, Py_ssize_t k) except NULL:
    cdef array keys = st.keys
    if len(keys) < k:
        raise ValueError("key array shorter than the capacity")
    return keys.data.as_doubles


def heap_push(array keys, list items, double key, item):
    _heap_push(keys.data.as_doubles, items, key, item)


def heap_replace_min(array keys, list items, double key, item):
    _heap_replace_min(keys.data.as_doubles, items, key, item)


def fit_ares(st, it):
    cdef list items = st.buffer
    cdef Py_ssize_t k = st.k
    cdef double* keys = _key_ptr(st, k)
    cdef CRng rng = st.rng
    cdef int64_t n = st.n_seen
    cdef double total = st.w_seen
    cdef double w, lk
    try:
        for item, wo in it:
            w = check_weight(wo)
            n += 1
            total += w
            lk = log(rng._u01()) / w
            if len(items) < k:
                _heap_push(keys, items, lk, item)
            elif lk > keys[0]:
                _heap_replace_min(keys, items, lk, item)
    finally:
        st.n_seen, st.w_seen = n, total


cdef inline double _expj_jump(CRng rng, double log_min_key):
    if log_min_key >= 0.0:
        return INFINITY
    return log(rng._u01()) / log_min_key


def expj_jump(CRng rng, double log_min_key):
    return _expj_jump(rng, log_min_key)


def fit_aexpj(st, it):
    cdef list items = st.buffer
    cdef Py_ssize_t k = st.k
    cdef double* keys = _key_ptr(st, k)
    cdef CRng rng = st.rng
    cdef int64_t n = st.n_seen
    cdef double total = st.w_seen
    cdef double skip = st.skip
    cdef double w, lk
    try:
        for item, wo in it:
            w = check_weight(wo)
            n += 1
            total += w
            if len(items) < k:
                _heap_push(keys, items, log(rng._u01()) / w, item)
                if len(items) == k:
                    skip = _expj_jump(rng, keys[0])
                continue
            skip -= w
            if skip <= 0.0:
                lk = log1p((1.0 - rng._u01()) * expm1(w * keys[0])) / w
                _heap_replace_min(keys, items, lk, item)
                skip = _expj_jump(rng, keys[0])
    finally:
        st.n_seen, st.w_seen, st.skip = n, total, skip


cdef inline double _wrswr_target(CRng rng, double total, int64_t k):
    return total * exp(-log(rng._u01()) / k)


def wrswr_target(CRng rng, double total, k):
    return _wrswr_target(rng, total, k)


def fit_wrswr(st, it):
    cdef list buf = st.buffer
    cdef int64_t k = st.k
    cdef CRng rng = st.rng
    cdef int64_t n = st.n_seen
    cdef double total = st.w_seen
    cdef double target = st.skip
    cdef double w
    try:
        for item, wo in it:
            w = check_weight(wo)
            n += 1
            total += w
            if n == 1:
                buf.extend([item] * k)
                target = _wrswr_target(rng, total, k)
            elif total >= target:
                _replace_slots(buf, k, w / total, item, rng)
                target = _wrswr_target(rng, total, k)
    finally:
        st.n_seen, st.w_seen, st.skip = n, total, target


# -- sequential helpers ---------------------------------------------------

cdef int64_t _skip_method_a(int64_t k, int64_t n, CRng rng):
    cdef double v = rng._u01()
    cdef int64_t s = 0
    cdef int64_t top = n - k
    cdef double quot = <double>top / <double>n
    while quot > v:
        s += 1
        top -= 1
        n -= 1
        quot *= <double>top / <double>n
    return s


cdef int64_t _skip_method_d(int64_t k, int64_t n, CRng rng):
    cdef int64_t qu1 = n - k + 1
    cdef double kmin1inv = 1.0 / (k - 1)
    cdef double x, y1, y2
    cdef int64_t s, t, j
    cdef double dn = <double>n
    while True:
        while True:
            x = dn * (1.0 - exp(log(rng._u01()) / k))
            s = <int64_t>x
            if s < qu1:
                break
        y1 = exp(log(rng._u01() * dn / <double>qu1) * kmin1inv)
        if y1 * (1.0 - x / dn) * (<double>qu1 / <double>(qu1 - s)) <= 1.0:
            return s
        y2 = 1.0
        if k - 1 > s:
            for t in range(s):
                y2 *= <double>(n - 1 - t) / <double>(n - k - t)
        else:
            for j in range(1, k):
                y2 *= <double>(n - j) / <double>(n - s - j)
        if dn / (dn - x) >= y1 * exp(log(y2) * kmin1inv):
            return s


cdef int64_t _skip_wor(int64_t k, int64_t n, CRng rng):
    if k >= n:
        return 0
    if k == 1:
        return <int64_t>rng._below(<uint64_t>n)
    if 13 * k >= n:
        return _skip_method_a(k, n, rng)
    return _skip_method_d(k, n, rng)


def skip_wor(int64_t k, int64_t n, CRng rng):
    """Elements passed over before the next member of a uniform k-subset of n."""
    return _skip_wor(k, n, rng)


def walk_weight(it, double acc, double target):
    cdef int64_t taken = 0
    item = None
    for item, wo in it:
        acc += check_weight(wo)
        taken += 1
        if acc >= target:
            return True, item, acc, taken
    return False, item, acc, taken


cdef class SeqState:
    """O(1) state of a sequential sampler, advanced by the ``step_*`` kernels."""

    cdef public object stream, cur
    cdef CRng _rng
    cdef public int64_t k, k_remaining, total_n, n_remaining, n_consumed, position
    cdef public int64_t draws_left, pending, cur_mult, cur_pos
    cdef public double c, total_w, acc, slack
    cdef public bint tail, has_cur

    def __init__(self, stream, CRng rng, int64_t k, int64_t total_n=0, double total_w=0.0,
                 double slack=0.0):
        self.stream, self._rng, self.k = stream, rng, k
        self.k_remaining = k
        self.total_n = total_n
        self.n_remaining = total_n
        self.n_consumed = 0
        self.position = -1
        self.draws_left = k
        self.c = 1.0
        self.pending = -1
        self.total_w = total_w
        self.acc = 0.0
        self.slack = slack
        self.tail = False
        self.has_cur = False
        self.cur = None
        self.cur_mult = 0
        self.cur_pos = -1

    @property
    def rng(self):
        return self._rng


cdef object _truncated_n(SeqState st):
    cdef int64_t owed = st.total_n - st.n_consumed
    return TruncatedStreamError(
        f"stream ended after {st.n_consumed} of {st.total_n} declared elements "
        f"({owed} owed, {st.k_remaining} selections pending)",
        owed_items=owed,
    )


cdef object _fetch(SeqState st, int64_t pos):
    cdef int64_t gap = pos - st.n_consumed
    cdef int64_t taken = _consume(st.stream, gap) if gap > 0 else 0
    st.n_consumed += taken
    item = _next_or_end(st.stream) if taken == gap else _END
    if item is _END:
        raise _truncated_n(st)
    st.n_consumed += 1
    st.position = pos
    return item


def fetch(SeqState st, int64_t pos):
    return _fetch(st, pos)


cdef object _step_d(SeqState st):
    cdef int64_t k = st.k_remaining
    cdef int64_t s
    if k <= 0:
        return _END
    s = _skip_wor(k, st.n_remaining, st._rng)
    item = _fetch(st, st.n_consumed + s)
    st.n_remaining -= s + 1
    st.k_remaining = k - 1
    return item


def step_d(SeqState st):
    """Emit the next element of a uniform k-subset (Vitter's method D skips)."""
    item = _step_d(st)
    return None if item is _END else (item, 1)


def drain_d(SeqState st, list out):
    while True:
        item = _step_d(st)
        if item is _END:
            return
        out.append(item)


cdef inline double _next_order_stat(SeqState st):
    st.c *= exp(log(st._rng._u01()) / st.draws_left)
    st.draws_left -= 1
    return 1.0 - st.c


cdef inline int64_t _ord_pos(SeqState st):
    cdef int64_t n = st.total_n
    cdef int64_t p = <int64_t>(_next_order_stat(st) * n)
    return p if p < n - 1 else n - 1


cdef object _step_ordswr(SeqState st, int64_t* mult):
    cdef int64_t pos, p
    if st.pending < 0:
        if st.draws_left <= 0:
            return _END
        st.pending = _ord_pos(st)
    pos = st.pending
    mult[0] = 1
    st.pending = -1
    while st.draws_left > 0:
        p = _ord_pos(st)
        if p != pos:
            st.pending = p
            break
        mult[0] += 1
    item = _fetch(st, pos)
    st.k_remaining -= mult[0]
    return item


def step_ordswr(SeqState st):
    """Emit the next position hit by the sorted iid uniform thresholds."""
    cdef int64_t mult = 0
    item = _step_ordswr(st, &mult)
    return None if item is _END else (item, mult)


def drain_ordswr(SeqState st, list out):
    cdef int64_t mult = 0
    cdef int64_t j
    while True:
        item = _step_ordswr(st, &mult)
        if item is _END:
            return
        for j in range(mult):
            out.append(item)


cdef object _release(SeqState st, int64_t* mult):
    item = st.cur
    mult[0] = st.cur_mult
    st.position = st.cur_pos
    st.k_remaining -= st.cur_mult
    st.has_cur, st.cur, st.cur_mult = False, None, 0
    return item


cdef object _step_ordwswr(SeqState st, int64_t* mult):
    cdef double t, acc, w
    cdef int64_t taken
    cdef bint found
    cdef object it = st.stream
    cdef object out, pair, item = None
    while True:
        if st.draws_left <= 0:
            if not st.has_cur:
                return _END
            return _release(st, mult)
        t = _next_order_stat(st) * st.total_w
        if st.has_cur and (st.tail or t <= st.acc):
            st.cur_mult += 1
            continue
        # walk the weights up to t
        acc = st.acc
        taken = 0
        found = False
        while True:
            pair = _next_or_end(it)
            if pair is _END:
                break
            item, wo = pair
            acc += check_weight(wo)
            taken += 1
            if acc >= t:
                found = True
                break
        st.n_consumed += taken
        st.acc = acc
        if not found:
            if acc >= st.total_w * (1.0 - st.slack) and (taken or st.has_cur):
                st.tail = True
                if not taken:
                    st.cur_mult += 1
                    continue
            else:
                raise TruncatedStreamError(
                    f"stream ended after weight {acc!r} of declared {st.total_w!r} "
                    f"({st.k_remaining} selections pending)",
                    owed_weight=st.total_w - acc,
                )
        out = _release(st, mult) if st.has_cur else _END
        st.has_cur, st.cur, st.cur_mult, st.cur_pos = True, item, 1, st.n_consumed - 1
        if out is not _END:
            return out


def step_ordwswr(SeqState st):
    """Emit the next item whose weight interval holds sorted weight thresholds."""
    cdef int64_t mult = 0
    item = _step_ordwswr(st, &mult)
    return None if item is _END else (item, mult)


def drain_ordwswr(SeqState st, list out):
    cdef int64_t mult = 0
    cdef int64_t j
    while True:
        item = _step_ordwswr(st, &mult)
        if item is _END:
            return
        for j in range(mult):
            out.append(item)


def materialize(stream, bint weighted):
    """Collect a stream into flat arrays (the population baseline's first step)."""
    cdef array items = array("q")
    cdef array weights
    cdef Py_ssize_t n = 0
    cdef Py_ssize_t cap = 0
    if not weighted:
        for x in stream:
            if n == cap:
                cap = 2 * cap + 1024
                resize_smart(items, cap)
            items.data.as_longlongs[n] = x
            n += 1
        resize_smart(items, n)
        return items, None
    weights = array("d")
    for x, w in stream:
        if n == cap:
            cap = 2 * cap + 1024
            resize_smart(items, cap)
            resize_smart(weights, cap)
        items.data.as_longlongs[n] = x
        weights.data.as_doubles[n] = w
        n += 1
    resize_smart(items, n)
    resize_smart(weights, n)
    return items, weights
