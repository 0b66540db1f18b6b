"""Pure-Python hot loops. ``_ckernels.pyx`` mirrors this module call for call.

Reservoir kernels take a sampler state object (attributes ``k``,
``buffer``, ``keys``, ``n_seen``, ``w_seen``, ``skip``, ``aux_w``, ``rng``)
and an iterator, consume the iterator to exhaustion and write the updated
scalars back even if the iterator raises. Sequential kernels advance a
:class:`SeqState` one emission at a time. The two backends must consume
variates in the same order; ``tests/test_backends.py`` pins that.
"""

from __future__ import annotations

from collections import deque
from itertools import islice
from math import ceil, exp, expm1, inf, log, log1p

from .errors import InvalidWeightError, TruncatedStreamError

SKIP_CAP = 1 << 62
_END = object()

BACKEND = "python"


def check_weight(w) -> float:
    w = float(w)
    if not 0.0 < w < inf:
        raise InvalidWeightError(f"weight must be positive and finite, got {w!r}")
    return w


def consume(it, s: int) -> int:
    """Advance ``it`` by up to ``s`` items at C speed; return how many were taken."""
    if s <= 0:
        return 0
    last = deque(enumerate(islice(it, s), 1), maxlen=1)
    return last[0][0] if last else 0


def _capped(x: float) -> int:
    return SKIP_CAP if x >= SKIP_CAP else int(x)


def geometric_skip(rng, p: float) -> int:
    """Failures before the first success of Bernoulli(p) trials."""
    lq = log1p(-p)
    if lq == 0.0:
        return SKIP_CAP
    return _capped(log(rng.uniform01()) / lq)


def replace_slots(buf: list, k: int, p: float, item, rng) -> None:
    """Overwrite each slot independently with prob ``p``, conditioned on >= 1.

    The first replaced slot is drawn from its truncated geometric law; the
    later ones follow by geometric gaps, so the cost is O(replaced + 1).
    """
    if p >= 1.0:
        for j in range(k):
            buf[j] = item
        return
    lq = log1p(-p)
    at_least_one = -expm1(k * lq)
    first = ceil(log1p(-rng.uniform01() * at_least_one) / lq)
    j = min(max(first, 1), k) - 1
    buf[j] = item
    j += 1
    while j < k:
        g = log(rng.uniform01()) / lq
        if g >= k - j:
            break
        j += int(g)
        buf[j] = item
        j += 1


# -- unweighted reservoirs ------------------------------------------------

def fit_r(st, it) -> None:
    buf, k, rng = st.buffer, st.k, st.rng
    n = st.n_seen
    try:
        for item in it:
            n += 1
            if n <= k:
                buf.append(item)
            else:
                j = rng.randbelow(n)
                if j < k:
                    buf[j] = item
    finally:
        st.n_seen = n


def fit_l(st, it) -> None:
    buf, k, rng = st.buffer, st.k, st.rng
    n, skip, w = st.n_seen, st.skip, st.aux_w
    it = iter(it)
    try:
        while True:
            if skip > 0 and n >= k:
                taken = consume(it, skip)
                n += taken
                skip -= taken
                if skip > 0:
                    break
            item = next(it, _END)
            if item is _END:
                break
            n += 1
            if n <= k:
                buf.append(item)
                if n == k:
                    w = exp(log(rng.uniform01()) / k)
                    skip = geometric_skip(rng, w)
            else:
                buf[rng.randbelow(k)] = item
                w *= exp(log(rng.uniform01()) / k)
                skip = geometric_skip(rng, w)
    finally:
        st.n_seen, st.skip, st.aux_w = n, skip, w


def rswr_skip(rng, n: int, k: int) -> int:
    # P(skip >= s) = (n / (n + s)) ** k
    return _capped(n * expm1(-log(rng.uniform01()) / k))


def fit_rswr(st, it) -> None:
    buf, k, rng = st.buffer, st.k, st.rng
    n, skip = st.n_seen, st.skip
    it = iter(it)
    try:
        while True:
            if skip > 0:
                taken = consume(it, skip)
                n += taken
                skip -= taken
                if skip > 0:
                    break
            item = next(it, _END)
            if item is _END:
                break
            n += 1
            if n == 1:
                buf.extend([item] * k)
            else:
                replace_slots(buf, k, 1.0 / n, item, rng)
            skip = rswr_skip(rng, n, k)
    finally:
        st.n_seen, st.skip = n, skip


# -- weighted reservoirs --------------------------------------------------
# AlgARes/AlgAExpJ keep a binary min-heap of log keys in ``st.keys`` (an
# array('d') of length k) with the items in matching order in ``st.buffer``.

def heap_push(keys, items, key: float, item) -> None:
    i = len(items)
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


def heap_replace_min(keys, items, key: float, item) -> None:
    size = len(items)
    i = 0
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


def fit_ares(st, it) -> None:
    keys, items, k, rng = st.keys, st.buffer, st.k, st.rng
    n, total = st.n_seen, st.w_seen
    try:
        for item, w in it:
            w = check_weight(w)
            n += 1
            total += w
            lk = log(rng.uniform01()) / w
            if len(items) < k:
                heap_push(keys, items, lk, item)
            elif lk > keys[0]:
                heap_replace_min(keys, items, lk, item)
    finally:
        st.n_seen, st.w_seen = n, total


def expj_jump(rng, log_min_key: float) -> float:
    if log_min_key >= 0.0:
        return inf
    return log(rng.uniform01()) / log_min_key


def fit_aexpj(st, it) -> None:
    keys, items, k, rng = st.keys, st.buffer, st.k, st.rng
    n, total, skip = st.n_seen, st.w_seen, st.skip
    try:
        for item, w in it:
            w = check_weight(w)
            n += 1
            total += w
            if len(items) < k:
                heap_push(keys, items, log(rng.uniform01()) / w, item)
                if len(items) == k:
                    skip = expj_jump(rng, keys[0])
                continue
            skip -= w
            if skip <= 0.0:
                # key uniform on (T**w, 1) raised to 1/w, in log space
                lk = log1p((1.0 - rng.uniform01()) * expm1(w * keys[0])) / w
                heap_replace_min(keys, items, lk, item)
                skip = expj_jump(rng, keys[0])
    finally:
        st.n_seen, st.w_seen, st.skip = n, total, skip


def wrswr_target(rng, total: float, k: int) -> float:
    # P(no slot changes while the weight grows from W to W') = (W / W') ** k
    return total * exp(-log(rng.uniform01()) / k)


def fit_wrswr(st, it) -> None:
    buf, k, rng = st.buffer, st.k, st.rng
    n, total, target = st.n_seen, st.w_seen, st.skip
    try:
        for item, w in it:
            w = check_weight(w)
            n += 1
            total += w
            if n == 1:
                buf.extend([item] * k)
                target = wrswr_target(rng, total, k)
            elif total >= target:
                replace_slots(buf, k, w / total, item, rng)
                target = wrswr_target(rng, total, k)
    finally:
        st.n_seen, st.w_seen, st.skip = n, total, target


# -- sequential helpers ---------------------------------------------------

def _skip_method_a(k: int, n: int, rng) -> int:
    v = rng.uniform01()
    s = 0
    top = n - k
    quot = top / n
    while quot > v:
        s += 1
        top -= 1
        n -= 1
        quot *= top / n
    return s


def _skip_method_d(k: int, n: int, rng) -> int:
    qu1 = n - k + 1
    kmin1inv = 1.0 / (k - 1)
    while True:
        while True:
            x = n * (1.0 - exp(log(rng.uniform01()) / k))
            s = int(x)
            if s < qu1:
                break
        y1 = exp(log(rng.uniform01() * n / qu1) * kmin1inv)
        if y1 * (1.0 - x / n) * (qu1 / (qu1 - s)) <= 1.0:
            return s
        y2 = 1.0
        if k - 1 > s:
            for t in range(s):
                y2 *= (n - 1 - t) / (n - k - t)
        else:
            for j in range(1, k):
                y2 *= (n - j) / (n - s - j)
        if n / (n - x) >= y1 * exp(log(y2) * kmin1inv):
            return s


def skip_wor(k: int, n: int, rng) -> int:
    """Elements passed over before the next member of a uniform k-subset of n."""
    if k >= n:
        return 0
    if k == 1:
        return rng.randbelow(n)
    if 13 * k >= n:
        return _skip_method_a(k, n, rng)
    return _skip_method_d(k, n, rng)


def walk_weight(it, acc: float, target: float):
    """Pull (item, weight) pairs until the running weight reaches ``target``.

    Returns ``(found, item, acc, taken)``; ``found`` is False when the
    iterator ran dry first, in which case ``item`` is the last item seen.
    """
    taken = 0
    item = None
    for item, w in it:
        acc += check_weight(w)
        taken += 1
        if acc >= target:
            return True, item, acc, taken
    return False, item, acc, taken


class SeqState:
    """O(1) state of a sequential sampler, advanced by the ``step_*`` kernels."""

    __slots__ = ("stream", "rng", "k", "k_remaining", "total_n", "n_remaining", "n_consumed",
                 "position", "draws_left", "c", "pending", "total_w", "acc", "slack", "tail",
                 "has_cur", "cur", "cur_mult", "cur_pos")

    def __init__(self, stream, rng, k, total_n=0, total_w=0.0, slack=0.0):
        self.stream, self.rng, self.k = stream, rng, k
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


def _truncated_n(st):
    owed = st.total_n - st.n_consumed
    return TruncatedStreamError(
        f"stream ended after {st.n_consumed} of {st.total_n} declared elements "
        f"({owed} owed, {st.k_remaining} selections pending)",
        owed_items=owed,
    )


def fetch(st, pos: int):
    gap = pos - st.n_consumed
    taken = consume(st.stream, gap)
    st.n_consumed += taken
    item = next(st.stream, _END) if taken == gap else _END
    if item is _END:
        raise _truncated_n(st)
    st.n_consumed += 1
    st.position = pos
    return item


def step_d(st):
    """Emit the next element of a uniform k-subset (Vitter's method D skips)."""
    k = st.k_remaining
    if k <= 0:
        return None
    s = skip_wor(k, st.n_remaining, st.rng)
    item = fetch(st, st.n_consumed + s)
    st.n_remaining -= s + 1
    st.k_remaining = k - 1
    return item, 1


def _next_order_stat(st) -> float:
    st.c *= exp(log(st.rng.uniform01()) / st.draws_left)
    st.draws_left -= 1
    return 1.0 - st.c


def step_ordswr(st):
    """Emit the next position hit by the sorted iid uniform thresholds."""
    n = st.total_n
    if st.pending < 0:
        if st.draws_left <= 0:
            return None
        st.pending = min(int(_next_order_stat(st) * n), n - 1)
    pos, mult = st.pending, 1
    st.pending = -1
    while st.draws_left > 0:
        p = min(int(_next_order_stat(st) * n), n - 1)
        if p != pos:
            st.pending = p
            break
        mult += 1
    item = fetch(st, pos)
    st.k_remaining -= mult
    return item, mult


def step_ordwswr(st):
    """Emit the next item whose weight interval holds sorted weight thresholds.

    An item is released only once the walk has found the item after it (or
    the thresholds ran out), so a float sum a hair under the declared total
    credits the leftover thresholds to the true last item.
    """
    while True:
        if st.draws_left <= 0:
            if not st.has_cur:
                return None
            return _release(st)
        t = _next_order_stat(st) * st.total_w
        if st.has_cur and (st.tail or t <= st.acc):
            st.cur_mult += 1
            continue
        found, item, acc, taken = walk_weight(st.stream, st.acc, t)
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
        out = _release(st) if st.has_cur else None
        st.has_cur, st.cur, st.cur_mult, st.cur_pos = True, item, 1, st.n_consumed - 1
        if out is not None:
            return out


def _release(st):
    item, mult = st.cur, st.cur_mult
    st.position = st.cur_pos
    st.k_remaining -= mult
    st.has_cur, st.cur, st.cur_mult = False, None, 0
    return item, mult


def _drain(step, st, out: list) -> None:
    while True:
        got = step(st)
        if got is None:
            return
        item, mult = got
        if mult == 1:
            out.append(item)
        else:
            out.extend([item] * mult)


def drain_d(st, out: list) -> None:
    _drain(step_d, st, out)


def drain_ordswr(st, out: list) -> None:
    _drain(step_ordswr, st, out)


def drain_ordwswr(st, out: list) -> None:
    _drain(step_ordwswr, st, out)


def materialize(stream, weighted: bool):
    """Collect a stream into flat arrays (the population baseline's first step)."""
    from array import array

    if not weighted:
        return array("q", stream), None
    items, weights = array("q"), array("d")
    for item, w in stream:
        items.append(item)
        weights.append(w)
    return items, weights
