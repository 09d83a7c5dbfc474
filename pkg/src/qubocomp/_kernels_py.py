"""NumPy implementations of the compiled kernels, used when the extension is absent."""
import numpy as np

_CHUNK = 1 << 16


def batch_energy(lin, qi, qj, qw, offset, X):
    X = np.asarray(X, dtype=np.uint8)
    out = np.full(X.shape[0], offset, dtype=np.int64)
    out += X.astype(np.int64) @ np.asarray(lin, dtype=np.int64)
    step = max(1, _CHUNK // max(1, X.shape[0]))
    for start in range(0, len(qi), step):
        i = qi[start:start + step]
        j = qj[start:start + step]
        pair = (X[:, i] & X[:, j]).astype(np.int64)
        out += pair @ np.asarray(qw[start:start + step], dtype=np.int64)
    return out


def prepare_buckets(lin, qi, qj, qw):
    """Group every coefficient bit into (sign, bit position) buckets of variable pairs.

    Linear terms become pairs ``(v, v)``. This is the input layout of the
    compiled bit-sliced energy kernel.
    """
    lin, qi, qj, qw = (np.asarray(a) for a in (lin, qi, qj, qw))
    n = lin.shape[0]
    ii = np.concatenate([np.arange(n, dtype=np.int32), qi.astype(np.int32)])
    jj = np.concatenate([np.arange(n, dtype=np.int32), qj.astype(np.int32)])
    ww = np.concatenate([lin.astype(np.int64), qw.astype(np.int64)])
    aw = np.abs(ww)
    top = int(aw.max()).bit_length() if aw.size else 0
    if top > 56:
        raise OverflowError("coefficients too large for the bit-sliced kernel")
    pi, pj, ptr, shift, sign = [], [], [0], [], []
    for negative in (False, True):
        side = (ww < 0) == negative
        for p in range(top):
            sel = side & (((aw >> p) & 1) == 1)
            cnt = int(sel.sum())
            if cnt:
                a, b = ii[sel], jj[sel]
                order = np.lexsort((b, a))  # locality for the word gathers
                pi.append(a[order])
                pj.append(b[order])
                ptr.append(ptr[-1] + cnt)
                shift.append(p)
                sign.append(-1 if negative else 1)
    empty = np.zeros(0, dtype=np.int32)
    return (n,
            np.ascontiguousarray(np.concatenate(pi) if pi else empty, dtype=np.int32),
            np.ascontiguousarray(np.concatenate(pj) if pj else empty, dtype=np.int32),
            np.asarray(ptr, dtype=np.int64), np.asarray(shift, dtype=np.int32), np.asarray(sign, dtype=np.int32))


def prepare_energy(lin, qi, qj, qw):
    return (lin, qi, qj, qw)


def batch_energy_prepared(prep, offset, X):
    return batch_energy(*prep, offset, X)


def gray_min_by_projection(n, lin, indptr, indices, data, offset, proj_bit, n_proj):
    # Plain chunked enumeration; same result as the Gray-code walk.
    lin = np.asarray(lin, dtype=np.int64)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    upper = rows < indices
    qi, qj, qw = rows[upper], np.asarray(indices)[upper], np.asarray(data)[upper]
    proj_bit = np.asarray(proj_bit)
    mins = np.full(1 << n_proj, np.iinfo(np.int64).max, dtype=np.int64)
    shifts = np.arange(n, dtype=np.uint64)
    marked = np.nonzero(proj_bit >= 0)[0]
    weights = (np.int64(1) << proj_bit[marked].astype(np.int64)) if len(marked) else None
    total = 1 << n
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(total, start + _CHUNK), dtype=np.uint64)
        X = ((codes[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
        e = batch_energy(lin, qi, qj, qw, offset, X)
        if weights is None:
            idx = np.zeros(len(codes), dtype=np.int64)
        else:
            idx = X[:, marked].astype(np.int64) @ weights
        np.minimum.at(mins, idx, e)
    return mins
