"""Pure numpy MPS kernels.

Site tensors have shape ``(left, 2, right)``.  Functions mutate the list of
tensors they are given by replacing entries (never editing arrays in place)
and return the relative squared Schmidt weight they discarded.
"""

import numpy as np
import scipy.linalg


def _svd(m):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def apply_site(op, t):
    return np.einsum("st,atb->asb", op, t)


def shift_right(a, b):
    """QR on ``a``; the triangular factor moves into ``b``."""
    dl, _, dr = a.shape
    q, r = np.linalg.qr(a.reshape(dl * 2, dr))
    k = q.shape[1]
    return q.reshape(dl, 2, k), np.tensordot(r, b, axes=(1, 0))


def shift_left(a, b):
    """LQ on ``b``; the triangular factor moves into ``a``."""
    dl, _, dr = b.shape
    q, r = np.linalg.qr(b.reshape(dl, 2 * dr).T.conj())
    k = q.shape[1]
    return np.tensordot(a, r.T.conj(), axes=(2, 0)), q.T.conj().reshape(k, 2, dr)


def _keep(s, chi, cutoff):
    keep = s.size
    if cutoff > 0.0 and s[0] > 0.0:
        keep = int(np.count_nonzero(s > cutoff * s[0]))
    if chi > 0:
        keep = min(keep, chi)
    return max(keep, 1)


def _svd_step(tensors, j, chi, cutoff):
    """SVD of site ``j`` split off to the right; returns discarded weight."""
    t = tensors[j]
    dl, _, dr = t.shape
    u, s, vh = _svd(t.reshape(dl, 2 * dr))
    keep = _keep(s, chi, cutoff)
    discarded = 0.0
    if keep < s.size:
        tot = float(np.dot(s, s))
        if tot > 0.0:
            discarded = float(np.dot(s[keep:], s[keep:])) / tot
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    tensors[j] = vh.reshape(keep, 2, dr)
    tensors[j - 1] = np.tensordot(tensors[j - 1], u * s, axes=(2, 0))
    return discarded


def svd_sweep_left(tensors, lo, hi, chi, cutoff):
    """Truncating SVD sweep from ``hi`` (the center) down to ``lo``."""
    discarded = 0.0
    for j in range(hi, lo, -1):
        discarded += _svd_step(tensors, j, chi, cutoff)
    return discarded


def compress_sweep_left(tensors, lo, hi, chi, cutoff):
    """Like :func:`svd_sweep_left` but rank-revealing QR finds the bond.

    A column-pivoted LQ splits each site; only when the revealed rank
    exceeds ``chi`` is the site re-split with an SVD so that the largest
    Schmidt values are the ones kept.
    """
    discarded = 0.0
    for j in range(hi, lo, -1):
        t = tensors[j]
        dl, _, dr = t.shape
        q, r, piv = scipy.linalg.qr(t.reshape(dl, 2 * dr).conj().T, mode="economic",
                                    pivoting=True, check_finite=False)
        diag = np.abs(np.diagonal(r))
        keep = diag.size
        if cutoff > 0.0 and diag[0] > 0.0:
            keep = max(1, int(np.count_nonzero(diag > cutoff * diag[0])))
        if 0 < chi < keep:
            discarded += _svd_step(tensors, j, chi, cutoff)
            continue
        if keep < diag.size:
            tot = float(np.vdot(r, r).real)
            if tot > 0.0:
                discarded += float(np.vdot(r[keep:], r[keep:]).real) / tot
        z = np.empty((keep, r.shape[1]), dtype=r.dtype)
        z[:, piv] = r[:keep]
        tensors[j] = q[:, :keep].conj().T.reshape(keep, 2, dr)
        tensors[j - 1] = np.tensordot(tensors[j - 1], z.conj().T, axes=(2, 0))
    return discarded


def expectation_interval(tensors, lo, hi, ops):
    """``<M|O|M>`` for a product operator on ``[lo, hi]`` (center inside)."""
    t = tensors[lo]
    env = None
    for idx, j in enumerate(range(lo, hi + 1)):
        t = tensors[j]
        op = ops[idx]
        ot = t if op is None else apply_site(op, t)
        if env is None:
            # left of lo is left-canonical: environment is the identity
            env = np.tensordot(t.conj(), ot, axes=([0, 1], [0, 1]))
        else:
            tmp = np.tensordot(env, ot, axes=(1, 0))
            env = np.tensordot(t.conj(), tmp, axes=([0, 1], [0, 1]))
    return complex(np.trace(env))


def apply_two_term(tensors, center, lo, hi, ca, a_ops, cb, b_ops, chi, cutoff):
    """Apply ``ca * A + cb * B`` on ``[lo, hi]``, recompress, center -> ``lo``.

    ``a_ops``/``b_ops`` hold one 2x2 matrix (or ``None`` for identity) per
    site of the interval.  The orthogonality center must lie in the interval.
    """
    if hi == lo:
        t = tensors[lo]
        ta = t if a_ops[0] is None else apply_site(a_ops[0], t)
        tb = t if b_ops[0] is None else apply_site(b_ops[0], t)
        out = ca * ta + cb * tb
        nrm = np.linalg.norm(out)
        tensors[lo] = out / nrm
        return 0.0

    for idx, j in enumerate(range(lo, hi + 1)):
        t = tensors[j]
        ta = t if a_ops[idx] is None else apply_site(a_ops[idx], t)
        tb = t if b_ops[idx] is None else apply_site(b_ops[idx], t)
        if j == lo:
            tensors[j] = np.concatenate((ca * ta, cb * tb), axis=2)
        elif j == hi:
            tensors[j] = np.concatenate((ta, tb), axis=0)
        else:
            dl, _, dr = t.shape
            blk = np.zeros((2 * dl, 2, 2 * dr), dtype=complex)
            blk[:dl, :, :dr] = ta
            blk[dl:, :, dr:] = tb
            tensors[j] = blk

    for j in range(lo, hi):
        tensors[j], tensors[j + 1] = shift_right(tensors[j], tensors[j + 1])
    discarded = compress_sweep_left(tensors, lo, hi, chi, cutoff)
    nrm = np.linalg.norm(tensors[lo])
    if nrm == 0.0:
        raise FloatingPointError("operator annihilated the state")
    tensors[lo] = tensors[lo] / nrm
    return discarded
