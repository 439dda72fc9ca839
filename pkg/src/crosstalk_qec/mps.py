"""Open-boundary matrix product state with Pauli-sum updates.

Every update the hybrid simulator needs is a sum of two product operators
(``cos(t) I + i sin(t) P``, ``(I +- P)/2`` and the pivoted collapse used by
measurements).  Such a sum is a bond-dimension-2 MPO on the support
interval of the strings; it is applied exactly and the interval is then
recompressed: a QR sweep to the right, then a column-pivoted LQ sweep back
that reveals each bond's rank.  A site is re-split with an SVD only when its
revealed rank exceeds the bond cap, so truncation keeps the largest Schmidt
values.
"""

from __future__ import annotations

import os

import numpy as np

from . import _mpskernels as _py_kernels
from .pauli import SITE_MATRICES, PauliString, iter_bits

try:
    from . import _ckernels as _c_kernels
except ImportError:  # extension not built: numpy fallback
    _c_kernels = None

KERNELS = {"python": _py_kernels}
if _c_kernels is not None:
    KERNELS["compiled"] = _c_kernels

K = _py_kernels
BACKEND = "python"


def use_kernels(name: str) -> None:
    """Select the MPS kernel backend (``"compiled"`` or ``"python"``)."""
    global K, BACKEND
    if name not in KERNELS:
        raise ValueError(f"kernel backend {name!r} unavailable (have {sorted(KERNELS)})")
    K = KERNELS[name]
    BACKEND = name


use_kernels(os.environ.get("CROSSTALK_QEC_KERNELS", "compiled" if _c_kernels is not None else "python"))

_PROJ0 = np.array([[1, 0], [0, 0]], dtype=complex)
_PROJ1 = np.array([[0, 0], [0, 1]], dtype=complex)
_PHASES = (1.0, 1j, -1.0, -1j)


class MatrixProductState:
    """MPS over qubits with a movable orthogonality center.

    ``tensors[j]`` has legs ``(left bond, physical, right bond)``. Tensors left
    of ``center`` are left isometries, tensors right of it right isometries, so
    the norm lives entirely in ``tensors[center]``.

    Attributes:
        chi_max: bond cap applied after every update (``None`` = unbounded).
        svd_cutoff: singular values below ``svd_cutoff * s_max`` are treated as
            numerical zeros and dropped (0 disables).
        discarded_weight: running sum of squared Schmidt weight removed by
            truncation, each term relative to the state norm at that moment.
        dirty: bit set of sites that some update may have flipped away from
            ``|0>``; sites outside it are known to be exactly ``|0>``.
    """

    def __init__(self, tensors, chi_max: int | None = 32, center: int = 0, svd_cutoff: float = 1e-12):
        if chi_max is not None and chi_max < 1:
            raise ValueError("chi_max must be >= 1")
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if not self.tensors:
            raise ValueError("empty MPS")
        self.chi_max = chi_max
        self.center = center
        self.svd_cutoff = svd_cutoff
        self.discarded_weight = 0.0
        self.dirty = (1 << len(self.tensors)) - 1

    # -- construction -------------------------------------------------------

    @classmethod
    def from_basis_state(cls, bits, chi_max: int | None = 32, svd_cutoff: float = 1e-12) -> MatrixProductState:
        tensors = []
        dirty = 0
        for q, b in enumerate(bits):
            t = np.zeros((1, 2, 1), dtype=complex)
            t[0, int(b), 0] = 1.0
            tensors.append(t)
            if b:
                dirty |= 1 << q
        mps = cls(tensors, chi_max=chi_max, svd_cutoff=svd_cutoff)
        mps.dirty = dirty
        return mps

    @classmethod
    def from_dense(cls, psi: np.ndarray, chi_max: int | None = None, svd_cutoff: float = 0.0) -> MatrixProductState:
        psi = np.asarray(psi, dtype=complex)
        n = int(round(np.log2(psi.size)))
        if 2**n != psi.size:
            raise ValueError("state length is not a power of two")
        tensors = []
        rest = psi.reshape(1, -1)
        for _ in range(n - 1):
            dl = rest.shape[0]
            q, r = np.linalg.qr(rest.reshape(dl * 2, -1))
            tensors.append(q.reshape(dl, 2, -1))
            rest = r
        tensors.append(rest.reshape(rest.shape[0], 2, 1))
        mps = cls(tensors, chi_max=chi_max, center=n - 1, svd_cutoff=svd_cutoff)
        if chi_max is not None:
            mps.truncate(chi_max)
        return mps

    def copy(self) -> MatrixProductState:
        out = MatrixProductState.__new__(MatrixProductState)
        out.tensors = list(self.tensors)  # arrays are replaced, never mutated in place
        out.chi_max = self.chi_max
        out.center = self.center
        out.svd_cutoff = self.svd_cutoff
        out.discarded_weight = self.discarded_weight
        out.dirty = self.dirty
        return out

    # -- inspection ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max((t.shape[2] for t in self.tensors[:-1]), default=1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def to_dense(self) -> np.ndarray:
        if self.n > 22:
            raise ValueError("dense conversion limited to 22 sites")
        out = self.tensors[0].reshape(2, -1)
        for t in self.tensors[1:]:
            out = (out @ t.reshape(t.shape[0], -1)).reshape(-1, t.shape[2])
        return out.reshape(-1)

    def is_clean(self, q: int) -> bool:
        return not (self.dirty >> q) & 1

    # -- canonical form -----------------------------------------------------

    def move_center(self, j: int) -> None:
        if not 0 <= j < self.n:
            raise IndexError(f"site {j} out of range")
        T = self.tensors
        c = self.center
        while c < j:
            T[c], T[c + 1] = K.shift_right(T[c], T[c + 1])
            c += 1
        while c > j:
            T[c - 1], T[c] = K.shift_left(T[c - 1], T[c])
            c -= 1
        self.center = c

    def normalize(self) -> float:
        nrm = self.norm()
        if nrm == 0.0:
            raise FloatingPointError("MPS has zero norm")
        self.tensors[self.center] = self.tensors[self.center] / nrm
        return nrm

    # -- Pauli operations ---------------------------------------------------

    def _check(self, p: PauliString) -> None:
        if p.n != self.n:
            raise ValueError(f"Pauli length mismatch: {p.n} vs {self.n}")

    def _trim(self, p: PauliString) -> PauliString:
        """Drop Z factors on clean sites, where they act as +1 on every branch."""
        z = p.z & (self.dirty | p.x)
        return p if z == p.z else PauliString(p.n, p.x, z, p.k)

    def apply_pauli(self, p: PauliString) -> None:
        """Multiply the state by ``p`` site by site; bond dimensions unchanged."""
        self._check(p)
        T = self.tensors
        for q in iter_bits(p.x | p.z):
            T[q] = K.apply_site(SITE_MATRICES[p.bits(q)], T[q])
        self.dirty |= p.x
        T[self.center] = T[self.center] * _PHASES[p.k]

    def apply_site_unitary(self, q: int, u: np.ndarray) -> None:
        """Apply a 2x2 unitary to site ``q``; bonds and norm unchanged."""
        self.tensors[q] = K.apply_site(np.asarray(u, dtype=complex), self.tensors[q])
        self.dirty |= 1 << q

    def apply_pauli_rotation(self, theta: float, p: PauliString) -> None:
        """``|M> -> cos(theta)|M> + i sin(theta) p|M>``, then recompress."""
        self._check(p)
        if theta == 0.0:
            return
        p = self._trim(p)
        support = p.x | p.z
        if support == 0:
            # p acts as the scalar i^k on every branch
            self.tensors[self.center] = self.tensors[self.center] * (
                np.cos(theta) + 1j * np.sin(theta) * _PHASES[p.k])
            return
        b_ops = {q: SITE_MATRICES[p.bits(q)] for q in iter_bits(support)}
        self._apply_operator_sum(
            [(np.cos(theta), {}), (1j * np.sin(theta) * _PHASES[p.k], b_ops)],
            dirty_bits=p.x,
        )

    def expectation(self, p: PauliString) -> complex:
        """Raw ``<M|p|M> / <M|M>`` (complex)."""
        self._check(p)
        if p.x & ~self.dirty:
            # p flips a site that is |0> in every branch: orthogonal
            return 0j
        p = self._trim(p)
        support = p.x | p.z
        if support == 0:
            return complex(_PHASES[p.k])
        lo = (support & -support).bit_length() - 1
        hi = support.bit_length() - 1
        if self.center < lo or self.center > hi:
            self.move_center(lo if self.center < lo else hi)
        ops = [SITE_MATRICES[p.bits(q)] if (support >> q) & 1 else None for q in range(lo, hi + 1)]
        val = K.expectation_interval(self.tensors, lo, hi, ops)
        nrm2 = float(np.vdot(self.tensors[self.center], self.tensors[self.center]).real)
        return _PHASES[p.k] * val / nrm2

    def expectation_pauli(self, p: PauliString) -> float:
        if not p.is_hermitian:
            raise ValueError(f"expectation of non-Hermitian string {p}")
        val = self.expectation(p)
        if abs(val.imag) > 1e-9:
            raise FloatingPointError(f"imaginary expectation {val} for Hermitian {p}")
        return float(val.real)

    def project_pauli(self, p: PauliString, sign: int) -> float:
        """Apply ``(I + sign p)/2``, renormalize and return the outcome probability."""
        if not p.is_hermitian:
            raise ValueError(f"projection onto non-Hermitian string {p}")
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        prob = 0.5 * (1.0 + sign * self.expectation_pauli(p))
        if prob < 1e-12:
            raise FloatingPointError(f"projection onto outcome of probability {prob:.3e}")
        p = self._trim(p)
        support = p.x | p.z
        if support:
            b_ops = {q: SITE_MATRICES[p.bits(q)] for q in iter_bits(support)}
            self._apply_operator_sum(
                [(0.5, {}), (0.5 * sign * _PHASES[p.k], b_ops)],
                dirty_bits=p.x,
            )
        # otherwise the state is already an eigenvector with this sign
        self.normalize()
        return prob

    def collapse_pivot(self, p: PauliString, pivot: int, sign: int) -> None:
        """Apply ``Pi0_pivot (Z_pivot + sign p)/sqrt(2)`` and renormalize.

        ``p`` must flip ``pivot``.  This is the MPS half of a measurement whose
        conjugated observable ``p`` is absorbed into the Clifford frame.
        """
        self._check(p)
        if not (p.x >> pivot) & 1:
            raise ValueError("pivot site must carry an X component")
        if not (self.dirty >> pivot) & 1:
            # no branch has the pivot flipped: the operator acts as identity
            return
        p = self._trim(p)
        support = p.x | p.z
        b_ops = {q: SITE_MATRICES[p.bits(q)] for q in iter_bits(support)}
        b_ops[pivot] = b_ops[pivot] @ _PROJ1
        self._apply_operator_sum(
            [(1.0, {pivot: _PROJ0}), (sign * _PHASES[p.k], b_ops)],
            dirty_bits=p.x,
        )
        self.dirty &= ~(1 << pivot)
        self.normalize()

    # -- truncation ---------------------------------------------------------

    def schmidt_spectrum(self, cut: int) -> np.ndarray:
        """Schmidt values across the bond between sites ``cut`` and ``cut+1``."""
        if not 0 <= cut < self.n - 1:
            raise IndexError(f"cut {cut} out of range for {self.n} sites")
        self.move_center(cut)
        t = self.tensors[cut]
        s = np.linalg.svd(t.reshape(-1, t.shape[2]), compute_uv=False)
        nrm = np.linalg.norm(s)
        return s / nrm if nrm > 0 else s

    def truncate(self, chi_max: int | None = None) -> None:
        """Cap every bond at ``chi_max`` keeping the largest Schmidt values."""
        chi = self.chi_max if chi_max is None else chi_max
        if chi is not None and chi < 1:
            raise ValueError("chi_max must be >= 1")
        self.move_center(self.n - 1)
        dw = K.svd_sweep_left(self.tensors, 0, self.n - 1, chi or 0, self.svd_cutoff)
        self.discarded_weight += dw
        self.center = 0
        self.normalize()

    # -- core update --------------------------------------------------------

    def _apply_operator_sum(self, terms, dirty_bits: int) -> None:
        """Apply ``sum_t coef_t * prod_q op_t[q]`` (two terms) and recompress."""
        sites = set()
        for _, ops in terms:
            sites.update(ops)
        lo, hi = min(sites), max(sites)
        if self.center < lo or self.center > hi:
            self.move_center(lo if self.center < lo else hi)
        (ca, a_ops), (cb, b_ops) = terms
        a_list = [a_ops.get(q) for q in range(lo, hi + 1)]
        b_list = [b_ops.get(q) for q in range(lo, hi + 1)]
        dw = K.apply_two_term(self.tensors, self.center, lo, hi, ca, a_list, cb, b_list,
                              self.chi_max or 0, self.svd_cutoff)
        self.discarded_weight += dw
        self.center = lo
        self.dirty |= dirty_bits
