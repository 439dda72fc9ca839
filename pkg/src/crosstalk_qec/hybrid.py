"""Hybrid stabilizer / tensor-network state ``|psi> = C |MPS>``."""

from __future__ import annotations

import numpy as np

from .mps import MatrixProductState
from .pauli import PauliString, iter_bits
from .tableau import CliffordTableau


class HybridState:
    """Clifford frame plus MPS, starting from ``|0...0>``.

    Clifford gates only touch the tableau.  A Pauli rotation is conjugated
    through the frame and applied to the MPS.  A Z measurement conjugates
    ``Z_q`` the same way; when the conjugated string flips some MPS site the
    collapse is absorbed into the frame through a Pauli reflection about that
    site, so the ideal (error-free) part of the state never costs bond
    dimension.
    """

    def __init__(self, n: int, chi_max: int | None = 32, rng: np.random.Generator | None = None,
                 svd_cutoff: float = 1e-12, absorb: bool = True):
        self.n = n
        # absorb=False keeps every update in the MPS (plain projector rule)
        self.absorb = absorb
        self.tableau = CliffordTableau.identity(n)
        self.mps = MatrixProductState.from_basis_state([0] * n, chi_max=chi_max, svd_cutoff=svd_cutoff)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.record: list[int] = []
        # post-measurement Z eigenvalues still valid for reset shortcuts
        self._known_z: dict[int, int] = {}

    def copy(self) -> HybridState:
        out = HybridState.__new__(HybridState)
        out.n = self.n
        out.absorb = self.absorb
        out.tableau = self.tableau.copy()
        out.mps = self.mps.copy()
        out.rng = self.rng
        out.record = list(self.record)
        out._known_z = dict(self._known_z)
        return out

    def _check_qubit(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise IndexError(f"qubit {q} out of range for n={self.n}")

    # -- unitary updates ----------------------------------------------------

    def apply_clifford(self, name: str, *qubits: int) -> None:
        self.tableau.prepend_gate(name, *qubits)
        for q in qubits:
            self._known_z.pop(q, None)

    def apply_pauli(self, p: PauliString) -> None:
        """Apply a Pauli error (absorbed into the frame, no MPS work)."""
        if p.n != self.n:
            raise ValueError("Pauli length mismatch")
        X, Z = self.tableau.ximg, self.tableau.zimg
        # P^dag Q P = -Q for generators anticommuting with P
        for q in iter_bits(p.x):
            Z[q] = -Z[q]
            if q in self._known_z:
                self._known_z[q] = -self._known_z[q]
        for q in iter_bits(p.z):
            X[q] = -X[q]

    def apply_pauli_rotation(self, theta: float, p: PauliString) -> None:
        """``exp(i theta p)`` for Hermitian ``p``."""
        if not p.is_hermitian:
            raise ValueError(f"rotation generator {p} is not Hermitian")
        if theta == 0.0:
            return
        ptil = self.tableau.conjugate(p)
        self.mps.apply_pauli_rotation(theta, ptil)
        for q in iter_bits(p.x):
            self._known_z.pop(q, None)

    # -- measurement --------------------------------------------------------

    def measure_z(self, q: int) -> int:
        """Projective Z measurement; returns +1 or -1 and records it."""
        self._check_qubit(q)
        ptil = self.tableau.conjugate(PauliString(self.n, z=1 << q))
        u = self.rng.random()
        mps = self.mps
        if ptil.x and self.absorb:
            clean = ptil.x & ~mps.dirty
            if clean:
                # the collapse is entirely a frame change
                outcome = 1 if u < 0.5 else -1
                pivot = (clean & -clean).bit_length() - 1
            else:
                ev = mps.expectation_pauli(ptil)
                prob_plus = 0.5 * (1.0 + ev)
                outcome = 1 if u < prob_plus else -1
                pivot = (ptil.x & -ptil.x).bit_length() - 1
                prob = prob_plus if outcome == 1 else 1.0 - prob_plus
                if prob < 1e-12:
                    raise FloatingPointError(f"measurement branch probability {prob:.3e}")
                mps.collapse_pivot(ptil, pivot, outcome)
            zk = PauliString(self.n, z=1 << pivot)
            signed = ptil if outcome == 1 else -ptil
            self.tableau.append_pauli_reflection(zk, signed)
        else:
            ev = mps.expectation_pauli(ptil)
            prob_plus = 0.5 * (1.0 + ev)
            outcome = 1 if u < prob_plus else -1
            mps.project_pauli(ptil, outcome)
        self.record.append(outcome)
        self._known_z[q] = outcome
        return outcome

    def reset_qubit(self, q: int) -> None:
        """Measure Z and flip to ``|0>`` on a -1 outcome."""
        self._check_qubit(q)
        outcome = self._known_z.get(q)
        if outcome is None:
            outcome = self.measure_z(q)
            self.record.pop()
        if outcome == -1:
            self.apply_clifford("X", q)
        self._known_z[q] = 1

    # -- observables --------------------------------------------------------

    def expectation_logical(self, logical: PauliString) -> float:
        return self.mps.expectation_pauli(self.tableau.conjugate(logical))

    def expectation(self, p: PauliString) -> float:
        return self.expectation_logical(p)
