"""Clifford operator stored as its inverse conjugation map.

``CliffordTableau`` keeps, for every generator ``X_q`` and ``Z_q``, the
image ``C^dag X_q C`` / ``C^dag Z_q C`` as a :class:`PauliString`.
Conjugating an arbitrary Pauli through ``C`` is then a product of images,
and absorbing a new gate ``G`` (``C -> G C``) only rewrites the images of
the generators on the gate's qubits.
"""

from __future__ import annotations

from .pauli import PauliString, commutes, iter_bits, multiply

CLIFFORD_GATES = ("H", "S", "S_DAG", "X", "Y", "Z", "CNOT", "CZ")
_ARITY = {"H": 1, "S": 1, "S_DAG": 1, "X": 1, "Y": 1, "Z": 1, "CNOT": 2, "CZ": 2}


class CliffordTableau:
    """Images of the 2n Pauli generators under ``P -> C^dag P C``."""

    __slots__ = ("n", "ximg", "zimg")

    def __init__(self, n: int, ximg: list[PauliString], zimg: list[PauliString]):
        self.n = n
        self.ximg = ximg
        self.zimg = zimg

    @classmethod
    def identity(cls, n: int) -> CliffordTableau:
        if n < 1:
            raise ValueError("tableau needs at least one qubit")
        return cls(
            n,
            [PauliString(n, x=1 << q) for q in range(n)],
            [PauliString(n, z=1 << q) for q in range(n)],
        )

    def copy(self) -> CliffordTableau:
        # PauliString is immutable, so shallow list copies suffice
        return CliffordTableau(self.n, list(self.ximg), list(self.zimg))

    def _check_qubits(self, qubits) -> None:
        for q in qubits:
            if not 0 <= q < self.n:
                raise IndexError(f"qubit {q} out of range for n={self.n}")

    def prepend_gate(self, name: str, *qubits: int) -> None:
        """Absorb gate ``G`` so the tableau represents ``G C`` (in place).

        Uses ``T'(P) = T(G^dag P G)`` on the generators of the gate qubits.
        """
        if name not in _ARITY:
            raise ValueError(f"unknown Clifford gate {name!r}")
        if len(qubits) != _ARITY[name]:
            raise ValueError(f"{name} takes {_ARITY[name]} qubit(s), got {len(qubits)}")
        self._check_qubits(qubits)
        X, Z = self.ximg, self.zimg
        if name == "H":
            (q,) = qubits
            X[q], Z[q] = Z[q], X[q]
        elif name == "S":
            # S^dag X S = -Y = -i X Z
            (q,) = qubits
            X[q] = multiply(X[q], Z[q]).times_phase(3)
        elif name == "S_DAG":
            # S X S^dag = Y = i X Z
            (q,) = qubits
            X[q] = multiply(X[q], Z[q]).times_phase(1)
        elif name == "X":
            (q,) = qubits
            Z[q] = -Z[q]
        elif name == "Z":
            (q,) = qubits
            X[q] = -X[q]
        elif name == "Y":
            (q,) = qubits
            X[q] = -X[q]
            Z[q] = -Z[q]
        elif name == "CNOT":
            c, t = qubits
            if c == t:
                raise ValueError("CNOT control and target coincide")
            X[c] = multiply(X[c], X[t])
            Z[t] = multiply(Z[c], Z[t])
        else:  # CZ
            a, b = qubits
            if a == b:
                raise ValueError("CZ qubits coincide")
            X[a] = multiply(X[a], Z[b])
            X[b] = multiply(Z[a], X[b])

    def conjugate(self, p: PauliString) -> PauliString:
        """Return ``C^dag p C``."""
        if p.n != self.n:
            raise ValueError(f"Pauli length mismatch: {p.n} vs {self.n}")
        n = self.n
        acc_x = acc_z = 0
        k = p.k
        # product over X factors first, then Z factors, matching X^x Z^z order
        for imgs, bits in ((self.ximg, p.x), (self.zimg, p.z)):
            for q in iter_bits(bits):
                g = imgs[q]
                k += g.k + 2 * (acc_z & g.x).bit_count()
                acc_x ^= g.x
                acc_z ^= g.z
        return PauliString(n, acc_x, acc_z, k)

    def append_pauli_reflection(self, a: PauliString, b: PauliString) -> None:
        """Compose ``C -> C G`` with ``G = (a + b)/sqrt(2)``.

        ``a`` and ``b`` must be anticommuting Hermitian strings; ``G`` is then a
        Hermitian Clifford with ``G a G = b``. Every image ``Q`` becomes
        ``G Q G``: unchanged if ``Q`` commutes with both, negated if it
        anticommutes with both, and ``+-Q a b`` otherwise.
        """
        if commutes(a, b):
            raise ValueError("reflection needs anticommuting strings")
        ab = multiply(a, b)
        for imgs in (self.ximg, self.zimg):
            for q in range(self.n):
                qimg = imgs[q]
                ca = commutes(qimg, a)
                cb = commutes(qimg, b)
                if ca and cb:
                    continue
                if not ca and not cb:
                    imgs[q] = -qimg
                elif ca:
                    imgs[q] = multiply(qimg, ab)
                else:
                    imgs[q] = -multiply(qimg, ab)

    def check_symplectic(self) -> bool:
        n = self.n
        for i in range(n):
            for j in range(n):
                if commutes(self.ximg[i], self.zimg[j]) == (i == j):
                    return False
                if i < j:
                    if not commutes(self.ximg[i], self.ximg[j]):
                        return False
                    if not commutes(self.zimg[i], self.zimg[j]):
                        return False
        return all(p.is_hermitian for p in self.ximg + self.zimg)

    def __str__(self) -> str:
        rows = [f"X{q} -> {self.ximg[q]}" for q in range(self.n)]
        rows += [f"Z{q} -> {self.zimg[q]}" for q in range(self.n)]
        return "\n".join(rows)
