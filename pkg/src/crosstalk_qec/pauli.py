"""Phased Pauli strings in symplectic form.

A string is stored as two Python integers used as bit sets (bit ``q`` is
qubit ``q``) plus a phase exponent ``k`` so that the operator is

    i**k * prod_q X_q**x_q * prod_q Z_q**z_q

With this layout ``Y = i X Z``: a site holding both an X and a Z bit
contributes ``X Z = -i Y``. Multiplication and commutation are a handful of
integer ops regardless of ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

_PHASE_VALUES = (1, 1j, -1, -1j)
_PHASE_TEXT = ("+", "+i", "-", "-i")

_I2 = np.eye(2, dtype=complex)
_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
_XZ2 = _X2 @ _Z2

# (x, z) -> 2x2 matrix of X**x Z**z, used for dense rendering and MPS sites.
SITE_MATRICES = {
    (0, 0): _I2,
    (1, 0): _X2,
    (0, 1): _Z2,
    (1, 1): _XZ2,
}


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True, slots=True)
class PauliString:
    """Immutable phased Pauli operator on ``n`` qubits."""

    n: int
    x: int = 0
    z: int = 0
    k: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"PauliString needs n >= 1, got {self.n}")
        mask = (1 << self.n) - 1
        if (self.x | self.z) & ~mask:
            raise ValueError("bits set beyond qubit count")
        object.__setattr__(self, "k", self.k & 3)

    # -- construction -------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def from_text(cls, text: str) -> PauliString:
        """Parse ``"+iXYZI"``-style text; the leading sign is optional."""
        s = text.strip()
        k = 0
        if s.startswith("+"):
            s = s[1:]
        elif s.startswith("-"):
            k = 2
            s = s[1:]
        if s.startswith("i"):
            k += 1
            s = s[1:]
        x = z = 0
        ny = 0
        for q, ch in enumerate(s):
            if ch in "I_":
                continue
            if ch == "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
                ny += 1
            else:
                raise ValueError(f"bad Pauli character {ch!r} in {text!r}")
        # each Y = i X Z
        return cls(len(s), x, z, k + ny)

    @classmethod
    def from_sparse(cls, n: int, ops: dict[int, str] | Iterable[tuple[int, str]], sign: int = 1) -> PauliString:
        """Build from ``{qubit: 'X'|'Y'|'Z'}`` with an overall sign of +1 or -1."""
        items = ops.items() if isinstance(ops, dict) else ops
        x = z = 0
        ny = 0
        for q, ch in items:
            if not 0 <= q < n:
                raise IndexError(f"qubit {q} out of range for n={n}")
            if ch == "X":
                x ^= 1 << q
            elif ch == "Z":
                z ^= 1 << q
            elif ch == "Y":
                x ^= 1 << q
                z ^= 1 << q
                ny += 1
            elif ch != "I":
                raise ValueError(f"bad Pauli character {ch!r}")
        return cls(n, x, z, ny + (0 if sign == 1 else 2))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, hermitian: bool = False) -> PauliString:
        x = int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1)
        z = int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1)
        k = int(rng.integers(4))
        if hermitian:
            k = 2 * int(rng.integers(2)) + _popcount(x & z)
        return cls(n, x, z, k)

    # -- algebra ------------------------------------------------------------

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, self.k + 2)

    def times_phase(self, k: int) -> PauliString:
        """Multiply by ``i**k``."""
        return PauliString(self.n, self.x, self.z, self.k + k)

    @property
    def phase(self) -> complex:
        """Coefficient in front of ``prod X**x Z**z``."""
        return _PHASE_VALUES[self.k]

    @property
    def display_k(self) -> int:
        """Phase exponent when the string is written with Y letters."""
        return (self.k - _popcount(self.x & self.z)) & 3

    @property
    def is_hermitian(self) -> bool:
        return self.display_k % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings written in XYZ letters."""
        if not self.is_hermitian:
            raise ValueError(f"{self} is not Hermitian")
        return 1 if self.display_k == 0 else -1

    @property
    def support(self) -> int:
        return self.x | self.z

    def weight(self) -> int:
        return weight(self)

    def is_identity_up_to_phase(self) -> bool:
        return not (self.x or self.z)

    def bits(self, q: int) -> tuple[int, int]:
        return (self.x >> q) & 1, (self.z >> q) & 1

    def letter(self, q: int) -> str:
        return "IZXY"[((self.x >> q) & 1) * 2 + ((self.z >> q) & 1)]

    # -- rendering ----------------------------------------------------------

    def __str__(self) -> str:
        body = "".join(self.letter(q) for q in range(self.n))
        return _PHASE_TEXT[self.display_k] + body

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix; qubit 0 is the most significant factor."""
        if self.n > 12:
            raise ValueError("dense rendering limited to n <= 12")
        out = np.array([[1.0 + 0j]])
        for q in range(self.n):
            out = np.kron(out, SITE_MATRICES[self.bits(q)])
        return self.phase * out


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise ValueError(f"Pauli length mismatch: {a.n} vs {b.n}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a @ b`` with exact phase."""
    _check_sizes(a, b)
    # Z^za X^xb = (-1)^|za & xb| X^xb Z^za
    k = a.k + b.k + 2 * _popcount(a.z & b.x)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, k)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_sizes(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def weight(p: PauliString) -> int:
    return _popcount(p.x | p.z)


def iter_bits(v: int):
    """Yield set bit positions of ``v`` in increasing order."""
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low
