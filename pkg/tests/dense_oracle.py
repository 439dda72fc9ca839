"""Brute-force state-vector simulator used as an independent test oracle.

Qubit 0 is the most significant bit of the basis index, matching
``PauliString.to_matrix``.
"""

import numpy as np

H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S2 = np.diag([1, 1j])
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]])
Z2 = np.diag([1.0 + 0j, -1.0])
GATES_1Q = {"H": H2, "S": S2, "S_DAG": S2.conj(), "X": X2, "Y": Y2, "Z": Z2}


class DenseState:
    def __init__(self, n):
        self.n = n
        self.psi = np.zeros(2**n, dtype=complex)
        self.psi[0] = 1.0

    def _view(self):
        return self.psi.reshape((2,) * self.n)

    def apply_1q(self, u, q):
        t = np.tensordot(u, self._view(), axes=(1, q))
        self.psi = np.moveaxis(t, 0, q).reshape(-1)

    def apply_gate(self, name, *qs):
        if name in GATES_1Q:
            self.apply_1q(GATES_1Q[name], qs[0])
            return
        a, b = qs
        t = self._view().copy()
        idx = [slice(None)] * self.n
        idx[a] = 1
        sub = t[tuple(idx)]
        # b's axis index shifts down by one when a < b
        ax = b - 1 if a < b else b
        if name == "CNOT":
            sub = np.flip(sub, axis=ax)
        elif name == "CZ":
            j = [slice(None)] * (self.n - 1)
            j[ax] = 1
            sub = sub.copy()
            sub[tuple(j)] *= -1
        else:
            raise ValueError(name)
        t[tuple(idx)] = sub
        self.psi = t.reshape(-1)

    def apply_matrix(self, m):
        self.psi = m @ self.psi

    def apply_rotation(self, theta, pmat):
        self.psi = np.cos(theta) * self.psi + 1j * np.sin(theta) * (pmat @ self.psi)

    def prob_z(self, q, outcome):
        v = self._view()
        bit = 0 if outcome == 1 else 1
        sub = np.take(v, bit, axis=q)
        return float(np.vdot(sub, sub).real)

    def project_z(self, q, outcome):
        v = self._view().copy()
        bit = 1 if outcome == 1 else 0
        idx = [slice(None)] * self.n
        idx[q] = bit
        v[tuple(idx)] = 0
        self.psi = v.reshape(-1)
        nrm = np.linalg.norm(self.psi)
        self.psi /= nrm

    def expectation(self, pmat):
        return complex(np.vdot(self.psi, pmat @ self.psi))
