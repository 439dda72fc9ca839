"""Pauli-frame fault propagation for the Pauli-only noise modes.

One backward pass over a circuit gives, for every noise site and every
fault code, the set of detectors (and the observable) that the fault
flips.  Detector bit ``i`` is detector ``i``; the observable is bit
``num_detectors``.  The table feeds both the decoder graph and the fast
sampler used when no coherent rotation is present.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseProgram, noise_sites, pauli_pair


def _pauli_mask(letter: str, q: int, sx: list, sz: list) -> int:
    if letter == "X":
        return sx[q]
    if letter == "Z":
        return sz[q]
    if letter == "Y":
        return sx[q] ^ sz[q]
    return 0


@dataclass
class FaultTable:
    """``masks[site][code]``: detector/observable flip bitmask of one fault."""

    num_detectors: int
    masks: list

    @property
    def obs_bit(self) -> int:
        return 1 << self.num_detectors

    def syndrome_of(self, faults) -> int:
        m = 0
        for site, code in faults:
            m ^= self.masks[site][code]
        return m


def build_fault_table(circuit) -> FaultTable:
    """Backward sensitivity propagation through the Clifford skeleton."""
    n = circuit.n
    ndet = len(circuit.detectors)
    obs = 1 << ndet
    nrec = circuit.num_measurements
    rec_mask = [0] * nrec
    for i, det in enumerate(circuit.detectors):
        for r in det:
            rec_mask[r] ^= 1 << i
    if circuit.observable_records is not None:
        for r in circuit.observable_records:
            rec_mask[r] ^= obs

    # site ids and record indices per op, in forward order
    sites = noise_sites(circuit)
    plan = []
    sid = rec = 0
    for t, ts in enumerate(circuit.timesteps):
        for op in ts.ops:
            if op.name == "M":
                width = len(op.targets) if ts.noisy else 0
                plan.append((t, op, sid, rec))
                rec += len(op.targets)
            else:
                if not ts.noisy:
                    width = 0
                elif op.name in ("CNOT", "XTALK"):
                    width = len(op.targets) // 2
                else:
                    width = len(op.targets)
                plan.append((t, op, sid, rec))
            sid += width
    if sid != len(sites):
        raise RuntimeError("noise site bookkeeping out of sync")

    sx = [0] * n
    sz = [0] * n
    if circuit.observable_pauli is not None:
        lp = circuit.observable_pauli
        for q in range(n):
            if (lp.x >> q) & 1:
                sz[q] ^= obs
            if (lp.z >> q) & 1:
                sx[q] ^= obs

    masks: list = [None] * len(sites)
    for t, op, first, rec0 in reversed(plan):
        name = op.name
        # faults sit just after their operation, so read them before undoing it
        noisy = circuit.timesteps[t].noisy
        if name == "M":
            for i, q in enumerate(op.targets):
                if noisy:
                    masks[first + i] = [0, rec_mask[rec0 + i]]
                sx[q] ^= rec_mask[rec0 + i]
        elif name in ("PREP_Z", "RESET"):
            for i, q in enumerate(op.targets):
                if noisy:
                    masks[first + i] = [0, sx[q]]
                sx[q] = 0
                sz[q] = 0
        elif name == "H":
            for i, q in enumerate(op.targets):
                if noisy:
                    masks[first + i] = [0, sx[q], sx[q] ^ sz[q], sz[q]]
                sx[q], sz[q] = sz[q], sx[q]
        elif name == "CNOT":
            for i, (c, tq) in enumerate(op.pairs()):
                if noisy:
                    row = [0] * 16
                    for code in range(1, 16):
                        a, b = pauli_pair(code)
                        row[code] = _pauli_mask(a, c, sx, sz) ^ _pauli_mask(b, tq, sx, sz)
                    masks[first + i] = row
                sx[c] ^= sx[tq]
                sz[tq] ^= sz[c]
        elif name == "XTALK":
            if noisy:
                for i, (a, b) in enumerate(op.pairs()):
                    masks[first + i] = [0, sz[a] ^ sz[b]]
        else:
            raise ValueError(f"unknown op {name!r}")
    if any(m is None for m in masks):
        raise RuntimeError("some noise sites were not reached")
    return FaultTable(ndet, masks)


class FrameSampler:
    """Detector and observable samples for Pauli-only noise.

    Uses exactly the fault codes ``NoiseProgram.sample`` draws from a
    shot's uniform table, so it agrees shot-for-shot with a full hybrid
    trajectory driven by the same table.
    """

    def __init__(self, program: NoiseProgram, table: FaultTable | None = None):
        if program.config.coherent:
            raise ValueError("frame sampling needs a Pauli-only noise model")
        self.program = program
        self.table = table if table is not None else build_fault_table(program.circuit)

    def faults(self, u: np.ndarray) -> list:
        codes = self.program.sample(u)
        return [(int(i), int(codes[i])) for i in np.flatnonzero(codes)]

    def sample(self, u: np.ndarray) -> tuple[int, bool]:
        """Return (detector bitmask, observable flipped) for one uniform table."""
        m = self.table.syndrome_of(self.faults(u))
        nd = self.table.num_detectors
        return m & ((1 << nd) - 1), bool((m >> nd) & 1)
