"""Rotated surface code layout and memory-experiment circuits.

Coordinates are doubled: data qubit ``(r, c)`` sits at ``(2r+1, 2c+1)`` and
the face ancilla ``(i, j)`` at ``(2i, 2j)``.  Qubit indices follow raster
order over the doubled grid, so ancilla rows and data rows interleave; that
index is also the MPS chain position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .pauli import PauliString, commutes

X_MEMORY = "x"
Z_MEMORY = "z"

POLICIES = ("gate_edge", "incident_edges", "all_edges")

# CNOT order per ancilla type, as (row offset, col offset) from the face.
# NW=(-1,-1) NE=(-1,0) SW=(0,-1) SE=(0,0) in data coordinates.
_X_ORDER = ((-1, -1), (-1, 0), (0, -1), (0, 0))  # NW, NE, SW, SE
_Z_ORDER = ((-1, -1), (0, -1), (-1, 0), (0, 0))  # NW, SW, NE, SE


@dataclass(frozen=True)
class Stabilizer:
    ancilla: int
    kind: str  # "X" or "Z"
    schedule: tuple  # data qubit (or None) touched at CNOT step 0..3

    @property
    def data(self) -> tuple[int, ...]:
        return tuple(q for q in self.schedule if q is not None)


@dataclass(frozen=True)
class SurfaceCodeLayout:
    d: int
    coords: tuple  # doubled (row, col) per qubit index
    data_qubits: tuple
    x_ancillas: tuple
    z_ancillas: tuple
    stabilizers: tuple  # Stabilizer per ancilla, x_ancillas then z_ancillas
    coupling_edges: tuple  # (ancilla, data) pairs, sorted
    logical_x_support: tuple
    logical_z_support: tuple
    chain_order: dict = field(compare=False)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def ancillas(self) -> tuple:
        return self.x_ancillas + self.z_ancillas

    def stabilizer_of(self, ancilla: int) -> Stabilizer:
        for s in self.stabilizers:
            if s.ancilla == ancilla:
                return s
        raise KeyError(ancilla)

    def stabilizer_pauli(self, stab: Stabilizer) -> PauliString:
        return PauliString.from_sparse(self.n, {q: stab.kind for q in stab.data})


def build_layout(d: int) -> SurfaceCodeLayout:
    if d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be odd and >= 3, got {d}")

    def face_kind(i, j):
        return "X" if (i + j) % 2 == 0 else "Z"

    faces = []
    for i in range(d + 1):
        for j in range(d + 1):
            interior_i = 1 <= i <= d - 1
            interior_j = 1 <= j <= d - 1
            if interior_i and interior_j:
                faces.append((i, j))
            elif interior_j and i in (0, d) and face_kind(i, j) == "X":
                faces.append((i, j))  # top/bottom boundaries host X checks
            elif interior_i and j in (0, d) and face_kind(i, j) == "Z":
                faces.append((i, j))  # left/right boundaries host Z checks

    points = [(2 * r + 1, 2 * c + 1) for r in range(d) for c in range(d)]
    points += [(2 * i, 2 * j) for i, j in faces]
    points.sort()
    index = {pt: q for q, pt in enumerate(points)}

    def data_at(r, c):
        if 0 <= r < d and 0 <= c < d:
            return index[(2 * r + 1, 2 * c + 1)]
        return None

    stabs = {"X": [], "Z": []}
    for i, j in faces:
        kind = face_kind(i, j)
        order = _X_ORDER if kind == "X" else _Z_ORDER
        sched = tuple(data_at(i + dr, j + dc) for dr, dc in order)
        stabs[kind].append(Stabilizer(index[(2 * i, 2 * j)], kind, sched))
    for kind in stabs:
        stabs[kind].sort(key=lambda s: s.ancilla)

    edges = sorted((s.ancilla, q) for kind in "XZ" for s in stabs[kind] for q in s.data)
    data = tuple(sorted(index[pt] for pt in points if pt[0] % 2 == 1))
    return SurfaceCodeLayout(
        d=d,
        coords=tuple(points),
        data_qubits=data,
        x_ancillas=tuple(s.ancilla for s in stabs["X"]),
        z_ancillas=tuple(s.ancilla for s in stabs["Z"]),
        stabilizers=tuple(stabs["X"] + stabs["Z"]),
        coupling_edges=tuple(edges),
        logical_x_support=tuple(data_at(r, 0) for r in range(d)),
        logical_z_support=tuple(data_at(0, c) for c in range(d)),
        chain_order={q: q for q in range(len(points))},
    )


def logical_operator(layout: SurfaceCodeLayout, basis: str) -> PauliString:
    """Weight-d logical X (left column) or logical Z (top row)."""
    basis = _norm_basis(basis)
    if basis == X_MEMORY:
        return PauliString.from_sparse(layout.n, {q: "X" for q in layout.logical_x_support})
    return PauliString.from_sparse(layout.n, {q: "Z" for q in layout.logical_z_support})


def _norm_basis(basis: str) -> str:
    b = basis.lower().replace("_memory", "")
    if b not in (X_MEMORY, Z_MEMORY):
        raise ValueError(f"basis must be 'x' or 'z', got {basis!r}")
    return b


# ---------------------------------------------------------------------------
# circuit IR


@dataclass(frozen=True)
class Op:
    name: str  # PREP_Z, RESET, H, CNOT, M, XTALK
    targets: tuple  # flat qubit list; CNOT/XTALK use consecutive pairs

    def pairs(self):
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t), 2)]


@dataclass
class Timestep:
    ops: list
    noisy: bool = True


@dataclass
class Circuit:
    """Annotated memory-experiment circuit.

    ``detectors`` are tuples of measurement-record indices; the observable is
    either a Pauli evaluated on the final state (``observable_pauli``) or a
    parity of records (``observable_records``).
    """

    n: int
    timesteps: list
    detectors: list
    observable_pauli: PauliString | None = None
    observable_records: tuple | None = None
    basis: str = X_MEMORY
    rounds: int = 0
    readout: str = "final_round"
    detector_info: list = field(default_factory=list)  # (round, ancilla) per detector

    @property
    def num_measurements(self) -> int:
        return sum(len(op.targets) for ts in self.timesteps for op in ts.ops if op.name == "M")

    @property
    def crosstalk_sites(self) -> list:
        out = []
        for t, ts in enumerate(self.timesteps):
            for op in ts.ops:
                if op.name == "XTALK":
                    out.extend((t, pair) for pair in op.pairs())
        return out

    def validate(self) -> None:
        for t, ts in enumerate(self.timesteps):
            used: set = set()
            for op in ts.ops:
                if op.name == "XTALK":
                    continue
                for q in op.targets:
                    if q in used:
                        raise ValueError(f"qubit {q} used twice in timestep {t}")
                    if not 0 <= q < self.n:
                        raise ValueError(f"qubit {q} out of range")
                    used.add(q)
        m = self.num_measurements
        for det in self.detectors:
            if any(not 0 <= r < m for r in det):
                raise ValueError(f"detector {det} references missing records")

    # -- text format --------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"QUBITS {self.n}"]
        for ts in self.timesteps:
            lines.append("TICK" if ts.noisy else "TICK NOISELESS")
            for op in ts.ops:
                lines.append(" ".join([op.name, *map(str, op.targets)]))
        for det in self.detectors:
            lines.append("DETECTOR " + " ".join(map(str, det)))
        if self.observable_pauli is not None:
            lines.append(f"OBSERVABLE PAULI {self.observable_pauli}")
        else:
            lines.append("OBSERVABLE " + " ".join(map(str, self.observable_records)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        n = None
        timesteps: list = []
        detectors = []
        obs_pauli = None
        obs_records = None
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "QUBITS":
                n = int(rest[0])
            elif head == "TICK":
                timesteps.append(Timestep([], noisy=not (rest and rest[0] == "NOISELESS")))
            elif head == "DETECTOR":
                detectors.append(tuple(int(v) for v in rest))
            elif head == "OBSERVABLE":
                if rest and rest[0] == "PAULI":
                    obs_pauli = PauliString.from_text(rest[1])
                else:
                    obs_records = tuple(int(v) for v in rest)
            elif head in ("PREP_Z", "RESET", "H", "CNOT", "M", "XTALK"):
                if not timesteps:
                    raise ValueError("instruction before first TICK")
                timesteps[-1].ops.append(Op(head, tuple(int(v) for v in rest)))
            else:
                raise ValueError(f"unknown instruction {head!r}")
        if n is None:
            raise ValueError("missing QUBITS header")
        circ = cls(n, timesteps, detectors, obs_pauli, obs_records)
        circ.validate()
        return circ


def crosstalk_edges(layout: SurfaceCodeLayout, cnot_pairs: Sequence, policy: str) -> list:
    """Coupling edges that pick up crosstalk in a CNOT timestep."""
    if policy == "gate_edge":
        return [tuple(sorted(p)) for p in cnot_pairs]
    if policy == "incident_edges":
        active = {q for p in cnot_pairs for q in p}
        return [e for e in layout.coupling_edges if e[0] in active or e[1] in active]
    if policy == "all_edges":
        return list(layout.coupling_edges)
    raise ValueError(f"unknown crosstalk policy {policy!r}")


def _extraction_round(layout, noisy, policy, first, crosstalk, basis):
    steps = []
    anc = list(layout.ancillas)
    xanc = list(layout.x_ancillas)
    if first:
        h_targets = xanc + (list(layout.data_qubits) if basis == X_MEMORY else [])
        steps.append(Timestep([Op("PREP_Z", tuple(range(layout.n)))], noisy))
        steps.append(Timestep([Op("H", tuple(sorted(h_targets)))], noisy))
    else:
        steps.append(Timestep([Op("RESET", tuple(sorted(anc)))], noisy))
        steps.append(Timestep([Op("H", tuple(xanc))], noisy))
    for k in range(4):
        pairs = []
        for s in layout.stabilizers:
            q = s.schedule[k]
            if q is None:
                continue
            pairs.append((s.ancilla, q) if s.kind == "X" else (q, s.ancilla))
        pairs.sort()
        ops = [Op("CNOT", tuple(v for p in pairs for v in p))]
        if crosstalk and noisy:
            edges = crosstalk_edges(layout, pairs, policy)
            if edges:
                ops.append(Op("XTALK", tuple(v for e in edges for v in e)))
        steps.append(Timestep(ops, noisy))
    steps.append(Timestep([Op("H", tuple(xanc))], noisy))
    steps.append(Timestep([Op("M", tuple(sorted(anc)))], noisy))
    return steps


def build_memory_circuit(
    layout: SurfaceCodeLayout,
    rounds: int,
    basis: str = X_MEMORY,
    policy: str = "incident_edges",
    crosstalk: bool = True,
    readout: str = "final_round",
) -> Circuit:
    """Memory experiment: ``rounds`` noisy rounds then a closing step.

    ``readout="final_round"`` appends one noise-free extraction round and
    uses the logical Pauli on the final state as the observable.
    ``readout="destructive"`` instead measures every data qubit in the
    memory basis (noisy) and builds the observable from those records.
    """
    basis = _norm_basis(basis)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if policy not in POLICIES:
        raise ValueError(f"unknown crosstalk policy {policy!r}")
    if readout not in ("final_round", "destructive"):
        raise ValueError(f"unknown readout {readout!r}")

    timesteps: list = []
    for r in range(rounds):
        timesteps += _extraction_round(layout, True, policy, r == 0, crosstalk, basis)
    total_rounds = rounds
    if readout == "final_round":
        timesteps += _extraction_round(layout, False, policy, False, False, basis)
        total_rounds += 1

    anc = sorted(layout.ancillas)
    nanc = len(anc)
    pos = {a: i for i, a in enumerate(anc)}

    def rec(rnd, a):
        return rnd * nanc + pos[a]

    match_kind = "X" if basis == X_MEMORY else "Z"
    detectors = []
    info = []
    for s in sorted(layout.stabilizers, key=lambda s: s.ancilla):
        if s.kind == match_kind:
            detectors.append((rec(0, s.ancilla),))
            info.append((0, s.ancilla))
    for rnd in range(1, total_rounds):
        for a in anc:
            detectors.append((rec(rnd - 1, a), rec(rnd, a)))
            info.append((rnd, a))

    obs_pauli = None
    obs_records = None
    if readout == "final_round":
        obs_pauli = logical_operator(layout, basis)
    else:
        data = list(layout.data_qubits)
        if basis == X_MEMORY:
            timesteps.append(Timestep([Op("H", tuple(data))], True))
        timesteps.append(Timestep([Op("M", tuple(data))], True))
        base = total_rounds * nanc
        dpos = {q: base + i for i, q in enumerate(data)}
        for s in sorted(layout.stabilizers, key=lambda s: s.ancilla):
            if s.kind == match_kind:
                detectors.append((rec(total_rounds - 1, s.ancilla), *sorted(dpos[q] for q in s.data)))
                info.append((total_rounds, s.ancilla))
        support = layout.logical_x_support if basis == X_MEMORY else layout.logical_z_support
        obs_records = tuple(sorted(dpos[q] for q in support))

    circ = Circuit(
        n=layout.n,
        timesteps=timesteps,
        detectors=detectors,
        observable_pauli=obs_pauli,
        observable_records=obs_records,
        basis=basis,
        rounds=rounds,
        readout=readout,
        detector_info=info,
    )
    circ.validate()
    return circ


def check_stabilizer_group(layout: SurfaceCodeLayout) -> bool:
    paulis = [layout.stabilizer_pauli(s) for s in layout.stabilizers]
    return all(commutes(a, b) for i, a in enumerate(paulis) for b in paulis[i + 1:])
