"""Noise configuration, channel sampling and lowering to simulator operations.

Every stochastic decision in a shot is read from a table of uniforms
``u[site, 0:2]`` indexed by the noise-site id, so a fault pattern is a pure
function of (random stream, location).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .pauli import PauliString

CROSSTALK_MODES = ("none", "coherent", "random_sign", "pta")
SIGN_SCOPES = ("per_site_per_shot", "per_site_fixed")

# Pauli letters indexed 0..3 = I, X, Y, Z
_LETTERS = "IXYZ"


@dataclass(frozen=True)
class NoiseConfig:
    p: float = 0.0
    ratio_1q: float = 0.1
    ratio_2q: float = 1.0
    ratio_reset: float = 2.0
    ratio_meas: float = 5.0
    theta: float = 1e-3
    j_zz: float = 0.0
    t_g: float = 0.0
    crosstalk_mode: str = "none"
    crosstalk_policy: str = "incident_edges"
    sign_scope: str = "per_site_per_shot"

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.2:
            raise ValueError(f"p must lie in [0, 0.2], got {self.p}")
        if not math.isfinite(self.theta) or abs(self.theta) >= math.pi / 2:
            raise ValueError(f"theta must be finite with |theta| < pi/2, got {self.theta}")
        if self.crosstalk_mode not in CROSSTALK_MODES:
            raise ValueError(f"unknown crosstalk mode {self.crosstalk_mode!r}")
        if self.crosstalk_policy not in ("gate_edge", "incident_edges", "all_edges"):
            raise ValueError(f"unknown crosstalk policy {self.crosstalk_policy!r}")
        if self.sign_scope not in SIGN_SCOPES:
            raise ValueError(f"unknown sign scope {self.sign_scope!r}")
        for r in self.rates():
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"derived rate {r} outside [0, 1]")

    def rates(self) -> tuple[float, float, float, float]:
        return (self.ratio_1q * self.p, self.ratio_2q * self.p,
                self.ratio_reset * self.p, self.ratio_meas * self.p)

    @property
    def coherent(self) -> bool:
        return self.crosstalk_mode in ("coherent", "random_sign") and self.theta != 0.0

    @property
    def pauli_only(self) -> bool:
        return not self.coherent

    def with_(self, **kw) -> NoiseConfig:
        return replace(self, **kw)

    # -- flat key/value file ------------------------------------------------

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> NoiseConfig:
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in types:
                raise ValueError(f"bad config line {raw!r}")
            kw[key] = val if types[key] in ("str", str) else float(val)
        return cls(**kw)


def scaled_rates(p: float, config: NoiseConfig | None = None) -> dict[str, float]:
    cfg = (config or NoiseConfig()).with_(p=p)
    p1, p2, pr, pm = cfg.rates()
    return {"p1": p1, "p2": p2, "pR": pr, "pM": pm}


def theta_from_hardware(j_zz: float, t_g: float) -> float:
    """Crosstalk angle as the plain product ``J_ZZ * t_g`` (no 2*pi factor)."""
    if j_zz < 0 or t_g < 0:
        raise ValueError("coupling and gate time must be non-negative")
    return j_zz * t_g


def pauli_pair(index: int) -> tuple[str, str]:
    """Map 1..15 to the non-identity two-qubit Paulis in (first, second) order."""
    return _LETTERS[index // 4], _LETTERS[index % 4]


def sample_depolarizing(arity: int, rate: float, rng: np.random.Generator,
                        qubits: tuple | None = None, n: int | None = None):
    """Draw one depolarizing fault: ``None`` or a uniform non-identity Pauli.

    With ``qubits``/``n`` the fault is returned as a :class:`PauliString`,
    otherwise as a letter string such as ``"XZ"``.
    """
    if arity not in (1, 2):
        raise ValueError("arity must be 1 or 2")
    u0, u1 = rng.random(2)
    code = depolarizing_code(arity, rate, u0, u1)
    if code == 0:
        return None
    letters = _LETTERS[code] if arity == 1 else "".join(pauli_pair(code))
    if qubits is None:
        return letters
    return PauliString.from_sparse(n, [(q, c) for q, c in zip(qubits, letters) if c != "I"])


def depolarizing_code(arity: int, rate: float, u0: float, u1: float) -> int:
    if u0 >= rate:
        return 0
    m = 3 if arity == 1 else 15
    return 1 + min(int(u1 * m), m - 1)


def lower_measurement_noise(bit: int, p_m: float, rng: np.random.Generator) -> int:
    return bit ^ int(rng.random() < p_m)


def lower_reset_noise(qubit: int, p_r: float, rng: np.random.Generator):
    """``("X", qubit)`` with probability ``p_r`` else ``None``."""
    return ("X", qubit) if rng.random() < p_r else None


def lower_crosstalk(edge: tuple, config: NoiseConfig, rng: np.random.Generator):
    """Turn one crosstalk site into a simulator operation.

    Returns ``None`` (no-op), ``("rotation", angle, edge)`` for the coherent
    modes, or ``("pauli", "ZZ", edge)`` for a twirled hit.
    """
    u0, u1 = rng.random(2)
    return crosstalk_action(config, u0, u1, edge)


def crosstalk_action(config: NoiseConfig, u0: float, u1: float, edge):
    mode = config.crosstalk_mode
    if mode == "none" or config.theta == 0.0:
        return None
    if mode == "coherent":
        return ("rotation", config.theta, edge)
    if mode == "random_sign":
        return ("rotation", config.theta if u1 < 0.5 else -config.theta, edge)
    if u0 < math.sin(config.theta) ** 2:
        return ("pauli", "ZZ", edge)
    return None


# ---------------------------------------------------------------------------
# noise sites of a circuit

DEPOL1, DEPOL2, RESET, MEAS, XTALK = range(5)
SITE_KINDS = ("depol1", "depol2", "reset", "meas", "xtalk")


@dataclass(frozen=True)
class NoiseSite:
    kind: int
    qubits: tuple
    timestep: int
    record: int = -1  # measurement record index for MEAS sites


def noise_sites(circuit) -> list[NoiseSite]:
    """All fault locations in execution order; the list index is the site id."""
    sites = []
    rec = 0
    for t, ts in enumerate(circuit.timesteps):
        for op in ts.ops:
            if op.name in ("PREP_Z", "RESET"):
                if ts.noisy:
                    sites += [NoiseSite(RESET, (q,), t) for q in op.targets]
            elif op.name == "H":
                if ts.noisy:
                    sites += [NoiseSite(DEPOL1, (q,), t) for q in op.targets]
            elif op.name == "CNOT":
                if ts.noisy:
                    sites += [NoiseSite(DEPOL2, pair, t) for pair in op.pairs()]
            elif op.name == "M":
                for q in op.targets:
                    if ts.noisy:
                        sites.append(NoiseSite(MEAS, (q,), t, rec))
                    rec += 1
            elif op.name == "XTALK":
                if ts.noisy:
                    sites += [NoiseSite(XTALK, pair, t) for pair in op.pairs()]
    return sites


class NoiseProgram:
    """Per-site rates for a (circuit, config) pair plus vectorized sampling.

    ``sample(u)`` maps the uniform table to integer fault codes:
    depol1 0..3 (I,X,Y,Z), depol2 0..15 (``pauli_pair``), reset/meas 0/1,
    xtalk 0/1 for a twirled ZZ hit, or the rotation sign (+1/-1) in the
    coherent modes.
    """

    def __init__(self, circuit, config: NoiseConfig):
        self.circuit = circuit
        self.config = config
        self.sites = noise_sites(circuit)
        p1, p2, pr, pm = config.rates()
        kinds = np.array([s.kind for s in self.sites], dtype=np.int64)
        self.kinds = kinds
        rate = np.zeros(len(self.sites))
        rate[kinds == DEPOL1] = p1
        rate[kinds == DEPOL2] = p2
        rate[kinds == RESET] = pr
        rate[kinds == MEAS] = pm
        if config.crosstalk_mode == "pta":
            rate[kinds == XTALK] = math.sin(config.theta) ** 2
        self.rates = rate
        mult = np.ones(len(self.sites), dtype=np.int64)
        mult[kinds == DEPOL1] = 3
        mult[kinds == DEPOL2] = 15
        self.mult = mult
        self.xtalk_ids = np.flatnonzero(kinds == XTALK)

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    def sample(self, u: np.ndarray, fixed_signs: np.ndarray | None = None) -> np.ndarray:
        u0, u1 = u[:, 0], u[:, 1]
        hit = u0 < self.rates
        codes = np.where(hit, 1 + np.minimum((u1 * self.mult).astype(np.int64), self.mult - 1), 0)
        if self.config.coherent:
            xi = self.xtalk_ids
            if self.config.crosstalk_mode == "coherent":
                codes[xi] = 1
            elif self.config.sign_scope == "per_site_fixed" and fixed_signs is not None:
                codes[xi] = fixed_signs[xi]
            else:
                codes[xi] = np.where(u1[xi] < 0.5, 1, -1)
        return codes

    def fault_list(self, codes: np.ndarray) -> list[tuple[int, int]]:
        """Sparse (site id, code) list of the non-trivial Pauli faults."""
        out = []
        coherent = self.config.coherent
        for i in np.flatnonzero(codes):
            if coherent and self.kinds[i] == XTALK:
                continue
            out.append((int(i), int(codes[i])))
        return out


def fault_pauli(site: NoiseSite, code: int, n: int) -> PauliString | None:
    """Physical Pauli applied to the state by a sampled fault (None for record flips)."""
    if code == 0 or site.kind == MEAS:
        return None
    if site.kind == DEPOL1:
        return PauliString.from_sparse(n, {site.qubits[0]: _LETTERS[code]})
    if site.kind == DEPOL2:
        a, b = pauli_pair(code)
        return PauliString.from_sparse(n, [(q, c) for q, c in zip(site.qubits, (a, b)) if c != "I"])
    if site.kind == RESET:
        return PauliString.from_sparse(n, {site.qubits[0]: "X"})
    return PauliString.from_sparse(n, {site.qubits[0]: "Z", site.qubits[1]: "Z"})
