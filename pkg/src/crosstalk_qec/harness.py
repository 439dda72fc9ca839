"""Trajectory runner, coherent logical-error estimator and study drivers.

One shot interprets the memory circuit on a :class:`HybridState`, decodes
the final syndrome, applies the predicted logical correction and reads
``<L>`` on the corrected state.  The per-shot figure of merit is
``sqrt((1 - <L>) / 2) = |sin(theta_i / 2)|`` with ``theta_i = arccos <L>``;
its mean over shots is the logical error rate, and under Pauli-only noise it
is exactly the fraction of decoding failures.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .circuits import Circuit, SurfaceCodeLayout, build_layout, build_memory_circuit, logical_operator
from .decoder import Decoder, build_detector_graph
from .frame import FrameSampler, build_fault_table
from .hybrid import HybridState
from .noise import NoiseConfig, NoiseProgram, fault_pauli
from .pauli import PauliString
from .rng import MEASURE_STREAM, noise_uniforms, shot_generator

SIGN_STREAM = 2
_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines an estimate apart from the seed and shot count."""

    distance: int = 3
    rounds: int | None = None  # defaults to the distance
    basis: str = "x"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    chi_max: int | None = 32
    readout: str = "final_round"

    def __post_init__(self):
        if self.distance < 2:
            raise ValueError("distance must be >= 2")
        if self.basis not in ("x", "z"):
            raise ValueError(f"basis must be 'x' or 'z', got {self.basis!r}")
        if self.chi_max is not None and self.chi_max < 1:
            raise ValueError("chi_max must be >= 1")

    @property
    def num_rounds(self) -> int:
        return self.distance if self.rounds is None else self.rounds

    def with_(self, **kw) -> RunConfig:
        noise_kw = {k: kw.pop(k) for k in list(kw) if k in NoiseConfig.__dataclass_fields__}
        noise = kw.pop("noise", self.noise)
        if noise_kw:
            noise = noise.with_(**noise_kw)
        d = asdict(self)
        d.update(kw)
        d["noise"] = noise
        return RunConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rounds"] = self.num_rounds
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ShotResult:
    shot: int
    syndrome: int  # detector bitmask, bit i = detector i
    prediction: bool
    expectation: float  # <L> after correction
    theta: float
    contribution: float
    max_bond: int
    discarded_weight: float
    observed_flip: bool | None = None  # frame path only

    def syndrome_bits(self, num_detectors: int) -> list[int]:
        return [(self.syndrome >> i) & 1 for i in range(num_detectors)]


@dataclass(frozen=True)
class ExperimentSummary:
    config: RunConfig
    shots: int
    seed: int
    p_l: float
    stderr: float
    mean_max_bond: float
    mean_discarded_weight: float
    wall_time: float
    method: str

    def row(self) -> dict:
        n = self.config.noise
        return {
            "config_hash": self.config.config_hash(),
            "d": self.config.distance,
            "p": n.p,
            "theta": n.theta,
            "mode": n.crosstalk_mode,
            "chi": self.config.chi_max if self.config.chi_max is not None else 0,
            "shots": self.shots,
            "P_L": self.p_l,
            "stderr": self.stderr,
            "mean_max_bond": self.mean_max_bond,
            "mean_discarded_weight": self.mean_discarded_weight,
            "wall_time": self.wall_time,
        }


def contribution_from_expectation(ev: float) -> tuple[float, float]:
    """``(theta_i, |sin(theta_i/2)|)`` from a corrected logical expectation."""
    if not math.isfinite(ev) or abs(ev) > 1.0 + _CLAMP_TOL:
        raise FloatingPointError(f"logical expectation {ev!r} outside [-1, 1]")
    ev = min(1.0, max(-1.0, ev))
    return math.acos(ev), math.sqrt(max(0.0, (1.0 - ev) / 2.0))


def fixed_signs(base_seed: int, program: NoiseProgram) -> np.ndarray:
    """Per-site crosstalk signs shared by every shot of a run (sign_scope=per_site_fixed)."""
    u = shot_generator(base_seed, 0, SIGN_STREAM).random(program.num_sites)
    return np.where(u < 0.5, 1, -1)


class Experiment:
    """Circuit, noise program, fault table and decoder for one configuration.

    Read-only after construction, so shots may run concurrently.
    """

    def __init__(self, config: RunConfig, decoder: Decoder | None = None):
        self.config = config
        noise = config.noise
        self.layout: SurfaceCodeLayout = build_layout(config.distance)
        self.circuit: Circuit = build_memory_circuit(
            self.layout, config.num_rounds, config.basis, noise.crosstalk_policy,
            crosstalk=True, readout=config.readout)
        self.program = NoiseProgram(self.circuit, noise)
        self.table = build_fault_table(self.circuit)
        self._decoder = decoder
        self.logical = logical_operator(self.layout, config.basis)
        # the correction flips the observable, so it is the other logical
        self.correction = logical_operator(self.layout, "z" if config.basis == "x" else "x")
        self._rec_masks = _record_masks(self.circuit)

    @cached_property
    def decoder(self) -> Decoder:
        if self._decoder is None:
            self._decoder = Decoder(build_detector_graph(self.circuit, self.config.noise, self.table))
        return self._decoder

    @cached_property
    def sampler(self) -> FrameSampler:
        return FrameSampler(self.program, self.table)

    @property
    def num_detectors(self) -> int:
        return len(self.circuit.detectors)

    def codes_for(self, base_seed: int, shot: int) -> np.ndarray:
        u = noise_uniforms(base_seed, shot, self.program.num_sites)
        signs = None
        if self.config.noise.sign_scope == "per_site_fixed":
            signs = fixed_signs(base_seed, self.program)
        return self.program.sample(u, signs)


def _record_masks(circuit: Circuit) -> list[int]:
    """Per measurement record, the detectors (and observable bit) it feeds."""
    ndet = len(circuit.detectors)
    masks = [0] * circuit.num_measurements
    for i, det in enumerate(circuit.detectors):
        for r in det:
            masks[r] ^= 1 << i
    if circuit.observable_records is not None:
        for r in circuit.observable_records:
            masks[r] ^= 1 << ndet
    return masks


def codes_from_faults(program: NoiseProgram, faults) -> np.ndarray:
    codes = np.zeros(program.num_sites, dtype=np.int64)
    for site, code in faults:
        codes[site] = code
    return codes


@dataclass
class Trajectory:
    """Raw outcome of interpreting the circuit once."""

    state: HybridState
    records: list
    max_bond: int
    schmidt: np.ndarray | None = None


def simulate(exp: Experiment, codes: np.ndarray, rng: np.random.Generator,
             capture_schmidt: bool = False, absorb: bool = True) -> Trajectory:
    """Run the circuit with the given fault codes on a fresh hybrid state."""
    circ = exp.circuit
    prog = exp.program
    n = circ.n
    sites = prog.sites
    coherent = exp.config.noise.coherent
    theta = exp.config.noise.theta
    st = HybridState(n, chi_max=exp.config.chi_max, rng=rng, absorb=absorb)
    records: list = []
    sid = 0
    max_bond = 1
    spectrum = None
    last_noisy = max((t for t, ts in enumerate(circ.timesteps) if ts.noisy), default=-1)

    def fault(i):
        f = fault_pauli(sites[i], int(codes[i]), n)
        if f is not None:
            st.apply_pauli(f)

    for t, ts in enumerate(circ.timesteps):
        noisy = ts.noisy
        for op in ts.ops:
            name = op.name
            if name in ("PREP_Z", "RESET"):
                for q in op.targets:
                    st.reset_qubit(q)
                    if noisy:
                        fault(sid)
                        sid += 1
            elif name == "H":
                for q in op.targets:
                    st.apply_clifford("H", q)
                    if noisy:
                        fault(sid)
                        sid += 1
            elif name == "CNOT":
                for a, b in op.pairs():
                    st.apply_clifford("CNOT", a, b)
                    if noisy:
                        fault(sid)
                        sid += 1
            elif name == "M":
                for q in op.targets:
                    bit = int(st.measure_z(q) == -1)
                    if noisy:
                        bit ^= int(codes[sid] != 0)
                        sid += 1
                    records.append(bit)
            elif name == "XTALK":
                if not noisy:
                    continue
                for a, b in op.pairs():
                    c = int(codes[sid])
                    sid += 1
                    if c == 0:
                        continue
                    zz = PauliString.from_sparse(n, {a: "Z", b: "Z"})
                    if coherent:
                        st.apply_pauli_rotation(c * theta, zz)
                    else:
                        st.apply_pauli(zz)
                max_bond = max(max_bond, st.mps.max_bond())
            else:
                raise ValueError(f"unknown op {name!r}")
        if capture_schmidt and t == last_noisy:
            spectrum = st.mps.schmidt_spectrum(n // 2 - 1) ** 2
    if sid != prog.num_sites:
        raise RuntimeError("noise sites out of sync with the circuit")
    return Trajectory(st, records, max_bond, spectrum)


def syndrome_from_records(exp: Experiment, records: list) -> tuple[int, bool]:
    m = 0
    masks = exp._rec_masks
    for r, bit in enumerate(records):
        if bit:
            m ^= masks[r]
    nd = exp.num_detectors
    return m & ((1 << nd) - 1), bool((m >> nd) & 1)


def run_shot(exp: Experiment, base_seed: int, shot: int, faults=None,
             capture_schmidt: bool = False) -> tuple[ShotResult, Trajectory]:
    """Full hybrid trajectory, decode and corrected ``<L>`` for one shot.

    ``faults`` replaces the sampled fault pattern by an explicit list of
    ``(site id, code)`` pairs; crosstalk rotations still follow the sampled
    signs in the coherent modes.
    """
    codes = exp.codes_for(base_seed, shot)
    if faults is not None:
        fixed = codes_from_faults(exp.program, faults)
        if exp.config.noise.coherent:
            xi = exp.program.xtalk_ids
            fixed[xi] = codes[xi]
        codes = fixed
    traj = simulate(exp, codes, shot_generator(base_seed, shot, MEASURE_STREAM), capture_schmidt)
    syndrome, obs_flip = syndrome_from_records(exp, traj.records)
    prediction = exp.decoder.decode(syndrome).prediction
    st = traj.state
    if exp.circuit.readout == "destructive":
        ev = -1.0 if obs_flip ^ prediction else 1.0
    else:
        if prediction:
            st.apply_pauli(exp.correction)
        ev = st.expectation_logical(exp.logical)
    theta, contrib = contribution_from_expectation(ev)
    res = ShotResult(shot, syndrome, prediction, ev, theta, contrib, traj.max_bond,
                     float(st.mps.discarded_weight))
    return res, traj


def frame_shot(exp: Experiment, base_seed: int, shot: int) -> ShotResult:
    """Pauli-only shot through the frame sampler (no state simulation)."""
    u = noise_uniforms(base_seed, shot, exp.program.num_sites)
    syndrome, obs_flip = exp.sampler.sample(u)
    prediction = exp.decoder.decode(syndrome).prediction
    failed = prediction != obs_flip
    ev = -1.0 if failed else 1.0
    theta, contrib = contribution_from_expectation(ev)
    return ShotResult(shot, syndrome, prediction, ev, theta, contrib, 1, 0.0, obs_flip)


def _choose_method(config: RunConfig, method: str) -> str:
    if method == "auto":
        return "frame" if config.noise.pauli_only else "hybrid"
    if method == "frame" and not config.noise.pauli_only:
        raise ValueError("frame method needs Pauli-only noise")
    if method not in ("frame", "hybrid"):
        raise ValueError(f"unknown method {method!r}")
    return method


def run_shots(exp: Experiment, shots: int, base_seed: int, threads: int = 1,
              method: str = "auto") -> list[ShotResult]:
    """Shots ``0..shots-1`` in shot order, independent of the worker count."""
    if shots < 1:
        raise ValueError("need at least one shot")
    method = _choose_method(exp.config, method)
    exp.decoder  # build once before workers start
    if method == "frame":
        exp.sampler

        def one(s):
            return frame_shot(exp, base_seed, s)
    else:
        def one(s):
            return run_shot(exp, base_seed, s)[0]

    if threads <= 1:
        return [one(s) for s in range(shots)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(shots)))


def summarize(exp: Experiment, results: list[ShotResult], seed: int, wall: float,
              method: str) -> ExperimentSummary:
    n = len(results)
    c = np.array([r.contribution for r in results])
    mean = math.fsum(c) / n
    stderr = float(np.std(c, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ExperimentSummary(
        config=exp.config, shots=n, seed=seed, p_l=mean, stderr=stderr,
        mean_max_bond=math.fsum(r.max_bond for r in results) / n,
        mean_discarded_weight=math.fsum(r.discarded_weight for r in results) / n,
        wall_time=wall, method=method)


def estimate_PL(config: RunConfig, shots: int, base_seed: int = 0, threads: int = 1,
                method: str = "auto", experiment: Experiment | None = None) -> ExperimentSummary:
    """Mean contribution and its standard error over ``shots`` shots."""
    exp = experiment if experiment is not None else Experiment(config)
    method = _choose_method(config, method)
    t0 = time.perf_counter()
    results = run_shots(exp, shots, base_seed, threads, method)
    return summarize(exp, results, base_seed, time.perf_counter() - t0, method)


# ---------------------------------------------------------------------------
# studies


@dataclass(frozen=True)
class Crossing:
    d_small: int
    d_large: int
    p: float | None  # None when the grid does not bracket a crossing

    def describe(self) -> str:
        if self.p is None:
            return f"d={self.d_small}/{self.d_large}: no crossing in range"
        return f"d={self.d_small}/{self.d_large}: crossing at p={self.p:.6g}"


def find_crossing(p_grid, pl_small, pl_large) -> float | None:
    """First sign change of ``log P_L(d_large) - log P_L(d_small)``, interpolated in log p."""
    ps = list(p_grid)
    if len(ps) < 2:
        return None
    diffs = []
    for a, b in zip(pl_small, pl_large):
        if a > 0 and b > 0:
            diffs.append(math.log(b) - math.log(a))
        else:
            diffs.append(b - a)
    for i in range(len(ps) - 1):
        f0, f1 = diffs[i], diffs[i + 1]
        if f0 == 0.0:
            return ps[i]
        if f0 < 0.0 < f1:
            x0, x1 = math.log(ps[i]), math.log(ps[i + 1])
            return math.exp(x0 + (x1 - x0) * (-f0) / (f1 - f0))
    if diffs[-1] == 0.0:
        return ps[-1]
    return None


@dataclass
class SweepResult:
    p_grid: list
    distances: list
    summaries: dict  # (d, p) -> ExperimentSummary
    crossings: list

    def rows(self) -> list[dict]:
        return [self.summaries[(d, p)].row() for d in self.distances for p in self.p_grid]


def sweep(p_grid, distances, config: RunConfig, shots: int, base_seed: int = 0,
          threads: int = 1, method: str = "auto") -> SweepResult:
    distances = sorted(distances)
    if len(distances) < 2:
        raise ValueError("sweep needs at least two distances")
    p_grid = sorted(p_grid)
    out = {}
    for d in distances:
        for p in p_grid:
            cfg = config.with_(distance=d, p=p)
            out[(d, p)] = estimate_PL(cfg, shots, base_seed, threads, method)
    crossings = []
    for d1, d2 in zip(distances, distances[1:]):
        a = [out[(d1, p)].p_l for p in p_grid]
        b = [out[(d2, p)].p_l for p in p_grid]
        crossings.append(Crossing(d1, d2, find_crossing(p_grid, a, b)))
    return SweepResult(p_grid, distances, out, crossings)


@dataclass
class SchmidtReport:
    config: RunConfig
    shots: int
    spectrum: np.ndarray  # mean lambda^2 by rank

    def fit(self, floor: float = 1e-14) -> tuple[float, float, int]:
        """Least-squares line through ``log lambda^2`` vs rank: (slope, R^2, points)."""
        y = self.spectrum
        keep = y > floor
        r = np.flatnonzero(keep).astype(float)
        if r.size < 2:
            return 0.0, 1.0, int(r.size)
        ly = np.log(y[keep])
        slope, icpt = np.polyfit(r, ly, 1)
        resid = ly - (slope * r + icpt)
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
        return float(slope), r2, int(r.size)


def schmidt_report(config: RunConfig, shots: int, base_seed: int = 0, threads: int = 1) -> SchmidtReport:
    """Mean squared Schmidt values at the central cut after the last noisy round."""
    exp = Experiment(config)
    exp.decoder

    def one(s):
        return run_shot(exp, base_seed, s, capture_schmidt=True)[1].schmidt

    if threads <= 1:
        spectra = [one(s) for s in range(shots)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            spectra = list(pool.map(one, range(shots)))
    width = max(len(s) for s in spectra)
    acc = np.zeros(width)
    for s in spectra:
        acc[: len(s)] += s
    return SchmidtReport(config, shots, acc / shots)


def truncation_study(config: RunConfig, chi_list, shots: int, base_seed: int = 0,
                     threads: int = 1) -> list[ExperimentSummary]:
    """``estimate_PL`` per bond cap, all sharing the same shot seeds and decoder."""
    base = Experiment(config)
    out = []
    for chi in chi_list:
        cfg = config.with_(chi_max=chi)
        exp = Experiment(cfg, decoder=base.decoder)
        out.append(estimate_PL(cfg, shots, base_seed, threads, method="hybrid", experiment=exp))
    return out


__all__ = [
    "RunConfig", "ShotResult", "ExperimentSummary", "Experiment", "Crossing", "SweepResult",
    "SchmidtReport", "contribution_from_expectation", "run_shot", "frame_shot", "run_shots",
    "estimate_PL", "sweep", "find_crossing", "schmidt_report", "truncation_study", "simulate",
    "syndrome_from_records", "codes_from_faults",
]
