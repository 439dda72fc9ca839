import numpy as np
import pytest

from crosstalk_qec.circuits import build_layout, build_memory_circuit
from crosstalk_qec.frame import FrameSampler, build_fault_table
from crosstalk_qec.noise import MEAS, NoiseConfig, NoiseProgram, fault_pauli
from chp_oracle import run_circuit


def _chp_single_fault(circ, prog, site, code, seed):
    """Detector mask and observable flip of one injected fault, by CHP simulation."""
    counter = iter(range(prog.num_sites))

    def fault_at(kind, qs):
        i = next(counter)
        if i != site:
            return None
        if prog.sites[i].kind == MEAS:
            return True
        p = fault_pauli(prog.sites[i], code, circ.n)
        return {q: p.letter(q) for q in range(circ.n) if p.letter(q) != "I"}

    recs, st = run_circuit(circ, fault_at, np.random.default_rng(seed))
    mask = 0
    for i, det in enumerate(circ.detectors):
        if sum(recs[r] for r in det) % 2:
            mask |= 1 << i
    if circ.observable_pauli is not None:
        lp = circ.observable_pauli
        obs = st.expectation({q: lp.letter(q) for q in range(lp.n) if lp.letter(q) != "I"}) == -1
    else:
        obs = sum(recs[r] for r in circ.observable_records) % 2 == 1
    return mask, obs


@pytest.mark.parametrize("basis,readout", [("x", "final_round"), ("z", "final_round"),
                                           ("x", "destructive")])
def test_fault_table_matches_stabilizer_simulation(basis, readout):
    circ = build_memory_circuit(build_layout(3), 2, basis, "incident_edges", readout=readout)
    prog = NoiseProgram(circ, NoiseConfig(p=0.01, theta=0.1, crosstalk_mode="pta"))
    table = build_fault_table(circ)
    rng = np.random.default_rng(1)
    for trial in range(120):
        site = int(rng.integers(prog.num_sites))
        code = int(rng.integers(1, prog.mult[site] + 1))
        mask, obs = _chp_single_fault(circ, prog, site, code, trial)
        m = table.masks[site][code]
        assert m & ((1 << len(circ.detectors)) - 1) == mask
        assert bool(m >> len(circ.detectors) & 1) == obs


def test_sampler_refuses_coherent_noise():
    circ = build_memory_circuit(build_layout(3), 1, "x")
    prog = NoiseProgram(circ, NoiseConfig(p=0.01, theta=0.1, crosstalk_mode="coherent"))
    with pytest.raises(ValueError):
        FrameSampler(prog)


def test_sampler_noise_free_is_silent():
    circ = build_memory_circuit(build_layout(3), 2, "x")
    fs = FrameSampler(NoiseProgram(circ, NoiseConfig(p=0.0)))
    assert fs.sample(np.random.default_rng(0).random((fs.program.num_sites, 2))) == (0, False)
