import numpy as np
import pytest

from crosstalk_qec.circuits import (
    Circuit,
    build_layout,
    build_memory_circuit,
    check_stabilizer_group,
    logical_operator,
)
from crosstalk_qec.pauli import commutes
from chp_oracle import run_circuit


@pytest.mark.parametrize("d", [3, 5, 7])
def test_layout_counts_and_commutation(d):
    lay = build_layout(d)
    assert len(lay.data_qubits) == d * d
    assert len(lay.x_ancillas) == len(lay.z_ancillas) == (d * d - 1) // 2
    assert lay.n == 2 * d * d - 1
    assert check_stabilizer_group(lay)
    lx, lz = logical_operator(lay, "x"), logical_operator(lay, "z")
    assert not commutes(lx, lz)
    for s in lay.stabilizers:
        sp = lay.stabilizer_pauli(s)
        assert commutes(sp, lx) and commutes(sp, lz)
        assert len(s.data) in (2, 4)


def test_rejects_even_distance():
    with pytest.raises(ValueError):
        build_layout(4)


@pytest.mark.parametrize("basis", ["x", "z"])
@pytest.mark.parametrize("readout", ["final_round", "destructive"])
def test_noiseless_detectors_are_quiet(basis, readout):
    lay = build_layout(3)
    circ = build_memory_circuit(lay, 3, basis, readout=readout)
    for seed in range(3):
        recs, st = run_circuit(circ, lambda kind, qs: None, np.random.default_rng(seed))
        for det in circ.detectors:
            assert sum(recs[r] for r in det) % 2 == 0
        if readout == "final_round":
            lp = circ.observable_pauli
            assert st.expectation({q: lp.letter(q) for q in range(lp.n) if lp.letter(q) != "I"}) == 1
        else:
            assert sum(recs[r] for r in circ.observable_records) % 2 == 0


def test_detector_count_and_final_round_is_noiseless():
    lay = build_layout(3)
    circ = build_memory_circuit(lay, 3, "x")
    assert len(circ.detectors) == 4 + 8 * 3
    assert not circ.timesteps[-1].noisy
    assert all(ts.noisy for ts in circ.timesteps[: 8 * 3])
    assert len(circ.detector_info) == len(circ.detectors)


def test_text_round_trip():
    circ = build_memory_circuit(build_layout(3), 2, "z", "all_edges")
    again = Circuit.from_text(circ.to_text())
    assert again.to_text() == circ.to_text()
    assert again.detectors == circ.detectors


def test_policies_nest():
    lay = build_layout(5)
    sites = {}
    for pol in ("gate_edge", "incident_edges", "all_edges"):
        circ = build_memory_circuit(lay, 1, "x", pol)
        sites[pol] = {(t, tuple(sorted(e))) for t, e in circ.crosstalk_sites}
    assert sites["gate_edge"] <= sites["incident_edges"] <= sites["all_edges"]
    assert len(sites["gate_edge"]) < len(sites["incident_edges"]) < len(sites["all_edges"])
