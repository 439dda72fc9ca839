import math

import numpy as np
import pytest

from crosstalk_qec.harness import (
    Experiment,
    RunConfig,
    contribution_from_expectation,
    estimate_PL,
    find_crossing,
    frame_shot,
    run_shot,
    run_shots,
    schmidt_report,
    sweep,
    truncation_study,
)
from crosstalk_qec.noise import DEPOL2, NoiseConfig, pauli_pair


def cfg(mode="none", p=0.004, theta=0.05, d=3, **kw):
    return RunConfig(distance=d, noise=NoiseConfig(p=p, theta=theta, crosstalk_mode=mode), **kw)


def test_noise_free_contribution_is_zero():
    for mode in ("none", "coherent"):
        exp = Experiment(cfg(mode, p=0.0, theta=0.0))
        res, _ = run_shot(exp, 0, 0)
        assert res.contribution == 0.0 and res.expectation == pytest.approx(1.0)
    assert estimate_PL(cfg(p=0.0), 50, 1).p_l == 0.0


@pytest.mark.parametrize("basis", ["x", "z"])
def test_injected_data_fault_is_corrected(basis):
    noisy = Experiment(cfg(p=0.001, basis=basis))
    exp = Experiment(cfg(p=0.0, theta=0.0, basis=basis), decoder=noisy.decoder)
    data = set(exp.layout.data_qubits)
    bad = "Z" if basis == "x" else "X"
    steps = sorted({s.timestep for s in exp.program.sites if s.kind == DEPOL2})
    mid = steps[len(steps) // 2]
    tried = 0
    for s, site in enumerate(exp.program.sites):
        if site.kind != DEPOL2 or site.timestep != mid:
            continue
        for code in range(1, 16):
            letters = pauli_pair(code)
            hit = [(q, ltr) for q, ltr in zip(site.qubits, letters) if ltr != "I"]
            if len(hit) == 1 and hit[0][0] in data and hit[0][1] == bad:
                res, _ = run_shot(exp, 0, 0, faults=[(s, code)])
                assert res.syndrome != 0 and res.contribution == 0.0
                tried += 1
    assert tried >= 4


def test_pta_hybrid_is_binary_and_matches_frame():
    exp = Experiment(cfg("pta", p=0.006, theta=0.08))
    for shot in range(150):
        h, _ = run_shot(exp, 5, shot)
        f = frame_shot(exp, 5, shot)
        assert h.contribution in (0.0, 1.0)
        assert abs(abs(h.expectation) - 1.0) < 1e-9
        assert (h.syndrome, h.prediction, h.contribution) == (f.syndrome, f.prediction, f.contribution)


def test_coherent_contribution_invariant():
    exp = Experiment(cfg("coherent", p=0.004, theta=0.05))
    for shot in range(3):
        r, _ = run_shot(exp, 2, shot)
        assert r.contribution == pytest.approx(math.sqrt((1 - r.expectation) / 2), abs=1e-12)
        assert r.theta == pytest.approx(math.acos(max(-1.0, min(1.0, r.expectation))))
        assert 0.0 <= r.contribution <= 1.0 and r.max_bond > 1


def test_clamp_rule():
    assert contribution_from_expectation(1.0 + 5e-10) == (0.0, 0.0)
    with pytest.raises(FloatingPointError):
        contribution_from_expectation(1.0 + 2e-9)
    with pytest.raises(FloatingPointError):
        contribution_from_expectation(float("nan"))


def test_estimates_independent_of_threads():
    c = cfg("coherent", p=0.004, theta=0.05, chi_max=8)
    a = estimate_PL(c, 4, 3, threads=1)
    b = estimate_PL(c, 4, 3, threads=3)
    assert (a.p_l, a.stderr, a.mean_max_bond, a.mean_discarded_weight) == \
        (b.p_l, b.stderr, b.mean_max_bond, b.mean_discarded_weight)
    f1 = estimate_PL(cfg(p=0.01), 500, 3, threads=1)
    f4 = estimate_PL(cfg(p=0.01), 500, 3, threads=4)
    assert f1.p_l == f4.p_l and f1.stderr == f4.stderr


def test_stderr_is_sample_stdev_over_root_n():
    c = cfg(p=0.01)
    exp = Experiment(c)
    res = run_shots(exp, 400, 9)
    s = estimate_PL(c, 400, 9, experiment=exp)
    vals = np.array([r.contribution for r in res])
    assert s.p_l == pytest.approx(vals.mean())
    assert s.stderr == pytest.approx(vals.std(ddof=1) / 20)


def test_above_threshold_is_worse():
    lo = estimate_PL(cfg(p=0.005), 10000, 1)
    hi = estimate_PL(cfg(p=0.02), 10000, 1)
    assert hi.p_l - 1.96 * hi.stderr > lo.p_l + 1.96 * lo.stderr


def test_find_crossing():
    ps = [0.001, 0.01, 0.1]
    small = [1e-3, 1e-2, 1e-1]
    large = [1e-4, 1e-2 * 2, 5e-1]
    x = find_crossing(ps, small, large)
    assert 0.001 < x < 0.01
    assert find_crossing([0.01], [0.1], [0.2]) is None
    assert find_crossing(ps, small, [v / 2 for v in small]) is None


def test_sweep_with_single_point_reports_no_crossing():
    res = sweep([0.01], [3, 5], cfg(), 50, 0)
    assert res.crossings[0].p is None
    assert "no crossing in range" in res.crossings[0].describe()
    with pytest.raises(ValueError):
        sweep([0.01], [3], cfg(), 10)


def test_schmidt_trivial_for_pauli_noise():
    rep = schmidt_report(cfg("pta", p=0.01, theta=0.1), 3, 0)
    assert np.allclose(rep.spectrum, [1.0])


def test_schmidt_decays_for_coherent_noise():
    rep = schmidt_report(cfg("coherent", p=0.004, theta=0.05), 2, 0)
    slope, r2, npts = rep.fit()
    assert rep.spectrum[0] > rep.spectrum[-1] and slope < 0 and npts > 2
    assert rep.spectrum.sum() == pytest.approx(1.0)


def test_truncation_study_shares_seeds():
    out = truncation_study(cfg("coherent", p=0.004, theta=0.05), [2, 4], 2, 0)
    assert [s.config.chi_max for s in out] == [2, 4]
    assert all(s.mean_max_bond <= s.config.chi_max for s in out)


def test_config_hash():
    a = cfg()
    assert a.config_hash() == cfg().config_hash()
    assert a.config_hash() != a.with_(p=0.005).config_hash()
    assert a.with_(chi_max=8).chi_max == 8 and a.with_(theta=0.2).noise.theta == 0.2
    assert a.num_rounds == 3 and a.with_(rounds=1).num_rounds == 1
