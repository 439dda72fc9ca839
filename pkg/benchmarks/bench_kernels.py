"""Compiled versus pure-Python kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--shots N] [--repeat R]

Times (1) coherent-crosstalk hybrid shots, which spend their time in the MPS
kernels, and (2) matching-heavy decoding at d=5, once per backend.  Both
backends must produce identical results; the script checks that too.
"""

import argparse
import time

from crosstalk_qec import mps
from crosstalk_qec.decoder import MATCHERS, Decoder
from crosstalk_qec.harness import Experiment, RunConfig, run_shot
from crosstalk_qec.noise import NoiseConfig
from crosstalk_qec.rng import noise_uniforms


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_mps(shots, repeat):
    cfg = RunConfig(3, noise=NoiseConfig(p=0.004, theta=0.05, crosstalk_mode="coherent"))
    exp = Experiment(cfg)
    exp.decoder

    def work():
        return [run_shot(exp, 0, s)[0].expectation for s in range(shots)]

    rows = {}
    for name in sorted(mps.KERNELS):
        mps.use_kernels(name)
        rows[name] = best_of(work, repeat)
    mps.use_kernels("compiled" if "compiled" in mps.KERNELS else "python")
    return rows


def bench_matching(shots, repeat):
    cfg = RunConfig(5, noise=NoiseConfig(p=0.012))
    exp = Experiment(cfg)
    syndromes = [exp.sampler.sample(noise_uniforms(1, s, exp.program.num_sites))[0] for s in range(shots)]
    graph = exp.decoder.graph
    rows = {}
    for name in sorted(MATCHERS):
        def work():
            dec = Decoder(graph, matcher=name)  # fresh: no syndrome cache hits across repeats
            return [dec.decode(s).weight for s in syndromes]
        rows[name] = best_of(work, repeat)
    return rows


def report(title, rows, unit_count, unit):
    print(title)
    base = rows.get("python", (None,))[0]
    for name, (t, _) in sorted(rows.items()):
        speed = f"{base / t:5.2f}x" if base else ""
        print(f"  {name:9s} {t:8.3f} s  {1e3 * t / unit_count:8.3f} ms/{unit}  {speed}")
    outs = [o for _, o in rows.values()]
    agree = all(o == outs[0] for o in outs) if all(isinstance(o[0], int) for o in outs) else \
        max(abs(a - b) for o in outs for a, b in zip(o, outs[0])) < 1e-9
    print(f"  backends agree: {agree}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=20)
    ap.add_argument("--decodes", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    report(f"MPS kernels: d=3 coherent hybrid shots ({args.shots})", bench_mps(args.shots, args.repeat),
           args.shots, "shot")
    report(f"Blossom matcher: d=5 p=0.012 decodes ({args.decodes})",
           bench_matching(args.decodes, args.repeat), args.decodes, "decode")


if __name__ == "__main__":
    main()
