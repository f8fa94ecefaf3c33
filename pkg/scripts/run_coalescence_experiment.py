#!/usr/bin/env python3
"""Memory-order discovery and runtime profile of the windowed coupling.

Part 1 sweeps the kernel gallery: for each kernel with a finite alphabet it
looks for the smallest order n̂ whose lower-bound chain has a unique
aperiodic closed class, then the positivity depth n₀, and prints why the
search fails where it fails (several gallery kernels are deliberate
negative controls with multiple closed classes).

Part 2 profiles run_algorithm2 on one kernel: rounds used, uniforms
consumed, and wall time across a range of target spans k.

Usage:
    python scripts/run_coalescence_experiment.py
    python scripts/run_coalescence_experiment.py --kernel cyclic4 \
        --spans 0,10,100,1000 --reps 20 --seed 3
"""

import argparse
import statistics
import time

from perfectsim import (
    AssumptionViolated,
    NotFound,
    StreamKey,
    compute_n0,
    find_nhat,
    prepare_coalescence,
    run_algorithm2,
)
from perfectsim.gallery import GALLERY, build_kernel


def sweep_gallery(nhat_max):
    print(f"{'kernel':<28} {'nhat':>4} {'n0':>4} {'states':>7} note")
    for name in GALLERY:
        kernel = build_kernel(name, {})
        if kernel.alphabet is None:
            print(f"{name:<28} {'-':>4} {'-':>4} {'-':>7} countable alphabet")
            continue
        found = find_nhat(kernel, nhat_max)
        if isinstance(found, NotFound):
            last = found.reports[max(found.reports)]
            print(f"{name:<28} {'-':>4} {'-':>4} {'-':>7} none <= {nhat_max}: {last}")
            continue
        nhat, analysis = found
        n0 = compute_n0(analysis)
        print(
            f"{name:<28} {nhat:>4} {n0:>4} {len(analysis.states):>7} "
            f"period {analysis.period}"
        )


def profile_kernel(name, spans, reps, seed):
    kernel = build_kernel(name, {})
    try:
        plan = prepare_coalescence(kernel)
    except AssumptionViolated as e:
        raise SystemExit(f"{name}: {e}")
    print(
        f"\nprofile {name}: nhat={plan.nhat} n0={plan.n0} "
        f"closed class size {len(plan.index)}"
    )
    print(f"{'k':>7} {'rounds(med)':>12} {'uniforms(med)':>14} {'sec/run':>9}")
    for k in spans:
        rounds, uniforms = [], []
        t0 = time.time()
        for rep in range(reps):
            _, rec = run_algorithm2(
                kernel, k, StreamKey(seed=seed, replication=rep), plan=plan
            )
            rounds.append(rec.rounds_used)
            uniforms.append(rec.uniforms_consumed)
        per = (time.time() - t0) / reps
        print(
            f"{k:>7} {statistics.median(rounds):>12.0f} "
            f"{statistics.median(uniforms):>14.0f} {per:>9.4f}"
        )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kernel", default="cyclic4")
    ap.add_argument("--spans", default="0,10,100,1000")
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--nhat-max", type=int, default=6)
    args = ap.parse_args(argv)

    sweep_gallery(args.nhat_max)
    spans = [int(s) for s in args.spans.split(",") if s != ""]
    profile_kernel(args.kernel, spans, args.reps, args.seed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
