"""Time the numba kernels against the pure-numpy fallbacks.

Both variants are importable regardless of RRMSIM_NUMBA, so this script
measures them side by side in one process, checks that their outputs are
bit-identical, and prints a speedup table. Run as:

    python benchmarks/compare_kernels.py [--repeats 7] [--end-to-end]

--end-to-end additionally times a full scenario run in a subprocess under
each backend (that is the only way to compare them through the engine,
because the binding is fixed at import time).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from rrmsim import kernels


def _time(fn, args, repeats: int, inner: int) -> float:
    """Median seconds per call over `repeats` samples of `inner` calls."""
    fn(*args)  # warm (compiles the jit variants on first call)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        samples.append((time.perf_counter() - t0) / inner)
    return float(np.median(samples))


def _cases(rng):
    for n in (64, 1024, 16384):
        a = rng.integers(0, 1 << 32, size=n)
        b = rng.integers(0, 1 << 32, size=n)
        yield (
            f"counter_uniform[{n}]",
            kernels.counter_uniform_numpy,
            kernels.counter_uniform_jit,
            (12345, a, b, 777),
        )
    for n_cand, n_prbs in ((4, 25), (16, 100), (64, 273)):
        metric = rng.random(n_cand)
        per_prb = rng.uniform(200.0, 2000.0, size=n_cand)
        backlog = rng.uniform(0.0, 5e4, size=n_cand)
        yield (
            f"pf_fill[{n_cand}x{n_prbs}]",
            kernels.pf_fill_numpy,
            kernels.pf_fill_jit,
            (metric, per_prb, backlog, n_prbs),
        )
    for n in (32, 512, 8192):
        picks = rng.integers(0, max(4, n // 8), size=n)
        yield (
            f"classify_picks[{n}]",
            kernels.classify_picks_numpy,
            kernels.classify_picks_jit,
            (picks, max(4, n // 8)),
        )


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(a, b) for a, b in zip(x, y))
    return bool(np.array_equal(np.asarray(x), np.asarray(y)))


def run_kernel_table(repeats: int) -> bool:
    rng = np.random.default_rng(7)
    rows = []
    all_match = True
    for name, f_np, f_jit, args in _cases(rng):
        match = _same(f_np(*args), f_jit(*args))
        all_match &= match
        t_np = _time(f_np, args, repeats, inner=50)
        t_jit = _time(f_jit, args, repeats, inner=50)
        rows.append((name, t_np, t_jit, t_np / t_jit, match))

    print(f"numba available: {kernels.HAVE_NUMBA}   active backend: {kernels.backend_name()}")
    print()
    header = f"{'kernel':<24}{'numpy us':>12}{'numba us':>12}{'speedup':>10}  identical"
    print(header)
    print("-" * len(header))
    for name, t_np, t_jit, speedup, match in rows:
        print(
            f"{name:<24}{t_np * 1e6:>12.2f}{t_jit * 1e6:>12.2f}{speedup:>9.2f}x"
            f"  {'yes' if match else 'NO'}"
        )
    return all_match


def run_end_to_end() -> None:
    scenario = os.path.join(os.path.dirname(__file__), "..", "scenarios", "two_cell_load_balance.yaml")
    print()
    print("end-to-end (scenario run, subprocess per backend):")
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, RRMSIM_NUMBA=flag)
        with tempfile.TemporaryDirectory() as out:
            cmd = [sys.executable, "-m", "rrmsim.cli", "run", scenario, "--seed", "5", "--out", out]
            subprocess.run(cmd, env=env, check=True, capture_output=True)  # warm jit cache
            t0 = time.perf_counter()
            subprocess.run(cmd, env=env, check=True, capture_output=True)
            print(f"  {label:<6} {time.perf_counter() - t0:.2f} s")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7, help="timing samples per kernel")
    ap.add_argument("--end-to-end", action="store_true", help="also time a full scenario per backend")
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba is not installed; the 'numba' column below is the undecorated python loop.")

    ok = run_kernel_table(args.repeats)
    if args.end_to_end:
        run_end_to_end()
    if not ok:
        print("\nERROR: backends disagree bit-for-bit", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
