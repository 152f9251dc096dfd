"""
Acceptance Suite
Runs every verification mode once through the CLI and summarizes pass/fail
"""

import argparse
import subprocess
import sys
import time
from pathlib import Path
from typing import Dict, List

ROOT = Path(__file__).resolve().parent.parent

CHECKS = [
    ("Channel generation", ["channel"]),
    ("Branch table regression", ["table1", "--samples", "100"]),
    ("Seeded protocol runs", ["teleport", "--samples", "100"]),
    ("Timing sweep", ["timing-sweep"]),
    ("Effective vs full model", ["full-vs-eff"]),
    ("Decay and thermal field", ["decoherence-sweep", "--kappa", "0.1", "--nbar", "1.0"]),
]


def run_check(args: List[str], out_dir: Path, fmt: str, jobs: int) -> Dict:
    """Run one CLI mode and return its exit code, duration and last output line"""
    out = out_dir / f"{args[0]}.{fmt}"
    cmd = [sys.executable, str(ROOT / "run.py"), *args, "--out", str(out), "--format", fmt, "--jobs", str(jobs)]
    start = time.time()
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    lines = proc.stdout.strip().splitlines()
    return {
        "code": proc.returncode,
        "seconds": time.time() - start,
        "last": lines[-1] if lines else proc.stderr.strip()[-200:],
    }


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out-dir", default="results/acceptance", help="Directory for result files")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--skip-slow", action="store_true", help="Skip the full-model modes")
    args = p.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checks = CHECKS[:4] if args.skip_slow else CHECKS

    print("=" * 80)
    print("Teleportation Acceptance Suite")
    print("=" * 80)

    results = {}
    for name, cli_args in checks:
        print(f"\nRunning: {name}")
        print(f"  run.py {' '.join(cli_args)}")
        result = run_check(cli_args, out_dir, args.format, args.jobs)
        results[name] = result
        mark = "✓" if result["code"] == 0 else "✗"
        print(f"  {mark} exit {result['code']} in {result['seconds']:.1f}s: {result['last']}")

    print("\n" + "=" * 80)
    print("Summary")
    print("=" * 80)
    passed = sum(1 for r in results.values() if r["code"] == 0)
    total = len(results)
    print(f"Passed: {passed}/{total}")
    print(f"Failed: {total - passed}/{total}")

    if passed == total:
        print("\n✓ All checks passed!")
        return 0
    print("\n✗ Some checks failed")
    for name, result in results.items():
        if result["code"] != 0:
            print(f"  - {name}: {result['last']}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
