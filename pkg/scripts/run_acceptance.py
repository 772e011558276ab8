#!/usr/bin/env python3
"""Run the acceptance suite and print only the criterion lines.

    python scripts/run_acceptance.py [--fast]

``--fast`` skips the Laplace criterion, which takes a few minutes.
"""

import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fast", action="store_true", help="deselect tests marked slow")
    args = ap.parse_args()
    cmd = [sys.executable, "-m", "pytest", "-q", "-s", "-p", "no:cacheprovider",
           str(ROOT / "tests" / "test_acceptance.py")]
    if args.fast:
        cmd += ["-m", "not slow"]
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("PASS criterion", "FAIL criterion"))]
    for ln in dict.fromkeys(lines):
        print(ln)
    if proc.returncode not in (0, 5):
        print(proc.stdout[-2000:], file=sys.stderr)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
