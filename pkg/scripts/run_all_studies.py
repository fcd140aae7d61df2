"""Run every shipped study config through the CLI into ``<out>/<config stem>``.

Usage: python scripts/run_all_studies.py [OUT_DIR] [--force]
"""
import sys
import time
from pathlib import Path

from qnvp.harness.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(out_root: Path, force: bool) -> int:
    worst = 0
    for cfg in sorted(CONFIGS.glob("*.toml")):
        start = time.perf_counter()
        argv = ["study", "--config", str(cfg), "--output", str(out_root / cfg.stem)]
        code = main(argv + (["--force"] if force else []))
        print(f"# {cfg.stem}: exit {code} in {time.perf_counter() - start:.1f}s", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    args = [a for a in sys.argv[1:] if a != "--force"]
    sys.exit(run(Path(args[0] if args else "runs"), "--force" in sys.argv[1:]))
