"""Print the Landau damping fit for a few amplitudes and grid sizes.

Usage: python scripts/landau_growth.py
"""
from pathlib import Path

from qnvp.harness.config import load_config
from qnvp.harness.studies import run_study

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "landau.toml"

if __name__ == "__main__":
    print("nx,nv,gamma_fit,gamma_oracle,rel_error")
    for nx, nv in ((16, 64), (32, 128), (64, 256)):
        rep = run_study(load_config(CONFIG, [f"grid.nx={nx}", f"grid.nv={nv}"]))
        s = rep.summary
        print(f"{nx},{nv},{s['gamma_fit']:.6f},{s['gamma_oracle']:.6f},{s['rel_error']:.4%}")
