"""Cross-check exact, grid and Monte Carlo attributions on random ReLU networks.

Exact and grid should agree to quadrature error; Monte Carlo should sit
within a few standard errors of exact.
"""

import argparse

import numpy as np

from attrikit import MeasureFamily, attribute
from attrikit.model import ReluNetwork


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nets", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'net':>3} {'measure':<14} {'|exact-grid|':>13} {'max |z| mc':>11}")
    for k in range(args.nets):
        d = int(rng.integers(2, 4))
        net = ReluNetwork.random(d, [int(rng.integers(3, 9))], rng=rng)
        x = rng.uniform(0.05, 0.95, size=d)
        for preset in ("pdp", "global-linear", "local-linear"):
            family = MeasureFamily(preset)
            exact = attribute(net, family, x, "exact").phi
            grid = attribute(net, family, x, "grid", grid_res=256 if d == 2 else 64).phi
            mc = attribute(net, family, x, "mc", mc_samples=100_000, seed=k)
            se = np.maximum(mc.stderr, 1e-12)
            z = np.max(np.abs(mc.phi - exact) / se)
            print(f"{k:>3} {preset:<14} {np.max(np.abs(exact - grid)):13.2e} {z:11.2f}")


if __name__ == "__main__":
    main()
