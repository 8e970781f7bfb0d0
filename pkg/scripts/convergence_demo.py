"""Attribution of piecewise-constant approximations f_p as p grows.

Prints p, phi(f_p) and the sup-norm gap to a fine-grid reference.
Usage: python3 scripts/convergence_demo.py [--expr TEXT] [--measure NAME]
"""

import argparse

import numpy as np

from attrikit import MeasureFamily, attribute
from attrikit.attribution import approx_attribution_sequence
from attrikit.model import Expression


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--expr", default="x1*x2 + 0.5*x1^2 - x3")
    ap.add_argument("--measure", default="pdp")
    ap.add_argument("--input", default="0.3,0.7,0.5")
    ap.add_argument("--p-list", default="4,16,64,256")
    args = ap.parse_args()

    x = np.array([float(v) for v in args.input.split(",")])
    f = Expression(args.expr, x.shape[0])
    family = MeasureFamily(args.measure)
    reference = attribute(f, family, x, "grid", grid_res=512).phi
    p_list = [int(v) for v in args.p_list.split(",")]
    print(f"reference phi = {np.array2string(reference, precision=6)}")
    print(f"{'p':>5}  {'sup error':>12}  phi")
    for p, phi in zip(p_list, approx_attribution_sequence(f, family, x, p_list)):
        err = np.max(np.abs(phi - reference))
        print(f"{p:>5}  {err:12.3e}  {np.array2string(phi, precision=6)}")


if __name__ == "__main__":
    main()
