"""Fit log(|H| s) against |z-w|^2/s + s/mu(z,1/tau)^2 + s/mu(w,1/tau)^2 on two grids.

    python scripts/workhorse_fit.py --model heisenberg --n-side 65
"""
import argparse
import json

from boxheat import geometry, harness


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="heisenberg", choices=sorted(geometry.standard_models()))
    ap.add_argument("--tau", default="0.5,1,2")
    ap.add_argument("--s", default="0.1,0.25,0.5,1")
    ap.add_argument("--n-side", type=int, default=65)
    ap.add_argument("--out", default=None, help="write the report JSON here")
    args = ap.parse_args()

    cfg = harness.ExperimentConfig(polynomial=args.model, n_side=args.n_side,
                                   tau_list=[float(v) for v in args.tau.split(",")],
                                   s_list=[float(v) for v in args.s.split(",")])
    (rep,) = harness.check_workhorse(cfg.load_polynomial(), cfg)
    print(f"c = {rep.c:.4f} (coarse {rep.extras['c_coarse']:.4f}, change {rep.extras['refinement_change']:.2e})")
    print(f"C = {rep.C:.4g}  R^2 = {rep.extras['r2']:.4f}  argmax = {rep.argmax}  passed = {rep.passed}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
