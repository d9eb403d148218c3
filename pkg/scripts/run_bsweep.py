"""Average loss after n rounds versus prior scale B on a synthetic Gaussian design."""

import argparse

from ewlogreg.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="gen:gaussian:n=200,d=2,norm=2")
    ap.add_argument("--predictor", default="ew-exact")
    ap.add_argument("--grid", default="0.5,1,2,5,10,20,50")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--out", default="runs/bsweep")
    args = ap.parse_args()
    cli_main(["sweep-b", "--data", args.data, "--predictor", args.predictor,
              "--grid", args.grid, "--n", str(args.n), "--out", args.out])


if __name__ == "__main__":
    main()
