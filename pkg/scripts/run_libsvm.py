"""Online runs on a LIBSVM file: median and IQR of the running average loss over permutations."""

import argparse

from ewlogreg.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data", help="path to a LIBSVM binary classification file")
    ap.add_argument("--predictors", default="ew-practical,ogd,ons")
    ap.add_argument("--B", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--normalize", action="store_true")
    ap.add_argument("--out", default="runs/libsvm")
    args = ap.parse_args()
    for pred in args.predictors.split(","):
        argv = ["run", "--data", args.data, "--predictor", pred, "--B", str(args.B),
                "--n", str(args.n), "--repeats", str(args.repeats), "--permute",
                "--out", f"{args.out}/{pred}"]
        if args.normalize:
            argv.append("--normalize")
        cli_main(argv)


if __name__ == "__main__":
    main()
