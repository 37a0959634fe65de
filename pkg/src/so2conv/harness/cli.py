"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from so2conv.escn import ModelConfig, ModelWeights
from so2conv.escn.config import ACTIVATIONS
from so2conv.harness.cgtable import dump_table
from so2conv.harness.checks import run_bench, run_equivalence, run_equivariance, run_predict
from so2conv.harness.xyz import XYZError, read_xyz

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="so2conv", description="Equivariant convolution checks, benchmarks and eSCN inference."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-equivalence", help="naive vs aligned vs SO(2) convolution")
    p.add_argument("--lmax", type=int, default=6)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("check-equivariance", help="rotation error of the point-wise nonlinearity")
    p.add_argument("--grid", type=int, nargs="+", default=[10, 12, 14, 16, 18])
    p.add_argument("--activation", choices=ACTIVATIONS, default="silu")
    p.add_argument("--trials", type=int, default=256, help="number of sampled rotations")
    p.add_argument("--lmax", type=int, default=6)
    p.add_argument("--source", choices=("model", "gaussian"), default="model",
                   help="message: a seeded model's pre-activation message or unit-normal coefficients")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier applied to the message")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("bench", help="operation counts and wall time per path")
    p.add_argument("--lmax-list", type=int, nargs="+", default=[1, 2, 4, 6, 8])
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--edges", type=int, default=100)
    p.add_argument("--mode", choices=("naive", "so2", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("predict", help="energy and forces for an XYZ structure")
    p.add_argument("--input", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--weights", help="weight file (.json or .npz)")
    src.add_argument("--seed", type=int, help="random weights from this seed (default 0)")
    p.add_argument("--lmax", type=int)
    p.add_argument("--mmax", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--activation", choices=ACTIVATIONS)
    p.add_argument("--out")

    p = sub.add_parser("cgtable", help="dump Clebsch-Gordan tables as text")
    p.add_argument("--lmax", type=int, default=2)
    p.add_argument("--basis", choices=("real", "complex"), default="real")
    p.add_argument("--form", choices=("full", "compact"), default="full")
    p.add_argument("--out")
    return parser


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _model_weights(args) -> tuple[ModelWeights, int | None]:
    overrides = {
        k: getattr(args, k) for k in ("lmax", "mmax", "layers", "channels", "hidden", "activation")
        if getattr(args, k) is not None
    }
    if args.weights:
        weights = ModelWeights.load(args.weights)
        cfg = weights.config.to_dict()
        clash = {k: v for k, v in overrides.items() if cfg[k] != v}
        if clash:
            raise ValueError(f"weight file config disagrees with {clash}")
        return weights, None
    seed = 0 if args.seed is None else args.seed
    if "lmax" in overrides and "mmax" not in overrides:
        overrides["mmax"] = min(2, overrides["lmax"])
    return ModelWeights.init(ModelConfig(**overrides), seed), seed


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "cgtable":
            if not 0 <= args.lmax <= 10:
                raise ValueError("lmax must be in [0, 10]")
            _emit(dump_table(args.lmax, args.basis, args.form), args.out)
            return EXIT_OK
        if args.command == "check-equivalence":
            report = run_equivalence(args.lmax, args.channels, args.trials, args.seed)
        elif args.command == "check-equivariance":
            report = run_equivariance(args.grid, args.activation, args.trials, args.lmax,
                                      args.seed, args.source, args.scale)
        elif args.command == "bench":
            modes = ("naive", "so2") if args.mode == "both" else (args.mode,)
            report = run_bench(args.lmax_list, args.channels, args.edges, modes, args.seed)
        else:
            structure = read_xyz(args.input)
            weights, seed = _model_weights(args)
            report = run_predict(structure.positions, structure.atomic_numbers, weights, seed)
    except XYZError as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report.to_json(), args.out)
    return report.exit_code()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
