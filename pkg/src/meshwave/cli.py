"""Command-line front end.

One verb per pipeline stage plus ``sweep`` (multi-seed replication) and
``report`` (pretty-print the evaluation tables).  Verbs validate that
their upstream artifacts exist and otherwise reuse cached outputs; pass
--stage-only to force the named stage to recompute even when its
manifest entry still matches.

Exit codes: 0 success, 1 configuration/validation problems (including
missing upstream stages), 2 unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from meshwave import pipeline
from meshwave.config import ConfigError, load_config


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--run-dir", required=True, help="directory holding this run's artifacts")
    parser.add_argument("--config", default=None, help="INI file overriding the built-in defaults")
    parser.add_argument("--seed", type=int, default=0, help="root random seed (default 0)")
    parser.add_argument(
        "--stage-only",
        action="store_true",
        help="recompute this stage even if its cached outputs still match",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap BLAS thread pools (best effort; set before heavy work)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshwave",
        description="wavelet sub-band mesh networks, autoencoder codes, and window clustering",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("synth", "generate a labelled synthetic session"),
        ("decompose", "split the session into wavelet sub-band signals"),
        ("mesh", "fit windowed mesh networks per sub-band"),
        ("encode", "train autoencoders and write window codes"),
        ("cluster", "cluster windows for every configured representation"),
        ("evaluate", "score clusterings against the task labels"),
        ("netstats", "medoid networks and edge precision per cluster"),
        ("sweep", "replicate the whole chain over the configured seeds"),
        ("report", "print the evaluation table for a run or sweep"),
    ):
        p = sub.add_parser(verb, help=help_text)
        _common(p)
    return parser


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ValueError("--threads must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def _print_outcomes(outcomes) -> None:
    for out in outcomes:
        if out.skipped:
            print(f"{out.stage}: cached")
        else:
            print(f"{out.stage}: wrote {len(out.outputs)} files")


def _report(run_dir: Path) -> None:
    sweep_summary = run_dir / "sweep_summary.csv"
    path = sweep_summary if sweep_summary.exists() else run_dir / "evaluate" / "report.csv"
    if not path.exists():
        raise pipeline.UpstreamMissing(
            f"report needs {path}; run 'meshwave evaluate' or 'meshwave sweep' first"
        )
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    # round float columns for reading; files keep full precision
    header, body = rows[0], rows[1:]
    fmt_body = []
    for row in body:
        fmt_body.append([f"{float(v):.4f}" if _is_float_col(h) else v for h, v in zip(header, row)])
    widths = [max(len(r[i]) for r in [header] + fmt_body) for i in range(len(header))]
    print(f"# {path}")
    for row in [header] + fmt_body:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)))


def _is_float_col(name: str) -> bool:
    return name in ("RI", "ARI") or name.startswith(("mean_", "std_"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_threads(args.threads)
        cfg = load_config(args.config)
        run_dir = Path(args.run_dir)
        force = args.stage_only
        seed = args.seed
        if args.verb == "synth":
            _print_outcomes([pipeline.run_synth(run_dir, cfg, seed, force)])
        elif args.verb == "decompose":
            _print_outcomes([pipeline.run_decompose(run_dir, cfg, force)])
        elif args.verb == "mesh":
            _print_outcomes([pipeline.run_mesh(run_dir, cfg, force)])
        elif args.verb == "encode":
            _print_outcomes([pipeline.run_encode(run_dir, cfg, seed, force)])
        elif args.verb == "cluster":
            _print_outcomes([pipeline.run_cluster(run_dir, cfg, force)])
        elif args.verb == "evaluate":
            _print_outcomes([pipeline.run_evaluate(run_dir, cfg, force)])
        elif args.verb == "netstats":
            _print_outcomes([pipeline.run_netstats(run_dir, cfg, force)])
        elif args.verb == "sweep":
            summary = pipeline.run_sweep(run_dir, cfg, force)
            print(f"sweep: wrote {summary}")
        elif args.verb == "report":
            _report(run_dir)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - surfaced as exit code 2
        print(f"failed: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
