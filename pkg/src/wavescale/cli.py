"""``wavescale`` command line.

Exit status: 0 when the command finished with no hard errors, 1 when the
run recorded hard errors or a gated check failed, 2 for bad input or usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunConfig
from .pipeline import io
from .pipeline.experiment import make_surrogate, run_experiment
from .pipeline.preprocess import PreprocessError

log = logging.getLogger("wavescale")

STOP_AFTER = {"descriptors": "descriptors", "rank": "rank", "classify": "classify", "run": "all"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavescale", description="Wavelet scaling descriptors for 1-D spectra.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write the two-class fBm surrogate dataset")
    _common(p)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--length", type=int, default=1024)
    p.add_argument("--hursts", type=float, nargs="+", default=[0.4, 0.6])

    helps = {
        "descriptors": "per-sample descriptor table",
        "rank": "descriptor table, per-trait KS rankings and category statistics",
        "classify": "everything in rank plus descriptor accuracy curves",
        "run": "full experiment including the PCA baseline and plot data",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("spectra", type=Path)
        if name != "descriptors":
            p.add_argument("traits", type=Path)
        p.add_argument("--mode", choices=("transmittance", "absorbance"), default="transmittance",
                       help="what the spectra file holds")
        p.add_argument("--workers", type=int, help="worker processes")

    p = sub.add_parser("report", help="print the best-model table of a finished run")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--real-data", action="store_true",
                   help="also evaluate the plausibility bands that only apply to the real dataset")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.replace(seed=args.seed, out=str(args.out) if args.out else None,
                       workers=getattr(args, "workers", None))


def _report(args) -> int:
    summary_path = args.run_dir / "summary.json"
    if not summary_path.exists():
        print(f"no summary.json in {args.run_dir}", file=sys.stderr)
        return 2
    import json

    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    table = args.run_dir / "table3.csv"
    if table.exists():
        _, rows = io.read_table(table)
        print(f"{'MQP':<8} {'model':<10} {'accuracy':<11} {'#':>3}   {'PCA model':<10} {'accuracy':<11} {'#PC':>3}")
        for r in rows:
            print(f"{r['mqp']:<8} {r['descriptor_model']:<10} {r['descriptor_accuracy']:<11} "
                  f"{r['descriptor_count']:>3}   {r['pca_model']:<10} {r['pca_accuracy']:<11} {r['pca_components']:>3}")
    for rec in summary.get("trace", []):
        print(f"{rec['stage']}: {rec['n_in']} in, {rec['n_used']} used, {rec['n_dropped']} dropped")
    for s in summary.get("skipped", []):
        print(f"skipped {s['mqp']}: {s['reason']}")
    counts = summary.get("error_counts", {})
    print(f"errors: {counts.get('hard', 0)} hard, {counts.get('soft', 0)} soft")
    status = 1 if counts.get("hard", 0) else 0
    if args.real_data:
        from .pipeline.reference import real_data_checks

        for name, ok, detail in real_data_checks(args.run_dir):
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
            status = status or (0 if ok else 1)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return _report(args)
        cfg = _config(args)
        if args.command == "synth":
            spectra, traits = make_surrogate(cfg.out, n_per_class=args.n_per_class, n=args.length,
                                             hursts=tuple(args.hursts), seed=cfg.seed)
            print(spectra)
            print(traits)
            return 0
        result = run_experiment(cfg, args.spectra, getattr(args, "traits", None), mode=args.mode,
                                stop_after=STOP_AFTER[args.command])
    except (io.InputError, PreprocessError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    counts = result.summary["error_counts"]
    for path in sorted(result.files.values()):
        print(path)
    print(f"errors: {counts['hard']} hard, {counts['soft']} soft")
    return 1 if result.hard_errors else 0


if __name__ == "__main__":
    sys.exit(main())
