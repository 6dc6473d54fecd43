"""Command-line interface: ``edadecomp simulate | decompose | evaluate``."""
from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .errors import DataError, EDAError, NumericalError
from .metrics import SUMMARY_FIELDS, EvalReport, evaluate, summarize
from .pipeline import decompose
from .preprocess import PipelineConfig, Signal
from .simulator import SimConfig, segment_seeds, snr_label, synthesize

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# CLI flag -> PipelineConfig field
PIPELINE_FLAGS = {
    "prominence": "valley_prominence",
    "min_valley_dist": "valley_min_distance",
    "control_interval": "control_point_interval",
    "lam": "ridge_lambda",
    "amp_thresh": "driver_amp_threshold",
    "min_driver_dist": "driver_min_distance",
    "tau1": "tau1",
    "tau2": "tau2",
    "kernel_dur": "kernel_duration",
    "max_lag": "max_lag_seconds",
}


class UsageError(EDAError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _snr_list(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        if tok == "clean":
            out.append(float("inf"))
            continue
        try:
            out.append(float(tok.removeprefix("snr").removesuffix("db")))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad SNR value {tok!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edadecomp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with [pipeline] / [simulation] tables")
    common.add_argument("--out", type=Path, required=True, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    pipe = _Parser(add_help=False)
    g = pipe.add_argument_group("pipeline parameters")
    g.add_argument("--prominence", type=float, help="valley prominence (uS)")
    g.add_argument("--min-valley-dist", type=float, help="minimum valley spacing (s)")
    g.add_argument("--control-interval", type=float, help="control point window (s)")
    g.add_argument("--lambda", dest="lam", type=float, help="ridge parameter")
    g.add_argument("--amp-thresh", type=float, help="driver amplitude threshold (uS)")
    g.add_argument("--min-driver-dist", type=float, help="minimum driver event spacing (s)")
    g.add_argument("--tau1", type=float, help="kernel fast time constant (s)")
    g.add_argument("--tau2", type=float, help="kernel slow time constant (s)")
    g.add_argument("--kernel-dur", type=float, help="kernel duration (s)")
    g.add_argument("--max-lag", type=float, help="largest projection lag (s)")

    s = sub.add_parser("simulate", parents=[common], help="generate a ground-truth dataset")
    s.add_argument("--n", type=int, default=100, help="number of segments")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--duration", type=float, help="segment length (s)")
    s.add_argument("--events", type=int, help="events per segment")
    s.add_argument("--fs", type=float, help="sampling rate (Hz)")
    s.add_argument("--snr", type=_snr_list, help="comma-separated SNR levels in dB")
    s.add_argument("--snr-reference", choices=("variance", "mean_square"))

    d = sub.add_parser("decompose", parents=[common, pipe], help="decompose CSV signals")
    d.add_argument("inputs", nargs="+", type=Path, help="CSV files or simulated dataset directories")
    d.add_argument("--fs", type=float, help="sampling rate for single-column CSVs (Hz)")
    d.add_argument("--snr", help="dataset columns to decompose, e.g. 'clean,30,20,10'")
    d.add_argument("--seed", type=int, default=0, help="recorded in the manifest; the pipeline is deterministic")
    d.add_argument("--upsample-output", action="store_true",
                   help="linearly resample outputs to the input rate")

    e = sub.add_parser("evaluate", parents=[common], help="score decompositions against ground truth")
    e.add_argument("dataset", type=Path)
    e.add_argument("decompositions", type=Path)
    e.add_argument("--tolerance", type=float, default=1.0, help="event matching window (s)")
    return parser


def load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    unknown = set(data) - {"pipeline", "simulation"}
    if unknown:
        raise UsageError(f"{path}: unknown tables {sorted(unknown)}")
    # validate both tables whichever command runs
    for table, cls in (("pipeline", PipelineConfig), ("simulation", SimConfig)):
        try:
            cls.from_dict(data.get(table, {}))
        except (DataError, TypeError) as exc:
            raise UsageError(f"{path}: [{table}]: {exc}") from exc
    return data


def pipeline_config(args, file_cfg: dict) -> PipelineConfig:
    base = file_cfg.get("pipeline", {})
    try:
        cfg = PipelineConfig.from_dict(base)
    except (DataError, TypeError) as exc:
        raise UsageError(f"config [pipeline]: {exc}") from exc
    flags = {field: getattr(args, flag) for flag, field in PIPELINE_FLAGS.items()}
    try:
        return cfg.updated(**flags)
    except DataError as exc:
        raise UsageError(str(exc)) from exc


def sim_config(args, file_cfg: dict) -> SimConfig:
    base = dict(file_cfg.get("simulation", {}))
    try:
        cfg = SimConfig.from_dict(base)
    except (DataError, TypeError) as exc:
        raise UsageError(f"config [simulation]: {exc}") from exc
    changes = {}
    if args.duration is not None:
        changes["duration"] = args.duration
        if args.events is None and "n_events" not in base:
            # keep the default event density for shorter or longer segments
            default = SimConfig()
            changes["n_events"] = max(1, round(default.n_events * args.duration / default.duration))
    if args.events is not None:
        changes["n_events"] = args.events
    if args.fs is not None:
        changes["fs"] = args.fs
    if args.snr is not None:
        changes["snr_levels"] = tuple(s for s in args.snr if np.isfinite(s))
    if args.snr_reference is not None:
        changes["snr_reference"] = args.snr_reference
    changes["seed"] = args.seed
    try:
        return replace(cfg, **changes)
    except DataError as exc:
        raise UsageError(str(exc)) from exc


def _manifest(command: str, args, **extra) -> dict:
    return {
        "schema_version": fileio.SCHEMA_VERSION,
        "tool": "edadecomp",
        "version": __version__,
        "command": command,
        "seed": args.seed if hasattr(args, "seed") else None,
        "created": fileio.timestamp(),
        **extra,
    }


def _ensure_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {path}: {exc.strerror}") from exc


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --- simulate -----------------------------------------------------------

def _simulate_one(job):
    cfg, i, seed, out = job
    truth = synthesize(replace(cfg, seed=seed))
    fileio.write_segment(out, i, truth)
    return i


def cmd_simulate(args) -> int:
    file_cfg = load_config_file(args.config)
    cfg = sim_config(args, file_cfg)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    _ensure_dir(args.out)
    seeds = segment_seeds(args.seed, args.n)
    _map(_simulate_one, [(cfg, i, s, args.out) for i, s in enumerate(seeds)], args.jobs)
    fileio.write_json(args.out / "manifest.json", _manifest(
        "simulate", args, sim_config=cfg.to_dict(), n_segments=args.n,
        segment_seeds=seeds, snr_labels=[snr_label(s) for s in cfg.snr_levels],
    ))
    print(f"wrote {args.n} segments to {args.out}")
    return EXIT_OK


# --- decompose ----------------------------------------------------------

def _decomp_columns(sig: Signal, cfg: PipelineConfig, upsample: bool):
    d = decompose(sig, cfg)
    cols = {"time_s": d.times, "raw": d.raw, "tonic": d.tonic, "phasic": d.phasic,
            "phasic_recon": d.phasic_recon, "driver": d.driver, "noise": d.noise}
    if upsample and sig.fs != d.fs:
        t_in = sig.times
        cols = {k: (t_in if k == "time_s" else np.interp(t_in, d.times, v)) for k, v in cols.items()}
    meta = {
        "m_star": d.m_star,
        "regularized": d.regularized,
        "mdl_curve": [float(v) for v in d.mdl_curve],
        "fs": float(sig.fs if upsample else d.fs),
        "working_fs": d.fs,
        "events": fileio.events_to_json(d.events),
        "control_points": [int(i) for i in d.valleys.indices],
    }
    return cols, meta


def _decompose_job(job):
    kind, src, label, stem, cfg, fs, out, upsample = job
    try:
        if kind == "dataset":
            cols = fileio.read_columns(src)
            sig = fileio.signal_from_columns(cols, column=label, source=str(src))
        else:
            sig = fileio.read_signal(src, fs)
        cols, meta = _decomp_columns(sig, cfg, upsample)
    except NumericalError as exc:
        raise NumericalError(f"{src}: {exc}") from exc
    except DataError as exc:
        raise DataError(f"{src}: {exc}") from exc
    meta.update(source=str(src), snr=label, pipeline_config=cfg.to_dict())
    fileio.write_decomposition(out, stem, cols, meta)
    return stem, meta["m_star"], len(meta["events"])


def _decompose_jobs(args, cfg):
    jobs = []
    wanted = None
    if args.snr:
        wanted = [snr_label(s) for s in _snr_list(args.snr)]
    for src in args.inputs:
        if src.is_dir():
            for i in fileio.list_segments(src):
                path = src / f"segment_{i}.csv"
                with path.open(encoding="utf-8") as fh:
                    header = fh.readline().strip().split(",")
                labels = [h for h in header if h == "clean" or h.startswith("snr")]
                if wanted is not None:
                    missing = [w for w in wanted if w not in labels]
                    if missing:
                        raise DataError(f"{path}: no columns {missing}")
                    labels = wanted
                for label in labels:
                    jobs.append(("dataset", path, label, f"segment_{i}_{label}", cfg, None, args.out,
                                 args.upsample_output))
        elif src.is_file():
            jobs.append(("file", src, None, f"{src.stem}.decomp", cfg, args.fs, args.out,
                         args.upsample_output))
        else:
            raise DataError(f"no such file or directory: {src}")
    return jobs


def cmd_decompose(args) -> int:
    file_cfg = load_config_file(args.config)
    cfg = pipeline_config(args, file_cfg)
    _ensure_dir(args.out)
    jobs = _decompose_jobs(args, cfg)
    results = _map(_decompose_job, jobs, args.jobs)
    fileio.write_json(args.out / "manifest.json", _manifest(
        "decompose", args, pipeline_config=cfg.to_dict(),
        inputs=[str(p) for p in args.inputs], outputs=[r[0] for r in results],
        upsample_output=args.upsample_output,
    ))
    for stem, m_star, n_events in results:
        print(f"{stem}: m*={m_star} events={n_events}")
    return EXIT_OK


# --- evaluate -----------------------------------------------------------

def _evaluate_job(job):
    dataset, decomp_dir, i, label, tol = job
    truth = fileio.read_segment(dataset, i)
    cols, meta = fileio.read_decomposition(decomp_dir, i, label)
    if cols["tonic"].size != truth.tonic.size:
        raise DataError(f"segment_{i}_{label}: length {cols['tonic'].size} != ground truth {truth.tonic.size}")

    class _Est:
        tonic = cols["tonic"]
        phasic_recon = cols["phasic_recon"]
        events = fileio.events_from_json(meta.get("events", []))

    return evaluate(_Est, truth, tol)


def _summary_csv(rows: list[tuple[int, str, EvalReport]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    report_fields = list(EvalReport().to_dict())
    writer.writerow(["segment", "snr"] + report_fields)
    for i, label, rep in rows:
        writer.writerow([i, label] + [fileio.fmt(v) if isinstance(v, float) else int(v)
                                      for v in rep.to_dict().values()])
    labels = sorted({r[1] for r in rows}, key=_label_order)
    for label in labels:
        summ = summarize([r[2] for r in rows if r[1] == label])
        cells = []
        for name in report_fields:
            if name in SUMMARY_FIELDS:
                mean, sd = summ[name]
                cells.append(f"{mean:.3f} ± {sd:.3f}")
            else:
                cells.append("")
        writer.writerow(["summary", label] + cells)
    return buf.getvalue()


def _label_order(label: str):
    return (0, 0.0) if label == "clean" else (1, -float(label[3:]))


def cmd_evaluate(args) -> int:
    truth_ids = fileio.list_segments(args.dataset)
    found = fileio.list_decompositions(args.decompositions)
    missing = sorted({i for i, _ in found} - set(truth_ids))
    if missing:
        raise DataError(f"decompositions without ground truth: segment ids {missing}")
    _ensure_dir(args.out)
    jobs = [(args.dataset, args.decompositions, i, label, args.tolerance) for i, label in found]
    reports = _map(_evaluate_job, jobs, args.jobs)
    rows = []
    for (i, label), rep in zip(found, reports):
        fileio.write_json(args.out / f"segment_{i}_{label}.report.json",
                          {"schema_version": fileio.SCHEMA_VERSION, "segment": i, "snr": label,
                           **rep.to_dict()})
        rows.append((i, label, rep))
    (args.out / "summary.csv").write_text(_summary_csv(rows), encoding="utf-8")
    fileio.write_json(args.out / "manifest.json", _manifest(
        "evaluate", args, dataset=str(args.dataset), decompositions=str(args.decompositions),
        tolerance_s=args.tolerance, n_reports=len(rows),
    ))
    for label in sorted({r[1] for r in rows}, key=_label_order):
        summ = summarize([r[2] for r in rows if r[1] == label])
        print(label, " ".join(f"{k}={m:.3f}±{s:.3f}" for k, (m, s) in summ.items()))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "decompose": cmd_decompose, "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"edadecomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"edadecomp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"edadecomp: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
