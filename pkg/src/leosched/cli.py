"""Command-line entry point: ``leosched <subcommand> ...``.

Every subcommand reads files, writes files atomically and records a JSON
run manifest next to its outputs; ``leosched replay`` re-runs a manifest.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__

log = logging.getLogger("leosched")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ helpers


def _write_text(path: Path, text: str) -> None:
    from .obstruction.maps import atomic_write_bytes

    atomic_write_bytes(path, text.encode("utf-8"))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} not found: {path}")
    return p


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _depth_list(text: str) -> list:
    out = []
    for v in text.split(","):
        v = v.strip().lower()
        if v in ("none", "unbounded"):
            out.append(None)
        else:
            try:
                out.append(int(v))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad depth {v!r}") from None
    return out


class Run:
    """Collects inputs/outputs of one invocation and writes its manifest."""

    def __init__(self, name: str, args: argparse.Namespace):
        self.name = name
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def input(self, key: str, path: Path) -> Path:
        self.inputs[key] = str(Path(path).resolve())
        return path

    def output(self, path: Path, text: str | bytes) -> Path:
        path = Path(path)
        if isinstance(text, str):
            _write_text(path, text)
        else:
            from .obstruction.maps import atomic_write_bytes

            atomic_write_bytes(path, text)
        self.outputs.append(path)
        return path

    def manifest(self, manifest_path: Path) -> None:
        args = {}
        for k, v in vars(self.args).items():
            if k in ("func", "verbose"):
                continue
            # absolute paths keep the manifest replayable from any directory
            if isinstance(v, str) and Path(v).exists():
                v = str(Path(v).resolve())
            args[k] = v
        hashes = {}
        for key, p in self.inputs.items():
            pp = Path(p)
            if pp.is_file():
                hashes[key] = _sha256(pp)
        m = {
            "subcommand": self.name,
            "tool_version": __version__,
            "args": args,
            "output_args": OUTPUT_ARGS.get(self.name, []),
            "inputs": self.inputs,
            "input_sha256": hashes,
            "outputs": [str(p.resolve()) for p in self.outputs],
            "seed": args.get("seed"),
            "config": self.extra,
            "wall_time_s": round(time.perf_counter() - self.t0, 3),
        }
        _write_text(manifest_path, json.dumps(m, indent=2, sort_keys=True, default=str) + "\n")


# arguments naming outputs; replay remaps these into a new directory
OUTPUT_ARGS = {
    "identify": ["out"],
    "decode": ["out"],
    "epochs": ["out"],
    "analyze": ["out"],
    "train": ["model"],
    "eval": ["out"],
    "simulate": ["out"],
}


def _manifest_for_file(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


# ------------------------------------------------------------------ maps


def _load_maps(maps_dir: str, geom):
    from .obstruction.maps import MapError, read_map

    d = Path(maps_dir)
    if not d.is_dir():
        raise CliError(f"maps directory not found: {maps_dir}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise CliError("no maps found")
    maps, bad = [], []
    for p in files:
        try:
            maps.append(read_map(p, geom))
        except (MapError, ValueError, OSError) as exc:
            bad.append((p.name, str(exc)))
    return maps, bad


def _diffs(maps):
    """Yield (map, diff or None, error) in terminal/time order."""
    from .obstruction.maps import ObstructionMap, xor_maps
    from .timeutil import to_unix

    by_term: dict[str, list] = {}
    for m in maps:
        by_term.setdefault(m.terminal_id, []).append(m)
    for term in sorted(by_term):
        seq = sorted(by_term[term], key=lambda m: (to_unix(m.captured_at), m.slot_index))
        prev = None
        for m in seq:
            if m.slot_index == 0:
                base = ObstructionMap.blank(m.captured_at, -1, term)
                base.geometry = m.geometry
            elif prev is not None and prev.slot_index == m.slot_index - 1:
                base = prev
            else:
                yield m, None, "missing predecessor map"
                prev = m
                continue
            yield m, xor_maps(base, m), None
            prev = m


def _geometry(args):
    from .obstruction.geometry import MapGeometry

    return MapGeometry(clockwise=(args.azimuth_sense == "cw"))


def _error_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["terminal_id", "slot_index", "unix", "file", "error", "message"])
    w.writerows(rows)
    return buf.getvalue()


def cmd_decode(args) -> int:
    from .obstruction.track import DecodeError, extract_track
    from .timeutil import isoformat, to_unix

    run = Run("decode", args)
    geom = _geometry(args)
    maps, bad = _load_maps(args.maps, geom)
    run.input("maps", Path(args.maps))
    errors = [("", "", "", name, "unreadable", msg) for name, msg in bad]
    lines = []
    for m, diff, err in _diffs(maps):
        unix = int(round(to_unix(m.captured_at)))
        if err:
            errors.append((m.terminal_id, m.slot_index, unix, "", "MissingPredecessor", err))
            continue
        try:
            tr = extract_track(diff, geom)
        except DecodeError as exc:
            errors.append((m.terminal_id, m.slot_index, unix, "", type(exc).__name__, str(exc)))
            continue
        lines.append(
            json.dumps(
                {
                    "terminal_id": m.terminal_id,
                    "slot_index": m.slot_index,
                    "slot_start": isoformat(m.captured_at),
                    "points": [[round(e, 9), round(a, 9)] for e, a in tr.points],
                    "pixels": [list(p) for p in tr.pixels],
                },
                sort_keys=True,
            )
        )
    out = Path(args.out)
    run.output(out, "".join(line + "\n" for line in lines))
    run.output(out.with_name(out.name + ".errors.csv"), _error_rows(errors))
    run.manifest(_manifest_for_file(out))
    for name, msg in bad:
        print(f"error: {name}: {msg}", file=sys.stderr)
    print(f"decoded {len(lines)} tracks, {len(errors)} errors")
    return EXIT_FAILED if bad else EXIT_OK


def cmd_identify(args) -> int:
    from .matching import MatchConfig, NoCandidates, format_match_csv, identify_satellite
    from .obstruction.track import DecodeError, extract_track
    from .orbital import Constellation, ObserverLocation, parse_tle_catalog
    from .timeutil import to_unix

    run = Run("identify", args)
    tle_path = _require_file(args.tle, "TLE file")
    try:
        obs = ObserverLocation.parse(args.location)
    except ValueError as exc:
        raise CliError(f"--location: {exc}") from None
    geom = _geometry(args)
    maps, bad = _load_maps(args.maps, geom)
    run.input("maps", Path(args.maps))
    run.input("tle", tle_path)
    records, tle_errors = parse_tle_catalog(tle_path.read_text(encoding="utf-8"))
    for e in tle_errors:
        print(f"warning: {tle_path.name}: {e}", file=sys.stderr)
    if not records:
        raise CliError(f"no valid element sets in {args.tle}")
    max_age = None if args.max_epoch_age_days <= 0 else args.max_epoch_age_days
    constellation = Constellation(records, None, max_age)
    cfg = MatchConfig(min_margin=args.min_margin)
    errors = [("", "", "", name, "unreadable", msg) for name, msg in bad]
    results = []
    for m, diff, err in _diffs(maps):
        unix = int(round(to_unix(m.captured_at)))
        if err:
            errors.append((m.terminal_id, m.slot_index, unix, "", "MissingPredecessor", err))
            continue
        try:
            tr = extract_track(diff, geom)
            results.append(identify_satellite(tr, constellation, obs, m.captured_at, config=cfg))
        except (DecodeError, NoCandidates) as exc:
            errors.append((m.terminal_id, m.slot_index, unix, "", type(exc).__name__, str(exc)))
    out = Path(args.out)
    run.output(out, format_match_csv(results))
    run.output(out.with_name(out.name + ".errors.csv"), _error_rows(errors))
    run.manifest(_manifest_for_file(out))
    for name, msg in bad:
        print(f"error: {name}: {msg}", file=sys.stderr)
    print(f"identified {len(results)} slots, {len(errors)} errors")
    return EXIT_FAILED if bad else EXIT_OK


# ------------------------------------------------------------------ traces


def cmd_epochs(args) -> int:
    from .trace_analysis import (
        TraceError,
        detect_offset,
        format_offset_csv,
        format_slot_csv,
        parse_trace_csv,
        slice_slots,
        strip_plot_svg,
    )

    run = Run("epochs", args)
    path = run.input("trace", _require_file(args.trace, "trace file"))
    try:
        trace = parse_trace_csv(path.read_text(encoding="utf-8"))
        out = Path(args.out)
        result = None
        if args.offset is None:
            result = detect_offset(trace)
            offset = result.offset_s
            run.output(out / "offsets.csv", format_offset_csv(result))
        else:
            offset = args.offset
        stats = slice_slots(trace, offset, args.band_gap_ms)
    except TraceError as exc:
        raise CliError(str(exc)) from None
    run.output(out / "slots.csv", format_slot_csv(stats))
    summary = {
        "offset_s": offset,
        "detected": result is not None,
        "inconclusive": bool(result.inconclusive) if result else False,
        "max_score": max(result.scores) if result else None,
        "slots": len(stats),
        "samples": len(trace),
    }
    run.output(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if args.plots:
        run.output(out / "trace.svg", strip_plot_svg(trace, offset))
    run.manifest(out / "manifest.json")
    flag = " (inconclusive)" if summary["inconclusive"] else ""
    print(f"epoch offset {offset}s{flag}; {len(stats)} slots")
    return EXIT_OK


# ------------------------------------------------------------------ analytics


def _read_records(path: Path):
    from .records import RecordError, read_records

    try:
        return read_records(path)
    except RecordError as exc:
        raise CliError(f"{path}: {exc}") from None


def cmd_analyze(args) -> int:
    from . import analytics
    from .orbital.launches import read_launch_catalog

    run = Run("analyze", args)
    rpath = run.input("records", _require_file(args.records, "records file"))
    records = _read_records(rpath)
    launches = None
    if args.launches:
        lpath = run.input("launches", _require_file(args.launches, "launch catalog"))
        try:
            launches = read_launch_catalog(lpath)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    try:
        summary = analytics.analyze(records, launches, args.boresight_offset)
    except analytics.AnalyticsError as exc:
        raise CliError(str(exc)) from None
    out = Path(args.out)
    run.output(out / "summary.csv", analytics.summary_csv(summary))
    run.output(out / "azimuth.csv", analytics.azimuth_csv(summary.azimuth))
    run.output(out / "elevation_cdf.csv", analytics.elevation_cdf_csv(summary.elevation))
    if summary.launch is not None:
        run.output(out / "launch_bins.csv", analytics.launch_csv(summary.launch))
    if args.plots:
        run.output(out / "elevation_cdf.svg", analytics.elevation_cdf_svg(summary.elevation))
        if summary.launch is not None:
            run.output(out / "launch_bins.svg", analytics.launch_svg(summary.launch))
    run.manifest(out / "manifest.json")
    for k, v in summary.headline().items():
        print(f"{k}: {'nan' if v is None or (isinstance(v, float) and math.isnan(v)) else f'{v:.4f}'}")
    return EXIT_OK


# ------------------------------------------------------------------ model


def _labeled(args, run: Run):
    from .model import featurize_all, loads_labeled

    if args.labeled:
        path = run.input("labeled", _require_file(args.labeled, "labeled-slot file"))
        return loads_labeled(path.read_text(encoding="utf-8"))
    if not args.records:
        raise CliError("one of --records or --labeled is required")
    path = run.input("records", _require_file(args.records, "records file"))
    slots, skipped = featurize_all(_read_records(path), args.tz_offset)
    if skipped:
        log.info("skipped %d records without a selection or with fewer than 2 candidates", skipped)
    return slots


def cmd_train(args) -> int:
    from .model import TrainConfig, TrainingError, train

    run = Run("train", args)
    data = _labeled(args, run)
    cfg = TrainConfig(
        n_trees=tuple(args.trees), max_depth=tuple(args.depths), min_samples_split=tuple(args.min_split)
    )
    try:
        model = train(data, cfg, args.seed)
    except TrainingError as exc:
        raise CliError(str(exc)) from None
    out = Path(args.model)
    run.output(out, model.dumps())
    run.extra = {"hyperparams": model.hyperparams}
    run.manifest(_manifest_for_file(out))
    hp = model.hyperparams
    print(f"trained {hp['n_trees']} trees (max_depth={hp['max_depth']}, min_samples_split={hp['min_samples_split']})")
    for row in model.metadata["holdout"]:
        print(f"holdout top-{row['k']}: model {row['model_acc']:.3f} baseline {row['baseline_acc']:.3f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .model import RandomForestModel, evaluate_topk, format_eval_csv

    run = Run("eval", args)
    mpath = run.input("model", _require_file(args.model, "model file"))
    try:
        model = RandomForestModel.load(mpath)
    except (ValueError, KeyError) as exc:
        raise CliError(f"{mpath}: {exc}") from None
    data = _labeled(args, run)
    if not data:
        raise CliError("empty evaluation dataset")
    rows = evaluate_topk(model, data, args.k)
    out = Path(args.out)
    run.output(out, format_eval_csv(rows))
    run.manifest(_manifest_for_file(out))
    for k, m, b in rows:
        print(f"top-{k}: model {m:.3f} baseline {b:.3f}")
    return EXIT_OK


# ------------------------------------------------------------------ simulator


def cmd_simulate(args) -> int:
    from .simulator import ConfigError, campaign_from_mapping, simulate_to_dir
    from .simulator.config import _load_mapping

    run = Run("simulate", args)
    cpath = run.input("config", _require_file(args.config, "config file"))
    try:
        data = _load_mapping(cpath)
    except (ValueError, OSError) as exc:
        raise CliError(f"{cpath}: {exc}") from None
    if args.preset:
        data.setdefault("scheduler", {})["preset"] = args.preset
    try:
        spec = campaign_from_mapping(data)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_USAGE
    if args.no_maps:
        spec = replace(spec, write_maps=False)
    out = Path(args.out)
    summary = simulate_to_dir(spec, out)
    run.outputs.extend(sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"))
    run.extra = data
    run.manifest(out / "manifest.json")
    print(
        f"simulated {summary['slots']} slots ({summary['empty_slots']} empty, "
        f"{summary['clean_slots']} clean renders) over {summary['satellites']} satellites"
    )
    return EXIT_OK


# ------------------------------------------------------------------ replay


def cmd_replay(args) -> int:
    mpath = _require_file(args.manifest, "manifest")
    try:
        m = json.loads(mpath.read_text(encoding="utf-8"))
        name = m["subcommand"]
        saved = dict(m["args"])
    except (ValueError, KeyError) as exc:
        raise CliError(f"{mpath}: not a run manifest ({exc})") from None
    if name not in OUTPUT_ARGS:
        raise CliError(f"cannot replay subcommand {name!r}")
    for key, digest in m.get("input_sha256", {}).items():
        p = Path(m["inputs"][key])
        if p.is_file() and _sha256(p) != digest:
            print(f"warning: input {key} ({p}) changed since the original run", file=sys.stderr)
    dest = Path(args.out_dir)
    for key in m.get("output_args", OUTPUT_ARGS[name]):
        saved[key] = str(dest / Path(saved[key]).name)
    argv = [name]
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[name]
    for action in sub._actions:
        if not action.option_strings or action.dest in ("help",):
            continue
        val = saved.get(action.dest)
        if val is None or val is False:
            continue
        flag = action.option_strings[-1]
        if val is True:
            argv.append(flag)
        elif isinstance(val, list):
            argv += [flag, ",".join("none" if v is None else str(v) for v in val)]
        else:
            argv += [flag, str(val)]
    print("replaying: leosched " + " ".join(argv))
    code = main(argv)
    if code != EXIT_OK or not args.check:
        return code
    originals = [Path(p) for p in m["outputs"]]
    mismatched = []
    for orig in originals:
        new = _remap_output(orig, m, name, saved)
        if new is None or not new.is_file() or new.read_bytes() != orig.read_bytes():
            mismatched.append(str(orig))
    if mismatched:
        for p in mismatched:
            print(f"mismatch: {p}", file=sys.stderr)
        return EXIT_FAILED
    print(f"replay matched {len(originals)} outputs byte for byte")
    return EXIT_OK


def _remap_output(orig: Path, manifest: dict, name: str, new_args: dict) -> Path | None:
    for key in manifest.get("output_args", OUTPUT_ARGS[name]):
        old_root = Path(manifest["args"][key]).resolve()
        new_root = Path(new_args[key]).resolve()
        try:
            rel = orig.relative_to(old_root)
            return new_root / rel
        except ValueError:
            pass
        if orig.parent == old_root.parent and orig.name.startswith(old_root.name):
            return new_root.parent / (new_root.name + orig.name[len(old_root.name) :])
    return None


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leosched", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def maps_args(sp):
        sp.add_argument("--maps", required=True, help="directory of <terminal>_<slot>_<unix>.pgm obstruction maps")
        sp.add_argument(
            "--azimuth-sense",
            choices=("cw", "ccw"),
            default="cw",
            help="direction azimuth increases on the map image (default cw)",
        )

    sp = sub.add_parser("decode", help="decode each slot's new trail from a map sequence")
    maps_args(sp)
    sp.add_argument("--out", required=True, help="output JSON-lines file of decoded tracks")
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("identify", help="identify the serving satellite of every slot")
    maps_args(sp)
    sp.add_argument("--tle", required=True, help="TLE catalog (2- or 3-line sets)")
    sp.add_argument("--location", required=True, help="terminal position LAT,LON[,ALT_M]")
    sp.add_argument("--out", required=True, help="output match CSV (errors go to <out>.errors.csv)")
    sp.add_argument("--min-margin", type=float, default=0.0, help="flag matches whose DTW margin is below this")
    sp.add_argument(
        "--max-epoch-age-days",
        type=float,
        default=7.0,
        help="skip satellites whose TLE epoch is further than this from the slot (<= 0 disables)",
    )
    sp.set_defaults(func=cmd_identify)

    sp = sub.add_parser("epochs", help="detect the reallocation epoch offset in an RTT trace")
    sp.add_argument("--trace", required=True, help="trace CSV with header unix_ms,rtt_ms,lost")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--offset", type=int, choices=range(15), metavar="S", help="use this offset instead of detecting it")
    sp.add_argument("--band-gap-ms", type=float, default=2.0, help="gap that separates latency bands (default 2 ms)")
    sp.add_argument("--plots", action="store_true", help="also write an SVG strip plot")
    sp.set_defaults(func=cmd_epochs)

    sp = sub.add_parser("analyze", help="scheduler-preference statistics from slot records")
    sp.add_argument("--records", required=True, help="SlotRecord JSON-lines file")
    sp.add_argument("--launches", help="launch catalog CSV norad_id,launch_date (enables the launch-bin report)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--boresight-offset", type=float, default=0.0, help="dish boresight azimuth in map frame (deg)")
    sp.add_argument("--plots", action="store_true", help="also write SVG plots")
    sp.set_defaults(func=cmd_analyze)

    def data_args(sp):
        sp.add_argument("--records", help="SlotRecord JSON-lines file (featurized on the fly)")
        sp.add_argument("--labeled", help="LabeledSlot JSON-lines file (alternative to --records)")
        sp.add_argument("--tz-offset", type=int, default=0, help="terminal UTC offset in minutes for local time")

    sp = sub.add_parser("train", help="train the random-forest scheduler model")
    data_args(sp)
    sp.add_argument("--model", required=True, help="output model JSON file")
    sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    sp.add_argument("--trees", type=_int_list, default=[50, 100, 200], help="forest sizes to search (default 50,100,200)")
    sp.add_argument(
        "--depths", type=_depth_list, default=[4, 8, 16, None], help="max depths to search, 'none' = unbounded (default 4,8,16,none)"
    )
    sp.add_argument("--min-split", type=_int_list, default=[2, 5], help="min_samples_split values to search (default 2,5)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="top-k accuracy of a model against the availability baseline")
    sp.add_argument("--model", required=True, help="model JSON file from 'train'")
    data_args(sp)
    sp.add_argument("--k", type=_int_list, default=[1, 3, 5], help="comma-separated k values (default 1,3,5)")
    sp.add_argument("--out", required=True, help="output CSV k,model_acc,baseline_acc")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("simulate", help="run a synthetic campaign and write records and maps")
    sp.add_argument("--config", required=True, help="campaign config (.json or .toml)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--preset", help="scheduler preset overriding the config's scheduler.preset")
    sp.add_argument("--no-maps", action="store_true", help="skip map rendering (records only)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("replay", help="re-run a command from its manifest into a new directory")
    sp.add_argument("manifest", help="manifest JSON written by an earlier run")
    sp.add_argument("--out-dir", required=True, help="directory for the replayed outputs")
    sp.add_argument("--check", action="store_true", help="exit 1 unless outputs match the originals byte for byte")
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
