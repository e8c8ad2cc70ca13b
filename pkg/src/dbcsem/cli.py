"""Command-line entry point: train, sweep, baseline, gradcheck, gen-data.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
Every command honors --seed and emits byte-reproducible CSV/JSON artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from dbcsem import baselines, data, diagnostics, evaluation, models, training
from dbcsem.checkpoint import CheckpointError, load_tensors, save_tensors
from dbcsem.config import ConfigError, dump_config, load_config
from dbcsem.tensor import NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_CONFIG_ERRORS = (ConfigError, models.ConfigError, training.ConfigError,
                  baselines.ConfigError, data.DatasetError, CheckpointError)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg, tc, seed: int,
                    artifacts: dict[str, Path], started: float) -> None:
    manifest = {
        "command": command,
        "seed": seed,
        "config": dump_config(cfg, tc),
        "artifacts": {name: {"path": str(p), "sha256": _sha256(p)}
                      for name, p in artifacts.items()},
        "wall_clock_s": round(time.time() - started, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _load_dataset(args, cfg) -> data.Dataset:
    if args.data:
        return data.load_records(args.data, cfg.height, cfg.width)
    return data.gen_synthetic(args.synthetic_count, cfg.height, cfg.width,
                              args.seed if args.seed is not None else 0,
                              kind=args.synthetic_kind)


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", nargs="*", default=None,
                   help="binary record file(s); omit to use a synthetic dataset")
    p.add_argument("--synthetic-count", type=int, default=512)
    p.add_argument("--synthetic-kind", choices=data.SYNTHETIC_KINDS, default="gaussians")


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_train(args) -> int:
    started = time.time()
    cfg, tc = load_config(args.config)
    if args.seed is not None:
        tc.seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(args, cfg)
    store, rows = training.train(dataset, cfg, tc)
    ckpt = out_dir / "checkpoint.dbc"
    log = out_dir / "train_log.csv"
    save_tensors(ckpt, store.state_dict())
    training.write_train_log(rows, log)
    _write_manifest(out_dir, "train", cfg, tc, tc.seed,
                    {"checkpoint": ckpt, "train_log": log}, started)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.time()
    cfg, tc = load_config(args.config)
    seed = args.seed if args.seed is not None else tc.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = models.build_proposed(cfg, tc.seed)
    store.load_state(load_tensors(args.checkpoint))
    dataset = _load_dataset(args, cfg)
    s1 = dataset.images
    s2 = dataset.images[data.np_permutation(dataset.count, seed)]
    snr1_list = _parse_floats(args.snr1_db)
    snr2_list = _parse_floats(args.snr2_db)
    if len(snr1_list) != len(snr2_list):
        raise ConfigError("--snr1-db and --snr2-db must list the same number of values")
    alpha_grid = _parse_floats(args.alpha_grid) if args.alpha_grid else list(cfg.alpha_grid)
    records = []
    for snr1, snr2 in zip(snr1_list, snr2_list):
        records.extend(evaluation.sweep_alpha(store, s1, s2, snr1, snr2, alpha_grid, seed))
    csv_path = out_dir / "region.csv"
    evaluation.write_region_csv(records, csv_path)
    frontier = evaluation.pareto_frontier(records)
    summary = {
        "records": len(records),
        "pareto_frontier": [r.as_csv() for r in frontier],
    }
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n")
    _write_manifest(out_dir, "sweep", cfg, tc, seed,
                    {"region": csv_path, "summary": json_path}, started)
    return EXIT_OK


def cmd_baseline(args) -> int:
    started = time.time()
    cfg, tc = load_config(args.config)
    if args.seed is not None:
        tc.seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(args, cfg)
    s1 = dataset.images
    s2 = dataset.images[data.np_permutation(dataset.count, tc.seed)]
    snr1_list = _parse_floats(args.snr1_db)
    snr2_list = _parse_floats(args.snr2_db)
    grid = _parse_floats(args.grid)
    ca = not args.no_ca
    records = []
    for gi, val in enumerate(grid):
        control = (baselines.TdConfig(val, ca) if args.scheme == "td"
                   else baselines.PaConfig(val, ca))
        store, _ = baselines.train_baseline(args.scheme, control, dataset, cfg, tc)
        for snr1, snr2 in zip(snr1_list, snr2_list):
            if args.scheme == "td":
                records.append(evaluation.evaluate_td(store, s1, s2, control, snr1, snr2,
                                                      tc.seed, cell_key=gi))
            else:
                records.append(evaluation.evaluate_pa(store, s1, s2, control, snr1, snr2,
                                                      tc.seed, cell_key=gi))
    csv_path = out_dir / "region.csv"
    evaluation.write_region_csv(records, csv_path)
    _write_manifest(out_dir, "baseline", cfg, tc, tc.seed, {"region": csv_path}, started)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = diagnostics.run_suite(dims=args.dims, seed=args.seed if args.seed is not None else 0,
                                    corrupt=args.corrupt)
    all_pass = True
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{status} {r['name']:<18} max_rel_err={r['max_rel_err']:.3e}")
        all_pass &= r["passed"]
    return EXIT_OK if all_pass else EXIT_NUMERICAL


def cmd_gen_data(args) -> int:
    dataset = data.gen_synthetic(args.count, args.height, args.width,
                                 args.seed if args.seed is not None else 0, kind=args.kind)
    data.save_records(dataset, args.out)
    print(f"wrote {dataset.count} records to {args.out} (sha256 {dataset.checksum[:16]}...)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbcsem",
                                     description="Two-user broadcast semantic transmission")
    parser.add_argument("--seed", type=int, default=None, help="global seed override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the fusion scheme")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    _data_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="alpha sweep of a trained checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snr1-db", default="-5,5")
    p.add_argument("--snr2-db", default="0,10")
    p.add_argument("--alpha-grid", default=None)
    _data_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="train and evaluate a TD or PA baseline grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme", choices=["td", "pa"], required=True)
    p.add_argument("--grid", default="0.2,0.35,0.5,0.65,0.8")
    p.add_argument("--snr1-db", default="-5")
    p.add_argument("--snr2-db", default="0")
    p.add_argument("--no-ca", action="store_true",
                   help="disable channel adaptation (constant conditioning input)")
    _data_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--corrupt", default=None,
                   help="self-test hook: corrupt one activation backward")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("gen-data", help="write a synthetic dataset file")
    p.add_argument("--kind", choices=data.SYNTHETIC_KINDS, default="gaussians")
    p.add_argument("--count", type=int, default=512)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
