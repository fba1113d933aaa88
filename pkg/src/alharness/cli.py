"""Command-line interface (``harness``).

Exit codes: 0 ok, 1 usage, 2 validation, 3 plugin failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .core.detio import read_detections
from .core.ingest import VOC_CLASSES, ingest_voc_dir, load_index, parse_coco_index, write_index
from .core.types import ClassCatalog
from .errors import HarnessError, HarnessIOError
from .eval.metrics import evaluate_run

log = logging.getLogger("alharness")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_PLUGIN, EXIT_IO = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _read_lines(path: str | None) -> list[str]:
    if not path:
        return []
    return [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]


def cmd_ingest(args) -> int:
    if args.format == "voc":
        names = _read_lines(args.classes) or list(VOC_CLASSES)
        catalog = ClassCatalog(tuple(names))
        samples = ingest_voc_dir(Path(args.src), catalog, _read_lines(args.test_ids))
    elif args.format == "coco":
        try:
            text = Path(args.src).read_text(encoding="utf-8")
        except OSError as exc:
            raise HarnessIOError(str(exc)) from None
        catalog, samples = parse_coco_index(text, source=args.src)
        if args.split != "train":
            from dataclasses import replace

            samples = [replace(s, split=args.split) for s in samples]
    else:
        catalog, samples = load_index(args.src)
    write_index(args.dst, catalog, samples)
    print(f"wrote {len(samples)} samples, {catalog.size} classes to {args.dst}")
    return EXIT_OK


def cmd_pool_gen(args) -> int:
    from .sim.env import PoolSpec, generate_pool

    try:
        spec_data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise HarnessIOError(str(exc)) from None
    except json.JSONDecodeError as exc:
        from .errors import SpecError

        raise SpecError(f"{args.spec}: {exc}") from None
    catalog, samples = generate_pool(PoolSpec.from_dict(spec_data))
    write_index(args.dst, catalog, samples)
    n_test = sum(s.split == "test" for s in samples)
    print(f"wrote {len(samples) - n_test} pool + {n_test} test samples to {args.dst}")
    return EXIT_OK


def _run_one(config_dict: dict, base_dir: str, run_dir: str) -> tuple[str, list[float], str]:
    from .orchestrator import RunConfig, execute

    config = RunConfig.from_dict(config_dict, Path(base_dir))
    state = execute(config, run_dir)
    return config.method_name, [r.eval_report.mAP for r in state.records], state.stop_reason or ""


def cmd_run(args) -> int:
    from .orchestrator.config import RunConfig, expand_methods, load_config_file, run_root

    data, base_dir = load_config_file(Path(args.config))
    items = expand_methods(data)
    configs = [RunConfig.from_dict(item, base_dir) for item in items]
    root = Path(args.run_dir) if args.run_dir else run_root()
    jobs = []
    for item, cfg in zip(items, configs):
        run_dir = root / cfg.dataset_name / cfg.method_name if len(configs) > 1 or not args.run_dir else root
        jobs.append((item, str(base_dir), str(run_dir)))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*job) for job in jobs]
    for (name, maps, reason), job in zip(results, jobs):
        series = " ".join(f"{100 * m:.2f}" for m in maps)
        print(f"{name}: mAP {series} ({reason}) -> {job[2]}")
    return EXIT_OK


def cmd_resume(args) -> int:
    from .orchestrator import resume, run_to_completion

    state = run_to_completion(resume(Path(args.run_dir)))
    print(f"{state.config.method_name}: {state.status} after {len(state.records)} records "
          f"({state.stop_reason})")
    return EXIT_OK


def cmd_eval(args) -> int:
    catalog, samples = load_index(args.gt)
    gts = {s.sample_id: list(s.annotations) for s in samples}
    dets = read_detections(Path(args.detections), expected_ids=list(gts))
    report = evaluate_run(dets, gts, catalog, args.iou, args.variant, args.include_difficult)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise HarnessIOError(str(exc)) from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _collect_runs(paths: list[str]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if (p / "state.json").exists():
            out.append(p)
        else:
            found = sorted(s.parent for s in p.rglob("state.json"))
            if not found:
                raise HarnessIOError(f"no run found under {p}")
            out.extend(found)
    return out


def cmd_leaderboard(args) -> int:
    from .orchestrator import load_run
    from .report import build_category_table, build_leaderboard, emit

    runs = [load_run(p) for p in _collect_runs(args.run_dirs)]
    entries = build_leaderboard(runs, default_eval=args.default_eval)
    tables = []
    for dataset in dict.fromkeys(r.config.dataset_name for r in runs):
        tables.append(build_category_table([r for r in runs if r.config.dataset_name == dataset],
                                           reference=args.reference))
    formats = [f for f in args.format.split(",") if f]
    for path in emit(entries, tables, formats, Path(args.out)):
        print(path)
    return EXIT_OK


def cmd_plugin_validate(args) -> int:
    from .plugin.manifest import load_manifest, validate_plugin

    violations = validate_plugin(load_manifest(args.manifest))
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_test(args) -> int:
    import pytest

    tests = Path(args.path) if args.path else Path(__file__).resolve().parents[2] / "tests"
    if not tests.is_dir():
        raise HarnessIOError(f"test directory {tests} not found; pass --path")
    return int(pytest.main([str(tests), *args.pytest_args]))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="harness", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="convert annotations to the canonical index")
    p.add_argument("format", choices=["voc", "coco", "index"])
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--classes", help="file with one class name per line (VOC)")
    p.add_argument("--test-ids", help="file listing sample ids for the test split (VOC)")
    p.add_argument("--split", default="train", choices=["train", "test"], help="split for COCO samples")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pool-gen", help="generate a synthetic pool from a JSON spec")
    p.add_argument("spec")
    p.add_argument("dst")
    p.set_defaults(func=cmd_pool_gen)

    p = sub.add_parser("run", help="run a benchmark config")
    p.add_argument("config")
    p.add_argument("--run-dir", help="output directory (default: $HARNESS_RUN_ROOT/<dataset>/<method>)")
    p.add_argument("--jobs", type=int, default=1, help="methods to run concurrently")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue an interrupted run")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("eval", help="evaluate detections.jsonl against a ground-truth index")
    p.add_argument("detections")
    p.add_argument("gt")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--variant", choices=["all_points", "11pt"], default="all_points")
    p.add_argument("--include-difficult", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("leaderboard", help="build leaderboards from run directories")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--format", default="md,csv,json")
    p.add_argument("--out", default="leaderboard")
    p.add_argument("--reference", default="random", help="method other methods are compared against per class")
    p.add_argument("--default-eval", action="store_true", help="rank by default-trainer retraining reports")
    p.set_defaults(func=cmd_leaderboard)

    p = sub.add_parser("plugin-validate", help="check a plugin.json manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_plugin_validate)

    p = sub.add_parser("test", help="run the test suite (offline); other arguments go to pytest")
    p.add_argument("--path", help="tests directory")
    p.set_defaults(func=cmd_test, pytest_args=[])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra:
        # everything unrecognised after `test` is handed to pytest
        if args.func is not cmd_test:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        args.pytest_args = [*args.pytest_args, *extra]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
