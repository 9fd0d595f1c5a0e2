"""Command-line surface.

Exit codes: 0 success, 1 infeasible input, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import store
from .certify import certificate_json, certify_with_instance
from .engine import ExperimentConfig, run_experiment
from .payloads import PayloadError, payload_from_json, payload_to_json
from .registry import BASELINES, ORACLES, UnknownProblem, get_problem, problem_names, REGISTRY
from .scoring import Infeasible, UnsupportedInstance


def _load_json_arg(text: str) -> dict:
    if text is None:
        return {}
    path = Path(text)
    if path.exists():
        return json.loads(path.read_text())
    return json.loads(text)


def _cmd_list(args) -> int:
    for name in problem_names():
        spec = REGISTRY[name]
        print(f"{name:20s} {spec.orientation:3s} {spec.payload_kind:15s} {spec.doc}")
    return 0


def _cmd_eval(args) -> int:
    problem = get_problem(args.problem)
    construction = payload_from_json(_load_json_arg(args.construction))
    instance = problem.merged_instance(_load_json_arg(args.instance) if args.instance else {})
    report = problem.evaluate_report(construction, instance)
    if not report.feasible:
        print(f"infeasible: {report.reason}", file=sys.stderr)
        if report.penalties:
            print(json.dumps(report.penalties, default=str), file=sys.stderr)
        return 1
    print(f"{report.raw_score:.12g}")
    if args.certify:
        si = certify_with_instance(args.problem, construction, instance, args.bits)
        cert = certificate_json(args.problem, construction, si)
        print(json.dumps(cert, indent=2, sort_keys=True))
    return 0


def _run_mode(args, mode: str) -> int:
    cfg_obj = _load_json_arg(args.config)
    cfg_obj.setdefault("mode", mode)
    if args.workers is not None:
        cfg_obj["worker_count"] = args.workers
    if args.seed is not None:
        cfg_obj["master_seed"] = args.seed
    config = ExperimentConfig.from_json(cfg_obj)
    out_root = Path(args.out) if args.out else Path("runs")
    run_dir = store.new_run_dir(out_root, config.master_seed)
    writer = store.RunWriter(run_dir)
    report = run_experiment(config, writer=writer)
    if report.no_feasible_candidate:
        print(f"no feasible candidate after {report.eval_count} evaluations", file=sys.stderr)
        print(str(run_dir))
        return 1
    best = report.best
    print(f"best score {best.score:.12g} (raw {best.report.raw_score:.12g}) "
          f"after {report.eval_count} evaluations")
    print(str(run_dir))
    return 0


def _cmd_baseline(args) -> int:
    params = _load_json_arg(args.params) if args.params else {}
    try:
        builder = BASELINES[args.problem]
    except KeyError:
        print(f"no baseline registered for {args.problem!r}", file=sys.stderr)
        return 2
    construction = builder(params)
    text = json.dumps(payload_to_json(construction))
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_oracle(args) -> int:
    params = _load_json_arg(args.params) if args.params else {}
    try:
        oracle = ORACLES[args.problem]
    except KeyError:
        print(f"no oracle registered for {args.problem!r}", file=sys.stderr)
        return 2
    result = oracle(params)
    if isinstance(result, tuple):
        size, witness = result
        print(json.dumps({"minimum": size, "witness": list(witness)}))
    else:
        print(json.dumps({"value": result}))
    return 0


def _cmd_report(args) -> int:
    try:
        paths = store.report_emit(args.run, args.format)
    except (FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for p in paths:
        print(str(p))
    return 0


def _cmd_repo(args) -> int:
    root = args.root
    if args.repo_cmd == "add":
        obj = _load_json_arg(args.file)
        record = store.BestRecord.from_json(obj)
        if record.certificate is None and not args.allow_uncertified:
            print("record has no certificate; pass --allow-uncertified to store it",
                  file=sys.stderr)
            return 2
        try:
            path = store.repo_add(record, root=root)
        except store.RepoError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        print(str(path))
        return 0
    instance = _load_json_arg(args.instance) if args.instance else {}
    try:
        record = store.repo_show(args.problem, instance, root=root)
    except store.RepoError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.repo_cmd == "show":
        print(json.dumps(record.to_json(), indent=2, sort_keys=True))
        return 0
    # verify: re-evaluate and compare
    problem = get_problem(record.problem_id)
    payload = payload_from_json(record.construction)
    rep = problem.evaluate_report(payload, problem.merged_instance(record.instance))
    if not rep.feasible:
        print(f"stored construction is infeasible: {rep.reason}", file=sys.stderr)
        return 1
    if abs(rep.score - record.score) > 1e-9:
        print(f"score drift: stored {record.score!r}, re-evaluated {rep.score!r}",
              file=sys.stderr)
        return 1
    print(f"ok: score {rep.score:.12g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evoconstruct",
                                     description="construction search, evaluation and certification")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list registered problems")

    p_eval = sub.add_parser("eval", help="evaluate a construction file")
    p_eval.add_argument("--problem", required=True)
    p_eval.add_argument("--instance")
    p_eval.add_argument("--construction", required=True)
    p_eval.add_argument("--certify", action="store_true")
    p_eval.add_argument("--bits", type=int, default=256)

    for name in ("search", "generalize"):
        p = sub.add_parser(name, help=f"run a {name}-mode experiment")
        p.add_argument("--config", required=True)
        p.add_argument("--workers", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    p_base = sub.add_parser("baseline", help="emit a built-in construction")
    p_base.add_argument("--problem", required=True)
    p_base.add_argument("--params")
    p_base.add_argument("--out")

    p_oracle = sub.add_parser("oracle", help="run a small exhaustive oracle")
    p_oracle.add_argument("--problem", required=True)
    p_oracle.add_argument("--params")

    p_report = sub.add_parser("report", help="emit CSV/quantile reports and figures")
    p_report.add_argument("--run", required=True)
    p_report.add_argument("--format", choices=("csv", "plotdata"), default="csv")

    p_repo = sub.add_parser("repo", help="best-construction repository")
    repo_sub = p_repo.add_subparsers(dest="repo_cmd", required=True)
    p_add = repo_sub.add_parser("add")
    p_add.add_argument("--file", required=True)
    p_add.add_argument("--root")
    p_add.add_argument("--allow-uncertified", action="store_true")
    for nm in ("show", "verify"):
        pp = repo_sub.add_parser(nm)
        pp.add_argument("--problem", required=True)
        pp.add_argument("--instance")
        pp.add_argument("--root")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"list": _cmd_list, "eval": _cmd_eval, "baseline": _cmd_baseline,
                "oracle": _cmd_oracle, "report": _cmd_report, "repo": _cmd_repo,
                "search": lambda a: _run_mode(a, "search"),
                "generalize": lambda a: _run_mode(a, "generalize")}
    try:
        return handlers[args.command](args)
    except UnknownProblem as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (PayloadError, UnsupportedInstance) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Infeasible as exc:
        print(f"infeasible: {exc.reason}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"bad JSON argument: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
