"""Evolutionary loop: archive, proposal dispatch, budgets and aggregation.

Runs proceed in generation batches of `worker_count` candidates proposed from
a common archive snapshot, so a run is a deterministic function of
(config, master seed) whenever strategy step caps bind before wall budgets;
with one worker this holds for the whole report modulo wall-clock fields.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import strategies as st
from .payloads import Construction, canonical_json, payload_from_json, payload_key, payload_to_json
from .registry import ProblemSpec, get_problem
from .scoring import EvaluationReport
from .strategies import (EndpointQuarantined, ExternalEndpoint, MalformedResponse,
                         StrategyConfig, mutate_strategy, random_strategy, run_strategy)

GENERATION_BAND = 4
TOP_K_FOR_EXTERNAL = 5


class ConfigError(ValueError):
    pass


@dataclass
class GeneratorSpec:
    """Generalize-mode candidate: a rule producing one construction per instance."""

    kind: str                      # "strategy" | "baseline" | "empty"
    strategy: StrategyConfig | None = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"kind": "generator", "generator": self.kind}
        if self.strategy is not None:
            out["strategy"] = self.strategy.to_json()
        if self.name:
            out["name"] = self.name
        if self.params:
            out["params"] = self.params
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorSpec":
        strat = obj.get("strategy")
        return cls(kind=obj.get("generator", "strategy"),
                   strategy=StrategyConfig.from_json(strat) if strat else None,
                   name=obj.get("name", ""), params=obj.get("params", {}))


@dataclass
class ExperimentConfig:
    problem_id: str
    instance: dict = field(default_factory=dict)
    mode: str = "search"
    instance_list: list[dict] = field(default_factory=list)
    worker_count: int = 1
    eval_budget_ms: int = 1000
    total_evals: int = 100
    master_seed: int = 0
    proposer: dict = field(default_factory=dict)
    archive_capacity: int = 64
    niche_count: int = 4
    normalization_table: dict | None = None
    seed_constructions: list[dict] = field(default_factory=list)
    max_strategy_steps: int | None = 2000

    def validate(self) -> None:
        if self.mode not in ("search", "generalize"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.worker_count < 1 or self.eval_budget_ms < 1:
            raise ConfigError("worker_count and eval_budget_ms must be >= 1")
        if not (self.archive_capacity >= self.niche_count >= 1):
            raise ConfigError("need archive_capacity >= niche_count >= 1")
        if self.total_evals < 0:
            raise ConfigError("total_evals must be >= 0")
        if self.mode == "generalize" and not self.instance_list:
            raise ConfigError("generalize mode needs a nonempty instance_list")
        if not (0 <= self.master_seed < 2 ** 64):
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict:
        return {"problem_id": self.problem_id, "instance": self.instance,
                "mode": self.mode, "instance_list": self.instance_list,
                "worker_count": self.worker_count, "eval_budget_ms": self.eval_budget_ms,
                "total_evals": self.total_evals, "master_seed": self.master_seed,
                "proposer": self.proposer, "archive_capacity": self.archive_capacity,
                "niche_count": self.niche_count,
                "normalization_table": self.normalization_table,
                "seed_constructions": self.seed_constructions,
                "max_strategy_steps": self.max_strategy_steps}

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        cfg = cls(**obj)
        cfg.validate()
        return cfg


@dataclass
class CandidateRecord:
    id: int
    parent_ids: list[int]
    payload: object                     # Construction | StrategyConfig | GeneratorSpec
    construction: Construction | None
    score: float | None                 # canonical: larger is better
    report: EvaluationReport
    generation: int
    seed_used: int

    def payload_json(self) -> dict:
        if isinstance(self.payload, StrategyConfig):
            return {"kind": "strategy", **self.payload.to_json()}
        if isinstance(self.payload, GeneratorSpec):
            return self.payload.to_json()
        return payload_to_json(self.payload)

    def payload_kind(self) -> str:
        if isinstance(self.payload, StrategyConfig):
            return "strategy"
        if isinstance(self.payload, GeneratorSpec):
            return "generator"
        return self.payload.kind


@dataclass
class Archive:
    niche_count: int
    capacity: int
    niches: list[list[CandidateRecord]] = field(default_factory=list)
    incumbents: dict[str, tuple[Construction, float, int]] = field(default_factory=dict)
    admitted: int = 0
    rejected_infeasible: int = 0

    def __post_init__(self):
        if not self.niches:
            self.niches = [[] for _ in range(self.niche_count)]

    def per_niche_capacity(self) -> int:
        return max(1, self.capacity // self.niche_count)

    def records(self) -> list[CandidateRecord]:
        return [r for niche in self.niches for r in niche]

    def best_record(self) -> CandidateRecord | None:
        recs = self.records()
        if not recs:
            return None
        return max(recs, key=lambda r: (r.score, -r.id))


def niche_key(payload_kind: str, generation: int, niche_count: int) -> int:
    band = generation // GENERATION_BAND
    return zlib.crc32(f"{payload_kind}:{band}".encode()) % niche_count


def admit(archive: Archive, rec: CandidateRecord, instance_key: str = "") -> Archive:
    """Insert an evaluated record; evict the worst of an over-full niche.

    Infeasible records are counted but never archived, so the incumbent and
    best-so-far scores are monotone over a run.
    """
    if not rec.report.feasible or rec.score is None or not math.isfinite(rec.score):
        archive.rejected_infeasible += 1
        return archive
    idx = niche_key(rec.payload_kind(), rec.generation, archive.niche_count)
    niche = archive.niches[idx]
    niche.append(rec)
    niche.sort(key=lambda r: (-r.score, r.id))
    cap = archive.per_niche_capacity()
    while len(niche) > cap:
        niche.pop()
    archive.admitted += 1
    if rec.construction is not None:
        cur = archive.incumbents.get(instance_key)
        if cur is None or rec.score > cur[1]:
            archive.incumbents[instance_key] = (rec.construction, rec.score, rec.id)
    return archive


@dataclass
class RunReport:
    best: CandidateRecord | None
    history: list[tuple[int, float]]
    eval_count: int
    wall_ms: float
    no_feasible_candidate: bool = False

    def to_json(self) -> dict:
        best = None
        if self.best is not None:
            best = {"id": self.best.id,
                    "payload": self.best.payload_json(),
                    "construction": (payload_to_json(self.best.construction)
                                     if self.best.construction is not None else None),
                    "score": self.best.score,
                    "raw_score": self.best.report.raw_score,
                    "seed_used": self.best.seed_used,
                    "generation": self.best.generation}
        return {"best": best, "history": [[i, s] for i, s in self.history],
                "eval_count": self.eval_count, "wall_ms": self.wall_ms,
                "no_feasible_candidate": self.no_feasible_candidate}

    def deterministic_digest(self) -> str:
        """Canonical serialization with wall-clock fields stripped."""
        obj = self.to_json()
        obj.pop("wall_ms", None)
        return canonical_json(obj)


def candidate_seed(master_seed: int, candidate_id: int) -> int:
    """Per-candidate seed from a splittable counter-based scheme."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(candidate_id,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def score_search_candidate(problem: ProblemSpec, strategy: StrategyConfig, instance: dict,
                           incumbent, budget_ms: float, seed: int,
                           max_steps: int | None = None):
    """Run a strategy from the incumbent and keep whichever construction scores better.

    Returns (construction, report); on non-improvement the incumbent and its
    score are returned unchanged (improver chaining).
    """
    start = incumbent[0] if incumbent else None
    found = run_strategy(strategy, problem, instance, start, budget_ms, seed,
                         max_steps=max_steps)
    if found is None:
        if incumbent:
            rep = problem.evaluate_report(incumbent[0], instance)
            return incumbent[0], rep
        return None, EvaluationReport(raw_score=None, score=None, feasible=False,
                                      reason="strategy produced no feasible construction")
    report = problem.evaluate_report(found, instance)
    if incumbent and (not report.feasible or report.score < incumbent[1]):
        rep = problem.evaluate_report(incumbent[0], instance)
        return incumbent[0], rep
    return found, report


def _reference_score(problem: ProblemSpec, instance: dict, normalization_table) -> float | None:
    key = canonical_json(instance)
    if normalization_table:
        if key in normalization_table:
            return float(normalization_table[key])
        # allow plain problem-size keys written by hand
        for k, v in normalization_table.items():
            if k == str(instance.get("n")) or k == str(instance.get("p")):
                return float(v)
    if problem.baseline is not None:
        try:
            base = problem.baseline(instance)
            rep = problem.evaluate_report(base, instance)
            if rep.feasible and rep.raw_score not in (None, 0.0):
                return rep.raw_score
        except Exception:
            return None
    return None


def _generator_construction(problem: ProblemSpec, gen: GeneratorSpec, instance: dict,
                            budget_ms: float, seed: int, max_steps: int | None):
    if gen.kind == "empty":
        # the degenerate generator emits nothing; every instance takes the floor
        return None
    if gen.kind == "baseline":
        builder = problem.baseline
        if builder is None:
            return None
        try:
            return builder({**instance, **gen.params})
        except Exception:
            return None
    return run_strategy(gen.strategy, problem, instance, None, budget_ms, seed,
                        max_steps=max_steps)


def score_generalizer_candidate(problem: ProblemSpec, gen: GeneratorSpec,
                                instance_list: list[dict], normalization_table,
                                budget_ms: float, seed: int,
                                max_steps: int | None = None,
                                instance_hook=None) -> tuple[float, int]:
    """Mean orientation-normalized score of a generator across instances.

    Per instance the normalized score is raw/reference for maximization
    problems and reference/raw for minimization problems (1 = baseline
    parity, bigger better either way); infeasible instances contribute the
    problem's registered floor. Returns (mean, feasible instance count).
    """
    contributions = []
    feasible_count = 0
    for idx, raw_inst in enumerate(instance_list):
        instance = problem.merged_instance(raw_inst)
        inst_seed = candidate_seed(seed, idx)
        construction = None
        try:
            construction = _generator_construction(
                problem, gen, instance, budget_ms / max(1, len(instance_list)),
                inst_seed, max_steps)
        except Exception:
            construction = None
        report = (problem.evaluate_report(construction, instance)
                  if construction is not None else
                  EvaluationReport(raw_score=None, score=None, feasible=False,
                                   reason="generator failed"))
        if not report.feasible or report.raw_score is None:
            contributions.append(problem.infeasibility_floor)
            continue
        feasible_count += 1
        if instance_hook is not None:
            instance_hook(instance, construction, report)
        ref = _reference_score(problem, instance, normalization_table)
        raw = report.raw_score
        if ref in (None, 0.0):
            normalized = raw if problem.orientation == "max" else _safe_inverse(raw)
        elif problem.orientation == "max":
            normalized = raw / ref
        else:
            normalized = ref / raw if raw != 0 else problem.infeasibility_floor
        contributions.append(normalized)
    return float(np.mean(contributions)), feasible_count


def _safe_inverse(x: float) -> float:
    return 1.0 / x if x not in (0, 0.0) else 0.0


class _BuiltinProposer:
    """Fresh or mutated strategies / generators drawn from the archive snapshot."""

    def __init__(self, problem: ProblemSpec, mode: str, proposer_cfg: dict):
        self.problem = problem
        self.mode = mode
        cfg = proposer_cfg.get("builtin") or {}
        self.explore_prob = float(cfg.get("explore_prob", 0.3))
        self.seed_generators = list(cfg.get("seed_generators", []))
        self._seeded = 0

    def propose(self, rng: np.random.Generator, snapshot: list[CandidateRecord]):
        kernel_names = sorted(self.problem.kernels)
        if self.mode == "generalize":
            if self._seeded < len(self.seed_generators):
                name = self.seed_generators[self._seeded]
                self._seeded += 1
                if name == "empty":
                    return GeneratorSpec(kind="empty"), []
                if name == "baseline":
                    return GeneratorSpec(kind="baseline"), []
            parents = [r for r in snapshot
                       if isinstance(r.payload, GeneratorSpec) and r.payload.strategy]
            if parents and rng.random() >= self.explore_prob:
                parent = self._pick(parents, rng)
                child = mutate_strategy(parent.payload.strategy, rng, kernel_names)
                return GeneratorSpec(kind="strategy", strategy=child), [parent.id]
            return GeneratorSpec(kind="strategy",
                                 strategy=random_strategy(rng, kernel_names)), []
        parents = [r for r in snapshot if isinstance(r.payload, StrategyConfig)]
        if parents and rng.random() >= self.explore_prob:
            parent = self._pick(parents, rng)
            return mutate_strategy(parent.payload, rng, kernel_names), [parent.id]
        return random_strategy(rng, kernel_names), []

    @staticmethod
    def _pick(parents: list[CandidateRecord], rng: np.random.Generator) -> CandidateRecord:
        parents = sorted(parents, key=lambda r: (-(r.score if r.score is not None else -math.inf), r.id))
        if rng.random() < 0.5:
            return parents[0]
        return parents[int(rng.integers(len(parents)))]


def _external_context(problem, instance, incumbent, snapshot, budget_ms, seed):
    top = sorted((r for r in snapshot if r.score is not None),
                 key=lambda r: (-r.score, r.id))[:TOP_K_FOR_EXTERNAL]
    return {
        "problem": {"id": problem.name, "instance": instance, "doc": problem.doc},
        "incumbent": ({"construction": payload_to_json(incumbent[0]), "score": incumbent[1]}
                      if incumbent else None),
        "top": [{"payload": (payload_to_json(r.construction)
                             if r.construction is not None else r.payload_json()),
                 "score": r.score} for r in top],
        "budget_ms": int(budget_ms),
        "seed": seed,
    }


def run_experiment(config: ExperimentConfig, writer=None,
                   endpoint: ExternalEndpoint | None = None) -> RunReport:
    """Execute an experiment; returns the best feasible record and history.

    `writer`, when given, receives one dict per evaluation (the log line)
    via writer.log(...) plus final artifacts via writer.finish(report).
    """
    config.validate()
    problem = get_problem(config.problem_id)
    instance = problem.merged_instance(config.instance)
    instance_list = [problem.merged_instance(i) for i in config.instance_list]
    t_start = time.monotonic()

    if endpoint is None and config.proposer.get("external"):
        endpoint = ExternalEndpoint(config.proposer["external"])
    builtin = _BuiltinProposer(problem, config.mode, config.proposer)

    archive = Archive(niche_count=config.niche_count, capacity=config.archive_capacity)
    history: list[tuple[int, float]] = []
    eval_count = 0
    best_so_far = -math.inf

    def log_record(rec: CandidateRecord):
        nonlocal eval_count, best_so_far
        eval_count += 1
        if rec.score is not None and rec.score > best_so_far:
            best_so_far = rec.score
        if math.isfinite(best_so_far):
            history.append((eval_count, best_so_far))
        if writer is not None:
            writer.log({"id": rec.id, "parents": rec.parent_ids, "score": rec.score,
                        "raw_score": rec.report.raw_score, "feasible": rec.report.feasible,
                        "wall_ms": rec.report.wall_ms, "seed": rec.seed_used,
                        "generation": rec.generation,
                        "payload_kind": rec.payload_kind()})

    def evaluate_search(proposal, parents, cid, generation):
        seed = candidate_seed(config.master_seed, cid)
        incumbent = archive.incumbents.get("")
        if isinstance(proposal, StrategyConfig):
            construction, report = score_search_candidate(
                problem, proposal, instance, incumbent, config.eval_budget_ms, seed,
                max_steps=config.max_strategy_steps)
            payload = proposal
        else:
            report = problem.evaluate_report(proposal, instance)
            construction = proposal if report.feasible else None
            payload = proposal
            if incumbent and (not report.feasible or report.score < incumbent[1]):
                construction = incumbent[0]
                report = problem.evaluate_report(incumbent[0], instance)
        return CandidateRecord(id=cid, parent_ids=parents, payload=payload,
                               construction=construction, score=report.score,
                               report=report, generation=generation, seed_used=seed)

    def evaluate_generalize(proposal, parents, cid, generation):
        seed = candidate_seed(config.master_seed, cid)
        t0 = time.monotonic()
        mean_score, feasible_count = score_generalizer_candidate(
            problem, proposal, instance_list, config.normalization_table,
            config.eval_budget_ms, seed, max_steps=config.max_strategy_steps)
        wall = (time.monotonic() - t0) * 1000.0
        feasible = feasible_count > 0
        report = EvaluationReport(raw_score=mean_score if feasible else None,
                                  score=mean_score if feasible else None,
                                  feasible=feasible,
                                  reason="" if feasible else "no feasible instance",
                                  wall_ms=wall)
        return CandidateRecord(id=cid, parent_ids=parents, payload=proposal,
                               construction=None, score=report.score, report=report,
                               generation=generation, seed_used=seed)

    evaluate = evaluate_search if config.mode == "search" else evaluate_generalize

    next_id = 0
    generation = 0
    # seed constructions are evaluated first and do not count against total_evals
    for obj in config.seed_constructions:
        payload = payload_from_json(obj)
        rec = evaluate(payload, [], next_id, generation) if config.mode == "search" else None
        if rec is None:
            raise ConfigError("seed constructions are only meaningful in search mode")
        log_record(rec)
        admit(archive, rec, "")
        next_id += 1

    remaining = config.total_evals
    pool = ThreadPoolExecutor(max_workers=config.worker_count) if config.worker_count > 1 else None
    try:
        while remaining > 0:
            generation += 1
            batch = min(config.worker_count, remaining)
            snapshot = archive.records()
            incumbent = archive.incumbents.get("")
            proposals = []
            for _ in range(batch):
                cid = next_id
                next_id += 1
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=config.master_seed,
                                           spawn_key=(cid, 1)))
                proposal = None
                parents: list[int] = []
                if endpoint is not None and not endpoint.quarantined:
                    ctx = _external_context(problem, instance, incumbent, snapshot,
                                            config.eval_budget_ms,
                                            candidate_seed(config.master_seed, cid))
                    resp = None
                    try:
                        resp = endpoint.propose(ctx)
                    except (MalformedResponse, EndpointQuarantined):
                        resp = None
                    if resp is not None and resp["type"] != "skip":
                        try:
                            if resp["type"] == "construction":
                                proposal = payload_from_json(resp["construction"])
                            elif resp["type"] == "strategy":
                                proposal = StrategyConfig.from_json(resp["strategy"])
                        except Exception:
                            endpoint.note_malformed_content()
                            proposal = None
                if proposal is None:
                    proposal, parents = builtin.propose(rng, snapshot)
                proposals.append((proposal, parents, cid, generation))
            if pool is not None:
                records = list(pool.map(lambda args: evaluate(*args), proposals))
            else:
                records = [evaluate(*args) for args in proposals]
            for rec in sorted(records, key=lambda r: r.id):
                log_record(rec)
                admit(archive, rec, "")
            remaining -= batch
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
        if endpoint is not None:
            endpoint.close()

    best = archive.best_record()
    report = RunReport(best=best, history=history, eval_count=eval_count,
                       wall_ms=(time.monotonic() - t_start) * 1000.0,
                       no_feasible_candidate=best is None)
    if writer is not None:
        writer.finish(report, config)
    return report
