"""Built-in proposal machinery and the external-generator wire protocol.

A strategy is a parameterized, time-budgeted local search over one problem's
representation: a kernel mix, an acceptance rule, and restart/step-size
knobs. External processes can take over proposal duty through a
line-delimited JSON protocol (subprocess pipes or HTTP POST).
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

import numpy as np

STRATEGY_KINDS = ("anneal", "coordinate_descent", "random_restart", "kernel_mix")
WALL_CHECK_EVERY = 16     # evaluations between clock checks (contract: at most 64)
OVERRUN_FACTOR = 2.0      # grace multiplier before hard termination


@dataclass
class StrategyConfig:
    """The evolved object in search mode: a budgeted local-search recipe."""

    kind: str = "anneal"
    move_weights: dict[str, float] = field(default_factory=dict)
    temperature_schedule: tuple[float, float] = (1.0, 0.999)   # (t0, decay)
    restart_count: int = 0
    step_scale: float = 1.0

    def validate(self, kernel_names) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if not self.move_weights or sum(self.move_weights.values()) <= 0:
            raise ValueError("move weights must sum to a positive value")
        if any(w < 0 for w in self.move_weights.values()):
            raise ValueError("move weights must be non-negative")
        unknown = set(self.move_weights) - set(kernel_names)
        if unknown:
            raise ValueError(f"kernels not valid for this representation: {sorted(unknown)}")
        t0, decay = self.temperature_schedule
        if t0 <= 0 or not (0 < decay <= 1):
            raise ValueError("temperature schedule needs t0 > 0 and decay in (0, 1]")
        if self.restart_count < 0 or self.step_scale <= 0:
            raise ValueError("restart_count must be >= 0 and step_scale > 0")

    def to_json(self) -> dict:
        return {"kind": self.kind,
                "move_weights": dict(self.move_weights),
                "temperature_schedule": list(self.temperature_schedule),
                "restart_count": self.restart_count,
                "step_scale": self.step_scale}

    @classmethod
    def from_json(cls, obj: dict) -> "StrategyConfig":
        t0, decay = obj.get("temperature_schedule", (1.0, 0.999))
        return cls(kind=obj.get("kind", "anneal"),
                   move_weights={str(k): float(v)
                                 for k, v in obj.get("move_weights", {}).items()},
                   temperature_schedule=(float(t0), float(decay)),
                   restart_count=int(obj.get("restart_count", 0)),
                   step_scale=float(obj.get("step_scale", 1.0)))


def random_strategy(rng: np.random.Generator, kernel_names) -> StrategyConfig:
    kind = STRATEGY_KINDS[int(rng.integers(len(STRATEGY_KINDS)))]
    weights = {k: float(rng.uniform(0.1, 1.0)) for k in kernel_names}
    return StrategyConfig(kind=kind,
                          move_weights=weights,
                          temperature_schedule=(float(rng.uniform(0.01, 1.0)),
                                                float(rng.uniform(0.9, 1.0))),
                          restart_count=int(rng.integers(0, 3)),
                          step_scale=float(np.exp(rng.normal(-1.0, 1.0))))


def _lognormal_factor(rng: np.random.Generator) -> float:
    return float(np.exp(rng.normal(0.0, 0.25)))


def mutate_strategy(parent: StrategyConfig, rng: np.random.Generator,
                    kernel_names=None) -> StrategyConfig:
    """Perturb one uniformly chosen field; numeric fields scale by exp(N(0, 0.25))."""
    names = list(kernel_names) if kernel_names else list(parent.move_weights)
    child = StrategyConfig(kind=parent.kind,
                           move_weights=dict(parent.move_weights),
                           temperature_schedule=parent.temperature_schedule,
                           restart_count=parent.restart_count,
                           step_scale=parent.step_scale)
    which = int(rng.integers(5))
    if which == 0:
        options = [k for k in STRATEGY_KINDS if k != parent.kind]
        child.kind = options[int(rng.integers(len(options)))]
    elif which == 1:
        name = names[int(rng.integers(len(names)))]
        old = child.move_weights.get(name, 1.0)
        child.move_weights[name] = max(old, 1e-6) * _lognormal_factor(rng)
        if sum(child.move_weights.values()) <= 0:
            child.move_weights[name] = 1.0
    elif which == 2:
        t0, decay = parent.temperature_schedule
        t0 = max(1e-12, t0 * _lognormal_factor(rng))
        decay = min(1.0, max(1e-9, decay * _lognormal_factor(rng)))
        child.temperature_schedule = (t0, decay)
    elif which == 3:
        new = max(0, int(round(parent.restart_count * _lognormal_factor(rng))))
        if new == parent.restart_count:
            new = parent.restart_count + 1 if rng.random() < 0.5 else max(0, parent.restart_count - 1)
        if new == parent.restart_count:
            new = parent.restart_count + 1
        child.restart_count = new
    else:
        child.step_scale = max(1e-12, parent.step_scale * _lognormal_factor(rng))
    return child


def _sample_kernel(names, weights, rng) -> str:
    w = np.asarray([max(0.0, weights.get(k, 0.0)) for k in names])
    total = w.sum()
    if total <= 0:
        return names[int(rng.integers(len(names)))]
    return names[int(rng.choice(len(names), p=w / total))]


def run_strategy(strategy: StrategyConfig, problem, instance, start,
                 budget_ms: float, seed, max_steps: int | None = None):
    """Execute a strategy; returns the best feasible construction found (or None).

    The wall clock is checked every few evaluations; the hard stop is at twice
    the budget. When `max_steps` is set and binds first, the run is a pure
    function of (strategy, instance, start, seed).
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    names = sorted(set(problem.kernels) & set(strategy.move_weights)) or sorted(problem.kernels)
    strategy.validate(problem.kernels)
    deadline = time.monotonic() + OVERRUN_FACTOR * budget_ms / 1000.0
    soft_deadline = time.monotonic() + budget_ms / 1000.0
    steps_cap = max_steps if max_steps is not None else (1 << 62)

    def out_of_time(evals: int) -> bool:
        if evals >= steps_cap:
            return True
        if evals % WALL_CHECK_EVERY == 0:
            return time.monotonic() >= soft_deadline
        return False

    def evaluate(payload):
        rep = problem.evaluate_report(payload, instance)
        return rep.score if rep.feasible else None

    best_payload, best_score = None, -math.inf
    evals = 0

    def note(payload, score):
        nonlocal best_payload, best_score
        if score is not None and score > best_score:
            best_payload, best_score = payload, score

    phases = strategy.restart_count + 1
    t0, decay = strategy.temperature_schedule
    for phase in range(phases):
        if evals and (out_of_time(evals) or time.monotonic() >= deadline):
            break
        if phase == 0 and start is not None:
            cur = start
        else:
            cur = problem.random_init(instance, rng)
        cur_score = evaluate(cur)
        evals += 1
        note(cur, cur_score)
        if strategy.kind == "coordinate_descent" and problem.vector_codec is not None:
            cur, cur_score, evals = _descent_sweeps(
                strategy, problem, instance, cur, cur_score, rng, evals,
                out_of_time, deadline)
            note(cur, cur_score)
            continue
        temperature = t0
        while not out_of_time(evals) and time.monotonic() < deadline:
            kernel = _sample_kernel(names, strategy.move_weights, rng)
            cand = problem.kernels[kernel](cur, instance, rng, strategy.step_scale)
            cand_score = evaluate(cand)
            evals += 1
            note(cand, cand_score)
            if _accept(cur_score, cand_score, temperature, strategy.kind, rng):
                cur, cur_score = cand, cand_score
            temperature = max(temperature * decay, 1e-300)
    return best_payload


def _accept(cur_score, cand_score, temperature, kind, rng) -> bool:
    if cand_score is None:
        return cur_score is None and rng.random() < 0.5
    if cur_score is None:
        return True
    delta = cand_score - cur_score
    if delta > 0:
        return True
    if kind in ("coordinate_descent", "random_restart"):
        return False
    if temperature <= 0:
        return False
    return rng.random() < math.exp(delta / temperature)


def _descent_sweeps(strategy, problem, instance, cur, cur_score, rng, evals,
                    out_of_time, deadline):
    """Strict-improvement coordinate sweeps with a halving step schedule."""
    to_vec, from_vec, scale = problem.vector_codec
    step = strategy.step_scale * scale

    def rng_normal(dim):
        return rng.normal(0.0, 1.0, dim)

    def evaluate(payload):
        rep = problem.evaluate_report(payload, instance)
        return rep.score if rep.feasible else None

    vec = np.asarray(to_vec(cur), dtype=float)

    def try_move(delta_vec):
        nonlocal vec, cur, cur_score, evals
        trial = vec + delta_vec
        cand = from_vec(trial, instance)
        cand_score = evaluate(cand)
        evals += 1
        if cand_score is not None and (cur_score is None or cand_score > cur_score):
            vec, cur, cur_score = trial, cand, cand_score
            return True
        return False

    def ride(delta_vec):
        # repeat a successful direction with growing steps while it keeps paying
        if not try_move(delta_vec):
            return False
        d = delta_vec
        while not out_of_time(evals) and time.monotonic() < deadline:
            d = d * 2.0
            if not try_move(d):
                break
        return True

    dim = len(vec)
    start_step = step
    while True:
        while step > 1e-12:
            improved = False
            for i in range(dim):
                if out_of_time(evals) or time.monotonic() >= deadline:
                    return cur, cur_score, evals
                for sign in (1.0, -1.0):
                    delta = np.zeros(dim)
                    delta[i] = sign * step
                    if ride(delta):
                        improved = True
                        break
            if not improved:
                # axis moves stall on tied non-smooth objectives; probe random
                # directions at this step before shrinking
                for _ in range(8 * dim):
                    if out_of_time(evals) or time.monotonic() >= deadline:
                        return cur, cur_score, evals
                    direction = rng_normal(dim)
                    norm = float(np.linalg.norm(direction))
                    if norm == 0.0:
                        continue
                    if ride(direction * (step / norm)):
                        improved = True
                        break
            if not improved:
                step *= 0.5
        if out_of_time(evals) or time.monotonic() >= deadline:
            return cur, cur_score, evals
        # spend any remaining budget re-polishing from a coarser step
        step = start_step * 0.03



# --- external generator protocol ----------------------------------------------

class MalformedResponse(Exception):
    pass


class EndpointQuarantined(Exception):
    pass


PROPOSAL_TYPES = ("construction", "strategy", "skip", "error")
QUARANTINE_AFTER = 5
DEFAULT_TIMEOUT_S = 60.0


def _parse_response(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"response is not JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("type") not in PROPOSAL_TYPES:
        raise MalformedResponse(f"response type missing or unknown: {obj!r}")
    if obj["type"] == "construction" and "construction" not in obj:
        raise MalformedResponse("construction response without a construction")
    if obj["type"] == "strategy" and "strategy" not in obj:
        raise MalformedResponse("strategy response without a strategy")
    if obj["type"] == "error":
        raise MalformedResponse(f"endpoint error: {obj.get('message', '')}")
    return obj


class _SubprocessChannel:
    """One request/response pair per line over a child process's pipes."""

    def __init__(self, command, timeout_s: float):
        if isinstance(command, str):
            command = shlex.split(command)
        self.timeout_s = timeout_s
        self.proc = subprocess.Popen(command, stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, text=True, bufsize=1)
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def request(self, payload: dict) -> str:
        if self.proc.poll() is not None:
            raise MalformedResponse("endpoint process has exited")
        assert self.proc.stdin is not None
        self.proc.stdin.write(json.dumps(payload) + "\n")
        self.proc.stdin.flush()
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise TimeoutError("endpoint response timed out")
        if line is None:
            raise MalformedResponse("endpoint closed its output")
        return line

    def close(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class _HttpChannel:
    def __init__(self, url: str, timeout_s: float):
        if not url.rstrip("/").endswith("/propose"):
            url = url.rstrip("/") + "/propose"
        self.url = url
        self.timeout_s = timeout_s

    def request(self, payload: dict) -> str:
        req = urllib.request.Request(
            self.url, data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"}, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                return resp.read().decode()
        except (urllib.error.URLError, OSError) as exc:
            if isinstance(getattr(exc, "reason", None), TimeoutError) or isinstance(exc, TimeoutError):
                raise TimeoutError(str(exc))
            raise MalformedResponse(f"transport failure: {exc}") from exc

    def close(self):
        pass


class ExternalEndpoint:
    """Proposal endpoint with consecutive-error quarantine for the run."""

    def __init__(self, spec, timeout_s: float | None = None):
        if isinstance(spec, str):
            spec = ({"transport": "http", "url": spec}
                    if spec.startswith(("http://", "https://"))
                    else {"transport": "subprocess", "command": spec})
        self.spec = spec
        timeout = timeout_s if timeout_s is not None else float(spec.get("timeout_s", DEFAULT_TIMEOUT_S))
        if spec.get("transport", "subprocess") == "http":
            self.channel = _HttpChannel(spec["url"], timeout)
        else:
            self.channel = _SubprocessChannel(spec["command"], timeout)
        self.consecutive_errors = 0
        self.quarantined = False

    def propose(self, context: dict) -> dict:
        """Send one proposal request; returns the parsed response object.

        Timeouts degrade to a skip; malformed or error responses count toward
        quarantine, after which no further requests are sent this run.
        """
        if self.quarantined:
            raise EndpointQuarantined("endpoint is quarantined for this run")
        request = {"type": "propose", **context}
        try:
            raw = self.channel.request(request)
        except TimeoutError:
            return {"type": "skip"}
        except MalformedResponse:
            self._count_error()
            raise
        try:
            obj = _parse_response(raw)
        except MalformedResponse:
            self._count_error()
            raise
        self.consecutive_errors = 0
        return obj

    def _count_error(self):
        self.consecutive_errors += 1
        if self.consecutive_errors >= QUARANTINE_AFTER:
            self.quarantined = True

    def note_malformed_content(self):
        """Count a response whose body failed validation downstream."""
        self._count_error()

    def close(self):
        self.channel.close()


def external_propose(endpoint: ExternalEndpoint, context: dict) -> dict:
    """Single proposal request against an endpoint (see ExternalEndpoint.propose)."""
    return endpoint.propose(context)
