"""Schedulers, reduction graphs, and empirical checkers for the calculus's
metatheorems (confluence, leak freedom, behavior uniqueness, progress)."""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field

from . import machine, sem_den, sem_mut
from .histories import DisjointnessError
from .machine import Config, Token, canonical_key, initial_config
from .terms import IntLit, Term

SEMANTICS = {"mut": sem_mut, "den": sem_den}

DEFAULT_NODE_CAP = 100_000
DEFAULT_BUDGET = 10_000


class ExplosionAbort(Exception):
    def __init__(self, nodes):
        super().__init__(f"reduction graph exceeded the node cap at {nodes} nodes")
        self.nodes = nodes


def node_cap(default=DEFAULT_NODE_CAP) -> int:
    return int(os.environ.get("PBO_NODE_CAP", default))


# ---------------------------------------------------------------------------
# Schedulers.


class Scheduler:
    def pick(self, n: int) -> int:
        raise NotImplementedError


class RandomScheduler(Scheduler):
    def __init__(self, seed: int):
        self.seed = seed
        self.rng = random.Random(seed)

    def pick(self, n):
        return self.rng.randrange(n)


class FirstScheduler(Scheduler):
    def pick(self, n):
        return 0


class LastScheduler(Scheduler):
    def pick(self, n):
        return n - 1


class RoundRobinScheduler(Scheduler):
    def __init__(self):
        self.i = 0

    def pick(self, n):
        self.i += 1
        return (self.i - 1) % n


class ScriptedScheduler(Scheduler):
    def __init__(self, script):
        self.script = list(script)

    def pick(self, n):
        i = self.script.pop(0) if self.script else 0
        return i % n


def make_scheduler(name: str, seed: int = 0, script=()) -> Scheduler:
    if name == "random":
        return RandomScheduler(seed)
    if name == "first":
        return FirstScheduler()
    if name == "last":
        return LastScheduler()
    if name == "round-robin":
        return RoundRobinScheduler()
    if name == "scripted":
        return ScriptedScheduler(script)
    raise ValueError(f"unknown scheduler {name!r}")


# ---------------------------------------------------------------------------
# Outcomes.


@dataclass(frozen=True, slots=True)
class Outcome:
    kind: str  # ReturnedInt | NormalValue | BlackHole | BudgetExhausted | Stuck | SeparationViolation
    detail: object = None

    def to_json(self):
        detail = self.detail
        return {"kind": self.kind, "detail": detail}


def classify_normal_form(c: Config) -> Outcome:
    v = c.env[c.root]
    if isinstance(v, IntLit):
        return Outcome("ReturnedInt", v.value)
    return Outcome("NormalValue", machine.show_runtime(v))


# ---------------------------------------------------------------------------
# Running one schedule.


def _deltas(old: Config, new: Config):
    env_delta = {
        k: machine.show_runtime(v)
        for k, v in new.env.items()
        if old.env.get(k) is not v
    }
    mem_delta = {}
    for loc in set(old.mem) | set(new.mem):
        if old.mem.get(loc) != new.mem.get(loc):
            mem_delta[f"l{loc}"] = new.mem.get(loc)
    return env_delta, mem_delta


def _history_events(old: Config, new: Config):
    events = []
    for k, v in new.env.items():
        if isinstance(v, Token) and v.hist is not None and old.env.get(k) is not v:
            prev = old.env.get(k)
            before = (
                machine._show_hist(prev.hist)
                if isinstance(prev, Token) and prev.hist is not None
                else None
            )
            events.append(
                {"token_var": k, "before": before, "after": machine._show_hist(v.hist)}
            )
    return events


def run(body: Term, semantics: str, sched: Scheduler, budget: int = DEFAULT_BUDGET,
        collect_trace: bool = False):
    """Reduce the program body to an outcome under the given scheduler.

    Returns (outcome, trace, final_config)."""
    sem = SEMANTICS[semantics]
    c = initial_config(body)
    trace = []
    for i in range(budget):
        if sem.is_normal_form(c):
            return classify_normal_form(c), trace, c
        redexes = sem.enumerate_redexes(c)
        active = sorted(
            (r for r in redexes if r.rule_id != "loop"),
            key=lambda r: (r.target, r.rule_id),
        )
        if not active:
            loops = [r for r in redexes if r.rule_id == "loop"]
            if loops:
                cycle = sem.detect_forcing_loop(c, c.root)
                return Outcome("BlackHole", list(cycle or [])), trace, c
            return Outcome("Stuck", canonical_key(c)[:200]), trace, c
        r = active[sched.pick(len(active))]
        try:
            new = sem.step(c, r)
        except DisjointnessError as e:
            return Outcome("SeparationViolation", str(e)), trace, c
        if collect_trace:
            env_delta, mem_delta = _deltas(c, new)
            rec = {
                "step_index": i,
                "rule_id": r.rule_id,
                "target_var": r.target,
                "env_delta": env_delta,
                "mem_delta": mem_delta,
            }
            if semantics == "den":
                del rec["mem_delta"]
                rec["bids_delta"] = sorted(f"b{b}" for b in new.bids - c.bids)
                rec["history_events"] = _history_events(c, new)
            trace.append(rec)
        c = new
    return Outcome("BudgetExhausted", budget), trace, c


# ---------------------------------------------------------------------------
# Reduction graphs.


@dataclass
class ReductionGraph:
    nodes: list  # of Config
    keys: dict  # canonical key -> node index
    edges: list  # of (src, rule_id, target_var, dst)
    depth: dict = field(default_factory=dict)  # node index -> BFS depth
    truncated: bool = False


def reduction_graph(body: Term, semantics: str, depth: int,
                    cap: int = None) -> ReductionGraph:
    sem = SEMANTICS[semantics]
    cap = cap if cap is not None else node_cap()
    c0 = initial_config(body)
    g = ReductionGraph([c0], {canonical_key(c0): 0}, [])
    g.depth[0] = 0
    frontier = [0]
    for d in range(depth):
        if not frontier:
            break
        nxt = []
        for i in frontier:
            c = g.nodes[i]
            for r in sem.enumerate_redexes(c):
                succ = sem.step(c, r)
                key = canonical_key(succ)
                j = g.keys.get(key)
                if j is None:
                    j = len(g.nodes)
                    if j >= cap:
                        raise ExplosionAbort(j)
                    g.keys[key] = j
                    g.nodes.append(succ)
                    g.depth[j] = d + 1
                    nxt.append(j)
                g.edges.append((i, r.rule_id, r.target, j))
        frontier = nxt
    g.truncated = bool(frontier)
    return g


# ---------------------------------------------------------------------------
# Checkers.


def check_diamond(body: Term, depth: int = 20, cap: int = None) -> dict:
    """Strong confluence on the memory-free semantics: any two distinct
    one-step successors share a common one-step successor."""
    t0 = time.monotonic()
    sem = sem_den
    g = reduction_graph(body, "den", depth, cap)
    succs_cache = {}

    def successor_keys(c):
        key = canonical_key(c)
        if key not in succs_cache:
            succs_cache[key] = {
                canonical_key(sem.step(c, r)) for r in sem.enumerate_redexes(c)
            }
        return succs_cache[key]

    violations = []
    pairs = 0
    by_src = {}
    for src, rule, tgt, dst in g.edges:
        by_src.setdefault(src, {})[dst] = (rule, tgt)
    for src, dsts in by_src.items():
        ids = sorted(dsts)
        for a_i in range(len(ids)):
            for b_i in range(a_i + 1, len(ids)):
                a, b = ids[a_i], ids[b_i]
                pairs += 1
                ka = successor_keys(g.nodes[a])
                kb = successor_keys(g.nodes[b])
                if not (ka & kb):
                    violations.append({
                        "node": src,
                        "succ_a": {"rule": dsts[a][0], "target": dsts[a][1]},
                        "succ_b": {"rule": dsts[b][0], "target": dsts[b][1]},
                    })
    return {
        "check": "diamond",
        "verdict": "PASS" if not violations else "FAIL",
        "violations": violations,
        "stats": {
            "nodes": len(g.nodes),
            "edges": len(g.edges),
            "pairs": pairs,
            "max_depth": depth,
            "truncated": g.truncated,
            "wall_ms": int((time.monotonic() - t0) * 1000),
        },
    }


def check_leak_freedom(body: Term, n_schedules: int = 100,
                       budget: int = DEFAULT_BUDGET) -> dict:
    t0 = time.monotonic()
    violations = []
    outcomes = []
    for seed in range(n_schedules):
        outcome, _, final = run(body, "mut", RandomScheduler(seed), budget)
        outcomes.append(outcome.kind)
        if outcome.kind in ("ReturnedInt", "NormalValue") and final.mem:
            violations.append({
                "seed": seed,
                "residue": sorted(f"l{l}" for l in final.mem),
            })
    return {
        "check": "leak_freedom",
        "verdict": "PASS" if not violations else "FAIL",
        "violations": violations,
        "stats": {
            "runs": n_schedules,
            "outcomes": sorted(set(outcomes)),
            "wall_ms": int((time.monotonic() - t0) * 1000),
        },
    }


def check_behavior_uniqueness(body: Term, n_schedules: int = 100,
                              budget: int = DEFAULT_BUDGET) -> dict:
    t0 = time.monotonic()
    values = {}
    kinds = {"mut": [], "den": []}
    for semantics in ("mut", "den"):
        for seed in range(n_schedules):
            outcome, _, _ = run(body, semantics, RandomScheduler(seed), budget)
            kinds[semantics].append(outcome.kind)
            if outcome.kind == "ReturnedInt":
                values.setdefault(semantics, set()).add(outcome.detail)
    all_values = set().union(*values.values()) if values else set()
    terminated = any(
        k in ("ReturnedInt", "NormalValue") for ks in kinds.values() for k in ks
    )
    blackholed = any(k == "BlackHole" for ks in kinds.values() for k in ks)
    problems = []
    if len(all_values) > 1:
        problems.append(f"multiple return values observed: {sorted(all_values)}")
    if not all_values:
        problems.append("no run returned an integer")
    if terminated and blackholed:
        problems.append("some schedules terminated while others black-holed")
    for semantics, ks in kinds.items():
        bad = [k for k in ks if k in ("Stuck", "SeparationViolation")]
        if bad:
            problems.append(f"{semantics}: {sorted(set(bad))}")
    return {
        "check": "behavior_uniqueness",
        "verdict": "PASS" if not problems else "FAIL",
        "violations": problems,
        "value": next(iter(all_values)) if len(all_values) == 1 else None,
        "stats": {
            "runs": 2 * n_schedules,
            "outcome_kinds": {s: sorted(set(ks)) for s, ks in kinds.items()},
            "wall_ms": int((time.monotonic() - t0) * 1000),
        },
    }
