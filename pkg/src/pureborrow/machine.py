"""Shared runtime core for the two operational semantics.

Both semantics reduce configurations whose environment binds variables to
terms.  This module provides the extra runtime term forms (tokens,
references, lenders, Done results, borrower wrappers, and internal
operators), the configuration type, the evaluation-context machinery
(forcing edges, denesting positions, forcing-loop detection), and
alpha-equivalence-respecting canonical keys used for reduction-graph
deduplication.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import histories, terms
from .terms import (
    App, Case, ConApp, IntLit, Lam, Let, MonApp, OpApp, Seq, Term, Var,
)


# ---------------------------------------------------------------------------
# Extra runtime term forms.


@dataclass(frozen=True, slots=True)
class Token(Term):
    """A linearity or lifetime token.  Lifetime tokens in the memory-free
    semantics carry a history; otherwise hist is None."""

    hist: object = None


@dataclass(frozen=True, slots=True)
class RefVal(Term):
    """A reference: to a memory location (int) in the mutative semantics,
    or to a content variable (str) in the memory-free semantics."""

    target: object


@dataclass(frozen=True, slots=True)
class LendVal(Term):
    bid: int
    var: str


@dataclass(frozen=True, slots=True)
class DoneVal(Term):
    var: str
    hist: object = None


@dataclass(frozen=True, slots=True)
class Wrap(Term):
    """A borrower wrapper: mutable (with its borrow paths) or shared."""

    kind: str  # "mut" | "share"
    paths: tuple  # of BorrowPath; empty for "share"
    body: Term


@dataclass(frozen=True, slots=True)
class Admin(Term):
    """An internal operator application; args are variable names and `info`
    carries rule-indexed data (locations, borrow paths, histories)."""

    name: str
    args: tuple
    info: tuple = ()


ADMIN_NAMES = {
    "linear", "exeBO", "execBO_post", "bind_post", "sexecBO_pre",
    "sexecBO_post", "parBO_post", "deref_post", "updateRef_pre",
    "updateRef_prepost", "updateRef_post",
}


def is_value(t: Term) -> bool:
    if isinstance(t, (Lam, IntLit, Token, RefVal, LendVal, DoneVal)):
        return True
    if isinstance(t, (ConApp, MonApp)):
        return all(isinstance(a, Var) for a in t.args)
    if isinstance(t, Wrap):
        return is_value(t.body)
    return False


# ---------------------------------------------------------------------------
# Configurations.


@dataclass
class Config:
    env: dict  # var -> Term
    root: str
    mem: dict = field(default_factory=dict)  # loc -> var (mutative only)
    bids: set = field(default_factory=set)  # allocated borrow ids (den only)
    counter: int = 0

    def copy(self) -> "Config":
        return Config(dict(self.env), self.root, dict(self.mem), set(self.bids), self.counter)

    def fresh(self, base: str = "v") -> str:
        base = base.split("$")[0]
        self.counter += 1
        return f"{base}${self.counter}"

    def fresh_id(self) -> int:
        self.counter += 1
        return self.counter


def initial_config(body: Term) -> Config:
    c = Config({}, "main")
    c.env["main"] = terms.erase_annotations(body)
    return c


# ---------------------------------------------------------------------------
# Evaluation contexts.
#
# forced_targets(t) returns the variables sitting in the hole of an
# evaluation context within the binding term t: the positions whose bindings
# the term demands next.


def forced_targets(t: Term) -> list:
    if isinstance(t, Var):
        return [t.name]
    if isinstance(t, App):
        if isinstance(t.fn, Var) and isinstance(t.arg, Var):
            return [t.fn.name]
        return []
    if isinstance(t, Seq):
        if isinstance(t.body, Var):
            return [t.forced]
        return []
    if isinstance(t, Case):
        if isinstance(t.scrutinee, Var):
            return [t.scrutinee.name]
        return []
    if isinstance(t, OpApp):
        if all(isinstance(a, Var) for a in t.args):
            return [a.name for a in t.args]
        return []
    if isinstance(t, Admin):
        return list(t.args)
    if isinstance(t, Wrap):
        return forced_targets(t.body)
    return []


def detect_forcing_loop(c: Config, v: str):
    """Return a cycle of variables reachable from v through forcing edges,
    or None.  A configuration admits the self-step exactly when its root
    reaches such a cycle."""
    seen = {}
    stack = [(v, iter(forced_targets(c.env.get(v)) if v in c.env else []))]
    state = {v: 1}  # 1 = on stack, 2 = done
    path = [v]
    while stack:
        name, it = stack[-1]
        advanced = False
        for nxt in it:
            if nxt not in c.env:
                continue
            s = state.get(nxt)
            if s == 1:
                return path[path.index(nxt):]
            if s is None:
                state[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(forced_targets(c.env[nxt]))))
                advanced = True
                break
        if not advanced:
            state[name] = 2
            stack.pop()
            path.pop()
    return None


def forced_set(c: Config) -> list:
    """All variables reachable from the root through evaluation contexts
    (the places where a rule may fire), in BFS order."""
    out = []
    seen = set()
    queue = [c.root]
    while queue:
        v = queue.pop(0)
        if v in seen or v not in c.env:
            continue
        seen.add(v)
        out.append(v)
        queue.extend(forced_targets(c.env[v]))
    return out


# ---------------------------------------------------------------------------
# Denesting.
#
# The denesting context has exactly one level: within a binding's term, the
# leftmost non-variable subterm in a denesting position is lifted out into a
# fresh binding.  Returns (subterm, rebuild) or None.


def denest_position(t: Term):
    if isinstance(t, App):
        if not isinstance(t.fn, Var):
            return t.fn, lambda v: App(v, t.arg)
        if not isinstance(t.arg, Var):
            return t.arg, lambda v: App(t.fn, v)
        return None
    if isinstance(t, Seq):
        if not isinstance(t.body, Var):
            return t.body, lambda v: Seq(t.forced, v)
        return None
    if isinstance(t, Case):
        if not isinstance(t.scrutinee, Var):
            return t.scrutinee, lambda v: Case(v, t.branches)
        return None
    if isinstance(t, (ConApp, OpApp, MonApp)):
        for i, a in enumerate(t.args):
            if not isinstance(a, Var):
                def rebuild(v, i=i, t=t):
                    args = t.args[:i] + (v,) + t.args[i + 1:]
                    if isinstance(t, ConApp):
                        return ConApp(t.con, args)
                    if isinstance(t, OpApp):
                        return OpApp(t.op, args, t.inst)
                    return MonApp(t.mo, args, t.inst)
                return a, rebuild
        return None
    return None


def strip_wrappers(t: Term):
    """Peel the borrower-wrapper chain; returns (wrappers outermost-first, core)."""
    ws = []
    while isinstance(t, Wrap):
        ws.append((t.kind, t.paths))
        t = t.body
    return ws, t


def apply_wrappers(ws, t: Term) -> Term:
    for kind, paths in reversed(ws):
        t = Wrap(kind, paths, t)
    return t


# ---------------------------------------------------------------------------
# Canonical keys (alpha-equivalence over variables, locations, borrow ids).
#
# Serialization renames each name class by first occurrence along a
# deterministic walk from the root.  Unordered collections (histories,
# garbage bindings, leftover memory) are ordered by a depth-bounded,
# name-insensitive signature first.


def show_runtime(t: Term) -> str:
    """Human-readable rendering of a runtime term (for traces and reports)."""
    from . import printer

    if isinstance(t, Token):
        return "*" if t.hist is None else "*{" + _show_hist(t.hist) + "}"
    if isinstance(t, RefVal):
        tgt = f"l{t.target}" if isinstance(t.target, int) else t.target
        return f"Ref {tgt}"
    if isinstance(t, LendVal):
        return f"Lend^b{t.bid} {t.var}"
    if isinstance(t, DoneVal):
        h = "" if t.hist is None else "{" + _show_hist(t.hist) + "}"
        return f"Done{h} {t.var}"
    if isinstance(t, Wrap):
        if t.kind == "share":
            return f"Share ({show_runtime(t.body)})"
        paths = ",".join(str(p) for p in t.paths)
        return f"Mut^{paths} ({show_runtime(t.body)})"
    if isinstance(t, Admin):
        info = ""
        if t.info:
            info = "<" + ";".join(_show_info(i) for i in t.info) + ">"
        return t.name + info + "".join(f" {a}" for a in t.args)
    if isinstance(t, (ConApp, App, Case, OpApp, MonApp, Seq, Let)):
        # composite terms may contain runtime subterms
        try:
            return printer.show_term(t)
        except TypeError:
            pass
        if isinstance(t, ConApp):
            return f"({t.con} " + " ".join(show_runtime(a) for a in t.args) + ")"
        if isinstance(t, App):
            return f"({show_runtime(t.fn)} {show_runtime(t.arg)})"
        return repr(t)
    return printer.show_term(t)


def _show_hist(h) -> str:
    return ", ".join(f"{p} -> {v}" for p, v in h.entries)


def _show_info(i) -> str:
    if isinstance(i, histories.History):
        return "{" + _show_hist(i) + "}"
    if isinstance(i, tuple):
        return "[" + ",".join(str(p) for p in i) + "]"
    if isinstance(i, int):
        return f"l{i}"
    return str(i)


class _Canon:
    def __init__(self, c: Config):
        self.c = c
        self.vars = {}
        self.locs = {}
        self.bids = {}
        self.out = []

    def var(self, v):
        if v not in self.vars:
            self.vars[v] = len(self.vars)
        return f"x{self.vars[v]}"

    def loc(self, l):
        if l not in self.locs:
            self.locs[l] = len(self.locs)
        return f"l{self.locs[l]}"

    def bid(self, b):
        if b not in self.bids:
            self.bids[b] = len(self.bids)
        return f"b{self.bids[b]}"

    # -- depth-bounded name-insensitive signature (for ordering ties) -----

    def signature(self, t, depth=6):
        return _sig_term(self.c, t, depth)

    # -- serialization ------------------------------------------------------

    def hist(self, h):
        entries = sorted(
            h.entries,
            key=lambda e: (
                e[0].indices,
                _sig_term(self.c, Var(e[1]), 6),
                self.bids.get(e[0].bid, 1 << 30),
            ),
        )
        parts = []
        for p, v in entries:
            path = ".".join([self.bid(p.bid)] + [str(i) for i in p.indices])
            parts.append(f"{path}>{self.var(v)}")
        return "{" + ",".join(parts) + "}"

    def term(self, t, bound=()):
        if isinstance(t, Var):
            if t.name in bound:
                return f"^{bound.index(t.name)}"
            return self.var(t.name)
        if isinstance(t, IntLit):
            return str(t.value)
        if isinstance(t, Lam):
            return f"(\\.{self.term(t.body, (t.param,) + bound)})"
        if isinstance(t, App):
            return f"({self.term(t.fn, bound)} {self.term(t.arg, bound)})"
        if isinstance(t, Let):
            names = tuple(n for n, _, _ in t.bindings)
            inner = names + bound
            rhs_scope = inner if not t.linear else bound
            rhss = ",".join(self.term(r, rhs_scope) for _, _, r in t.bindings)
            kw = "let1" if t.linear else "let"
            return f"({kw} {rhss} in {self.term(t.body, inner)})"
        if isinstance(t, Seq):
            f = f"^{bound.index(t.forced)}" if t.forced in bound else self.var(t.forced)
            return f"(seq {f} {self.term(t.body, bound)})"
        if isinstance(t, ConApp):
            return f"({t.con}" + "".join(" " + self.term(a, bound) for a in t.args) + ")"
        if isinstance(t, Case):
            bs = []
            for con, binders, body in t.branches:
                bs.append(f"{con}/{len(binders)}->" + self.term(body, tuple(binders) + bound))
            return f"(case {self.term(t.scrutinee, bound)} of " + "|".join(bs) + ")"
        if isinstance(t, (OpApp, MonApp)):
            name = t.op if isinstance(t, OpApp) else t.mo
            return f"({name}" + "".join(" " + self.term(a, bound) for a in t.args) + ")"
        if isinstance(t, Token):
            return "tok" if t.hist is None else "tok" + self.hist(t.hist)
        if isinstance(t, RefVal):
            tgt = self.loc(t.target) if isinstance(t.target, int) else self.var(t.target)
            return f"(ref {tgt})"
        if isinstance(t, LendVal):
            return f"(lend {self.bid(t.bid)} {self.var(t.var)})"
        if isinstance(t, DoneVal):
            h = "" if t.hist is None else self.hist(t.hist)
            return f"(done{h} {self.var(t.var)})"
        if isinstance(t, Wrap):
            if t.kind == "share":
                return f"(share! {self.term(t.body, bound)})"
            paths = ",".join(
                ".".join([self.bid(p.bid)] + [str(i) for i in p.indices])
                for p in sorted(
                    t.paths,
                    key=lambda p: (self.bids.get(p.bid, 1 << 30), p.indices),
                )
            )
            return f"(mut!{paths} {self.term(t.body, bound)})"
        if isinstance(t, Admin):
            info = self.info(t.info)
            return f"({t.name}{info}" + "".join(" " + self.var(a) for a in t.args) + ")"
        raise TypeError(f"not a runtime term: {t!r}")

    def info(self, info):
        parts = []
        for x in info:
            if isinstance(x, histories.History):
                parts.append(self.hist(x))
            elif isinstance(x, int):
                parts.append(self.loc(x))
            elif isinstance(x, tuple):  # borrow paths
                parts.append(
                    "["
                    + ",".join(
                        ".".join([self.bid(p.bid)] + [str(i) for i in p.indices])
                        for p in sorted(
                            x, key=lambda p: (self.bids.get(p.bid, 1 << 30), p.indices)
                        )
                    )
                    + "]"
                )
            else:
                parts.append(str(x))
        return "<" + ";".join(parts) + ">" if parts else ""


def _sig_term(c: Config, t, depth):
    """Name-insensitive, depth-bounded structural signature; variables are
    chased through the environment."""
    if depth <= 0:
        return "…"
    if isinstance(t, Var):
        inner = c.env.get(t.name)
        if inner is None:
            return "v?"
        return "v:" + _sig_term(c, inner, depth - 1)
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, Lam):
        return "\\:" + _sig_term(c, t.body, depth - 1)
    if isinstance(t, App):
        return f"({_sig_term(c, t.fn, depth - 1)} {_sig_term(c, t.arg, depth - 1)})"
    if isinstance(t, Let):
        return f"let/{len(t.bindings)}"
    if isinstance(t, Seq):
        return "seq:" + _sig_term(c, t.body, depth - 1)
    if isinstance(t, ConApp):
        return f"({t.con}" + "".join(" " + _sig_term(c, a, depth - 1) for a in t.args) + ")"
    if isinstance(t, Case):
        return "case:" + _sig_term(c, t.scrutinee, depth - 1)
    if isinstance(t, (OpApp, MonApp)):
        name = t.op if isinstance(t, OpApp) else t.mo
        return f"({name}" + "".join(" " + _sig_term(c, a, depth - 1) for a in t.args) + ")"
    if isinstance(t, Token):
        if t.hist is None:
            return "tok"
        sigs = sorted(
            f"{'.'.join(str(i) for i in p.indices)}>{_sig_term(c, Var(v), depth - 1)}"
            for p, v in t.hist.entries
        )
        return "tok{" + ",".join(sigs) + "}"
    if isinstance(t, RefVal):
        if isinstance(t.target, int):
            inner = c.mem.get(t.target)
            return "refl:" + ("?" if inner is None else _sig_term(c, Var(inner), depth - 1))
        return "ref:" + _sig_term(c, Var(t.target), depth - 1)
    if isinstance(t, LendVal):
        return "lend:" + _sig_term(c, Var(t.var), depth - 1)
    if isinstance(t, DoneVal):
        return "done:" + _sig_term(c, Var(t.var), depth - 1)
    if isinstance(t, Wrap):
        tag = t.kind if t.kind == "share" else f"mut/{len(t.paths)}"
        return f"{tag}:" + _sig_term(c, t.body, depth - 1)
    if isinstance(t, Admin):
        return f"({t.name}" + "".join(" " + _sig_term(c, a, depth - 1) for a in t.args) + ")"
    raise TypeError(f"not a runtime term: {t!r}")


def canonical_key(c: Config) -> str:
    canon = _Canon(c)
    lines = []
    visited = set()

    def visit(v):
        if v in visited or v not in c.env:
            return
        visited.add(v)
        lines.append(f"{canon.var(v)}={canon.term(c.env[v])}")
        # serialization of the term assigned ids to newly seen vars; walk them
        for name in list(canon.vars):
            if name not in visited and name in c.env:
                visit(name)

    visit(c.root)
    # memory contents reachable through serialized locations
    changed = True
    while changed:
        changed = False
        for loc in sorted(canon.locs, key=canon.locs.get):
            v = c.mem.get(loc)
            if v is not None and v not in visited:
                visit(v)
                changed = True
    # garbage bindings, ordered by name-insensitive signature
    rest = [v for v in c.env if v not in visited]
    while rest:
        rest.sort(key=lambda v: canon.signature(c.env[v]))
        v = rest.pop(0)
        visit(v)
        rest = [u for u in rest if u not in visited]
    # leftover memory cells whose locations never occur in the environment
    leftover = [l for l in c.mem if l not in canon.locs]
    leftover.sort(key=lambda l: canon.signature(Var(c.mem[l]), 6))
    mem_out = []
    for loc in sorted(canon.locs, key=canon.locs.get):
        if loc in c.mem:
            mem_out.append(f"{canon.loc(loc)}:{canon.var(c.mem[loc])}")
    for loc in leftover:
        mem_out.append(f"{canon.loc(loc)}:{canon.var(c.mem[loc])}")
    unused_bids = len([b for b in c.bids if b not in canon.bids])
    return (
        f"root={canon.var(c.root)};"
        + ";".join(sorted(lines))
        + "|mem:" + ",".join(mem_out)
        + f"|bids+{unused_bids}"
    )
