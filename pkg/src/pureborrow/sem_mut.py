"""Mutative operational semantics: small-step reduction over configurations
with a variable environment and a global memory of locations."""

from __future__ import annotations

from dataclasses import dataclass

from .machine import (
    Admin, Config, DoneVal, RefVal, Token, denest_position, detect_forcing_loop,
    forced_set, initial_config, is_value,
)
from .terms import (
    App, Case, ConApp, IntLit, Lam, Let, MonApp, OpApp, Seq, Term, Var,
    rename_let_binders, subst_var, subst_vars,
)

IOP_FN = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b}
IREL_FN = {"le": lambda a, b: a <= b, "lt": lambda a, b: a < b, "eq": lambda a, b: a == b}


@dataclass(frozen=True, slots=True)
class Redex:
    target: str
    rule_id: str


def is_normal_form(c: Config) -> bool:
    return is_value(c.env[c.root])


def _value(c: Config, name: str):
    t = c.env.get(name)
    return t if t is not None and is_value(t) else None


def _int(c: Config, name: str):
    t = c.env.get(name)
    return t.value if isinstance(t, IntLit) else None


def _rule_at(c: Config, x: str):
    """The rule (if any) applicable at the binding of x."""
    t = c.env[x]
    if isinstance(t, Let):
        return "let"
    if denest_position(t) is not None:
        return "denest"
    if isinstance(t, Var):
        return "var" if _value(c, t.name) is not None else None
    if isinstance(t, App):
        if isinstance(t.fn, Var) and isinstance(t.arg, Var):
            if isinstance(c.env.get(t.fn.name), Lam):
                return "app"
        return None
    if isinstance(t, Seq):
        if isinstance(t.body, Var) and _value(c, t.forced) is not None:
            return "seq"
        return None
    if isinstance(t, Case):
        if isinstance(t.scrutinee, Var):
            v = _value(c, t.scrutinee.name)
            if isinstance(v, ConApp):
                return "case"
        return None
    if isinstance(t, OpApp):
        if not all(isinstance(a, Var) for a in t.args):
            return None
        names = [a.name for a in t.args]
        op = t.op
        if op in IOP_FN:
            return "iop" if all(_int(c, n) is not None for n in names) else None
        if op in IREL_FN:
            return "irel" if all(_int(c, n) is not None for n in names) else None
        if op == "par":
            return "par" if all(_value(c, n) for n in names) else None
        if op in ("consume", "move", "share", "copy", "joinMut", "withLinearly"):
            return op if _value(c, names[0]) else None
        if op == "linearly":
            return "linearly" if _value(c, names[0]) else None
        if op in ("newRef", "newLifetime", "borrow"):
            if isinstance(c.env.get(names[0]), Token) and _value(c, names[1]):
                return op
            return None
        if op == "freeRef":
            r = c.env.get(names[0])
            if isinstance(r, RefVal) and r.target in c.mem:
                return "freeRef"
            return None
        if op == "endLifetime":
            return "endLifetime" if isinstance(c.env.get(names[0]), Token) else None
        if op == "reclaim":
            if isinstance(c.env.get(names[1]), Token) and _value(c, names[0]):
                return "reclaim"
            return None
        if op == "execBO":
            if isinstance(c.env.get(names[0]), Token) and _value(c, names[1]):
                return "execBO"
            return None
        return None
    if isinstance(t, Admin):
        return _admin_rule(c, t)
    return None


def _admin_rule(c: Config, t: Admin):
    n = t.name
    if n == "linear":
        return "linear" if _value(c, t.args[0]) else None
    if n == "exeBO":
        bo = c.env.get(t.args[0])
        if isinstance(bo, MonApp) and all(isinstance(a, Var) for a in bo.args):
            return f"exeBO_{bo.mo}"
        return None
    if n in ("execBO_post", "sexecBO_post", "bind_post", "updateRef_prepost"):
        return n if isinstance(c.env.get(t.args[0]), DoneVal) else None
    if n == "sexecBO_pre":
        if isinstance(c.env.get(t.args[0]), Token) and _value(c, t.args[1]):
            return n
        return None
    if n == "parBO_post":
        if all(isinstance(c.env.get(a), DoneVal) for a in t.args):
            return n
        return None
    if n == "deref_post":
        r = c.env.get(t.args[0])
        if isinstance(r, RefVal) and r.target in c.mem:
            return n
        return None
    if n == "updateRef_pre":
        r = c.env.get(t.args[1])
        if _value(c, t.args[0]) and isinstance(r, RefVal) and r.target in c.mem:
            return n
        return None
    if n == "updateRef_post":
        pr = c.env.get(t.args[0])
        if isinstance(pr, ConApp) and pr.con == "(,)" and all(
            isinstance(a, Var) for a in pr.args
        ):
            return n
        return None
    return None


def enumerate_redexes(c: Config) -> list:
    if is_normal_form(c):
        return []
    out = []
    for v in forced_set(c):
        r = _rule_at(c, v)
        if r is not None:
            out.append(Redex(v, r))
    if detect_forcing_loop(c, c.root) is not None:
        out.append(Redex(c.root, "loop"))
    return out


def step(c: Config, r: Redex) -> Config:
    c = c.copy()
    x = r.target
    t = c.env[x]
    rule = r.rule_id

    if rule == "loop":
        return c

    if rule == "let":
        ren = {n: c.fresh(n) for n, _, _ in t.bindings}
        t2 = rename_let_binders(t, ren)
        for n, _, rhs in t2.bindings:
            c.env[n] = rhs
        c.env[x] = t2.body
        return c

    if rule == "denest":
        sub, rebuild = denest_position(t)
        y = c.fresh("t")
        c.env[y] = sub
        c.env[x] = rebuild(Var(y))
        return c

    if rule == "var":
        c.env[x] = c.env[t.name]
        return c

    if rule == "app":
        lam = c.env[t.fn.name]
        c.env[x] = subst_var(lam.body, lam.param, t.arg.name)
        return c

    if rule == "seq":
        c.env[x] = t.body
        return c

    if rule == "case":
        scrut = c.env[t.scrutinee.name]
        for con, binders, body in t.branches:
            if con == scrut.con:
                ren = {b: c.fresh(b) for b in binders}
                for b, arg in zip(binders, scrut.args):
                    c.env[ren[b]] = arg
                c.env[x] = subst_vars(body, ren)
                return c
        raise AssertionError(f"no branch for constructor {scrut.con}")

    if isinstance(t, OpApp):
        return _step_op(c, x, t, rule)
    if isinstance(t, Admin):
        return _step_admin(c, x, t, rule)
    raise AssertionError(f"unhandled rule {rule}")


def _pair(a: str, b: str) -> ConApp:
    return ConApp("(,)", (Var(a), Var(b)))


def _step_op(c: Config, x: str, t: OpApp, rule: str) -> Config:
    names = [a.name for a in t.args]
    if rule == "iop":
        c.env[x] = IntLit(IOP_FN[t.op](*[c.env[n].value for n in names]))
    elif rule == "irel":
        res = IREL_FN[t.op](*[c.env[n].value for n in names])
        c.env[x] = ConApp("True" if res else "False", ())
    elif rule == "par":
        c.env[x] = _pair(names[0], names[1])
    elif rule == "consume":
        c.env[x] = ConApp("()", ())
    elif rule == "move":
        c.env[x] = ConApp("Ur", (Var(names[0]),))
    elif rule == "linearly":
        li = c.fresh("li")
        b = c.fresh("b")
        c.env[li] = Token()
        c.env[b] = App(Var(names[0]), Var(li))
        c.env[x] = Admin("linear", (b,))
    elif rule == "withLinearly":
        li = c.fresh("li")
        c.env[li] = Token()
        c.env[x] = _pair(li, names[0])
    elif rule == "newRef":
        loc = c.fresh_id()
        c.mem[loc] = names[1]
        c.env[x] = RefVal(loc)
    elif rule == "freeRef":
        loc = c.env[names[0]].target
        c.env[x] = Var(c.mem.pop(loc))
    elif rule == "newLifetime":
        now = c.fresh("now")
        c.env[now] = Token()
        c.env[x] = App(Var(names[1]), Var(now))
    elif rule == "endLifetime":
        c.env[x] = ConApp("Ur", (Var(names[0]),))
    elif rule == "borrow":
        v = c.env[names[1]]
        bm, bl = c.fresh("bm"), c.fresh("bl")
        c.env[bm] = v
        c.env[bl] = v
        c.env[x] = _pair(bm, bl)
    elif rule == "share":
        c.env[x] = ConApp("Ur", (Var(names[0]),))
    elif rule in ("copy", "joinMut"):
        c.env[x] = c.env[names[0]]
    elif rule == "reclaim":
        c.env[x] = Var(names[0])
    elif rule == "execBO":
        res = c.fresh("res")
        c.env[res] = Admin("exeBO", (names[1],))
        c.env[x] = Admin("execBO_post", (res,))
    else:
        raise AssertionError(f"unhandled operator rule {rule}")
    return c


def _step_admin(c: Config, x: str, t: Admin, rule: str) -> Config:
    if rule == "linear":
        c.env[x] = c.env[t.args[0]]
        return c
    if rule.startswith("exeBO_"):
        bo = c.env[t.args[0]]
        names = [a.name for a in bo.args]
        if bo.mo == "pure":
            c.env[x] = DoneVal(names[0])
        elif bo.mo == "bind":
            res = c.fresh("res")
            c.env[res] = Admin("exeBO", (names[0],))
            c.env[x] = Admin("bind_post", (res, names[1]))
        elif bo.mo == "sexecBO":
            c.env[x] = Admin("sexecBO_pre", (names[0], names[1]))
        elif bo.mo == "parBO":
            r0, r1 = c.fresh("res"), c.fresh("res")
            c.env[r0] = Admin("exeBO", (names[0],))
            c.env[r1] = Admin("exeBO", (names[1],))
            c.env[x] = Admin("parBO_post", (r0, r1))
        elif bo.mo == "deref":
            c.env[x] = Admin("deref_post", (names[0],))
        elif bo.mo == "updateRef":
            c.env[x] = Admin("updateRef_pre", (names[0], names[1]))
        else:
            raise AssertionError(f"unknown monadic constructor {bo.mo}")
        return c
    if rule == "execBO_post":
        b = c.env[t.args[0]].var
        now = c.fresh("now")
        c.env[now] = Token()
        c.env[x] = _pair(now, b)
        return c
    if rule == "bind_post":
        b = c.env[t.args[0]].var
        bo = c.fresh("bo")
        c.env[bo] = App(Var(t.args[1]), Var(b))
        c.env[x] = Admin("exeBO", (bo,))
        return c
    if rule == "sexecBO_pre":
        res = c.fresh("res")
        c.env[res] = Admin("exeBO", (t.args[1],))
        c.env[x] = Admin("sexecBO_post", (res,))
        return c
    if rule == "sexecBO_post":
        b = c.env[t.args[0]].var
        now, pr = c.fresh("now"), c.fresh("pr")
        c.env[now] = Token()
        c.env[pr] = _pair(now, b)
        c.env[x] = DoneVal(pr)
        return c
    if rule == "parBO_post":
        b0 = c.env[t.args[0]].var
        b1 = c.env[t.args[1]].var
        pr = c.fresh("pr")
        c.env[pr] = _pair(b0, b1)
        c.env[x] = DoneVal(pr)
        return c
    if rule == "deref_post":
        loc = c.env[t.args[0]].target
        b2 = c.fresh("b")
        c.env[b2] = Var(c.mem[loc])
        c.env[x] = DoneVal(b2)
        return c
    if rule == "updateRef_pre":
        loc = c.env[t.args[1]].target
        bo, res = c.fresh("bo"), c.fresh("res")
        c.env[bo] = App(Var(t.args[0]), Var(c.mem[loc]))
        c.env[res] = Admin("exeBO", (bo,))
        c.env[x] = Admin("updateRef_prepost", (res,), (loc,))
        return c
    if rule == "updateRef_prepost":
        pr = c.env[t.args[0]].var
        c.env[x] = Admin("updateRef_post", (pr,), t.info)
        return c
    if rule == "updateRef_post":
        loc = t.info[0]
        pr = c.env[t.args[0]]
        cvar, bvar = pr.args[0].name, pr.args[1].name
        ref2, pr2 = c.fresh("ref"), c.fresh("pr")
        c.env[ref2] = RefVal(loc)
        c.env[pr2] = _pair(cvar, ref2)
        c.env[x] = DoneVal(pr2)
        c.mem[loc] = bvar
        return c
    raise AssertionError(f"unhandled internal rule {rule}")


def make_initial(body: Term) -> Config:
    return initial_config(body)
