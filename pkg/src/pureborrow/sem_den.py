"""Memory-free operational semantics with borrower wrappers, borrow ids,
history-carrying lifetime tokens, and restoration-by-history at reclaim."""

from __future__ import annotations

from .histories import EMPTY, BorrowPath, History, hist_domain, hist_par, hist_seq
from .machine import (
    Admin, Config, DoneVal, LendVal, RefVal, Token, Wrap, apply_wrappers,
    denest_position, detect_forcing_loop, forced_set, initial_config, is_value,
    strip_wrappers,
)
from .sem_mut import IOP_FN, IREL_FN, Redex, _pair
from .terms import (
    App, Case, ConApp, IntLit, Lam, Let, MonApp, OpApp, Seq, Term, Var,
    rename_let_binders, subst_var, subst_vars,
)


class RestoreStuck(Exception):
    """Restoration met a value shape not covered by any restoration rule."""


def is_normal_form(c: Config) -> bool:
    return is_value(c.env[c.root])


def _value(c: Config, name: str):
    t = c.env.get(name)
    return t if t is not None and is_value(t) else None


def _int(c: Config, name: str):
    t = c.env.get(name)
    return t.value if isinstance(t, IntLit) else None


def _now_token(c: Config, name: str):
    """A lifetime token (carrying a history)."""
    t = c.env.get(name)
    return t if isinstance(t, Token) and t.hist is not None else None


def _single_wrapped(t: Term):
    """Match a single borrower wrapper over a core term."""
    if isinstance(t, Wrap):
        return (t.kind, t.paths), t.body
    return None, t


def _rule_at(c: Config, x: str):
    t = c.env[x]
    if isinstance(t, Let):
        return "let"
    if denest_position(t) is not None:
        return "denest"
    if isinstance(t, Var):
        return "var" if _value(c, t.name) is not None else None
    if isinstance(t, Wrap):
        _, core = strip_wrappers(t)
        if isinstance(core, Var) and _value(c, core.name) is not None:
            return "var"
        return None
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
            if isinstance(v, Wrap) and isinstance(v.body, ConApp):
                return "case_bor"
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
        if op in ("consume", "move", "withLinearly"):
            return op if _value(c, names[0]) else None
        if op == "linearly":
            return "linearly" if _value(c, names[0]) else None
        if op in ("newRef", "newLifetime", "borrow"):
            li = c.env.get(names[0])
            if isinstance(li, Token) and _value(c, names[1]):
                return op
            return None
        if op == "freeRef":
            return "freeRef" if isinstance(c.env.get(names[0]), RefVal) else None
        if op == "endLifetime":
            return "endLifetime" if _now_token(c, names[0]) else None
        if op == "share":
            v = _value(c, names[0])
            if isinstance(v, Wrap) and v.kind == "mut":
                return "share"
            return None
        if op == "copy":
            v = _value(c, names[0])
            if isinstance(v, Wrap) and v.kind == "share":
                return "copy"
            return None
        if op == "joinMut":
            v = _value(c, names[0])
            if isinstance(v, Wrap) and isinstance(v.body, Wrap) and v.body.kind == "mut":
                return "joinMut"
            return None
        if op == "reclaim":
            if _now_token(c, names[1]) and isinstance(c.env.get(names[0]), LendVal):
                return "reclaim"
            return None
        if op == "execBO":
            if _now_token(c, names[0]) and _value(c, names[1]):
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
        if _now_token(c, t.args[0]) and _value(c, t.args[1]):
            return n
        return None
    if n == "parBO_post":
        if all(isinstance(c.env.get(a), DoneVal) for a in t.args):
            return n
        return None
    if n == "deref_post":
        v = c.env.get(t.args[0])
        if isinstance(v, Wrap) and isinstance(v.body, RefVal):
            return n
        return None
    if n == "updateRef_pre":
        r = c.env.get(t.args[1])
        if (
            _value(c, t.args[0])
            and isinstance(r, Wrap)
            and r.kind == "mut"
            and isinstance(r.body, RefVal)
        ):
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
        ws, core = strip_wrappers(t)
        c.env[x] = apply_wrappers(ws, c.env[core.name])
        return c
    if rule == "app":
        lam = c.env[t.fn.name]
        c.env[x] = subst_var(lam.body, lam.param, t.arg.name)
        return c
    if rule == "seq":
        c.env[x] = t.body
        return c
    if rule in ("case", "case_bor"):
        scrut = c.env[t.scrutinee.name]
        wrap = None
        if rule == "case_bor":
            wrap, scrut = (scrut.kind, scrut.paths), scrut.body
        for con, binders, body in t.branches:
            if con == scrut.con:
                ren = {b: c.fresh(b) for b in binders}
                for i, (b, arg) in enumerate(zip(binders, scrut.args)):
                    if wrap is None:
                        c.env[ren[b]] = arg
                    elif wrap[0] == "mut":
                        paths = tuple(p.child(i) for p in wrap[1])
                        c.env[ren[b]] = Wrap("mut", paths, arg)
                    else:
                        c.env[ren[b]] = Wrap("share", (), arg)
                c.env[x] = subst_vars(body, ren)
                return c
        raise AssertionError(f"no branch for constructor {scrut.con}")
    if isinstance(t, OpApp):
        return _step_op(c, x, t, rule)
    if isinstance(t, Admin):
        return _step_admin(c, x, t, rule)
    raise AssertionError(f"unhandled rule {rule}")


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
        li, b = c.fresh("li"), c.fresh("b")
        c.env[li] = Token()
        c.env[b] = App(Var(names[0]), Var(li))
        c.env[x] = Admin("linear", (b,))
    elif rule == "withLinearly":
        li = c.fresh("li")
        c.env[li] = Token()
        c.env[x] = _pair(li, names[0])
    elif rule == "newRef":
        c.env[x] = RefVal(names[1])
    elif rule == "freeRef":
        c.env[x] = Var(c.env[names[0]].target)
    elif rule == "newLifetime":
        now = c.fresh("now")
        c.env[now] = Token(EMPTY)
        c.env[x] = App(Var(names[1]), Var(now))
    elif rule == "endLifetime":
        c.env[x] = ConApp("Ur", (Var(names[0]),))
    elif rule == "borrow":
        v = c.env[names[1]]
        bid = c.fresh_id()
        c.bids.add(bid)
        bm, bl = c.fresh("bm"), c.fresh("bl")
        c.env[bm] = Wrap("mut", (BorrowPath(bid),), v)
        c.env[bl] = LendVal(bid, names[1])
        c.env[x] = _pair(bm, bl)
    elif rule == "share":
        v = c.env[names[0]]
        b2 = c.fresh("sh")
        c.env[b2] = Wrap("share", (), v.body)
        c.env[x] = ConApp("Ur", (Var(b2),))
    elif rule == "copy":
        c.env[x] = c.env[names[0]].body
    elif rule == "joinMut":
        v = c.env[names[0]]
        inner = v.body
        if v.kind == "mut":
            c.env[x] = Wrap("mut", v.paths + inner.paths, inner.body)
        else:
            c.env[x] = Wrap("share", (), inner.body)
    elif rule == "reclaim":
        lend = c.env[names[0]]
        hist = c.env[names[1]].hist
        v2 = restore_by_history(hist, BorrowPath(lend.bid), c, lend.var)
        c.env[x] = Var(v2)
    elif rule == "execBO":
        hist = c.env[names[0]].hist
        res = c.fresh("res")
        c.env[res] = Admin("exeBO", (names[1],), (hist,))
        c.env[x] = Admin("execBO_post", (res,))
    else:
        raise AssertionError(f"unhandled operator rule {rule}")
    return c


def _step_admin(c: Config, x: str, t: Admin, rule: str) -> Config:
    if rule == "linear":
        c.env[x] = c.env[t.args[0]]
        return c
    if rule.startswith("exeBO_"):
        hist = t.info[0]
        bo = c.env[t.args[0]]
        names = [a.name for a in bo.args]
        if bo.mo == "pure":
            c.env[x] = DoneVal(names[0], hist)
        elif bo.mo == "bind":
            res = c.fresh("res")
            c.env[res] = Admin("exeBO", (names[0],), (hist,))
            c.env[x] = Admin("bind_post", (res, names[1]))
        elif bo.mo == "sexecBO":
            c.env[x] = Admin("sexecBO_pre", (names[0], names[1]), (hist,))
        elif bo.mo == "parBO":
            r0, r1 = c.fresh("res"), c.fresh("res")
            c.env[r0] = Admin("exeBO", (names[0],), (EMPTY,))
            c.env[r1] = Admin("exeBO", (names[1],), (EMPTY,))
            c.env[x] = Admin("parBO_post", (r0, r1), (hist,))
        elif bo.mo == "deref":
            c.env[x] = Admin("deref_post", (names[0],), (hist,))
        elif bo.mo == "updateRef":
            c.env[x] = Admin("updateRef_pre", (names[0], names[1]), (hist,))
        else:
            raise AssertionError(f"unknown monadic constructor {bo.mo}")
        return c
    if rule == "execBO_post":
        done = c.env[t.args[0]]
        now = c.fresh("now")
        c.env[now] = Token(done.hist)
        c.env[x] = _pair(now, done.var)
        return c
    if rule == "bind_post":
        done = c.env[t.args[0]]
        bo = c.fresh("bo")
        c.env[bo] = App(Var(t.args[1]), Var(done.var))
        c.env[x] = Admin("exeBO", (bo,), (done.hist,))
        return c
    if rule == "sexecBO_pre":
        hist = t.info[0]
        hist_now = c.env[t.args[0]].hist
        res = c.fresh("res")
        c.env[res] = Admin("exeBO", (t.args[1],), (EMPTY,))
        c.env[x] = Admin("sexecBO_post", (res,), (hist, hist_now))
        return c
    if rule == "sexecBO_post":
        hist, hist_now = t.info
        done = c.env[t.args[0]]
        now, pr = c.fresh("now"), c.fresh("pr")
        c.env[now] = Token(hist_seq(hist_now, done.hist))
        c.env[pr] = _pair(now, done.var)
        c.env[x] = DoneVal(pr, hist_seq(hist, done.hist))
        return c
    if rule == "parBO_post":
        hist = t.info[0]
        d0 = c.env[t.args[0]]
        d1 = c.env[t.args[1]]
        combined = hist_seq(hist, hist_par(d0.hist, d1.hist))
        pr = c.fresh("pr")
        c.env[pr] = _pair(d0.var, d1.var)
        c.env[x] = DoneVal(pr, combined)
        return c
    if rule == "deref_post":
        hist = t.info[0]
        v = c.env[t.args[0]]
        if v.kind == "mut":
            wrap = Wrap("mut", tuple(p.child(0) for p in v.paths), Var(v.body.target))
        else:
            wrap = Wrap("share", (), Var(v.body.target))
        b2 = c.fresh("b")
        c.env[b2] = wrap
        c.env[x] = DoneVal(b2, hist)
        return c
    if rule == "updateRef_pre":
        hist = t.info[0]
        r = c.env[t.args[1]]
        bo, res = c.fresh("bo"), c.fresh("res")
        c.env[bo] = App(Var(t.args[0]), Var(r.body.target))
        c.env[res] = Admin("exeBO", (bo,), (hist,))
        c.env[x] = Admin("updateRef_prepost", (res,), (r.paths,))
        return c
    if rule == "updateRef_prepost":
        paths = t.info[0]
        done = c.env[t.args[0]]
        c.env[x] = Admin("updateRef_post", (done.var,), (paths, done.hist))
        return c
    if rule == "updateRef_post":
        paths, hist = t.info
        pr = c.env[t.args[0]]
        cvar, bvar = pr.args[0].name, pr.args[1].name
        ref2, pr2 = c.fresh("ref"), c.fresh("pr")
        c.env[ref2] = Wrap("mut", paths, RefVal(bvar))
        c.env[pr2] = _pair(cvar, ref2)
        update = History(tuple((p, bvar) for p in paths))
        c.env[x] = DoneVal(pr2, hist_seq(hist, update))
        return c
    raise AssertionError(f"unhandled internal rule {rule}")


def restore_by_history(hist: History, path: BorrowPath, c: Config, v: str) -> str:
    """Rebuild the value of v per the updates recorded in hist at path,
    extending c.env with fresh bindings; returns the restored variable."""
    dom = hist_domain(hist)
    if not any(p.extends(path) for p in dom):
        return v
    t = c.env.get(v)
    if t is None:
        raise RestoreStuck(f"unbound variable {v} during restoration")
    ws, core = strip_wrappers(t)
    rec = hist.get(path)
    if rec is not None:
        if isinstance(core, RefVal):
            b2 = restore_by_history(hist, path.child(0), c, rec)
            v2 = c.fresh(v)
            c.env[v2] = apply_wrappers(ws, RefVal(b2))
            return v2
        raise RestoreStuck(f"record at {path} but {v} is not a reference")
    if isinstance(core, RefVal):
        b2 = restore_by_history(hist, path.child(0), c, core.target)
        v2 = c.fresh(v)
        c.env[v2] = apply_wrappers(ws, RefVal(b2))
        return v2
    if isinstance(core, ConApp):
        new_args = []
        for i, a in enumerate(core.args):
            new_args.append(Var(restore_by_history(hist, path.child(i), c, a.name)))
        v2 = c.fresh(v)
        c.env[v2] = apply_wrappers(ws, ConApp(core.con, tuple(new_args)))
        return v2
    raise RestoreStuck(f"no restoration rule applies to {v}")


def make_initial(body: Term) -> Config:
    return initial_config(body)
