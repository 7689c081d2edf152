"""Algorithmic type checker: bidirectional typing with usage accounting.

The checker synthesizes or checks types while recording, per variable, how
often it was consumed (a multiplicity).  Binder exit verifies the recorded
usage against the declared multiplicity: over-use of a non-unrestricted
binding is LinearUsedTwice, dropping a non-unrestricted binding is
LinearUnused.  Operators carry schematic signatures instantiated from
explicit `@[...]` arguments, the expected type, and synthesized argument
types.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import terms, ty
from .terms import (
    Ann, App, Case, ConApp, Gen, Inst, IntLit, Lam, Let, MonApp, OpApp,
    Program, Seq, Var,
)
from .ty import (
    BOOL, INT, LINEARLY, MANY, ONE, STATIC, UNIT, Lifetime, Mult, TBO, TData,
    TEnd, TForall, TFun, TInt, TLend, TLinearly, TMut, TNow, TRef, TShare,
    TVar as TyVar, Type, free_type_names, is_subtype, life_atom, life_var,
    lifetime_leq, mult_leq, mult_mul, mult_var, subst_type, t_pair, t_ur,
)


class PboTypeError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message

    def diagnostic(self):
        return {"code": self.code, "message": self.message, "span": None}


def _err(code, message):
    raise PboTypeError(code, message)


# ---------------------------------------------------------------------------
# Usage accounting: a usage is a dict var -> Mult (absent = unused).


def use_one(name):
    return {name: ONE}


def use_add(u1: dict, u2: dict) -> dict:
    out = dict(u1)
    for k, m in u2.items():
        out[k] = MANY if k in out else m
    return out


def use_scale(mu: Mult, u: dict) -> dict:
    if mu == ONE:
        return u
    return {k: mult_mul(mu, m) for k, m in u.items()}


def use_join(u1: dict, u2: dict) -> dict:
    """Join usages of sibling case branches."""
    out = {}
    for k in set(u1) | set(u2):
        a, b = u1.get(k), u2.get(k)
        out[k] = a if a == b else MANY
    return out


def leave(u: dict, name: str, declared: Mult) -> dict:
    """Verify and discharge the usage of a binder on scope exit."""
    got = u.get(name)
    if got is None:
        if declared != MANY:
            _err("LinearUnused", f"variable {name} bound with multiplicity "
                 f"{_sm(declared)} is never used")
    elif not mult_leq(got, declared):
        _err("LinearUsedTwice", f"variable {name} bound with multiplicity "
             f"{_sm(declared)} is used at multiplicity {_sm(got)}")
    out = dict(u)
    out.pop(name, None)
    return out


def _sm(m):
    from .printer import show_mult

    return show_mult(m)


def _st(t):
    from .printer import show_type

    return show_type(t)


# ---------------------------------------------------------------------------
# Operator signatures.
#
# Each signature lists its schematic parameters (kind, name), argument
# patterns, a result pattern, and an optional side condition on the binding.
# Patterns mention parameters as TyVar / life_var / mult_var of that name.


def _la(n):
    return life_var(n)


_A, _B = TyVar("a"), TyVar("b")
_AL, _BE = _la("al"), _la("be")


def _primitive_shape(kinds):
    def cond(binding, decls):
        t = binding.get(("type", "a"))
        if any(isinstance(t, k) for k in kinds):
            return None
        names = "/".join(k.__name__.removeprefix("T") for k in kinds)
        return f"argument type {_st(t)} is not one of {names}"

    return cond


def _updateref_cond(binding, decls):
    al = binding.get(("life", "al"))
    be = binding.get(("life", "be"))
    if not lifetime_leq(be, al):
        return (f"lifetime {_sl(be)} does not end before {_sl(al)}")
    return None


def _sl(l):
    from .printer import show_lifetime

    return show_lifetime(l)


@dataclass(frozen=True)
class OpSig:
    params: tuple  # of (kind, name); kind in {"life","mult","type"}
    args: tuple  # of Type patterns
    result: Type
    cond: object = None  # callable(binding, decls) -> error str | None


OP_SIGS = {
    "add": OpSig((), (INT, INT), INT),
    "sub": OpSig((), (INT, INT), INT),
    "mul": OpSig((), (INT, INT), INT),
    "le": OpSig((), (INT, INT), BOOL),
    "lt": OpSig((), (INT, INT), BOOL),
    "eq": OpSig((), (INT, INT), BOOL),
    "par": OpSig(
        (("type", "a"), ("type", "b")), (_A, _B), t_pair(_A, _B)
    ),
    "consume": OpSig(
        (("type", "a"),), (_A,), UNIT, _primitive_shape((TLinearly, TMut))
    ),
    "move": OpSig(
        (("type", "a"),), (_A,), t_ur(_A), _primitive_shape((TInt, TEnd, TShare))
    ),
    "linearly": OpSig(
        (("type", "a"),), (TFun(LINEARLY, ONE, t_ur(_A)),), t_ur(_A)
    ),
    "withLinearly": OpSig(
        (("type", "a"),), (_A,), t_pair(LINEARLY, _A),
        _primitive_shape((TLinearly, TRef, TNow, TMut)),
    ),
    "newRef": OpSig((("type", "a"),), (LINEARLY, _A), TRef(_A)),
    "freeRef": OpSig((("type", "a"),), (TRef(_A),), _A),
    "newLifetime": OpSig(
        (("type", "a"),),
        (LINEARLY, TForall("lifeid", "$i", TFun(TNow(life_atom("$i")), ONE, _A))),
        _A,
    ),
    "endLifetime": OpSig((("life", "al"),), (TNow(_AL),), t_ur(TEnd(_AL))),
    "borrow": OpSig(
        (("life", "al"), ("type", "a")),
        (LINEARLY, _A),
        t_pair(TMut(_AL, _A), TLend(_AL, _A)),
    ),
    "share": OpSig(
        (("life", "al"), ("type", "a")), (TMut(_AL, _A),), t_ur(TShare(_AL, _A))
    ),
    "copy": OpSig(
        (("life", "al"), ("type", "a")), (TShare(_AL, _A),), _A,
        _primitive_shape((TInt, TEnd, TShare)),
    ),
    "reclaim": OpSig(
        (("life", "al"), ("type", "a")), (TLend(_AL, _A), TEnd(_AL)), _A
    ),
    "execBO": OpSig(
        (("life", "al"), ("type", "a")),
        (TNow(_AL), TBO(_AL, _A)),
        t_pair(TNow(_AL), _A),
    ),
    "pure": OpSig((("life", "al"), ("type", "a")), (_A,), TBO(_AL, _A)),
    "bind": OpSig(
        (("life", "al"), ("type", "a"), ("type", "b")),
        (TBO(_AL, _A), TFun(_A, ONE, TBO(_AL, _B))),
        TBO(_AL, _B),
    ),
    "sexecBO": OpSig(
        (("life", "al"), ("life", "be"), ("type", "a")),
        (TNow(_AL), TBO(Lifetime(_AL.atoms | _BE.atoms), _A)),
        TBO(_BE, t_pair(TNow(_AL), _A)),
    ),
    "parBO": OpSig(
        (("life", "al"), ("type", "a"), ("type", "b")),
        (TBO(_AL, _A), TBO(_AL, _B)),
        TBO(_AL, t_pair(_A, _B)),
    ),
    "updateRef": OpSig(
        (("life", "al"), ("life", "be"), ("type", "a"), ("type", "b")),
        (
            TFun(_A, ONE, TBO(_BE, t_pair(_B, _A))),
            TMut(_AL, TRef(_A)),
        ),
        TBO(_BE, t_pair(_B, TMut(_AL, TRef(_A)))),
        _updateref_cond,
    ),
}

# joinMut and deref act on either borrower constructor.
_JOIN_SIGS = {
    "mut": OpSig(
        (("life", "al"), ("life", "be"), ("type", "a")),
        (TMut(_AL, TMut(_BE, _A)),),
        TMut(Lifetime(_AL.atoms | _BE.atoms), _A),
    ),
    "share": OpSig(
        (("life", "al"), ("life", "be"), ("type", "a")),
        (TShare(_AL, TMut(_BE, _A)),),
        TShare(Lifetime(_AL.atoms | _BE.atoms), _A),
    ),
}
_DEREF_SIGS = {
    "mut": OpSig(
        (("life", "al"), ("type", "a")),
        (TMut(_AL, TRef(_A)),),
        TBO(_AL, TMut(_AL, _A)),
    ),
    "share": OpSig(
        (("life", "al"), ("type", "a")),
        (TShare(_AL, TRef(_A)),),
        TBO(_AL, TShare(_AL, _A)),
    ),
}

PRIMITIVE_HEADS = (TNow, TEnd, TLinearly, TMut, TShare, TLend, TRef, TBO)


# ---------------------------------------------------------------------------
# Pattern matching for signature instantiation (one-way, conservative).


def _match(pat: Type, actual: Type, params: set, binding: dict, rigid: dict):
    if isinstance(pat, TyVar) and ("type", pat.name) in params:
        key = ("type", pat.name)
        if key not in binding and not _mentions_rigid(actual, rigid):
            binding[key] = actual
        return
    if type(pat) is not type(actual):
        return
    if isinstance(pat, TFun):
        _match(pat.arg, actual.arg, params, binding, rigid)
        _match_mult(pat.mult, actual.mult, params, binding)
        _match(pat.res, actual.res, params, binding, rigid)
    elif isinstance(pat, TData):
        if pat.name == actual.name and len(pat.args) == len(actual.args):
            for p, a in zip(pat.args, actual.args):
                _match(p, a, params, binding, rigid)
    elif isinstance(pat, TRef):
        _match(pat.body, actual.body, params, binding, rigid)
    elif isinstance(pat, (TNow, TEnd)):
        _match_life(pat.life, actual.life, params, binding, rigid)
    elif isinstance(pat, (TMut, TShare, TLend, TBO)):
        _match_life(pat.life, actual.life, params, binding, rigid)
        _match(pat.body, actual.body, params, binding, rigid)
    elif isinstance(pat, TForall):
        if pat.kind == actual.kind:
            rigid2 = dict(rigid)
            rigid2[pat.name] = actual.name
            _match(pat.body, actual.body, params, binding, rigid2)


def _match_life(pat: Lifetime, actual: Lifetime, params, binding, rigid):
    unknown = []
    fixed = set()
    for kind, name in pat.atoms:
        if kind == "var" and ("life", name) in params:
            if ("life", name) in binding:
                fixed |= binding[("life", name)].atoms
            else:
                unknown.append(name)
        elif kind == "id" and name in rigid:
            fixed.add(("id", rigid[name]))
        else:
            fixed.add((kind, name))
    if len(unknown) == 1 and fixed <= actual.atoms:
        binding[("life", unknown[0])] = Lifetime(actual.atoms - fixed)


def _match_mult(pat: Mult, actual: Mult, params, binding):
    if not pat.many and len(pat.vars) == 1:
        (name,) = tuple(pat.vars)
        if ("mult", name) in params and ("mult", name) not in binding:
            binding[("mult", name)] = actual


def _mentions_rigid(t: Type, rigid: dict) -> bool:
    if not rigid:
        return False
    names = free_type_names(t)
    return any(("lifeid", r) in names for r in rigid)


def _subst_binding(pat: Type, binding: dict, params) -> Type:
    mapping = {}
    for kind, name in params:
        val = binding.get((kind, name))
        if val is not None:
            mapping[(kind, name)] = val
    return subst_type(pat, mapping)


# ---------------------------------------------------------------------------
# The checker.


class Checker:
    def __init__(self, program: Program):
        self.decls = program.decl_map()
        self.cons = program.con_map()
        self._skolem = 0

    # -- helpers -------------------------------------------------------------

    def fresh_atom(self) -> Lifetime:
        self._skolem += 1
        return life_atom(f"$sk{self._skolem}")

    def subtype(self, a, b):
        return is_subtype(a, b, self.decls)

    def skolemize(self, t: TForall):
        """Open a quantifier for checking against it."""
        if t.kind in ("life", "lifeid"):
            key = ("life", t.name) if t.kind == "life" else ("lifeid", t.name)
            return subst_type(t.body, {key: self.fresh_atom()})
        if t.kind == "mult":
            self._skolem += 1
            return subst_type(t.body, {("mult", t.name): mult_var(f"$sk{self._skolem}")})
        self._skolem += 1
        return subst_type(t.body, {("type", t.name): TyVar(f"$sk{self._skolem}")})

    # -- bidirectional core ----------------------------------------------------

    def synth(self, t, ctx: dict):
        """Returns (type, usage); ctx maps var -> (Type, declared Mult)."""
        if isinstance(t, Var):
            got = ctx.get(t.name)
            if got is None:
                _err("UnboundVariable", f"variable {t.name} is not in scope")
            return got[0], use_one(t.name)
        if isinstance(t, IntLit):
            return INT, {}
        if isinstance(t, Ann):
            u = self.check(t.term, ctx, t.type)
            return t.type, u
        if isinstance(t, Lam):
            if t.ann is None:
                _err("Mismatch", "cannot infer the type of an unannotated function")
            mu, at = t.ann
            ctx2 = dict(ctx)
            ctx2[t.param] = (at, mu)
            rt, u = self.synth(t.body, ctx2)
            return TFun(at, mu, rt), leave(u, t.param, mu)
        if isinstance(t, App):
            ft, fu = self.synth(t.fn, ctx)
            if not isinstance(ft, TFun):
                _err("Mismatch", f"applied a non-function of type {_st(ft)}")
            au = self.check(t.arg, ctx, ft.arg)
            return ft.res, use_add(fu, use_scale(ft.mult, au))
        if isinstance(t, Let):
            return self._let(t, ctx, None)
        if isinstance(t, Seq):
            if t.forced not in ctx:
                _err("UnboundVariable", f"forced variable {t.forced} is not in scope")
            return self.synth(t.body, ctx)
        if isinstance(t, ConApp):
            return self._con(t, ctx, None)
        if isinstance(t, Case):
            return self._case(t, ctx, None)
        if isinstance(t, OpApp):
            return self._op(t.op, t, ctx, None)
        if isinstance(t, MonApp):
            return self._op(t.mo, t, ctx, None)
        if isinstance(t, Gen):
            rt, u = self.synth(t.body, ctx)
            return TForall(t.kind, t.name, rt), u
        if isinstance(t, Inst):
            ft, u = self.synth(t.term, ctx)
            for arg in t.args:
                if not isinstance(ft, TForall):
                    _err("Mismatch", f"instantiated a non-polymorphic type {_st(ft)}")
                if arg is None:
                    _err("Mismatch", "instantiation arguments of a general term "
                         "must be explicit (no _)")
                key = {"life": "life", "lifeid": "life", "mult": "mult", "type": "type"}[ft.kind]
                expected_cls = {"life": Lifetime, "mult": Mult, "type": Type}[key]
                if not isinstance(arg, expected_cls):
                    _err("Mismatch", f"instantiation argument {arg!r} has the wrong kind")
                sub_key = ("lifeid", ft.name) if ft.kind == "lifeid" else (key, ft.name)
                if ft.kind == "lifeid":
                    ft = subst_type(ft.body, {("lifeid", ft.name): arg})
                else:
                    ft = subst_type(ft.body, {(key, ft.name): arg})
            return ft, u
        raise TypeError(f"not a checkable term: {t!r}")

    def try_synth(self, t, ctx):
        if isinstance(t, Lam) and t.ann is None:
            return None
        try:
            return self.synth(t, ctx)
        except PboTypeError:
            return None

    def check(self, t, ctx: dict, expected: Type) -> dict:
        if isinstance(expected, TForall) and not isinstance(t, Gen):
            return self.check(t, ctx, self.skolemize(expected))
        if isinstance(t, Gen):
            if not isinstance(expected, TForall) or expected.kind != t.kind:
                _err("Mismatch", f"generalization marker does not fit expected "
                     f"type {_st(expected)}")
            key = {"life": ("life", expected.name), "lifeid": ("lifeid", expected.name),
                   "mult": ("mult", expected.name), "type": ("type", expected.name)}[t.kind]
            val = {"life": life_var(t.name), "lifeid": life_atom(t.name),
                   "mult": mult_var(t.name), "type": TyVar(t.name)}[t.kind]
            return self.check(t.body, ctx, subst_type(expected.body, {key: val}))
        if isinstance(t, Lam):
            if not isinstance(expected, TFun):
                _err("Mismatch", f"a function cannot have type {_st(expected)}")
            if t.ann is not None:
                mu, at = t.ann
                if not self.subtype(expected.arg, at):
                    _err("Mismatch", f"parameter annotation {_st(at)} does not "
                         f"accept arguments of type {_st(expected.arg)}")
                if not mult_leq(mu, expected.mult):
                    _err("Mismatch", "parameter multiplicity annotation is weaker "
                         "than the expected function multiplicity")
            else:
                mu, at = expected.mult, expected.arg
            ctx2 = dict(ctx)
            ctx2[t.param] = (at, mu)
            u = self.check(t.body, ctx2, expected.res)
            return leave(u, t.param, mu)
        if isinstance(t, Let):
            _, u = self._let(t, ctx, expected)
            return u
        if isinstance(t, Seq):
            if t.forced not in ctx:
                _err("UnboundVariable", f"forced variable {t.forced} is not in scope")
            return self.check(t.body, ctx, expected)
        if isinstance(t, Case):
            _, u = self._case(t, ctx, expected)
            return u
        if isinstance(t, ConApp):
            _, u = self._con(t, ctx, expected)
            return u
        if isinstance(t, OpApp):
            _, u = self._op(t.op, t, ctx, expected)
            return u
        if isinstance(t, MonApp):
            _, u = self._op(t.mo, t, ctx, expected)
            return u
        got, u = self.synth(t, ctx)
        if not self.subtype(got, expected):
            _err("Mismatch", f"expected {_st(expected)}, found {_st(got)}")
        return u

    # -- composite forms -----------------------------------------------------

    def _let(self, t: Let, ctx, expected):
        names = [n for n, _, _ in t.bindings]
        mu = ONE if t.linear else MANY
        ctx2 = dict(ctx)
        if t.linear:
            usages = []
            for n, ann, rhs in t.bindings:
                if ann is not None:
                    usages.append(self.check(rhs, ctx, ann))
                    ctx2[n] = (ann, mu)
                else:
                    rt, u = self.synth(rhs, ctx)
                    usages.append(u)
                    ctx2[n] = (rt, mu)
        else:
            # recursive group: annotations (or synthesizable closed types)
            for n, ann, rhs in t.bindings:
                if ann is None:
                    _err("Mismatch", f"recursive binding {n} needs a type annotation")
                ctx2[n] = (ann, mu)
            usages = []
            for n, ann, rhs in t.bindings:
                u = self.check(rhs, ctx2, ann)
                for name in names:
                    u.pop(name, None)
                usages.append(use_scale(MANY, u))
        if expected is None:
            rt, bu = self.synth(t.body, ctx2)
        else:
            rt, bu = expected, self.check(t.body, ctx2, expected)
        for n in names:
            bu = leave(bu, n, mu)
        total = bu
        for u in usages:
            total = use_add(total, u)
        return rt, total

    def _con(self, t: ConApp, ctx, expected):
        got = self.cons.get(t.con)
        if got is None:
            _err("UnboundVariable", f"unknown constructor {t.con}")
        decl, fields = got
        inst = None
        if expected is not None:
            exp = expected
            if isinstance(exp, TData) and exp.name == decl.name:
                inst = {("type", p): a for p, a in zip(decl.params, exp.args)}
        if inst is None:
            # infer the data parameters from synthesized arguments
            binding = {}
            params = {("type", p) for p in decl.params}
            arg_types = []
            for a, (fm, ftpl) in zip(t.args, fields):
                st = self.try_synth(a, ctx)
                arg_types.append(st[0] if st else None)
                if st:
                    _match(ftpl, st[0], params, binding, {})
            missing = [p for p in decl.params if ("type", p) not in binding]
            if missing:
                _err("Mismatch", f"cannot infer type parameters {missing} of "
                     f"constructor {t.con}; add an ascription")
            inst = binding
        usage = {}
        for a, (fm, ftpl) in zip(t.args, fields):
            u = self.check(a, ctx, subst_type(ftpl, inst))
            usage = use_add(usage, use_scale(fm, u))
        result = TData(decl.name, tuple(inst[("type", p)] for p in decl.params))
        if expected is not None and not self.subtype(result, expected):
            _err("Mismatch", f"expected {_st(expected)}, found {_st(result)}")
        return result, usage

    def _case(self, t: Case, ctx, expected):
        st, su = self.synth(t.scrutinee, ctx)
        wrapper = None
        if isinstance(st, (TMut, TShare)) and isinstance(st.body, TData):
            wrapper = st
            data = st.body
        elif isinstance(st, TData):
            data = st
        else:
            _err("Mismatch", f"cannot case on a value of type {_st(st)}")
        decl = self.decls.get(data.name)
        if decl is None:
            _err("Mismatch", f"cannot case on undeclared type {data.name}")
        inst = {("type", p): a for p, a in zip(decl.params, data.args)}
        con_fields = dict(decl.constructors)
        seen = set()
        result = expected
        joined = None
        for con, binders, body in t.branches:
            fields = con_fields.get(con)
            if fields is None or con in seen:
                _err("Mismatch", f"branch constructor {con} does not belong to "
                     f"{data.name} (or is duplicated)")
            seen.add(con)
            ctx2 = dict(ctx)
            for b, (fm, ftpl) in zip(binders, fields):
                bt = subst_type(ftpl, inst)
                if wrapper is not None:
                    bt = (
                        TMut(wrapper.life, bt)
                        if isinstance(wrapper, TMut)
                        else TShare(wrapper.life, bt)
                    )
                ctx2[b] = (bt, fm)
            if result is None:
                result, bu = self.synth(body, ctx2)
            else:
                bu = self.check(body, ctx2, result)
            for b, (fm, _) in zip(binders, fields):
                bu = leave(bu, b, fm)
            joined = bu if joined is None else use_join(joined, bu)
        if len(seen) != len(con_fields):
            missing = sorted(set(con_fields) - seen)
            _err("Mismatch", f"case does not cover constructors: {missing}")
        if result is None:
            _err("Mismatch", "cannot infer the type of a case with no branches")
        return result, use_add(su, joined or {})

    # -- operators -------------------------------------------------------------

    def _op(self, name, t, ctx, expected):
        arg_types = [self.try_synth(a, ctx) for a in t.args]
        arg_types = [at[0] if at else None for at in arg_types]
        if name == "joinMut":
            sig = self._pick_overload(_JOIN_SIGS, arg_types, expected, name)
        elif name == "deref":
            sig = self._pick_overload(_DEREF_SIGS, arg_types, expected, name)
        else:
            sig = OP_SIGS[name]
        binding = {}
        params = set(sig.params)
        if t.inst:
            if len(t.inst) > len(sig.params):
                _err("Mismatch", f"{name} takes at most {len(sig.params)} "
                     "instantiation arguments")
            for (kind, pname), arg in zip(sig.params, t.inst):
                if arg is None:
                    continue
                want = {"life": Lifetime, "mult": Mult, "type": Type}[kind]
                if not isinstance(arg, want):
                    _err("Mismatch", f"instantiation argument for {pname} of "
                         f"{name} has the wrong kind")
                binding[(kind, pname)] = arg
        if expected is not None:
            _match(sig.result, expected, params, binding, {})
        for pat, at in zip(sig.args, arg_types):
            if at is not None:
                _match(pat, at, params, binding, {})
        missing = [p for kind, p in sig.params if (kind, p) not in binding]
        if missing:
            _err("Mismatch", f"cannot infer instantiation {missing} of {name}; "
                 "supply it with @[...]")
        usage = {}
        for i, (pat, arg) in enumerate(zip(sig.args, t.args)):
            want = _subst_binding(pat, binding, sig.params)
            try:
                u = self.check(arg, ctx, want)
            except PboTypeError as e:
                if e.code == "Mismatch" and self._head_clash(want, arg_types[i]):
                    _err("SideConditionFailed",
                         f"argument {i + 1} of {name}: expected {_st(want)}, "
                         f"found {_st(arg_types[i])}")
                raise
            usage = use_add(usage, u)
        if sig.cond is not None:
            msg = sig.cond(binding, self.decls)
            if msg:
                _err("SideConditionFailed", f"{name}: {msg}")
        result = _subst_binding(sig.result, binding, sig.params)
        if expected is not None and not self.subtype(result, expected):
            _err("Mismatch", f"{name} produces {_st(result)}, expected {_st(expected)}")
        return result, usage

    def _pick_overload(self, sigs, arg_types, expected, name):
        head = arg_types[0] if arg_types else None
        if isinstance(head, TMut):
            return sigs["mut"]
        if isinstance(head, TShare):
            return sigs["share"]
        if isinstance(expected, (TMut, TBO)):
            inner = expected.body if isinstance(expected, TBO) else expected
            if isinstance(inner, TShare):
                return sigs["share"]
            return sigs["mut"]
        if isinstance(expected, TShare):
            return sigs["share"]
        _err("Mismatch", f"cannot determine the borrower constructor for {name}")

    def _head_clash(self, want, got):
        if got is None:
            return False
        if isinstance(want, PRIMITIVE_HEADS):
            return type(got) is not type(want)
        return False


def type_check(program: Program):
    """Type-check a program body in the empty context; returns its type."""
    checker = Checker(program)
    rt, usage = checker.synth(program.body, {})
    if usage:
        _err("UnboundVariable", f"program body mentions free variables: "
             f"{sorted(usage)}")
    return rt
