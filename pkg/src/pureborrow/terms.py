"""Abstract syntax for programs: terms, data declarations, and structural utilities."""

from __future__ import annotations

from dataclasses import dataclass, field


# ---------------------------------------------------------------------------
# Surface operators and monad constructors, with arities.

OPERATORS = {
    "add": 2, "sub": 2, "mul": 2,          # integer operations
    "le": 2, "lt": 2, "eq": 2,             # integer relations
    "par": 2,
    "consume": 1,
    "move": 1,
    "linearly": 1,
    "withLinearly": 1,
    "newRef": 2,
    "freeRef": 1,
    "newLifetime": 2,
    "endLifetime": 1,
    "borrow": 2,
    "share": 1,
    "copy": 1,
    "joinMut": 1,
    "reclaim": 2,
    "execBO": 2,
}

MONAD_CONSTRUCTORS = {
    "pure": 1,
    "bind": 2,
    "sexecBO": 2,
    "parBO": 2,
    "deref": 1,
    "updateRef": 2,
}

IOPS = {"add", "sub", "mul"}
IRELS = {"le", "lt", "eq"}


class Term:
    """Base class for term AST nodes."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str


@dataclass(frozen=True, slots=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True, slots=True)
class Lam(Term):
    param: str
    body: Term
    # Optional (multiplicity, type) annotation; makes the lambda synthesizable.
    ann: object = None


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Let(Term):
    """A parallel binding group.

    ``linear=True`` is the non-recursive group binding each variable at
    multiplicity one; ``linear=False`` is the recursive group binding at
    unrestricted multiplicity.
    """

    linear: bool
    bindings: tuple  # of (name, optional type annotation, Term)
    body: Term


@dataclass(frozen=True, slots=True)
class Seq(Term):
    """``x ; t``: force the variable x, then continue as t."""

    forced: str
    body: Term


@dataclass(frozen=True, slots=True)
class ConApp(Term):
    con: str
    args: tuple


@dataclass(frozen=True, slots=True)
class Case(Term):
    scrutinee: Term
    branches: tuple  # of (con name, tuple of binder names, Term)


@dataclass(frozen=True, slots=True)
class OpApp(Term):
    op: str
    args: tuple
    inst: tuple = ()  # explicit schematic instantiation; entries may be None


@dataclass(frozen=True, slots=True)
class MonApp(Term):
    mo: str
    args: tuple
    inst: tuple = ()


@dataclass(frozen=True, slots=True)
class Gen(Term):
    """Explicit generalization marker ``forall v. t``."""

    kind: str  # "life" | "lifeid" | "mult" | "type"
    name: str
    body: Term


@dataclass(frozen=True, slots=True)
class Inst(Term):
    """Explicit instantiation marker ``t @[...]``."""

    term: Term
    args: tuple


@dataclass(frozen=True, slots=True)
class Ann(Term):
    """Type ascription ``(t : T)``."""

    term: Term
    type: object


# ---------------------------------------------------------------------------
# Programs and data declarations.


@dataclass(frozen=True, slots=True)
class DataDecl:
    name: str
    params: tuple  # type-variable names
    constructors: tuple  # of (con name, tuple of (multiplicity, Type))


@dataclass(frozen=True, slots=True)
class Program:
    data_decls: tuple
    body: Term

    def decl_map(self) -> dict:
        return {d.name: d for d in self.data_decls}

    def con_map(self) -> dict:
        """Constructor name -> (DataDecl, field list)."""
        out = {}
        for d in self.data_decls:
            for con, fields in d.constructors:
                out[con] = (d, fields)
        return out


def default_data_decls():
    """The built-in declarations: unit, Bool, Ur, and the pair type."""
    from . import ty

    a, b = ty.TVar("a"), ty.TVar("b")
    return (
        DataDecl("()", (), (("()", ()),)),
        DataDecl("Bool", (), (("True", ()), ("False", ()))),
        DataDecl("Ur", ("a",), (("Ur", ((ty.MANY, a),)),)),
        DataDecl("(,)", ("a", "b"), (("(,)", ((ty.ONE, a), (ty.ONE, b))),)),
    )


DEFAULT_TYPE_NAMES = {"()", "Bool", "Ur", "(,)"}


# ---------------------------------------------------------------------------
# Structural utilities.


def free_vars(t: Term) -> frozenset:
    """Free term variables of t, respecting let, lambda, and case binders."""
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, IntLit):
        return frozenset()
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.param}
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, Let):
        names = {n for n, _, _ in t.bindings}
        inner = free_vars(t.body) - names
        for _, _, rhs in t.bindings:
            fv = free_vars(rhs)
            if not t.linear:
                fv = fv - names
            inner |= fv
        return frozenset(inner)
    if isinstance(t, Seq):
        return free_vars(t.body) | {t.forced}
    if isinstance(t, ConApp):
        out = frozenset()
        for a in t.args:
            out |= free_vars(a)
        return out
    if isinstance(t, Case):
        out = free_vars(t.scrutinee)
        for _, binders, body in t.branches:
            out |= free_vars(body) - set(binders)
        return out
    if isinstance(t, (OpApp, MonApp)):
        out = frozenset()
        for a in t.args:
            out |= free_vars(a)
        return out
    if isinstance(t, Gen):
        return free_vars(t.body)
    if isinstance(t, Inst):
        return free_vars(t.term)
    if isinstance(t, Ann):
        return free_vars(t.term)
    raise TypeError(f"not a term: {t!r}")


def alpha_equal(t1: Term, t2: Term) -> bool:
    """True iff t1 and t2 agree up to consistent renaming of bound variables."""
    return _alpha(t1, t2, {}, {})


def _alpha(t1, t2, m1, m2):
    if type(t1) is not type(t2):
        return False
    if isinstance(t1, Var):
        return m1.get(t1.name, t1.name) == m2.get(t2.name, t2.name)
    if isinstance(t1, IntLit):
        return t1.value == t2.value
    if isinstance(t1, Lam):
        fresh = object()
        return _alpha(t1.body, t2.body, {**m1, t1.param: fresh}, {**m2, t2.param: fresh})
    if isinstance(t1, App):
        return _alpha(t1.fn, t2.fn, m1, m2) and _alpha(t1.arg, t2.arg, m1, m2)
    if isinstance(t1, Let):
        if t1.linear != t2.linear or len(t1.bindings) != len(t2.bindings):
            return False
        n1 = {**m1}
        n2 = {**m2}
        for (a, _, _), (b, _, _) in zip(t1.bindings, t2.bindings):
            fresh = object()
            n1[a] = fresh
            n2[b] = fresh
        rhs1, rhs2 = (n1, n2) if not t1.linear else (m1, m2)
        for (_, _, r1), (_, _, r2) in zip(t1.bindings, t2.bindings):
            if not _alpha(r1, r2, rhs1, rhs2):
                return False
        return _alpha(t1.body, t2.body, n1, n2)
    if isinstance(t1, Seq):
        if m1.get(t1.forced, t1.forced) != m2.get(t2.forced, t2.forced):
            return False
        return _alpha(t1.body, t2.body, m1, m2)
    if isinstance(t1, ConApp):
        return (
            t1.con == t2.con
            and len(t1.args) == len(t2.args)
            and all(_alpha(a, b, m1, m2) for a, b in zip(t1.args, t2.args))
        )
    if isinstance(t1, Case):
        if not _alpha(t1.scrutinee, t2.scrutinee, m1, m2):
            return False
        if len(t1.branches) != len(t2.branches):
            return False
        for (c1, bs1, b1), (c2, bs2, b2) in zip(t1.branches, t2.branches):
            if c1 != c2 or len(bs1) != len(bs2):
                return False
            n1 = {**m1}
            n2 = {**m2}
            for x, y in zip(bs1, bs2):
                fresh = object()
                n1[x] = fresh
                n2[y] = fresh
            if not _alpha(b1, b2, n1, n2):
                return False
        return True
    if isinstance(t1, (OpApp, MonApp)):
        name1 = t1.op if isinstance(t1, OpApp) else t1.mo
        name2 = t2.op if isinstance(t2, OpApp) else t2.mo
        return (
            name1 == name2
            and t1.inst == t2.inst
            and len(t1.args) == len(t2.args)
            and all(_alpha(a, b, m1, m2) for a, b in zip(t1.args, t2.args))
        )
    if isinstance(t1, Gen):
        return t1.kind == t2.kind and t1.name == t2.name and _alpha(t1.body, t2.body, m1, m2)
    if isinstance(t1, Inst):
        return t1.args == t2.args and _alpha(t1.term, t2.term, m1, m2)
    if isinstance(t1, Ann):
        return t1.type == t2.type and _alpha(t1.term, t2.term, m1, m2)
    raise TypeError(f"not a term: {t1!r}")


def subst_var(t: Term, name: str, replacement: str) -> Term:
    """Capture-avoiding substitution of a variable name by another variable name."""
    return subst_vars(t, {name: replacement})


def subst_vars(t: Term, mapping: dict) -> Term:
    if not mapping:
        return t
    if isinstance(t, Var):
        return Var(mapping.get(t.name, t.name))
    if isinstance(t, IntLit):
        return t
    if isinstance(t, Lam):
        inner = {k: v for k, v in mapping.items() if k != t.param}
        if t.param in set(inner.values()):
            # the binder would capture a replacement; rename it
            fresh = _avoid(t.param, set(inner.values()) | free_vars(t.body))
            body = subst_vars(t.body, {t.param: fresh})
            return Lam(fresh, subst_vars(body, inner), t.ann)
        return Lam(t.param, subst_vars(t.body, inner), t.ann)
    if isinstance(t, App):
        return App(subst_vars(t.fn, mapping), subst_vars(t.arg, mapping))
    if isinstance(t, Let):
        names = [n for n, _, _ in t.bindings]
        inner = {k: v for k, v in mapping.items() if k not in names}
        targets = set(inner.values())
        if targets & set(names):
            ren = {}
            avoid = targets | free_vars(t)
            for n in names:
                if n in targets:
                    f = _avoid(n, avoid)
                    ren[n] = f
                    avoid.add(f)
            t = rename_let_binders(t, ren)
            names = [n for n, _, _ in t.bindings]
            inner = {k: v for k, v in mapping.items() if k not in names}
        rhs_map = inner if not t.linear else mapping
        bindings = tuple(
            (n, ann, subst_vars(rhs, rhs_map)) for n, ann, rhs in t.bindings
        )
        return Let(t.linear, bindings, subst_vars(t.body, inner))
    if isinstance(t, Seq):
        return Seq(mapping.get(t.forced, t.forced), subst_vars(t.body, mapping))
    if isinstance(t, ConApp):
        return ConApp(t.con, tuple(subst_vars(a, mapping) for a in t.args))
    if isinstance(t, Case):
        branches = []
        targets = set(mapping.values())
        for con, binders, body in t.branches:
            inner = {k: v for k, v in mapping.items() if k not in binders}
            if set(binders) & set(inner.values()):
                ren = {}
                avoid = targets | free_vars(body) | set(binders)
                new_binders = []
                for b in binders:
                    if b in set(inner.values()):
                        f = _avoid(b, avoid)
                        ren[b] = f
                        avoid.add(f)
                        new_binders.append(f)
                    else:
                        new_binders.append(b)
                body = subst_vars(body, ren)
                binders = tuple(new_binders)
            branches.append((con, binders, subst_vars(body, inner)))
        return Case(subst_vars(t.scrutinee, mapping), tuple(branches))
    if isinstance(t, OpApp):
        return OpApp(t.op, tuple(subst_vars(a, mapping) for a in t.args), t.inst)
    if isinstance(t, MonApp):
        return MonApp(t.mo, tuple(subst_vars(a, mapping) for a in t.args), t.inst)
    if isinstance(t, Gen):
        return Gen(t.kind, t.name, subst_vars(t.body, mapping))
    if isinstance(t, Inst):
        return Inst(subst_vars(t.term, mapping), t.args)
    if isinstance(t, Ann):
        return Ann(subst_vars(t.term, mapping), t.type)
    raise TypeError(f"not a term: {t!r}")


def rename_let_binders(t: Let, ren: dict) -> Let:
    bindings = tuple((ren.get(n, n), ann, rhs) for n, ann, rhs in t.bindings)
    body = subst_vars(t.body, ren)
    if not t.linear:
        bindings = tuple((n, ann, subst_vars(rhs, ren)) for n, ann, rhs in bindings)
    return Let(t.linear, bindings, body)


def _avoid(base: str, avoid: set) -> str:
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


def erase_annotations(t: Term) -> Term:
    """Strip generalization/instantiation markers and ascriptions for execution."""
    if isinstance(t, (Var, IntLit)):
        return t
    if isinstance(t, Lam):
        return Lam(t.param, erase_annotations(t.body), None)
    if isinstance(t, App):
        return App(erase_annotations(t.fn), erase_annotations(t.arg))
    if isinstance(t, Let):
        return Let(
            t.linear,
            tuple((n, None, erase_annotations(rhs)) for n, _, rhs in t.bindings),
            erase_annotations(t.body),
        )
    if isinstance(t, Seq):
        return Seq(t.forced, erase_annotations(t.body))
    if isinstance(t, ConApp):
        return ConApp(t.con, tuple(erase_annotations(a) for a in t.args))
    if isinstance(t, Case):
        return Case(
            erase_annotations(t.scrutinee),
            tuple((c, bs, erase_annotations(b)) for c, bs, b in t.branches),
        )
    if isinstance(t, OpApp):
        return OpApp(t.op, tuple(erase_annotations(a) for a in t.args), ())
    if isinstance(t, MonApp):
        return MonApp(t.mo, tuple(erase_annotations(a) for a in t.args), ())
    if isinstance(t, Gen):
        return erase_annotations(t.body)
    if isinstance(t, Inst):
        return erase_annotations(t.term)
    if isinstance(t, Ann):
        return erase_annotations(t.term)
    raise TypeError(f"not a term: {t!r}")
