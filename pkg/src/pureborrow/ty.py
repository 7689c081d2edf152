"""Types, lifetimes, multiplicities, typing contexts, and subtyping."""

from __future__ import annotations

from dataclasses import dataclass


# ---------------------------------------------------------------------------
# Lifetimes.
#
# A lifetime is normalized to a finite set of atoms, each atom being either a
# concrete lifetime identifier ("id", name) or a lifetime variable
# ("var", name).  The static lifetime is the empty set; meet is set union.
# One lifetime is below another exactly when it mentions at least the other's
# atoms: smaller lifetimes end sooner, so they carry more atoms.


@dataclass(frozen=True, slots=True)
class Lifetime:
    atoms: frozenset  # of ("id"|"var", name)

    def __post_init__(self):
        if not isinstance(self.atoms, frozenset):
            object.__setattr__(self, "atoms", frozenset(self.atoms))


STATIC = Lifetime(frozenset())


def life_atom(name: str) -> Lifetime:
    return Lifetime(frozenset((("id", name),)))


def life_var(name: str) -> Lifetime:
    return Lifetime(frozenset((("var", name),)))


def life_meet(a: Lifetime, b: Lifetime) -> Lifetime:
    return Lifetime(a.atoms | b.atoms)


def lifetime_leq(a: Lifetime, b: Lifetime) -> bool:
    """a <= b: a ends no later than b (a's atom set contains b's)."""
    return b.atoms <= a.atoms


# ---------------------------------------------------------------------------
# Multiplicities.
#
# A multiplicity is 1, omega, or a formal product of multiplicity variables,
# normalized to the set of variables involved (1 is the empty product, and
# omega absorbs).


@dataclass(frozen=True, slots=True)
class Mult:
    many: bool
    vars: frozenset

    def __post_init__(self):
        if not isinstance(self.vars, frozenset):
            object.__setattr__(self, "vars", frozenset(self.vars))


ONE = Mult(False, frozenset())
MANY = Mult(True, frozenset())


def mult_var(name: str) -> Mult:
    return Mult(False, frozenset((name,)))


def mult_mul(a: Mult, b: Mult) -> Mult:
    if a.many or b.many:
        return MANY
    return Mult(False, a.vars | b.vars)


def mult_leq(a: Mult, b: Mult) -> bool:
    """1 <= m <= omega for every m; products compare by factor inclusion."""
    if a == ONE or b == MANY:
        return True
    if a == MANY or b == ONE:
        return False
    return a.vars <= b.vars


# ---------------------------------------------------------------------------
# Types.


class Type:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class TVar(Type):
    name: str


@dataclass(frozen=True, slots=True)
class TInt(Type):
    pass


@dataclass(frozen=True, slots=True)
class TLinearly(Type):
    pass


@dataclass(frozen=True, slots=True)
class TFun(Type):
    arg: Type
    mult: Mult
    res: Type


@dataclass(frozen=True, slots=True)
class TData(Type):
    name: str
    args: tuple


@dataclass(frozen=True, slots=True)
class TRef(Type):
    body: Type


@dataclass(frozen=True, slots=True)
class TNow(Type):
    life: Lifetime


@dataclass(frozen=True, slots=True)
class TEnd(Type):
    life: Lifetime


@dataclass(frozen=True, slots=True)
class TMut(Type):
    life: Lifetime
    body: Type


@dataclass(frozen=True, slots=True)
class TShare(Type):
    life: Lifetime
    body: Type


@dataclass(frozen=True, slots=True)
class TLend(Type):
    life: Lifetime
    body: Type


@dataclass(frozen=True, slots=True)
class TBO(Type):
    life: Lifetime
    body: Type


@dataclass(frozen=True, slots=True)
class TForall(Type):
    kind: str  # "life" | "lifeid" | "mult" | "type"
    name: str
    body: Type


INT = TInt()
LINEARLY = TLinearly()
UNIT = TData("()", ())
BOOL = TData("Bool", ())


def t_pair(a: Type, b: Type) -> Type:
    return TData("(,)", (a, b))


def t_ur(a: Type) -> Type:
    return TData("Ur", (a,))


# ---------------------------------------------------------------------------
# Substitution over types (for instantiation and data-field templates).
# Mapping keys: ("type", name) -> Type; ("life", name) -> Lifetime (for both
# lifetime variables and lifetime identifiers); ("mult", name) -> Mult.


def subst_type(t: Type, mapping: dict) -> Type:
    if isinstance(t, TVar):
        return mapping.get(("type", t.name), t)
    if isinstance(t, (TInt, TLinearly)):
        return t
    if isinstance(t, TFun):
        return TFun(subst_type(t.arg, mapping), subst_mult(t.mult, mapping), subst_type(t.res, mapping))
    if isinstance(t, TData):
        return TData(t.name, tuple(subst_type(a, mapping) for a in t.args))
    if isinstance(t, TRef):
        return TRef(subst_type(t.body, mapping))
    if isinstance(t, TNow):
        return TNow(subst_life(t.life, mapping))
    if isinstance(t, TEnd):
        return TEnd(subst_life(t.life, mapping))
    if isinstance(t, TMut):
        return TMut(subst_life(t.life, mapping), subst_type(t.body, mapping))
    if isinstance(t, TShare):
        return TShare(subst_life(t.life, mapping), subst_type(t.body, mapping))
    if isinstance(t, TLend):
        return TLend(subst_life(t.life, mapping), subst_type(t.body, mapping))
    if isinstance(t, TBO):
        return TBO(subst_life(t.life, mapping), subst_type(t.body, mapping))
    if isinstance(t, TForall):
        key = _forall_key(t.kind, t.name)
        inner = {k: v for k, v in mapping.items() if k != key}
        return TForall(t.kind, t.name, subst_type(t.body, inner))
    raise TypeError(f"not a type: {t!r}")


def _forall_key(kind, name):
    if kind == "life":
        return ("life", name)
    if kind == "lifeid":
        return ("lifeid", name)
    if kind == "mult":
        return ("mult", name)
    return ("type", name)


def subst_life(l: Lifetime, mapping: dict) -> Lifetime:
    atoms = set()
    for kind, name in l.atoms:
        rep = mapping.get(("life", name)) if kind == "var" else mapping.get(("lifeid", name))
        if rep is None and kind == "var":
            rep = None
        if rep is not None:
            atoms |= rep.atoms
        else:
            atoms.add((kind, name))
    return Lifetime(frozenset(atoms))


def subst_mult(m: Mult, mapping: dict) -> Mult:
    if m.many:
        return MANY
    out = ONE
    for v in m.vars:
        rep = mapping.get(("mult", v))
        out = mult_mul(out, rep if rep is not None else mult_var(v))
    return out


def free_type_names(t: Type) -> set:
    """All (kind, name) schematic names occurring in t."""
    out = set()

    def life(l):
        for kind, name in l.atoms:
            out.add(("life", name) if kind == "var" else ("lifeid", name))

    def go(t):
        if isinstance(t, TVar):
            out.add(("type", t.name))
        elif isinstance(t, TFun):
            go(t.arg)
            go(t.res)
            for v in t.mult.vars:
                out.add(("mult", v))
        elif isinstance(t, TData):
            for a in t.args:
                go(a)
        elif isinstance(t, TRef):
            go(t.body)
        elif isinstance(t, (TNow, TEnd)):
            life(t.life)
        elif isinstance(t, (TMut, TShare, TLend, TBO)):
            life(t.life)
            go(t.body)
        elif isinstance(t, TForall):
            go(t.body)

    go(t)
    return out


# ---------------------------------------------------------------------------
# Typing contexts.


class ContextError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True, slots=True)
class Context:
    entries: tuple  # of (name, Mult, Type); names distinct

    def lookup(self, name):
        for n, m, t in self.entries:
            if n == name:
                return (m, t)
        return None

    def names(self):
        return [n for n, _, _ in self.entries]


def ctx_scale(mu: Mult, ctx: Context) -> Context:
    return Context(tuple((n, mult_mul(mu, m), t) for n, m, t in ctx.entries))


def ctx_add(a: Context, b: Context) -> Context:
    out = list(a.entries)
    index = {n: i for i, (n, _, _) in enumerate(out)}
    for n, m, t in b.entries:
        if n in index:
            n0, m0, t0 = out[index[n]]
            if m0 != MANY or m != MANY or t0 != t:
                raise ContextError(
                    "LinearShared",
                    f"variable {n} shared between contexts without unrestricted use",
                )
        else:
            index[n] = len(out)
            out.append((n, m, t))
    return Context(tuple(out))


def ctx_include(small: Context, big: Context, decls, subtype=None) -> bool:
    """small is obtainable from big by dropping unrestricted entries and
    weakening multiplicities / subtyping entry types."""
    if subtype is None:
        subtype = is_subtype
    small_map = {n: (m, t) for n, m, t in small.entries}
    if len(small_map) != len(small.entries):
        return False
    seen = set()
    for n, m, t in big.entries:
        got = small_map.get(n)
        if got is None:
            if not mult_leq(MANY, m) and m != MANY:
                # a dropped entry must be unrestricted
                return False
            continue
        seen.add(n)
        m_s, t_s = got
        if not mult_leq(m_s, m):
            return False
        if not subtype(t, t_s, decls):
            return False
    return seen == set(small_map)


# ---------------------------------------------------------------------------
# Subtyping.
#
# The relation is checked coinductively: when a (data, data) goal repeats we
# assume it holds, which gives the greatest fixed point over the field
# templates of recursive data declarations.


def is_subtype(a: Type, b: Type, decls: dict) -> bool:
    return _sub(a, b, decls, set())


def _sub(a, b, decls, visiting):
    if a == b:
        return True
    if isinstance(b, TForall):
        # generalize: the bound name must not be pinned by a
        if _forall_key(b.kind, b.name) in _keys(free_type_names(a)):
            return False
        return _sub(a, b.body, decls, visiting)
    if isinstance(a, TForall) and not isinstance(b, TForall):
        # instantiate the outer binder with each plausible witness is
        # undecidable in general; accept only the trivial instantiation of
        # a variable by the corresponding structure found in b.
        return _sub_inst(a, b, decls, visiting)
    if isinstance(a, TVar) or isinstance(b, TVar):
        return a == b
    if isinstance(a, TInt) and isinstance(b, TInt):
        return True
    if isinstance(a, TLinearly) and isinstance(b, TLinearly):
        return True
    if isinstance(a, TFun) and isinstance(b, TFun):
        return (
            _sub(b.arg, a.arg, decls, visiting)
            and mult_leq(a.mult, b.mult)
            and _sub(a.res, b.res, decls, visiting)
        )
    if isinstance(a, TData) and isinstance(b, TData):
        if a.name != b.name or len(a.args) != len(b.args):
            return False
        goal = (a, b)
        if goal in visiting:
            return True
        decl = decls.get(a.name)
        if decl is None:
            return a == b
        visiting = visiting | {goal}
        sub_a = {("type", p): arg for p, arg in zip(decl.params, a.args)}
        sub_b = {("type", p): arg for p, arg in zip(decl.params, b.args)}
        for _, fields in decl.constructors:
            for _, ft in fields:
                if not _sub(subst_type(ft, sub_a), subst_type(ft, sub_b), decls, visiting):
                    return False
        return True
    if isinstance(a, TRef) and isinstance(b, TRef):
        return _sub(a.body, b.body, decls, visiting)
    if isinstance(a, TNow) and isinstance(b, TNow):
        return a.life == b.life
    if isinstance(a, TEnd) and isinstance(b, TEnd):
        return lifetime_leq(b.life, a.life)
    if isinstance(a, TMut) and isinstance(b, TMut):
        return lifetime_leq(b.life, a.life) and a.body == b.body
    if isinstance(a, TShare) and isinstance(b, TShare):
        return lifetime_leq(b.life, a.life) and _sub(a.body, b.body, decls, visiting)
    if isinstance(a, TBO) and isinstance(b, TBO):
        return lifetime_leq(b.life, a.life) and _sub(a.body, b.body, decls, visiting)
    if isinstance(a, TLend) and isinstance(b, TLend):
        return lifetime_leq(a.life, b.life) and _sub(a.body, b.body, decls, visiting)
    return False


def _keys(names):
    out = set()
    for kind, name in names:
        if kind == "lifeid":
            out.add(("lifeid", name))
        else:
            out.add((kind, name))
    return out


def _sub_inst(a: TForall, b, decls, visiting):
    """Try instantiating the quantifier of a so the bodies line up.

    Witnesses are searched among the structural pieces of b, which suffices
    for the shapes produced by the checker.
    """
    candidates = []
    if a.kind in ("life", "lifeid"):
        candidates = [STATIC] + [Lifetime(frozenset((atom,))) for atom in _lifetime_atoms(b)]
        key = ("life", a.name) if a.kind == "life" else ("lifeid", a.name)
    elif a.kind == "mult":
        candidates = [ONE, MANY]
        key = ("mult", a.name)
    else:
        candidates = list(_type_pieces(b))
        key = ("type", a.name)
    for cand in candidates:
        if _sub(subst_type(a.body, {key: cand}), b, decls, visiting):
            return True
    return False


def _lifetime_atoms(t):
    out = set()

    def go(t):
        if isinstance(t, (TNow, TEnd)):
            out.update(t.life.atoms)
        elif isinstance(t, (TMut, TShare, TLend, TBO)):
            out.update(t.life.atoms)
            go(t.body)
        elif isinstance(t, TFun):
            go(t.arg)
            go(t.res)
        elif isinstance(t, TData):
            for a in t.args:
                go(a)
        elif isinstance(t, (TRef, TForall)):
            go(t.body)

    go(t)
    return out


def _type_pieces(t, depth=0):
    if depth > 3:
        return
    yield t
    if isinstance(t, TFun):
        yield from _type_pieces(t.arg, depth + 1)
        yield from _type_pieces(t.res, depth + 1)
    elif isinstance(t, TData):
        for a in t.args:
            yield from _type_pieces(a, depth + 1)
    elif isinstance(t, (TRef, TMut, TShare, TLend, TBO, TForall)):
        yield from _type_pieces(t.body, depth + 1)
