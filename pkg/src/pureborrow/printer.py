"""Pretty-printing of terms and types back to surface syntax."""

from __future__ import annotations

from . import terms, ty
from .terms import (
    Ann, App, Case, ConApp, Gen, Inst, IntLit, Lam, Let, MonApp, OpApp,
    Program, Seq, Var,
)


def show_mult(m: ty.Mult) -> str:
    if m == ty.ONE:
        return "1"
    if m == ty.MANY:
        return "*"
    return "*".join(f"%{v}" for v in sorted(m.vars))


def show_lifetime(l: ty.Lifetime) -> str:
    if not l.atoms:
        return "'static"
    parts = []
    for kind, name in sorted(l.atoms):
        parts.append(f"^{name}" if kind == "id" else f"'{name}")
    return " & ".join(parts)


_BINDER_SIGIL = {"life": "'", "lifeid": "^", "mult": "%", "type": "#"}


def show_type(t: ty.Type, prec: int = 0) -> str:
    if isinstance(t, ty.TVar):
        return f"#{t.name}"
    if isinstance(t, ty.TInt):
        return "Int"
    if isinstance(t, ty.TLinearly):
        return "Linearly"
    if isinstance(t, ty.TForall):
        s = f"forall {_BINDER_SIGIL[t.kind]}{t.name}. {show_type(t.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, ty.TFun):
        if t.mult == ty.ONE:
            arrow = "-o"
        elif t.mult == ty.MANY:
            arrow = "->"
        else:
            arrow = f"->{{{show_mult(t.mult)}}}"
        s = f"{show_type(t.arg, 2)} {arrow} {show_type(t.res, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(t, ty.TData):
        if t.name == "()":
            return "()"
        if t.name == "(,)":
            return f"({show_type(t.args[0])}, {show_type(t.args[1])})"
        if not t.args:
            return t.name
        s = t.name + "".join(f" {show_type(a, 3)}" for a in t.args)
        return f"({s})" if prec > 2 else s
    if isinstance(t, ty.TRef):
        s = f"Ref {show_type(t.body, 3)}"
        return f"({s})" if prec > 2 else s
    if isinstance(t, ty.TNow):
        s = f"Now {show_lifetime(t.life)}"
        return f"({s})" if prec > 2 else s
    if isinstance(t, ty.TEnd):
        s = f"End {show_lifetime(t.life)}"
        return f"({s})" if prec > 2 else s
    for cls, name in ((ty.TMut, "Mut"), (ty.TShare, "Share"), (ty.TLend, "Lend"), (ty.TBO, "BO")):
        if isinstance(t, cls):
            s = f"{name} {show_lifetime(t.life)} {show_type(t.body, 3)}"
            return f"({s})" if prec > 2 else s
    raise TypeError(f"not a type: {t!r}")


def _show_inst_arg(a) -> str:
    if a is None:
        return "_"
    if isinstance(a, ty.Lifetime):
        return show_lifetime(a)
    if isinstance(a, ty.Mult):
        return show_mult(a)
    return show_type(a)


def show_term(t: terms.Term, prec: int = 0) -> str:
    """Precedence: 0 open, 1 application head/argument position, 2 atom."""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntLit):
        return f"({t.value})" if t.value < 0 and prec >= 1 else str(t.value)
    if isinstance(t, Lam):
        if t.ann is not None:
            m, a = t.ann
            s = f"\\({t.param} :{show_mult(m)} {show_type(a)}). {show_term(t.body)}"
        else:
            s = f"\\{t.param}. {show_term(t.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, App):
        s = f"{show_term(t.fn, 1)} {show_term(t.arg, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(t, Let):
        kw = "let1" if t.linear else "let"
        parts = []
        for n, ann, rhs in t.bindings:
            a = f" : {show_type(ann)}" if ann is not None else ""
            parts.append(f"{n}{a} = {show_term(rhs)}")
        s = f"{kw} " + " and ".join(parts) + f" in {show_term(t.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, Seq):
        s = f"{t.forced} ; {show_term(t.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, ConApp):
        if t.con == "()":
            return "()"
        if t.con == "(,)":
            return f"({show_term(t.args[0])}, {show_term(t.args[1])})"
        if not t.args:
            return t.con
        s = t.con + "".join(f" {show_term(a, 2)}" for a in t.args)
        return f"({s})" if prec > 1 else s
    if isinstance(t, Case):
        branches = []
        for con, binders, body in t.branches:
            if con == "(,)":
                pat = f"({binders[0]}, {binders[1]})"
            elif con == "()":
                pat = "()"
            else:
                pat = con + "".join(f" {b}" for b in binders)
            branches.append(f"{pat} -> {show_term(body)}")
        s = f"case {show_term(t.scrutinee)} of {{ " + " | ".join(branches) + " }"
        return f"({s})" if prec > 0 else s
    if isinstance(t, (OpApp, MonApp)):
        name = t.op if isinstance(t, OpApp) else t.mo
        inst = f" @[{', '.join(_show_inst_arg(a) for a in t.inst)}]" if t.inst else ""
        s = name + inst + "".join(f" {show_term(a, 2)}" for a in t.args)
        if not t.args and not inst:
            return name
        return f"({s})" if prec > 1 else s
    if isinstance(t, Gen):
        s = f"forall {_BINDER_SIGIL[t.kind]}{t.name}. {show_term(t.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, Inst):
        s = f"{show_term(t.term, 2)} @[{', '.join(_show_inst_arg(a) for a in t.args)}]"
        return f"({s})" if prec > 1 else s
    if isinstance(t, Ann):
        return f"({show_term(t.term)} : {show_type(t.type)})"
    raise TypeError(f"not a term: {t!r}")


def show_program(p: Program) -> str:
    lines = []
    defaults = terms.DEFAULT_TYPE_NAMES
    for d in p.data_decls:
        if d.name in defaults:
            continue
        cons = []
        for con, fields in d.constructors:
            fs = "".join(f" {show_mult(m)}:{show_type(ft, 3)}" for m, ft in fields)
            cons.append(f"{con}{fs}")
        params = "".join(f" #{v}" for v in d.params)
        lines.append(f"data {d.name}{params} where {{ " + " | ".join(cons) + " }")
    lines.append(show_term(p.body))
    return "\n".join(lines) + "\n"
