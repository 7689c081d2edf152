"""Lexer and recursive-descent parser for .pbo source files."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import terms, ty
from .terms import (
    Ann,
    App,
    Case,
    ConApp,
    DataDecl,
    Gen,
    Inst,
    IntLit,
    Lam,
    Let,
    MonApp,
    OpApp,
    Program,
    Seq,
    Var,
)


class ParseError(Exception):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col

    def diagnostic(self):
        return {
            "code": "ParseError",
            "message": self.message,
            "span": {"line": self.line, "col": self.col},
        }


KEYWORDS = {
    "data", "where", "let", "let1", "and", "in", "case", "of", "forall",
} | set(terms.OPERATORS) | set(terms.MONAD_CONSTRUCTORS)

TYPE_KEYWORDS = {"Int", "Linearly", "Ref", "Now", "End", "Mut", "Share", "Lend", "BO"}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>--[^\n]*)
    | (?P<arrowm>->\{)
    | (?P<arrow>->)
    | (?P<lolli>-o)
    | (?P<instopen>@\[)
    | (?P<int>-?\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    | (?P<life>'[A-Za-z_][A-Za-z0-9_]*)
    | (?P<lifeid>\^[A-Za-z0-9_]+)
    | (?P<multvar>%[A-Za-z_][A-Za-z0-9_]*)
    | (?P<tyvar>\#[A-Za-z_][A-Za-z0-9_]*)
    | (?P<sym>[()\[\]{},;.:|=\\&*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str):
    out = []
    line, col = 1, 1
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            out.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead=0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def err(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(self, text):
        t = self.next()
        if t.text != text:
            self.err(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def at(self, text):
        return self.peek().text == text

    def at_ident(self, text=None):
        t = self.peek()
        return t.kind == "ident" and (text is None or t.text == text)

    # -- programs -----------------------------------------------------------

    def parse_program(self) -> Program:
        decls = list(terms.default_data_decls())
        names = {d.name for d in decls}
        cons = {c for d in decls for c, _ in d.constructors}
        while self.at_ident("data"):
            d = self.parse_data_decl()
            if d.name in names:
                self.err(f"duplicate data declaration {d.name!r}")
            names.add(d.name)
            for c, _ in d.constructors:
                if c in cons:
                    self.err(f"duplicate constructor {c!r}")
                cons.add(c)
            for c, fields in d.constructors:
                for _, ft in fields:
                    for kind, n in ty.free_type_names(ft):
                        if kind == "type" and n not in d.params:
                            self.err(
                                f"constructor {c!r} mentions undeclared "
                                f"type variable #{n}"
                            )
            decls.append(d)
        body = self.parse_term()
        t = self.peek()
        if t.kind != "eof":
            self.err(f"unexpected input after program body: {t.text!r}", t)
        prog = Program(tuple(decls), body)
        self._validate(prog)
        return prog

    def parse_data_decl(self) -> DataDecl:
        self.expect("data")
        name_tok = self.next()
        if name_tok.kind != "ident" or not name_tok.text[0].isupper():
            self.err("data declaration needs a capitalized name", name_tok)
        params = []
        while self.peek().kind == "tyvar":
            params.append(self.next().text[1:])
        self.expect("where")
        self.expect("{")
        cons = []
        while True:
            con_tok = self.next()
            if con_tok.kind != "ident" or not con_tok.text[0].isupper():
                self.err("constructor needs a capitalized name", con_tok)
            fields = []
            while not self.at("|") and not self.at("}"):
                m = self.parse_mult()
                self.expect(":")
                fields.append((m, self.parse_type_atom()))
            cons.append((con_tok.text, tuple(fields)))
            if self.at("|"):
                self.next()
                continue
            break
        self.expect("}")
        return DataDecl(name_tok.text, tuple(params), tuple(cons))

    def _validate(self, prog: Program):
        """Constructor applications must be saturated and declared."""
        cons = prog.con_map()

        def go(t):
            if isinstance(t, ConApp):
                got = cons.get(t.con)
                if got is None:
                    self.err(f"unknown constructor {t.con!r}")
                _, fields = got
                if len(t.args) != len(fields):
                    self.err(
                        f"constructor {t.con} expects {len(fields)} arguments, got {len(t.args)}"
                    )
                for a in t.args:
                    go(a)
            elif isinstance(t, Case):
                go(t.scrutinee)
                for con, binders, body in t.branches:
                    got = cons.get(con)
                    if got is None:
                        self.err(f"unknown constructor {con!r} in pattern")
                    _, fields = got
                    if len(binders) != len(fields):
                        self.err(
                            f"pattern {con} expects {len(fields)} binders, got {len(binders)}"
                        )
                    go(body)
            elif isinstance(t, Lam):
                go(t.body)
            elif isinstance(t, App):
                go(t.fn)
                go(t.arg)
            elif isinstance(t, Let):
                for _, _, rhs in t.bindings:
                    go(rhs)
                go(t.body)
            elif isinstance(t, Seq):
                go(t.body)
            elif isinstance(t, (OpApp, MonApp)):
                for a in t.args:
                    go(a)
            elif isinstance(t, (Gen,)):
                go(t.body)
            elif isinstance(t, Inst):
                go(t.term)
            elif isinstance(t, Ann):
                go(t.term)

        go(prog.body)

    # -- terms ---------------------------------------------------------------

    def parse_term(self):
        t = self.peek()
        if t.text == "\\":
            return self.parse_lam()
        if t.kind == "ident" and t.text in ("let", "let1"):
            return self.parse_let()
        if t.kind == "ident" and t.text == "case":
            return self.parse_case()
        if t.kind == "ident" and t.text == "forall":
            return self.parse_gen()
        return self.parse_app_term()

    def parse_lam(self):
        self.expect("\\")
        ann = None
        if self.at("("):
            self.next()
            p = self.next()
            if p.kind != "ident":
                self.err("expected a parameter name", p)
            self.expect(":")
            m = self.parse_mult()
            t = self.parse_type()
            self.expect(")")
            ann = (m, t)
            param = p.text
        else:
            p = self.next()
            if p.kind != "ident" or p.text in KEYWORDS:
                self.err("expected a parameter name", p)
            param = p.text
        self.expect(".")
        return Lam(param, self.parse_term(), ann)

    def parse_let(self):
        kw = self.next().text
        bindings = [self.parse_binding()]
        while self.at_ident("and"):
            self.next()
            bindings.append(self.parse_binding())
        names = [n for n, _, _ in bindings]
        if len(set(names)) != len(names):
            self.err("duplicate name in binding group")
        self.expect("in")
        return Let(kw == "let1", tuple(bindings), self.parse_term())

    def parse_binding(self):
        n = self.next()
        if n.kind != "ident" or n.text in KEYWORDS:
            self.err("expected a variable name", n)
        ann = None
        if self.at(":"):
            self.next()
            ann = self.parse_type()
        self.expect("=")
        return (n.text, ann, self.parse_term())

    def parse_case(self):
        self.expect("case")
        scrut = self.parse_term()
        self.expect("of")
        self.expect("{")
        branches = [self.parse_branch()]
        while self.at("|"):
            self.next()
            branches.append(self.parse_branch())
        self.expect("}")
        return Case(scrut, tuple(branches))

    def parse_branch(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            if self.at(")"):
                self.next()
                con, binders = "()", ()
            else:
                x = self.next()
                self.expect(",")
                y = self.next()
                self.expect(")")
                if x.kind != "ident" or y.kind != "ident":
                    self.err("expected binder names in pair pattern", x)
                con, binders = "(,)", (x.text, y.text)
        else:
            c = self.next()
            if c.kind != "ident" or not c.text[0].isupper():
                self.err("expected a constructor pattern", c)
            con = c.text
            names = []
            while self.at_ident() and not self.at("->"):
                b = self.peek()
                if b.text in KEYWORDS or b.text[0].isupper():
                    break
                names.append(self.next().text)
            binders = tuple(names)
        self.expect("->")
        return (con, binders, self.parse_term())

    def parse_gen(self):
        self.expect("forall")
        t = self.next()
        if t.kind == "life":
            if t.text == "'static":
                self.err("cannot generalize the static lifetime", t)
            kind, name = "life", t.text[1:]
        elif t.kind == "lifeid":
            kind, name = "lifeid", t.text[1:]
        elif t.kind == "multvar":
            kind, name = "mult", t.text[1:]
        elif t.kind == "tyvar":
            kind, name = "type", t.text[1:]
        else:
            self.err("expected a lifetime, multiplicity, or type binder", t)
        self.expect(".")
        return Gen(kind, name, self.parse_term())

    def parse_app_term(self):
        head = self.parse_atom()
        # seq is available only after a bare variable
        if isinstance(head, Var) and self.at(";"):
            self.next()
            return Seq(head.name, self.parse_term())
        while True:
            if self.peek().kind == "instopen":
                head = self._attach_inst(head)
                continue
            if self._starts_atom():
                arg = self.parse_atom()
                if isinstance(head, ConApp) and not head.args:
                    self.err("constructors must be applied in one saturated group")
                head = App(head, arg)
                continue
            break
        return head

    def _starts_atom(self):
        t = self.peek()
        if t.kind in ("int", "life", "lifeid"):
            return t.kind == "int"
        if t.kind == "ident":
            return t.text not in (
                "in", "and", "of", "where", "data", "let", "let1", "case", "forall",
            ) or t.text in terms.OPERATORS or t.text in terms.MONAD_CONSTRUCTORS
        return t.text == "("

    def _attach_inst(self, head):
        args = self.parse_inst_args()
        if isinstance(head, (OpApp, MonApp)) and not head.inst:
            self.err("instantiation must come before operator arguments")
        return Inst(head, args)

    def parse_inst_args(self):
        self.next()  # @[
        args = []
        if not self.at("]"):
            args.append(self.parse_inst_arg())
            while self.at(","):
                self.next()
                args.append(self.parse_inst_arg())
        self.expect("]")
        return tuple(args)

    def parse_inst_arg(self):
        t = self.peek()
        if t.kind == "ident" and t.text == "_":
            self.next()
            return None
        if t.kind in ("life", "lifeid"):
            return self.parse_lifetime()
        if t.kind == "multvar" or t.text in ("1", "*"):
            return self.parse_mult()
        return self.parse_type()

    def parse_atom(self):
        t = self.peek()
        if t.kind == "int":
            return IntLit(int(self.next().text))
        if t.text == "(":
            return self.parse_parens()
        if t.text == "\\":
            self.err("a lambda used as an argument must be parenthesized")
        if t.kind == "ident":
            name = t.text
            if name in terms.OPERATORS or name in terms.MONAD_CONSTRUCTORS:
                return self.parse_op_app()
            if name[0].isupper():
                return self.parse_con_app()
            if name in KEYWORDS:
                self.err(f"unexpected keyword {name!r}", t)
            self.next()
            return Var(name)
        self.err(f"unexpected token {t.text or 'end of input'!r}", t)

    def parse_op_app(self):
        t = self.next()
        name = t.text
        is_op = name in terms.OPERATORS
        arity = terms.OPERATORS.get(name) or terms.MONAD_CONSTRUCTORS[name]
        inst = ()
        if self.peek().kind == "instopen":
            inst = self.parse_inst_args()
        args = []
        for _ in range(arity):
            if not self._starts_atom():
                self.err(f"operator {name} expects {arity} arguments, got {len(args)}", t)
            args.append(self.parse_atom())
        cls = OpApp if is_op else MonApp
        key = "op" if is_op else "mo"
        return cls(**{key: name, "args": tuple(args), "inst": inst})

    def parse_con_app(self):
        t = self.next()
        args = []
        while self._starts_atom():
            args.append(self.parse_atom())
        return ConApp(t.text, tuple(args))

    def parse_parens(self):
        self.expect("(")
        if self.at(")"):
            self.next()
            return ConApp("()", ())
        inner = self.parse_term()
        if self.at(","):
            self.next()
            second = self.parse_term()
            self.expect(")")
            return ConApp("(,)", (inner, second))
        if self.at(":"):
            self.next()
            t = self.parse_type()
            self.expect(")")
            return Ann(inner, t)
        self.expect(")")
        return inner

    # -- types ---------------------------------------------------------------

    def parse_type(self):
        if self.at_ident("forall"):
            self.next()
            t = self.next()
            if t.kind == "life":
                kind, name = "life", t.text[1:]
            elif t.kind == "lifeid":
                kind, name = "lifeid", t.text[1:]
            elif t.kind == "multvar":
                kind, name = "mult", t.text[1:]
            elif t.kind == "tyvar":
                kind, name = "type", t.text[1:]
            else:
                self.err("expected a binder after forall", t)
            self.expect(".")
            return ty.TForall(kind, name, self.parse_type())
        left = self.parse_type_app()
        t = self.peek()
        if t.kind == "lolli":
            self.next()
            return ty.TFun(left, ty.ONE, self.parse_type())
        if t.kind == "arrow":
            self.next()
            return ty.TFun(left, ty.MANY, self.parse_type())
        if t.kind == "arrowm":
            self.next()
            m = self.parse_mult()
            self.expect("}")
            return ty.TFun(left, m, self.parse_type())
        return left

    def parse_type_app(self):
        t = self.peek()
        if t.kind == "ident":
            name = t.text
            if name == "Ref":
                self.next()
                return ty.TRef(self.parse_type_atom())
            if name == "Now":
                self.next()
                return ty.TNow(self.parse_lifetime())
            if name == "End":
                self.next()
                return ty.TEnd(self.parse_lifetime())
            if name in ("Mut", "Share", "Lend", "BO"):
                self.next()
                life = self.parse_lifetime()
                body = self.parse_type_atom()
                cls = {"Mut": ty.TMut, "Share": ty.TShare, "Lend": ty.TLend, "BO": ty.TBO}[name]
                return cls(life, body)
            if name not in ("Int", "Linearly") and name[0].isupper():
                self.next()
                args = []
                while self._starts_type_atom():
                    args.append(self.parse_type_atom())
                return ty.TData(name, tuple(args))
        return self.parse_type_atom()

    def _starts_type_atom(self):
        t = self.peek()
        if t.kind == "tyvar":
            return True
        if t.text == "(":
            return True
        return t.kind == "ident" and t.text[0].isupper()

    def parse_type_atom(self):
        t = self.peek()
        if t.kind == "tyvar":
            self.next()
            return ty.TVar(t.text[1:])
        if t.text == "(":
            self.next()
            if self.at(")"):
                self.next()
                return ty.UNIT
            inner = self.parse_type()
            if self.at(","):
                self.next()
                second = self.parse_type()
                self.expect(")")
                return ty.t_pair(inner, second)
            self.expect(")")
            return inner
        if t.kind == "ident":
            name = t.text
            if name == "Int":
                self.next()
                return ty.INT
            if name == "Linearly":
                self.next()
                return ty.LINEARLY
            if name in ("Ref", "Now", "End", "Mut", "Share", "Lend", "BO"):
                return self.parse_type_app()
            if name[0].isupper():
                self.next()
                return ty.TData(name, ())
        self.err(f"expected a type, found {t.text or 'end of input'!r}", t)

    def parse_lifetime(self):
        parts = [self.parse_lifetime_atom()]
        while self.at("&"):
            self.next()
            parts.append(self.parse_lifetime_atom())
        out = parts[0]
        for p in parts[1:]:
            out = ty.life_meet(out, p)
        return out

    def parse_lifetime_atom(self):
        if self.at("("):
            self.next()
            out = self.parse_lifetime()
            self.expect(")")
            return out
        t = self.next()
        if t.kind == "life":
            if t.text == "'static":
                return ty.STATIC
            return ty.life_var(t.text[1:])
        if t.kind == "lifeid":
            return ty.life_atom(t.text[1:])
        self.err("expected a lifetime", t)

    def parse_mult(self):
        t = self.next()
        if t.text == "1":
            return ty.ONE
        if t.text == "*":
            return ty.MANY
        if t.kind == "multvar":
            return ty.mult_var(t.text[1:])
        self.err("expected a multiplicity (1, *, or %var)", t)


def parse_program(src: str) -> Program:
    return Parser(src).parse_program()


def parse_term(src: str):
    p = Parser(src)
    t = p.parse_term()
    if p.peek().kind != "eof":
        p.err("unexpected input after term")
    return t


def parse_type(src: str):
    p = Parser(src)
    t = p.parse_type()
    if p.peek().kind != "eof":
        p.err("unexpected input after type")
    return t
