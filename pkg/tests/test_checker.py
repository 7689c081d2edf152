"""Type checker: positive judgments, negative error classes, operator
instantiation, and usage accounting."""

import pytest

from pureborrow import check, corpus, parser
from pureborrow.check import PboTypeError, type_check
from pureborrow.ty import INT, MANY, ONE, TFun, TInt


def chk(src: str):
    return type_check(parser.parse_program(src))


def fails_with(src: str, code: str):
    with pytest.raises(PboTypeError) as e:
        chk(src)
    assert e.value.code == code, e.value


def test_basic_synthesis():
    assert chk("1") == INT
    assert chk("add 1 2") == INT
    assert chk("let1 x = 1 in x") == INT
    assert chk("(\\(x :1 Int). x) 3") == INT
    assert chk("case (1, 2) of { (a, b) -> add a b }") == INT
    assert chk("case le 1 2 of { True -> 1 | False -> 0 }") == INT


def test_lambda_annotations():
    t = chk("\\(x :1 Int). x")
    assert t == TFun(INT, ONE, INT)
    fails_with("\\x. x", "Mismatch")  # no annotation, nothing to check against
    assert chk("(\\x. x : Int -> Int)") == TFun(INT, MANY, INT)
    # a linear-argument function may stand in for an unrestricted one,
    # but not the other way around
    assert chk("((\\(x :1 Int). x) : Int -> Int)") == TFun(INT, MANY, INT)
    fails_with("((\\(x :* Int). add x x) : Int -o Int)", "Mismatch")


def test_linearity_violations():
    fails_with("let1 x = 1 in par x x", "LinearUsedTwice")
    fails_with("let1 x = 1 in 2", "LinearUnused")
    fails_with("\\(x :1 Int). 0", "LinearUnused")
    fails_with("\\(x :1 Int). add x x", "LinearUsedTwice")
    # unrestricted bindings may be dropped or duplicated
    assert chk("let f : Int -> Int = \\x. f x in 1") == INT
    assert chk("(\\x. add x x : Int -> Int)") == TFun(INT, MANY, INT)


def test_case_branch_usage_must_agree():
    fails_with(
        "let1 x = 1 in case le 0 0 of { True -> x | False -> 1 }",
        "LinearUsedTwice",
    )
    assert chk("let1 x = 1 in case le 0 0 of { True -> x | False -> x }") == INT


def test_seq_requires_bound_variable():
    fails_with("x ; 1", "UnboundVariable")
    assert chk("let f : Int = 1 in f ; f") == INT


def test_unbound_variable():
    fails_with("y", "UnboundVariable")
    fails_with("add 1 z", "UnboundVariable")


def test_recursive_let_needs_annotation():
    fails_with("let f = \\x. f x in 1", "Mismatch")


def test_operator_instantiation():
    # explicit instantiation
    assert chk("linearly @[Int] (\\(li :1 Linearly). case consume li of { () -> move 1 })")
    # inferred from the expected type flowing through check mode
    fails_with("linearly (\\li. case consume li of { () -> move 1 })", "Mismatch")
    # wrong kind of instantiation argument
    fails_with("linearly @['a] (\\(li :1 Linearly). move 1)", "Mismatch")


def test_side_conditions():
    # consume applies only to linearity witnesses and mutable borrowers
    fails_with(
        "linearly @[Int] (\\(li :1 Linearly). case consume 5 of { () -> "
        "case consume li of { () -> move 1 } })",
        "SideConditionFailed",
    )
    # move duplicates only integers, dead tokens, and shared borrowers
    fails_with(
        "linearly @[Linearly -o ()] (\\(li :1 Linearly). move (\\(x :1 Linearly). consume x))",
        "SideConditionFailed",
    )


def test_token_protocol():
    # a full lifetime round trip checks
    src = """
    case linearly @[Int] (\\(li :1 Linearly).
      case withLinearly li of { (li2, li1) ->
      newLifetime li1 (forall ^t. \\(now :1 Now ^t).
        let1 x = 9 in
        case borrow @[^t] li2 x of { (m, l) ->
        case consume m of { () ->
        case endLifetime now of { Ur e ->
        move (reclaim l e) } } } ) } )
    of { Ur n -> n }
    """
    assert chk(src) == INT


def test_corpus_expectations():
    for e in corpus.entries():
        prog = parser.parse_program(e.source())
        if e.check == "ok":
            type_check(prog)
        else:
            with pytest.raises(PboTypeError) as exc:
                type_check(prog)
            assert exc.value.code == e.check, e.name


def test_diagnostic_shape():
    try:
        chk("y")
    except PboTypeError as e:
        d = e.diagnostic()
        assert set(d) == {"code", "message", "span"}
        assert d["code"] == "UnboundVariable"
