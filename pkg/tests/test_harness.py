"""Schedulers, reduction graphs, property checkers, and differential testing
of the two semantics on randomly generated borrow/update programs."""

import random

import pytest

from pureborrow import check, harness, parser
from pureborrow.harness import make_scheduler, run

N_DIFFERENTIAL = 120


def body(src):
    return parser.parse_program(src).body


def test_schedulers_cover_choices():
    for name in ("random", "first", "last", "round-robin"):
        s = make_scheduler(name, seed=3)
        picks = [s.pick(4) for _ in range(8)]
        assert all(0 <= p < 4 for p in picks)
    s = make_scheduler("scripted", script=(0, 1, 0))
    assert [s.pick(5), s.pick(5), s.pick(5)] == [0, 1, 0]
    with pytest.raises(ValueError):
        make_scheduler("unknown")


def test_reduction_graph_dedup_and_depth():
    g = harness.reduction_graph(body("add 1 2"), "mut", depth=50)
    assert not g.truncated
    assert len(g.nodes) == len(g.keys)
    assert all(0 <= d <= 50 for d in g.depth.values())


def test_reduction_graph_cap():
    src = "case par (add 1 2) (add 3 4) of { (a, b) -> add a b }"
    with pytest.raises(harness.ExplosionAbort):
        harness.reduction_graph(body(src), "mut", depth=30, cap=2)


def test_node_cap_env_override(monkeypatch):
    monkeypatch.setenv("PBO_NODE_CAP", "12345")
    assert harness.node_cap() == 12345
    monkeypatch.delenv("PBO_NODE_CAP")
    assert harness.node_cap() == harness.DEFAULT_NODE_CAP


def test_diamond_on_parallel_arithmetic():
    src = "case par (add 1 2) (add 3 4) of { (a, b) -> add a b }"
    report = harness.check_diamond(body(src), depth=20)
    assert report["verdict"] == "PASS" and not report["violations"]
    assert report["stats"]["pairs"] > 0


def test_leak_freedom_checker():
    src = """
    case linearly @[Int] (\\(li :1 Linearly).
      let1 r = newRef li 8 in move (freeRef r))
    of { Ur n -> n }
    """
    report = harness.check_leak_freedom(body(src), n_schedules=20)
    assert report["verdict"] == "PASS"
    leaky = "linearly (\\li. newRef li 7)"
    report = harness.check_leak_freedom(body(leaky), n_schedules=5)
    assert report["verdict"] == "FAIL"
    assert all(len(v["residue"]) == 1 for v in report["violations"])


def test_behavior_uniqueness_checker():
    src = "case par (add 1 2) (add 3 4) of { (a, b) -> add a b }"
    report = harness.check_behavior_uniqueness(body(src), n_schedules=20)
    assert report["verdict"] == "PASS" and report["value"] == 10


def test_outcome_json():
    out, _, _ = run(body("1"), "mut", make_scheduler("first"))
    assert out.to_json() == {"kind": "ReturnedInt", "detail": 1}


# ---------------------------------------------------------------------------
# Differential testing: random borrow/update programs are generated together
# with their arithmetically computed expected value; the mutative semantics
# (real memory writes) and the memory-free semantics (restoration by
# history) must both return it.


def gen_tree(rng, depth=0):
    if depth >= 2 or rng.random() < 0.4:
        return ("leaf", rng.randrange(10))
    return ("node", gen_tree(rng, depth + 1), gen_tree(rng, depth + 1))


def tree_leaves(tree):
    if tree[0] == "leaf":
        return [tree[1]]
    return tree_leaves(tree[1]) + tree_leaves(tree[2])


def gen_program(rng):
    """A program that stores a random tree of integers in references,
    borrows the tree, performs random updates through the borrow, reclaims,
    and returns a weighted sum of the final contents."""
    tree = gen_tree(rng)
    values = tree_leaves(tree)
    n = len(values)
    n_updates = rng.randrange(0, 6)
    updates = [(rng.randrange(n), rng.randrange(1, 9)) for _ in range(n_updates)]

    finals = list(values)
    for leaf, delta in updates:
        finals[leaf] += delta
    expected = sum((i + 1) * v for i, v in enumerate(finals))

    toks = n + 1  # one per newRef plus one for borrow (newLifetime uses last)
    lines = []
    cur = "li"
    for i in range(toks):
        lines.append(f"case withLinearly {cur} of {{ (tok{i}, k{i}) ->")
        cur = f"k{i}"
    lines.append(f"newLifetime {cur} (forall ^t. \\(n0 :1 Now ^t).")
    for i, v in enumerate(values):
        lines.append(f"let1 r{i} = newRef tok{i} {v} in")

    def build(tree, counter=[0]):
        if tree[0] == "leaf":
            i = counter[0]
            counter[0] += 1
            return f"r{i}"
        return f"({build(tree[1], counter)}, {build(tree[2], counter)})"

    lines.append(f"let1 obj = {build(tree)} in")
    lines.append(f"case borrow @[^t] tok{n} obj of {{ (mroot, lender) ->")

    closes = 0

    def split(tree, var, counter=[0]):
        nonlocal closes
        if tree[0] == "leaf":
            i = counter[0]
            counter[0] += 1
            lines.append(f"let1 m{i} = {var} in")
            return
        l, r = f"{var}a", f"{var}b"
        lines.append(f"case {var} of {{ ({l}, {r}) ->")
        closes += 1
        split(tree[1], l, counter)
        split(tree[2], r, counter)

    split(tree, "mroot")

    gen = {i: 0 for i in range(n)}
    now = "n0"
    for j, (leaf, delta) in enumerate(updates):
        m = f"m{leaf}" + ("" if gen[leaf] == 0 else f"_{gen[leaf]}")
        gen[leaf] += 1
        m2 = f"m{leaf}_{gen[leaf]}"
        nxt = f"n{j + 1}"
        lines.append(
            f"case execBO {now} (updateRef (\\(v :1 Int). "
            f"pure @[^t] ((), add v {delta})) {m}) of {{ ({nxt}, res{j}) ->"
        )
        lines.append(f"case res{j} of {{ (u{j}, {m2}) ->")
        lines.append(f"case u{j} of {{ () ->")
        closes += 3
        now = nxt

    for i in range(n):
        m = f"m{i}" + ("" if gen[i] == 0 else f"_{gen[i]}")
        lines.append(f"case consume {m} of {{ () ->")
        closes += 1
    lines.append(f"case endLifetime {now} of {{ Ur e ->")
    closes += 1
    lines.append("case reclaim lender e of " if tree[0] == "node" else
                 "let1 q0 = reclaim lender e in")

    def unsplit(tree, var, counter=[0]):
        nonlocal closes
        if tree[0] == "leaf":
            i = counter[0]
            counter[0] += 1
            lines.append(f"let1 v{i} = freeRef {var} in")
            return
        l, r = f"{var}x", f"{var}y"
        prefix = "" if var == "root" and False else f"case {var} of "
        lines.append(f"{{ ({l}, {r}) ->" if var == "root" else
                     f"case {var} of {{ ({l}, {r}) ->")
        closes += 1
        unsplit(tree[1], l, counter)
        unsplit(tree[2], r, counter)

    if tree[0] == "node":
        unsplit(tree, "root")
    else:
        lines.append("let1 v0 = freeRef q0 in")
    weighted = None
    for i in range(n):
        term = f"(mul {i + 1} v{i})"
        weighted = term if weighted is None else f"(add {weighted} {term})"
    lines.append(f"move {weighted}")
    # close the braces inside the lifetime continuation (incl. the borrow
    # case), then the continuation itself, then the token-splitting cases
    lines.append("}" * (closes + 1))
    lines.append(") " + "}" * toks)

    src = (
        "case linearly @[Int] (\\(li :1 Linearly).\n"
        + "\n".join(lines)
        + ")\nof { Ur n -> n }"
    )
    return src, expected


def test_differential_mut_vs_den_vs_expected():
    rng = random.Random(4242)
    for case in range(N_DIFFERENTIAL):
        src, expected = gen_program(rng)
        prog = parser.parse_program(src)
        check.type_check(prog)
        for sem in ("mut", "den"):
            out, _, cfg = run(
                prog.body, sem, make_scheduler("random", case), budget=5000
            )
            assert out.kind == "ReturnedInt", (case, sem, out, src)
            assert out.detail == expected, (case, sem, out.detail, expected, src)
            assert not cfg.mem, (case, sem)
