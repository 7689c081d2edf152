"""Bundled example programs with machine-checkable expectations.

Each entry states what the type checker must say about the program and, for
well-typed programs, what every fair schedule of either semantics must
produce when running it.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    # "ok" or the expected diagnostic code of the first type error.
    check: str
    # Expected outcome kind for a run ("ReturnedInt", "BudgetExhausted",
    # "BlackHole", ...); None for ill-typed programs that are not run.
    outcome: str = None
    # Expected integer for ReturnedInt outcomes.
    value: int = None
    # For ill-typed programs run with checking disabled: the number of
    # memory cells left allocated at the end (mutative semantics).
    unsafe_mem_residue: int = None

    def source(self) -> str:
        return (
            resources.files("pureborrow.corpus")
            .joinpath(f"{self.name}.pbo")
            .read_text()
        )


ENTRIES = (
    CorpusEntry("reduce_example", "ok", "ReturnedInt", 7),
    CorpusEntry("borrow_reclaim", "ok", "ReturnedInt", 15),
    CorpusEntry("reborrow_join", "ok", "ReturnedInt", 11),
    CorpusEntry("case_bor", "ok", "ReturnedInt", 33),
    CorpusEntry("par_disjoint", "ok", "ReturnedInt", 118),
    CorpusEntry("share_copy", "ok", "ReturnedInt", 126),
    CorpusEntry("refs_as_vector_sort3", "ok", "ReturnedInt", 123),
    CorpusEntry("omega", "ok", "BudgetExhausted"),
    CorpusEntry("blackhole", "ok", "BlackHole"),
    CorpusEntry("double_use", "LinearUsedTwice"),
    CorpusEntry("drop_linear", "LinearUnused"),
    CorpusEntry("reclaim_no_end", "SideConditionFailed"),
    CorpusEntry("leak", "Mismatch", unsafe_mem_residue=1),
)


def entries():
    return ENTRIES


def get(name: str) -> CorpusEntry:
    for e in ENTRIES:
        if e.name == name:
            return e
    raise KeyError(name)
