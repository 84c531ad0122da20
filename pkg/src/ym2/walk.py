"""Exact evaluation of inverse-free single-loop words on U(N) by a weighted
walk on permutations.

Write the loop's M positions as the cycle zeta = (0 1 ... M-1).  Each
same-letter position pair (m, m*) contributes a transposition; starting from
zeta and right-multiplying by pair transpositions spans a coset of the Young
subgroup generated by per-letter position swaps, so the reachable state count
is the product of factorials of the letter multiplicities.  On that state
space the loop expectation is a matrix exponential,

    value = exp(-1/2 * sum_positions area) * ones @ expm(Q) @ e_zeta,

where Q has one off-diagonal contribution -area per pair transposition,
discounted by N^-2 whenever the step decreases the cycle count (a "deficit"
step).  Words with inverses or several loops are refused: right
multiplication by a transposition no longer describes the insertion-point
action there, and the series engine owns those cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .engine import BudgetExceeded, EngineRefusal, EngineResult
from .groups import GroupSpec
from .matexp import expm, expm_action
from .words import Word, parse_word

_DENSE_CUTOFF = 512


def _cycle_count(perm: tuple[int, ...]) -> int:
    seen = [False] * len(perm)
    out = 0
    for i in range(len(perm)):
        if not seen[i]:
            out += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    return out


def deficit(path) -> int:
    """Number of cycle-count-decreasing steps along a transposition path."""
    path = [tuple(p) for p in path]
    out = 0
    for a, b in zip(path, path[1:]):
        diff = [i for i in range(len(a)) if a[i] != b[i]]
        if diff and (len(diff) != 2 or a[diff[0]] != b[diff[1]]
                     or a[diff[1]] != b[diff[0]]):
            raise ValueError("consecutive permutations must differ by one "
                             "transposition")
        ca, cb = _cycle_count(a), _cycle_count(b)
        if cb < ca:
            out += 1
    return out


@dataclass
class ActionGraph:
    """Reachable permutations, the weighted generator, and the start index."""

    states: list[tuple[int, ...]]
    generator: object            # (S, S) dense array or CSC matrix
    root: int
    word: Word
    n_value: int


def _check_supported(word: Word) -> None:
    if word.n_loops != 1:
        raise EngineRefusal("permutation walk handles single loops only; "
                            "use the series engine for several loops")
    if word.has_inverses:
        raise EngineRefusal("permutation walk is defined for inverse-free "
                            "words; use the series engine")


def build_action_graph(word: Word | str, areas: dict[str, float], N: int,
                       state_budget: int = 1_000_000) -> ActionGraph:
    if isinstance(word, str):
        word = parse_word(word)
    _check_supported(word)
    word.check_areas(areas)
    M = len(word)
    zeta = tuple((i + 1) % M for i in range(M))

    bound = 1
    for c in word.counts.values():
        for j in range(2, c + 1):
            bound *= j
    if bound > state_budget:
        raise BudgetExceeded(
            f"walk needs {bound} states, budget is {state_budget}")

    swaps = [(p.pos_a, p.pos_b, areas[p.letter]) for p in word.pairs]

    index: dict[tuple[int, ...], int] = {zeta: 0}
    states: list[tuple[int, ...]] = [zeta]
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    cyc: list[int] = [_cycle_count(zeta)]
    frontier = 0
    while frontier < len(states):
        sigma = states[frontier]
        c_sigma = cyc[frontier]
        lst = list(sigma)
        for a, b, mass in swaps:
            lst[a], lst[b] = lst[b], lst[a]
            tau = tuple(lst)
            lst[a], lst[b] = lst[b], lst[a]
            j = index.get(tau)
            if j is None:
                j = len(states)
                index[tau] = j
                states.append(tau)
                cyc.append(_cycle_count(tau))
            rate = -mass
            if cyc[j] < c_sigma:
                rate /= N * N
            rows.append(j)
            cols.append(frontier)
            vals.append(rate)
        frontier += 1

    S = len(states)
    gen = scipy.sparse.csc_matrix(
        (vals, (rows, cols)), shape=(S, S), dtype=np.float64)
    if S <= _DENSE_CUTOFF:
        gen = gen.toarray()
    return ActionGraph(states=states, generator=gen, root=0, word=word,
                       n_value=N)


def evaluate_walk(graph: ActionGraph, areas: dict[str, float]) -> float:
    """Normalized loop expectation from a built action graph."""
    word = graph.word
    S = len(graph.states)
    delta = np.zeros(S)
    delta[graph.root] = 1.0
    if isinstance(graph.generator, np.ndarray):
        col = expm(graph.generator) @ delta
    else:
        col = expm_action(graph.generator, delta)
    return float(np.exp(-0.5 * word.position_mass(areas)) * col.sum())


def evaluate(word: Word | str, areas: dict[str, float], group: GroupSpec,
             state_budget: int = 1_000_000,
             normalized: bool = True) -> EngineResult:
    if isinstance(word, str):
        word = parse_word(word)
    if group.kind != "U":
        raise EngineRefusal(
            "permutation walk is a U(N) method; use series or holonomy "
            f"for {group.kind}")
    graph = build_action_graph(word, areas, group.N, state_budget)
    value = evaluate_walk(graph, areas)
    if not normalized:
        value *= float(group.N)
    return EngineResult(value=value, error=0.0, engine="walk",
                        params={"states": len(graph.states),
                                "normalized": normalized})
