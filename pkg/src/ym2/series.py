"""Exact surface-sum series for Wilson loop expectations.

The expectation of a loop word is an absolutely convergent sum over marked
surfaces: put k_p Poisson points on each same-letter position pair p (rate =
face area), average uniformly over the points' height interleavings, and glue
each point by the group's admissible relations.  Each glued surface weighs

    (+-1)^(sign data) * N^(chi - 2 n_loops)        (1/N-normalized)

and the whole series carries the constant prefactor

    exp( (c_g / 2) * sum_positions area  +  sum_pairs area ).

Heights only enter through their relative order, so for a fixed count vector
the multiset of Euler characteristics (and sign data) over arrangements x
gluings is independent of both the areas and N.  The evaluator caches those
histograms per count vector and reuses them across area grids, N sweeps and
finite-difference bumps.

Truncating at total point count k_max leaves a tail bounded a priori by

    prefactor * e^((b-1) L) * P[Poisson(b L) > k_max],    L = total pair mass,

with b = 1 for U(N) (each normalized surface weight has modulus <= 1) and
b = 2 for SO/SU/Sp (each point sums over two relations).
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict

import numpy as np
from scipy.stats import poisson as _poisson

from .engine import BudgetExceeded, EngineRefusal, EngineResult
from .groups import GroupSpec
from .surfaces import (Layout, chi_all_type_one, glue, multiset_permutations,
                       n_multiset_permutations)
from .words import Word, parse_word

_CHUNK = 1 << 15


def _compositions(total_max: int, parts: int):
    """All tuples of ``parts`` nonnegative ints with sum <= total_max."""
    if parts == 0:
        yield ()
        return
    for head in range(total_max + 1):
        for rest in _compositions(total_max - head, parts - 1):
            yield (head,) + rest


class _LRU:
    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self.data: OrderedDict = OrderedDict()

    def get(self, key):
        if key in self.data:
            self.data.move_to_end(key)
            return self.data[key]
        return None

    def put(self, key, value):
        self.data[key] = value
        self.data.move_to_end(key)
        while len(self.data) > self.maxsize:
            self.data.popitem(last=False)


class SurfaceSum:
    """Histogram-caching series evaluator for one (word, group kind)."""

    def __init__(self, word: Word, kind: str):
        self.word = word
        self.kind = kind
        self.pairs = word.pairs
        self.pair_letters = [p.letter for p in self.pairs]
        self.pair_signs = np.asarray([p.sign for p in self.pairs], dtype=np.int8)
        # letters that own pairs, biggest pair family first (so the expensive
        # leg tables sit outermost in the enumeration and are built once)
        fams: dict[str, list[int]] = {}
        for i, p in enumerate(self.pairs):
            fams.setdefault(p.letter, []).append(i)
        self.families = sorted(fams.items(), key=lambda kv: -len(kv[1]))
        self._hist: dict[tuple[int, ...], tuple] = {}
        self._legs_cache = _LRU(maxsize=48)
        self._work: dict[int, int] = {}

    # -- combinatorial size ------------------------------------------------

    def arrangements_of(self, counts: tuple[int, ...]) -> int:
        total = 1
        for letter, idxs in self.families:
            total *= n_multiset_permutations([counts[i] for i in idxs])
        return total

    def work_of(self, counts: tuple[int, ...]) -> int:
        w = self.arrangements_of(counts)
        if self.kind != "U":
            w *= 2 ** sum(counts)
        return w

    def total_work(self, k_max: int) -> int:
        if k_max not in self._work:
            self._work[k_max] = sum(
                self.work_of(c) for c in _compositions(k_max, len(self.pairs)))
        return self._work[k_max]

    # -- histograms ----------------------------------------------------------

    def _letter_legs_local(self, letter: str, idxs, lcounts):
        """Leg tables for one letter in letter-local slot coordinates."""
        key = (letter, lcounts)
        hit = self._legs_cache.get(key)
        if hit is not None:
            return hit
        # a throwaway layout of just this letter's loop structure would not
        # reproduce the occurrence signs/positions, so build the real layout
        # with all other pair counts zero: its slots are exactly this
        # letter's, in letter-local order.
        counts = [0] * len(self.pairs)
        for i, c in zip(idxs, lcounts):
            counts[i] = c
        lay = Layout(self.word, tuple(counts))
        ctx = None
        for c in lay.letter_ctxs:
            if c.letter == letter:
                ctx = c
        assert ctx is not None
        order = multiset_permutations(lay.letter_counts(ctx))
        legs = lay.letter_legs(ctx, order)
        local_offsets = {q: int(lay.slot_offset[q]) for q in ctx.occ}
        out = (legs, local_offsets)
        self._legs_cache.put(key, out)
        return out

    def histogram(self, counts: tuple[int, ...]):
        """Arrangement x gluing tallies for one count vector.

        U(N): dict chi -> multiplicity.  Other kinds: dict
        (chi, alpha, gamma, mu_total) -> multiplicity.  Also returns the
        arrangement count used for the uniform height average.
        """
        hit = self._hist.get(counts)
        if hit is not None:
            return hit
        layout = Layout(self.word, counts)
        n_arr = self.arrangements_of(counts)

        # per-family leg tables, translated into this layout's global slots
        fam_legs: list[tuple[np.ndarray, np.ndarray]] = []
        for letter, idxs in self.families:
            lcounts = tuple(counts[i] for i in idxs)
            if sum(lcounts) == 0:
                continue
            (legA, legB), local_off = self._letter_legs_local(
                letter, tuple(idxs), lcounts)
            lut = np.empty(2 * sum(lcounts), dtype=np.int32)
            for q, loc in local_off.items():
                n_q = int(layout.legs_at[q])
                lut[loc:loc + n_q] = np.arange(
                    layout.slot_offset[q], layout.slot_offset[q] + n_q,
                    dtype=np.int32)
            fam_legs.append((lut[legA], lut[legB]))

        if self.kind == "U":
            hist = self._histogram_u(layout, fam_legs)
        else:
            hist = self._histogram_general(layout, fam_legs)
        self._hist[counts] = (hist, n_arr)
        return hist, n_arr

    def _histogram_u(self, layout: Layout, fam_legs) -> dict[int, int]:
        if not fam_legs:
            return {int(layout.chi_offset): 1}
        sizes = [legs[0].shape[0] for legs in fam_legs]
        total = math.prod(sizes)
        strides = []
        acc = total
        for b in sizes:
            acc //= b
            strides.append(acc)
        hist: dict[int, int] = {}
        for start in range(0, total, _CHUNK):
            g = np.arange(start, min(start + _CHUNK, total))
            pi = np.empty((g.size, layout.n_slots), dtype=np.int32)
            for (legA, legB), b, stride in zip(fam_legs, sizes, strides):
                sel = (g // stride) % b
                a, bb = legA[sel], legB[sel]
                np.put_along_axis(pi, a, bb, axis=1)
                np.put_along_axis(pi, bb, a, axis=1)
            chis = chi_all_type_one(layout, pi)
            vals, cnts = np.unique(chis, return_counts=True)
            for v, c in zip(vals.tolist(), cnts.tolist()):
                hist[v] = hist.get(v, 0) + c
        return hist

    def _histogram_general(self, layout: Layout, fam_legs) -> dict[tuple, int]:
        K = layout.K
        relations = GroupSpec(self.kind, 2).relations  # kind only; N is not used
        hist: dict[tuple, int] = {}
        if not fam_legs:
            key = (int(layout.chi_offset), 0, 0, 0)
            return {key: 1}
        sizes = [legs[0].shape[0] for legs in fam_legs]
        for combo in itertools.product(*[range(b) for b in sizes]):
            pts = layout.point_slots_row(
                [(legA[i:i + 1], legB[i:i + 1])
                 for (legA, legB), i in zip(fam_legs, combo)], 0)
            for rels in itertools.product(relations, repeat=K):
                st = glue(layout, pts, rels)
                key = (st.chi, st.alpha, st.gamma, st.mu_total)
                hist[key] = hist.get(key, 0) + 1
        return hist

    # -- evaluation ----------------------------------------------------------

    def prefactor(self, areas: dict[str, float], N: int) -> float:
        g = GroupSpec(self.kind, N)
        return math.exp(0.5 * g.c_g * self.word.position_mass(areas)
                        + self.word.pair_mass(areas))

    def tail_bound(self, areas: dict[str, float], N: int, k_max: int) -> float:
        lam = self.word.pair_mass(areas)
        if lam == 0:
            return 0.0
        b = 1.0 if self.kind == "U" else 2.0
        return (self.prefactor(areas, N) * math.exp((b - 1.0) * lam)
                * float(_poisson.sf(k_max, b * lam)))

    def value(self, areas: dict[str, float], N: int, k_max: int,
              budget: int = 10_000_000) -> tuple[float, float, dict]:
        self.word.check_areas(areas)
        work = self.total_work(k_max)
        if work > budget:
            raise BudgetExceeded(
                f"series needs ~{work:.3g} kernel rows at k_max={k_max}, "
                f"budget is {budget:.3g}; lower k_max or raise the budget")
        masses = [areas[l] for l in self.pair_letters]
        n = self.word.n_loops
        total = 0.0
        n_configs = 0
        # visit count vectors with the biggest letter family varying slowest,
        # so its cached leg tables stay hot across consecutive vectors
        order = sorted(
            _compositions(k_max, len(self.pairs)),
            key=lambda c: [tuple(c[i] for i in idxs)
                           for _, idxs in self.families])
        for counts in order:
            w_pois = 1.0
            eps = 1.0
            for k_p, m_p, s_p in zip(counts, masses, self.pair_signs):
                w_pois *= math.exp(-m_p) * m_p ** k_p / math.factorial(k_p)
                if s_p < 0 and (k_p % 2):
                    eps = -eps
            if w_pois == 0.0:
                continue
            hist, n_arr = self.histogram(counts)
            K = sum(counts)
            if self.kind == "U":
                s = sum(cnt * float(N) ** (chi - 2 * n)
                        for chi, cnt in hist.items())
                s *= (-1.0) ** K
            else:
                s = 0.0
                for (chi, alpha, gamma, mu), cnt in hist.items():
                    term = (-1.0) ** alpha * float(N) ** (chi - 2 * n)
                    if self.kind == "SU":
                        term *= float(N) ** (-gamma)
                    elif self.kind == "Sp":
                        term *= (-1.0) ** mu
                    s += cnt * term
            n_configs += n_arr
            total += w_pois * eps * s / n_arr
        value = self.prefactor(areas, N) * total
        tail = self.tail_bound(areas, N, k_max)
        return value, tail, {"work": work, "arrangements": n_configs}


_EVALUATORS: dict[tuple[Word, str], SurfaceSum] = {}


def surface_sum(word: Word, kind: str) -> SurfaceSum:
    key = (word, kind)
    if key not in _EVALUATORS:
        if len(_EVALUATORS) > 256:
            _EVALUATORS.clear()
        _EVALUATORS[key] = SurfaceSum(word, kind)
    return _EVALUATORS[key]


def feasible_k_max(word: Word, kind: str, budget: int = 10_000_000,
                   cap: int = 24) -> int:
    ev = surface_sum(word, kind)
    best = 0
    for k in range(cap + 1):
        if ev.total_work(k) <= budget:
            best = k
        else:
            break
    return best


def pick_k_max(word: Word, areas: dict[str, float], group: GroupSpec,
               budget: int = 10_000_000, cap: int = 24,
               tail_target: float = 1e-9) -> int:
    """Smallest truncation with a-priori tail below target, capped by the
    work budget."""
    ev = surface_sum(word, group.kind)
    feas = feasible_k_max(word, group.kind, budget, cap)
    for k in range(feas + 1):
        if ev.tail_bound(areas, group.N, k) <= tail_target:
            return k
    return feas


def evaluate(word: Word | str, areas: dict[str, float], group: GroupSpec,
             k_max: int | None = None, budget: int = 10_000_000,
             tail_target: float = 1e-9, k_cap: int = 24,
             normalized: bool = True) -> EngineResult:
    """Series value of a loop word; ``error`` is the a-priori tail bound."""
    if isinstance(word, str):
        word = parse_word(word)
    word.check_areas(areas)
    ev = surface_sum(word, group.kind)
    if k_max is None:
        k_max = pick_k_max(word, areas, group, budget, k_cap, tail_target)
    value, tail, diag = ev.value(areas, group.N, k_max, budget)
    if not normalized:
        value *= float(group.N) ** word.n_loops
        tail *= float(group.N) ** word.n_loops
    return EngineResult(value=value, error=tail, engine="series",
                        params={"k_max": k_max, "budget": budget,
                                "normalized": normalized, **diag})


# ---------------------------------------------------------------------------
# closed forms and transfers built on the series


def n1_value(word: Word | str, areas: dict[str, float]) -> float:
    """Exact N=1 value: every letter contributes exp(-net_winding^2 area/2)."""
    if isinstance(word, str):
        word = parse_word(word)
    word.check_areas(areas)
    return math.exp(-0.5 * sum(
        word.net_windings[l] ** 2 * areas[l] for l in word.letters))


def su_from_u(word: Word | str, areas: dict[str, float], N: int,
              u_result: EngineResult | None = None, **kwargs) -> EngineResult:
    """Transfer a U(N) series value to SU(N).

    The determinant coupling multiplies the U(N) expectation by
    exp( sum_pairs area (sign - 1) / N^2 + sum_letters count^2 area / (2 N^2) ).
    """
    if isinstance(word, str):
        word = parse_word(word)
    if u_result is None:
        u_result = evaluate(word, areas, GroupSpec("U", N), **kwargs)
    expo = 0.0
    for p in word.pairs:
        expo += areas[p.letter] * (p.sign - 1) / N**2
    for l in word.letters:
        expo += word.counts[l] ** 2 * areas[l] / (2 * N**2)
    factor = math.exp(expo)
    return EngineResult(value=factor * u_result.value,
                        error=factor * u_result.error,
                        engine="su_from_u",
                        params={"factor": factor, **u_result.params})


def makeenko_migdal_check(word: Word | str, areas: dict[str, float], faces,
                          split: Word | str, group: GroupSpec,
                          h: float = 1e-3,
                          su_mirror: Word | str | None = None,
                          tail_target: float = 1e-12,
                          budget: int = 10_000_000) -> dict:
    """Area-derivative identity at one crossing.

    ``faces`` lists the four faces around the crossing in cyclic order as
    ``(sign, letter)`` entries, with ``None`` for the unbounded face; the
    left side is the signed sum of area derivatives (central differences of
    the series, step ``h``).  The right side is the expectation of the
    two-loop ``split`` word, times (1 + 1/N^2) for SU.  Passing ``su_mirror``
    (the other, single-loop uncrossing) replaces the SU right side with
    split - mirror / N^2.
    """
    if group.kind not in ("U", "SU"):
        raise EngineRefusal("the crossing identity is implemented for U and SU")
    if isinstance(word, str):
        word = parse_word(word)
    if isinstance(split, str):
        split = parse_word(split)

    def phi(w: Word, a: dict[str, float]) -> float:
        return evaluate(w, a, group, tail_target=tail_target,
                        budget=budget).value

    lhs = 0.0
    for entry in faces:
        if entry is None:
            continue
        sign, letter = entry
        up = dict(areas)
        dn = dict(areas)
        up[letter] += h
        dn[letter] -= h
        lhs += sign * (phi(word, up) - phi(word, dn)) / (2 * h)

    rhs = phi(split, areas)
    if group.kind == "SU":
        if su_mirror is not None:
            if isinstance(su_mirror, str):
                su_mirror = parse_word(su_mirror)
            rhs = rhs - phi(su_mirror, areas) / group.N**2
        else:
            rhs = rhs * (1.0 + 1.0 / group.N**2)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs),
            "h": h, "group": str(group)}
