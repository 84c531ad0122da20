"""Planar (N = infinity) limit of Wilson loop expectations on the plane.

Three independent routes to the same number:

1. ``master_field`` -- free-cumulant recursion.  The limiting trace of a
   word in free multiplicative Brownian motions is a finite sum over
   non-crossing partitions whose blocks live on a single letter; the
   block weights are the free cumulants of the one-letter marginal, which
   close under a Moebius-style recursion.  Exact (up to float roundoff),
   handles inverses and multiple loops.

2. ``master_field_nc_series`` -- the surface-sum series with only the
   planar (Euler characteristic 2) gluings kept.  Reuses the finite-N
   series enumeration, so it shares none of route 1's combinatorics.

3. ``forest_polynomial`` / ``poisson_forest_estimate`` -- counting
   non-crossing same-letter forests on the loop.  The polynomial route is
   symbolic with exact rational coefficients (inverse-free words only);
   the Poisson route estimates the same quantity by splitting each face
   into a Poisson number of thin slices and counting non-crossing
   matchings, which extends to words with inverses.

Routes 1 and 2 compute the normalized limit ``phi(w)``; the forest
routes compute ``p(w) = exp(total_area/2) * phi(w)`` (loop masses
stripped), which is what makes the coefficients polynomial.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np

from .engine import BudgetExceeded, EngineRefusal, EngineResult
from .series import _compositions, surface_sum
from .words import Word, parse_word

# Non-crossing enumeration on one loop costs ~2^m interval terms; 16 keeps
# the worst case around a quarter-million terms.
NC_POSITION_LIMIT = 16


def _as_word(word: Word | str) -> Word:
    return parse_word(word) if isinstance(word, str) else word


# ---------------------------------------------------------------------------
# one-letter marginal: moments and free cumulants


def q_poly(n: int, area: float) -> float:
    """Mass-stripped n-th power trace: e^{nA/2} times the limiting tr(u^n)."""
    if n == 0:
        return 1.0
    return sum(math.comb(n, k + 1) * float(n) ** (k - 1)
               * (-area) ** k / math.factorial(k) for k in range(n))


def q_moment(k: int, l: int, area: float) -> float:
    """Mass-stripped mixed moment of u^k (u^-1)^l for one unitary factor."""
    return math.exp(min(k, l) * area) * q_poly(abs(k - l), area)


def _moment(signs: tuple[int, ...], area: float) -> float:
    """tr of the ordered one-letter pattern; depends only on the sign counts."""
    k = sum(1 for s in signs if s > 0)
    l = len(signs) - k
    return math.exp(-0.5 * len(signs) * area) * q_moment(k, l, area)


_KAPPA: dict[tuple[tuple[int, ...], float], float] = {}


def block_cumulant(signs: tuple[int, ...], area: float) -> float:
    """Free cumulant of a one-letter sign pattern.

    Defined through moment = sum over non-crossing partitions of products
    of cumulants; inverting that relation gives

        kappa(w) = moment(w) - sum_{pi != one-block} prod_B kappa(w|_B).

    Memoized on the (pattern, area) pair; sub-blocks are subsequences of
    the pattern, so short mixed patterns are shared heavily.
    """
    signs = tuple(signs)
    key = (signs, area)
    if key in _KAPPA:
        return _KAPPA[key]
    m = len(signs)
    if m == 0:
        raise ValueError("empty block")
    if m == 1:
        val = _moment(signs, area)
    else:
        val = _moment(signs, area) - _nc_proper_sum(signs, area)
    _KAPPA[key] = val
    return val


def _nc_proper_sum(signs: tuple[int, ...], area: float) -> float:
    """Sum of cumulant products over non-crossing partitions with >= 2 blocks."""
    m = len(signs)
    seg: dict[tuple[int, int], float] = {}

    def all_parts(i: int, j: int) -> float:
        # every non-crossing partition of positions [i, j)
        if i >= j:
            return 1.0
        if (i, j) not in seg:
            seg[(i, j)] = first_blocks(i, j, skip_full=False)
        return seg[(i, j)]

    def first_blocks(i: int, j: int, skip_full: bool) -> float:
        # enumerate the block containing position i; the gaps between its
        # members are filled independently (non-crossing), the remainder
        # after the last member is a fresh sub-problem
        total = 0.0

        def extend(prev: int, gaps: float, block: list[int]) -> None:
            nonlocal total
            if not (skip_full and len(block) == m):
                total += (block_cumulant(tuple(signs[p] for p in block), area)
                          * gaps * all_parts(prev + 1, j))
            for p in range(prev + 1, j):
                extend(p, gaps * all_parts(prev + 1, p), block + [p])

        extend(i, 1.0, [i])
        return total

    return first_blocks(0, m, skip_full=True)


# ---------------------------------------------------------------------------
# route 1: free-cumulant evaluation of a word


def master_field(word: Word | str, areas: dict[str, float]) -> float:
    """Limiting normalized Wilson loop expectation of ``word``.

    Sum over non-crossing partitions of each loop's positions into
    same-letter blocks, each block weighted by its free cumulant (mixed
    cumulants across distinct free letters vanish).  Loops multiply.
    """
    word = _as_word(word)
    word.check_areas(areas)
    val = 1.0
    for loop in word.loops:
        if len(loop) > NC_POSITION_LIMIT:
            raise EngineRefusal(
                f"loop has {len(loop)} positions; non-crossing enumeration "
                f"is capped at {NC_POSITION_LIMIT}")
        val *= _loop_master(loop, areas)
    return val


def _loop_master(loop: tuple[tuple[str, int], ...],
                 areas: dict[str, float]) -> float:
    m = len(loop)
    seg: dict[tuple[int, int], float] = {}

    def parts(i: int, j: int) -> float:
        if i >= j:
            return 1.0
        if (i, j) not in seg:
            letter = loop[i][0]
            total = 0.0

            def extend(prev: int, gaps: float, block: list[int]) -> None:
                nonlocal total
                pattern = tuple(loop[p][1] for p in block)
                total += (block_cumulant(pattern, areas[letter])
                          * gaps * parts(prev + 1, j))
                for p in range(prev + 1, j):
                    if loop[p][0] == letter:
                        extend(p, gaps * parts(prev + 1, p), block + [p])

            extend(i, 1.0, [i])
            seg[(i, j)] = total
        return seg[(i, j)]

    return parts(0, m)


# ---------------------------------------------------------------------------
# route 2: planar restriction of the surface-sum series


def master_field_nc_series(word: Word | str, areas: dict[str, float],
                           k_max: int | None = None,
                           budget: int = 10_000_000,
                           tail_target: float = 1e-10,
                           k_cap: int = 24) -> EngineResult:
    """Surface-sum series keeping only planar gluings.

    Same Poisson-weighted enumeration as the finite-N series, but the
    arrangement histogram is restricted to Euler characteristic 2 and the
    group-dimension factor drops out.  Single-loop words only (the planar
    limit of a multi-loop word factorizes; use :func:`master_field`).
    """
    word = _as_word(word)
    word.check_areas(areas)
    if word.n_loops != 1:
        raise EngineRefusal(
            "planar series is single-loop; multi-loop limits factorize, "
            "use master_field")
    ev = surface_sum(word, "U")
    # prefactor/tail for the unitary kind carry no N dependence
    if k_max is None:
        k_max = 0
        for k in range(k_cap + 1):
            if ev.total_work(k) > budget:
                break
            k_max = k
            if ev.tail_bound(areas, 2, k) <= tail_target:
                break
    work = ev.total_work(k_max)
    if work > budget:
        raise BudgetExceeded(
            f"planar series needs ~{work:.3g} kernel rows at k_max={k_max}, "
            f"budget is {budget:.3g}")
    masses = [areas[l] for l in ev.pair_letters]
    total = 0.0
    order = sorted(
        _compositions(k_max, len(ev.pairs)),
        key=lambda c: [tuple(c[i] for i in idxs) for _, idxs in ev.families])
    for counts in order:
        w_pois = 1.0
        eps = 1.0
        for k_p, m_p, s_p in zip(counts, masses, ev.pair_signs):
            w_pois *= math.exp(-m_p) * m_p ** k_p / math.factorial(k_p)
            if s_p < 0 and (k_p % 2):
                eps = -eps
        if w_pois == 0.0:
            continue
        hist, n_arr = ev.histogram(counts)
        planar = hist.get(2, 0)
        if planar:
            total += w_pois * eps * (-1.0) ** sum(counts) * planar / n_arr
    value = ev.prefactor(areas, 2) * total
    tail = ev.tail_bound(areas, 2, k_max)
    return EngineResult(value=value, error=tail, engine="master-nc-series",
                        params={"k_max": k_max, "budget": budget,
                                "work": work})


# ---------------------------------------------------------------------------
# route 3a: exact forest polynomial (inverse-free words)

_Mono = tuple[tuple[str, int], ...]


def _poly_mul(a: dict[_Mono, Fraction],
              b: dict[_Mono, Fraction]) -> dict[_Mono, Fraction]:
    out: dict[_Mono, Fraction] = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            exps: dict[str, int] = dict(ma)
            for letter, e in mb:
                exps[letter] = exps.get(letter, 0) + e
            key = tuple(sorted(exps.items()))
            c = out.get(key, Fraction(0)) + ca * cb
            if c:
                out[key] = c
            else:
                out.pop(key, None)
    return out


def _poly_add_into(acc: dict[_Mono, Fraction],
                   other: dict[_Mono, Fraction]) -> None:
    for m, c in other.items():
        c = acc.get(m, Fraction(0)) + c
        if c:
            acc[m] = c
        else:
            acc.pop(m, None)


class ForestPolynomial:
    """Polynomial in the face-area variables with exact rational coefficients.

    ``coeffs`` maps a sorted monomial tuple ``((letter, exponent), ...)``
    to a :class:`~fractions.Fraction`; the empty tuple is the constant
    term.  Printing lists monomials by total degree, then lexicographic
    letters.
    """

    def __init__(self, coeffs: dict[_Mono, Fraction]):
        self.coeffs = {m: Fraction(c) for m, c in coeffs.items() if c}

    def evaluate(self, areas: dict[str, float]):
        """Evaluate at a point; exact when the inputs are Fractions/ints."""
        total = 0 * Fraction(0)
        for mono, c in self.coeffs.items():
            term = c
            for letter, e in mono:
                term = term * areas[letter] ** e
            total = total + term
        return total

    def degree(self) -> int:
        if not self.coeffs:
            return 0
        return max(sum(e for _, e in m) for m in self.coeffs)

    def leading_term(self, areas: dict[str, float]):
        """Evaluate only the top total-degree monomials (large-area shape)."""
        d = self.degree()
        top = {m: c for m, c in self.coeffs.items()
               if sum(e for _, e in m) == d}
        return ForestPolynomial(top).evaluate(areas)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ForestPolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        def mono_key(m: _Mono):
            return (sum(e for _, e in m), m)
        parts = []
        for mono in sorted(self.coeffs, key=mono_key):
            c = self.coeffs[mono]
            body = "*".join(
                letter if e == 1 else f"{letter}^{e}" for letter, e in mono)
            mag = abs(c)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            if not parts:
                parts.append(text if c > 0 else f"-{text}")
            else:
                parts.append(("+ " if c > 0 else "- ") + text)
        return " ".join(parts)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ForestPolynomial({self})"


def _block_weight(letter: str, size: int) -> dict[_Mono, Fraction]:
    """Weight of one same-letter tree block: all Cayley trees on its nodes."""
    if size == 1:
        return {(): Fraction(1)}
    c = Fraction((-1) ** (size - 1) * size ** (size - 2),
                 math.factorial(size - 1))
    return {((letter, size - 1),): c}


def forest_polynomial(word: Word | str) -> ForestPolynomial:
    """Exact mass-stripped planar value of an inverse-free word.

    Sum over non-crossing partitions into same-letter blocks, each block
    contributing (-x)^{size-1} size^{size-2} / (size-1)! -- the signed
    count of labelled trees on the block.  Constant term is always 1
    (the all-singletons partition) and the degree in each letter is at
    most its occurrence count minus one.
    """
    word = _as_word(word)
    if word.has_inverses:
        raise EngineRefusal(
            "forest polynomial is defined for inverse-free words; "
            "master_field covers the general case")
    out = {(): Fraction(1)}
    for loop in word.loops:
        if len(loop) > NC_POSITION_LIMIT:
            raise EngineRefusal(
                f"loop has {len(loop)} positions; non-crossing enumeration "
                f"is capped at {NC_POSITION_LIMIT}")
        out = _poly_mul(out, _loop_forest(loop))
    return ForestPolynomial(out)


def _loop_forest(loop: tuple[tuple[str, int], ...]) -> dict[_Mono, Fraction]:
    m = len(loop)
    seg: dict[tuple[int, int], dict[_Mono, Fraction]] = {}

    def parts(i: int, j: int) -> dict[_Mono, Fraction]:
        if i >= j:
            return {(): Fraction(1)}
        if (i, j) not in seg:
            letter = loop[i][0]
            total: dict[_Mono, Fraction] = {}

            def extend(prev: int, gaps: dict[_Mono, Fraction],
                       size: int) -> None:
                term = _poly_mul(_block_weight(letter, size), gaps)
                _poly_add_into(total, _poly_mul(term, parts(prev + 1, j)))
                for p in range(prev + 1, j):
                    if loop[p][0] == letter:
                        extend(p, _poly_mul(gaps, parts(prev + 1, p)),
                               size + 1)

            extend(i, {(): Fraction(1)}, 1)
            seg[(i, j)] = total
        return seg[(i, j)]

    return parts(0, m)


# ---------------------------------------------------------------------------
# route 3b: Poisson splitting estimator (handles inverses)


def _slice_chords(loop: tuple[tuple[str, int], ...],
                  counts: dict[str, int]) -> list[tuple[int, int, int, int]]:
    """Candidate chords ``(a, b, slice_id, sign)`` after slicing each face."""
    expanded: list[tuple[str, int, int]] = []
    for letter, sign in loop:
        n = counts.get(letter, 0)
        slices = range(1, n + 1) if sign > 0 else range(n, 0, -1)
        for s in slices:
            expanded.append((letter, s, sign))
    groups: dict[tuple[str, int], list[int]] = {}
    for idx, (letter, s, _) in enumerate(expanded):
        groups.setdefault((letter, s), []).append(idx)
    chords: list[tuple[int, int, int, int]] = []
    for gid, pos in enumerate(groups.values()):
        for a, b in combinations(pos, 2):
            sgn = -1 if expanded[a][2] == expanded[b][2] else 1
            chords.append((a, b, gid, sgn))
    chords.sort()
    return chords


def _signed_matchings(chords: list[tuple[int, int, int, int]],
                      budget: list[int]) -> int:
    """Signed count of compatible chord subsets; decrements ``budget[0]``."""

    def count(i: int, chosen: list[tuple[int, int, int, int]]) -> int:
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("slice-matching enumeration budget exceeded")
        if i == len(chords):
            return 1
        a, b, gid, sgn = chords[i]
        total = count(i + 1, chosen)
        for (c, d, g2, _) in chosen:
            if g2 == gid or (c < a < d < b) or (a < c < b < d):
                return total
        chosen.append(chords[i])
        total += sgn * count(i + 1, chosen)
        chosen.pop()
        return total

    return count(0, [])


def forest_sign_sum(word: Word | str, counts: dict[str, int],
                    node_budget: int | None = None) -> int:
    """Signed count of non-crossing slice matchings at fixed slice counts.

    Each face is split into ``counts[letter]`` slices; an occurrence of
    the letter crosses them in order (reversed for an inverse).  The sum
    runs over sets of chords joining two crossings of the *same* slice,
    all slices distinct, chords non-crossing on the loop; a chord joining
    same-sign crossings contributes a factor -1.  Exact integer.
    """
    word = _as_word(word)
    if word.n_loops != 1:
        raise EngineRefusal(
            "slice counting lives on a single circle; multi-loop limits "
            "factorize, use master_field")
    budget = [node_budget if node_budget is not None else 1 << 62]
    return _signed_matchings(_slice_chords(word.loops[0], counts), budget)


def poisson_forest_estimate(word: Word | str, areas: dict[str, float],
                            samples: int = 100_000, seed: int = 0,
                            node_budget: int = 50_000_000) -> EngineResult:
    """Monte Carlo estimate of the mass-stripped planar value.

    Draws independent Poisson(area) slice counts per letter and averages
    :func:`forest_sign_sum`.  The summand depends only on the count
    vector, so distinct vectors are evaluated once and weighted by their
    multiplicity; ``error`` is the standard error of the mean.
    """
    word = _as_word(word)
    word.check_areas(areas)
    if word.n_loops != 1:
        raise EngineRefusal(
            "slice counting lives on a single circle; multi-loop limits "
            "factorize, use master_field")
    letters = word.letters
    lam = np.array([areas[l] for l in letters])
    rng = np.random.default_rng(seed)
    draws = rng.poisson(lam=lam, size=(samples, len(letters)))
    vecs, mult = np.unique(draws, axis=0, return_counts=True)
    budget = [node_budget]
    mean = 0.0
    second = 0.0
    for vec, w in zip(vecs, mult):
        counts = dict(zip(letters, (int(v) for v in vec)))
        q = _signed_matchings(_slice_chords(word.loops[0], counts), budget)
        mean += w * q
        second += w * float(q) ** 2
    mean /= samples
    second /= samples
    var = max(second - mean ** 2, 0.0)
    se = math.sqrt(var / max(samples - 1, 1))
    return EngineResult(value=mean, error=se, engine="forest",
                        params={"samples": samples, "seed": seed,
                                "distinct_counts": int(len(vecs))})
