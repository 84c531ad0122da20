"""Monte Carlo estimate of the surface series.

Instead of enumerating point configurations, sample them: Poisson counts per
matching pair, then an independent uniform height order per letter (drawn by
argsorting iid uniforms).  Each sample's integrand is

    prefactor * eps(counts) * (-1)^alpha * N^(chi - 2 n_loops) * ...

exactly the series summand with Poisson factor and arrangement average
replaced by sampling, so the estimator is unbiased for the full
(untruncated) series.  For U(N) every point glues by relation I and the
vectorized cycle kernel computes chi for whole sub-batches; the other kinds
draw one relation per point uniformly and reweight by 2^K, paying a python
glue per sample — fine for the small words the cross-checks use.

Samples are drawn in fixed-size blocks, one spawned Philox stream per block,
so results are reproducible for a given seed regardless of block boundaries.
"""

from __future__ import annotations

import math

import numpy as np

from .engine import EngineResult
from .groups import GroupSpec
from .surfaces import Layout, chi_all_type_one, glue, surface_weight
from .words import Word, parse_word

_BLOCK = 1 << 16


def _letter_orders(layout: Layout, rng: np.random.Generator, m: int):
    """Random height orders for every letter context, m samples each."""
    out = []
    for ctx in layout.letter_ctxs:
        lcounts = layout.letter_counts(ctx)
        k_l = sum(lcounts)
        labels = np.repeat(np.arange(len(lcounts), dtype=np.int8),
                           np.asarray(lcounts, dtype=np.int64))
        idx = np.argsort(rng.random((m, k_l)), axis=1)
        out.append(labels[idx])
    return out


def _block_values(word: Word, areas: dict[str, float], group: GroupSpec,
                  m: int, rng: np.random.Generator,
                  pref: float) -> np.ndarray:
    pairs = word.pairs
    n = word.n_loops
    masses = np.asarray([areas[p.letter] for p in pairs])
    signs = np.asarray([p.sign for p in pairs])
    values = np.empty(m)
    if not pairs:
        values.fill(pref)
        return values

    counts = rng.poisson(masses, size=(m, len(pairs)))
    uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
    for u_idx, cvec in enumerate(uniq):
        rows = np.nonzero(inverse == u_idx)[0]
        cvec_t = tuple(int(c) for c in cvec)
        layout = Layout(word, cvec_t)
        eps = 1.0 if (cvec[signs < 0].sum() % 2 == 0) else -1.0
        K = layout.K
        if K == 0:
            values[rows] = pref * eps * float(group.N) ** (
                layout.chi_offset - 2 * n)
            continue
        orders = _letter_orders(layout, rng, rows.size)
        legs = [layout.letter_legs(ctx, order)
                for ctx, order in zip(layout.letter_ctxs, orders)]
        if group.kind == "U":
            pi = layout.assemble_partner(legs)
            chis = chi_all_type_one(layout, pi)
            values[rows] = (pref * eps * (-1.0) ** K
                            * float(group.N) ** (chis - 2 * n))
        else:
            rel_tags = group.relations
            choice = rng.integers(0, len(rel_tags), size=(rows.size, K))
            scale = pref * eps * float(len(rel_tags)) ** K
            for j in range(rows.size):
                pts = layout.point_slots_row(legs, j)
                rels = [rel_tags[c] for c in choice[j]]
                st = glue(layout, pts, rels)
                values[rows[j]] = scale * surface_weight(st, group, n)
    return values


def evaluate(word: Word | str, areas: dict[str, float], group: GroupSpec,
             samples: int = 1_000_000, seed: int = 0,
             normalized: bool = True) -> EngineResult:
    """Sample-mean estimate; ``error`` is the standard error of the mean."""
    if isinstance(word, str):
        word = parse_word(word)
    word.check_areas(areas)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pref = math.exp(0.5 * group.c_g * word.position_mass(areas)
                    + word.pair_mass(areas))

    # accumulate shifted by pref so a constant integrand reports error 0.0
    n_tot = 0
    acc_d = 0.0
    acc_d2 = 0.0
    n_blocks = (samples + _BLOCK - 1) // _BLOCK
    streams = np.random.SeedSequence(seed).spawn(n_blocks)
    for b in range(n_blocks):
        m = min(_BLOCK, samples - b * _BLOCK)
        rng = np.random.Generator(np.random.Philox(streams[b]))
        vals = _block_values(word, areas, group, m, rng, pref) - pref
        n_tot += m
        acc_d += float(vals.sum())
        acc_d2 += float((vals * vals).sum())

    mean = pref + acc_d / n_tot
    var = max(acc_d2 / n_tot - (acc_d / n_tot) ** 2, 0.0)
    se = math.sqrt(var / max(n_tot - 1, 1))
    if not normalized:
        scale = float(group.N) ** word.n_loops
        mean *= scale
        se *= scale
    return EngineResult(value=mean, error=se, engine="mc",
                        params={"samples": n_tot, "seed": seed,
                                "normalized": normalized})
