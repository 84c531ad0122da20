"""Command-line front end: evaluate loops, run the table, check identities.

Subcommands
-----------
eval      one word, one engine -> JSON (default) or CSV row
master    planar-limit value of a word (exact free-cumulant route)
table     closed-form regression over the benchmark table
mm_check  area-derivative identity at one crossing (finite differences)
compare   several engines on one word, side by side
limits    N=1 exactness / large-area leading-term ratios

Exit codes: 0 success, 1 regression failure, 2 parse error, 3 engine
refusal, 4 budget exceeded.  Errors print a JSON object with a
machine-readable ``code`` and a human message on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from .engine import BudgetExceeded, EngineRefusal, EngineResult
from .words import WordParseError, parse_areas, parse_word

SCHEMA_VERSION = 1

CSV_HEADER = "word,group,N,engine,value,error,seconds"


def _apply_threads(args) -> None:
    n = getattr(args, "threads", None) or os.environ.get("YM2_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(n))


def _areas_for(word, text: str | None) -> dict[str, float]:
    """Parse an area assignment; letters default to 1.0 when none given."""
    if text:
        return parse_areas(text)
    return {l: 1.0 for l in word.letters}


def _emit(args, word, group_kind: str, N, res: EngineResult,
          seconds: float) -> None:
    if args.deterministic:
        seconds = 0.0
    if args.format == "csv":
        print(CSV_HEADER)
        print(f"{word.canonical()},{group_kind},{'' if N is None else N},"
              f"{res.engine},{res.value!r},{res.error!r},{seconds:.3f}")
        return
    print(json.dumps({
        "schema": SCHEMA_VERSION,
        "value": res.value,
        "error": res.error,
        "engine": res.engine,
        "params": res.params,
        "word_canonical": word.canonical(),
        "group": group_kind,
        "N": N,
        "wall_time_ms": 0.0 if args.deterministic else seconds * 1000.0,
    }))


def _dispatch(word, areas, args) -> EngineResult:
    from .groups import GroupSpec

    engine = args.engine
    normalized = not args.unnormalized
    if engine == "series":
        from . import series
        return series.evaluate(word, areas, GroupSpec(args.group, args.N),
                               k_max=args.k_max, budget=args.budget,
                               normalized=normalized)
    if engine == "mc":
        from . import mc
        return mc.evaluate(word, areas, GroupSpec(args.group, args.N),
                           samples=args.samples, seed=args.seed,
                           normalized=normalized)
    if engine == "walk":
        from . import walk
        return walk.evaluate(word, areas, GroupSpec(args.group, args.N),
                             normalized=normalized)
    if engine == "holonomy":
        from . import holonomy
        return holonomy.evaluate(word, areas, GroupSpec(args.group, args.N),
                                 J=args.J, samples=args.samples,
                                 seed=args.seed, stepper=args.stepper,
                                 normalized=normalized)
    if engine == "master":
        from . import masterfield
        value = masterfield.master_field(word, areas)
        return EngineResult(value=value, error=0.0, engine="master",
                            params={})
    if engine == "forest":
        from . import masterfield
        raw = masterfield.poisson_forest_estimate(
            word, areas, samples=args.samples, seed=args.seed)
        scale = math.exp(-word.position_mass(areas) / 2)
        return EngineResult(value=raw.value * scale, error=raw.error * scale,
                            engine="forest",
                            params={**raw.params, "mass_scale": scale})
    raise WordParseError(f"unknown engine {engine!r}")


def _cmd_eval(args) -> int:
    if args.job:
        try:
            with open(args.job) as fh:
                job = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise WordParseError(f"cannot read job file: {exc}") from exc
        args.word = job.get("word", args.word)
        if "areas" in job:
            args.areas = ",".join(f"{k}={v}" for k, v in job["areas"].items())
        args.group = job.get("group", args.group)
        args.N = job.get("N", args.N)
        args.engine = job.get("engine", args.engine)
        args.unnormalized = not job.get("normalized", not args.unnormalized)
        args.format = job.get("format", args.format)
        for key, val in job.get("params", {}).items():
            setattr(args, key.replace("-", "_"), val)
    if not args.word:
        raise WordParseError("no word given (use --word or --job)")
    word = parse_word(args.word)
    areas = _areas_for(word, args.areas)
    t0 = time.perf_counter()
    res = _dispatch(word, areas, args)
    seconds = time.perf_counter() - t0
    n_out = None if args.engine in ("master", "forest") else args.N
    _emit(args, word, args.group, n_out, res, seconds)
    return 0


def _cmd_master(args) -> int:
    from . import masterfield
    word = parse_word(args.word)
    areas = _areas_for(word, args.areas)
    t0 = time.perf_counter()
    value = masterfield.master_field(word, areas)
    res = EngineResult(value=value, error=0.0, engine="master", params={})
    _emit(args, word, "U", None, res, time.perf_counter() - t0)
    return 0


def _parse_rows(text: str | None):
    from .tables import ROWS
    if not text:
        return list(ROWS)
    out = []
    for part in text.split(","):
        idx = int(part)
        if not 1 <= idx <= len(ROWS):
            raise WordParseError(f"unknown row id {idx}")
        out.append(ROWS[idx - 1])
    return out


def _cmd_table(args) -> int:
    from .groups import GroupSpec
    from . import series

    rows = _parse_rows(args.rows)
    grid = [float(x) for x in args.grid.split(",")]
    n_values = [int(x) for x in args.N.split(",")]
    failures = 0
    if args.format == "csv":
        print("row,word,group,N,engine,max_deviation,tolerance,seconds")
    for r in rows:
        if r.closed_form is None:
            if args.format != "csv":
                print(f"row {r.index:2d}: skipped (Not computed here)")
            continue
        letters = r.variables
        points = [dict(zip(letters, combo))
                  for combo in _grid_points(grid, len(letters))]
        for N in n_values:
            group = GroupSpec("U", N)
            engines = ["series"]
            if "'" not in r.word and args.walk:
                engines.append("walk")
            for engine in engines:
                t0 = time.perf_counter()
                worst = 0.0
                tol = args.tolerance
                eval_points = points if engine == "series" else points[:1]
                for areas in eval_points:
                    ref = r.closed_form(areas, N)
                    if engine == "series":
                        res = series.evaluate(r.word, areas, group,
                                              budget=args.budget,
                                              tail_target=1e-9)
                        dev = abs(res.value - ref)
                        ok = dev <= tol + res.error
                    else:
                        from . import walk
                        res = walk.evaluate(r.word, areas, group)
                        dev = abs(res.value - ref)
                        ok = dev <= tol
                    worst = max(worst, dev)
                    if not ok:
                        failures += 1
                seconds = time.perf_counter() - t0
                if args.deterministic:
                    seconds = 0.0
                if args.format == "csv":
                    print(f"{r.index},{r.word},U,{N},{engine},{worst!r},"
                          f"{tol!r},{seconds:.3f}")
                else:
                    print(f"row {r.index:2d} N={N} {engine:6s}: "
                          f"max|dev| {worst:.3e} over {len(eval_points)} "
                          f"points ({seconds:.1f}s)")
    if failures:
        print(f"{failures} grid point(s) out of tolerance", file=sys.stderr)
        return 1
    return 0


def _grid_points(grid, n):
    if n == 0:
        yield ()
        return
    for rest in _grid_points(grid, n - 1):
        for v in grid:
            yield rest + (v,)


def _parse_faces(text: str):
    faces = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok == ".":
            faces.append(None)
        elif tok.startswith("-"):
            faces.append((-1, tok[1:]))
        else:
            faces.append((1, tok.lstrip("+")))
    return faces


def _cmd_mm_check(args) -> int:
    from .groups import GroupSpec
    from .series import makeenko_migdal_check

    word = parse_word(args.word)
    areas = _areas_for(word, args.areas)
    out = makeenko_migdal_check(
        word, areas, _parse_faces(args.faces), args.split,
        GroupSpec(args.group, args.N), h=args.h, su_mirror=args.su_mirror)
    out["schema"] = SCHEMA_VERSION
    print(json.dumps(out))
    if args.tol is not None and out["residual"] > args.tol:
        return 1
    return 0


def _cmd_compare(args) -> int:
    word = parse_word(args.word)
    areas = _areas_for(word, args.areas)
    results = []
    for engine in args.engines.split(","):
        args.engine = engine.strip()
        t0 = time.perf_counter()
        res = _dispatch(word, areas, args)
        seconds = 0.0 if args.deterministic else time.perf_counter() - t0
        results.append((res, seconds))
    if args.format == "csv":
        print(CSV_HEADER)
        for res, seconds in results:
            n_out = "" if res.engine in ("master", "forest") else args.N
            print(f"{word.canonical()},{args.group},{n_out},{res.engine},"
                  f"{res.value!r},{res.error!r},{seconds:.3f}")
    else:
        spread = max(r.value for r, _ in results) - min(
            r.value for r, _ in results)
        print(json.dumps({
            "schema": SCHEMA_VERSION,
            "word_canonical": word.canonical(),
            "group": args.group,
            "N": args.N,
            "max_spread": spread,
            "results": [{"engine": r.engine, "value": r.value,
                         "error": r.error, "seconds": s,
                         "params": r.params} for r, s in results],
        }))
    return 0


def _cmd_limits(args) -> int:
    if args.mode == "n1":
        return _limits_n1(args)
    return _limits_large_area(args)


def _limits_n1(args) -> int:
    from .groups import GroupSpec
    from .series import evaluate, n1_value
    from .tables import computed_rows

    print("row,word,value,reference,abs_dev")
    worst = 0.0
    for r in computed_rows():
        areas = {v: args.area for v in r.variables}
        res = evaluate(r.word, areas, GroupSpec("U", 1), tail_target=1e-12)
        ref = n1_value(r.word, areas)
        dev = abs(res.value - ref)
        worst = max(worst, dev)
        print(f"{r.index},{r.word},{res.value!r},{ref!r},{dev:.3e}")
    return 0 if worst <= 1e-8 else 1


def _limits_large_area(args) -> int:
    from . import masterfield

    word = parse_word(args.word)
    base = _areas_for(word, args.areas)
    poly = masterfield.forest_polynomial(word)
    print("scale,value,reference,ratio")
    for scale in (float(s) for s in args.scales.split(",")):
        areas = {l: a * scale for l, a in base.items()}
        mass = word.position_mass(areas)
        value = masterfield.master_field(word, areas)
        ref = math.exp(-mass / 2) * float(poly.leading_term(areas))
        ratio = value / ref if ref else math.inf
        print(f"{scale!r},{value!r},{ref!r},{ratio!r}")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ym2",
        description="Wilson loop expectations of 2D Yang-Mills on the plane")
    p.add_argument("--threads", type=int, default=None,
                   help="cap engine-internal threads (also: YM2_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, word_required=True):
        sp.add_argument("--word", required=word_required, default=None,
                        help="loop word, e.g. \"t t s\" or \"(t)(t s)\"; "
                             "' marks an inverse, | separates loops")
        sp.add_argument("--areas", default=None,
                        help="face areas like t=0.4,s=0.3 (default: all 1.0)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--deterministic", action="store_true",
                        help="zero out wall-clock fields for stable output")

    e = sub.add_parser("eval", help="evaluate one word with one engine")
    common(e, word_required=False)
    e.add_argument("--group", choices=("U", "SO", "SU", "Sp"), default="U")
    e.add_argument("--N", type=int, default=2)
    e.add_argument("--engine", default="series",
                   choices=("series", "mc", "walk", "holonomy", "master",
                            "forest"))
    e.add_argument("--k-max", dest="k_max", type=int, default=None)
    e.add_argument("--budget", type=int, default=10_000_000)
    e.add_argument("--samples", type=int, default=100_000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--J", type=int, default=200)
    e.add_argument("--stepper", choices=("exp", "euler"), default="exp")
    e.add_argument("--unnormalized", action="store_true")
    e.add_argument("--job", default=None,
                   help="JSON job file; its fields override the flags")
    e.set_defaults(func=_cmd_eval)

    m = sub.add_parser("master", help="planar-limit value (exact)")
    common(m)
    m.set_defaults(func=_cmd_master)

    t = sub.add_parser("table", help="closed-form regression table")
    t.add_argument("--rows", default=None, help="comma list, default all")
    t.add_argument("--grid", default="0.2,0.5,1.0")
    t.add_argument("--N", default="2,3")
    t.add_argument("--tolerance", type=float, default=1e-6)
    t.add_argument("--budget", type=int, default=12_000_000)
    t.add_argument("--walk", action="store_true",
                   help="also spot-check inverse-free rows with the walk")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    t.add_argument("--deterministic", action="store_true")
    t.set_defaults(func=_cmd_table)

    mm = sub.add_parser("mm_check", help="crossing area-derivative identity")
    common(mm)
    mm.add_argument("--faces", required=True,
                    help="four faces around the crossing; '.' = unbounded; "
                         "leading '-' flips the derivative sign, so pass "
                         "with '=': --faces=\"-t1,.,-t2,.\"")
    mm.add_argument("--split", required=True,
                    help="two-loop word after uncrossing, e.g. \"t1 | t2'\"")
    mm.add_argument("--group", choices=("U", "SU"), default="U")
    mm.add_argument("--N", type=int, default=2)
    mm.add_argument("--h", type=float, default=1e-3)
    mm.add_argument("--su-mirror", dest="su_mirror", default=None,
                    help="single-loop uncrossing for the SU right side")
    mm.add_argument("--tol", type=float, default=None,
                    help="exit 1 if the residual exceeds this")
    mm.set_defaults(func=_cmd_mm_check)

    c = sub.add_parser("compare", help="several engines, one word")
    common(c)
    c.add_argument("--group", choices=("U", "SO", "SU", "Sp"), default="U")
    c.add_argument("--N", type=int, default=2)
    c.add_argument("--engines", default="series,mc")
    c.add_argument("--k-max", dest="k_max", type=int, default=None)
    c.add_argument("--budget", type=int, default=10_000_000)
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--J", type=int, default=200)
    c.add_argument("--stepper", choices=("exp", "euler"), default="exp")
    c.add_argument("--unnormalized", action="store_true")
    c.set_defaults(func=_cmd_compare)

    li = sub.add_parser("limits", help="N=1 exactness / large-area ratios")
    li.add_argument("--mode", choices=("n1", "large-area"), required=True)
    li.add_argument("--word", default="t t s")
    li.add_argument("--areas", default=None)
    li.add_argument("--area", type=float, default=0.4,
                    help="n1 mode: area given to every face")
    li.add_argument("--scales", default="1,2,4,8")
    li.add_argument("--format", choices=("json", "csv"), default="csv")
    li.add_argument("--deterministic", action="store_true")
    li.set_defaults(func=_cmd_limits)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _apply_threads(args)
    try:
        return args.func(args)
    except WordParseError as exc:
        print(json.dumps({"error": {"code": "parse", "message": str(exc)}}),
              file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad parameter values (N = 0, odd-N Sp, samples = 0, ...) are user
        # input errors, same exit code as a malformed word
        print(json.dumps({"error": {"code": "parse", "message": str(exc)}}),
              file=sys.stderr)
        return 2
    except EngineRefusal as exc:
        print(json.dumps({"error": {"code": "refusal", "message": str(exc)}}),
              file=sys.stderr)
        return 3
    except BudgetExceeded as exc:
        print(json.dumps({"error": {"code": "budget", "message": str(exc)}}),
              file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
