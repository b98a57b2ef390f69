"""Command-line front end.

Exit codes: 0 success, 1 domain error, 2 I/O or parse error. The JSON result
goes to stdout, logs go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import bounds as bd
from .circuit import (
    Architecture,
    ArchitectureError,
    backward_lightcone,
    brickwork_1d,
    contiguous_block,
    gates_crossing,
    regular_connectivity,
    validate,
)
from .hamiltonian import HamiltonianError, HamiltonianSpec, SupportPattern, parse_pauli
from .oracle import MAX_EXACT_N, OracleCapError, exact_gx, exact_second_moment, haar_gx, propagate
from .walk import EstimatorConfig, estimate_second_moment

log = logging.getLogger("flatwalk")

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


class InputError(Exception):
    """Unreadable or malformed input file (exit code 2)."""


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_arch(path: str, lenient: bool = False) -> Architecture:
    data = _read_json(path)
    try:
        return Architecture.from_dict(data, lenient=lenient)
    except (ArchitectureError, TypeError, ValueError) as exc:
        raise InputError(f"malformed architecture in {path}: {exc}") from exc


def _load_ham(path: str) -> HamiltonianSpec:
    data = _read_json(path)
    try:
        return HamiltonianSpec.from_dict(data)
    except HamiltonianError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed Hamiltonian in {path}: {exc}") from exc


def _seed(args) -> int:
    if args.seed is None:
        log.warning("no --seed given; using 0")
        return 0
    return args.seed


def _parse_sites(text: str | None) -> list[int]:
    if text is None or not text.strip():
        return []
    return [int(s) for s in text.split(",")]


# -- subcommands -----------------------------------------------------------


def cmd_validate(args) -> int:
    arch = _load_arch(args.arch, lenient=args.lenient)
    problems = validate(arch)
    _emit({"valid": not problems, "violations": [str(p) for p in problems]})
    for p in problems:
        log.error("%s", p)
    return EXIT_OK if not problems else EXIT_DOMAIN


def cmd_estimate(args) -> int:
    arch = _load_arch(args.arch)
    spec = _load_ham(args.ham)
    config = EstimatorConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        seed=_seed(args),
        sample_override=args.samples,
        method=args.method,
        workers=args.workers,
        reuse_trajectory=args.reuse_trajectory,
    )
    report = estimate_second_moment(arch, spec, config)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_exact(args) -> int:
    arch = _load_arch(args.arch)
    spec = _load_ham(args.ham)
    value = exact_second_moment(arch, spec)
    _emit({"exact": value, "n": arch.n, "q": arch.q, "sum_c2": spec.sum_c2})
    return EXIT_OK


def _ring_hull(n: int, sites: list[int]) -> tuple[int, int]:
    """(start, width) of the shortest ring arc covering ``sites``."""
    best = (0, n)
    for start in sites:
        width = max((s - start) % n for s in sites) + 1
        if width < best[1]:
            best = (start, width)
    return best


def _bounds_for_support(
    arch: Architecture, support: list[int], abs_x: int, r: int | None, one_d: bool, k: int | None
) -> tuple[bd.BoundReport, dict]:
    """Best available lower and upper bound on g_x, plus every candidate."""
    n, q, d = arch.n, arch.q, arch.d
    lowers: list[tuple[float, str]] = []
    uppers: list[tuple[float, float, str]] = []
    if one_d:
        if k is None:
            k = _ring_hull(n, support)[1]
        lowers.append((bd.lower_1d(q, n, k, d), "brickwork_lower"))
        try:
            raw = bd.upper_1d_raw(q, n, k, abs_x, d)
            uppers.append((min(1.0, raw), raw, "brickwork_upper"))
        except bd.BoundNotApplicable:
            log.info("brickwork upper bound not applicable at d=%d", d)
    if len(support) < n:
        lowers.append((bd.lower_general(q, n, abs_x, gates_crossing(arch, support).gates_crossing), "general_lower"))
    else:
        lowers.append(((1 / (q + 1)) ** n, "general_lower"))
    if r is not None:
        raw = bd.upper_general_raw(q, n, abs_x, d, r)
        uppers.append((min(1.0, raw), raw, "general_upper"))
    if not uppers:
        raise bd.BoundError("regular connectivity unavailable; pass --r")
    lower, lower_tag = max(lowers, key=lambda t: t[0])
    upper, upper_raw, upper_tag = min(uppers, key=lambda t: t[0])
    report = bd.BoundReport(
        lower=lower,
        upper=upper,
        lower_formula=lower_tag,
        upper_formula=upper_tag,
        vacuous_upper=upper_raw >= 1.0,
        inputs={"q": q, "n": n, "d": d, "abs_x": abs_x, "r": r, "k": k, "support": support},
    )
    candidates = {tag: v for v, tag in lowers} | {tag: v for v, _, tag in uppers}
    return report, candidates


def cmd_bounds(args) -> int:
    arch = _load_arch(args.arch)
    if args.support is not None:
        support = _parse_sites(args.support)
    elif args.one_d and args.k is not None:
        support = contiguous_block(arch.n, 0, args.k)
    else:
        raise bd.BoundError("give --support, or --one-d with --k")
    if not support:
        raise bd.BoundError("support must be nonempty")
    abs_x = args.abs_x if args.abs_x is not None else len(support)
    if abs_x > len(support):
        raise bd.BoundError(f"--abs-x {abs_x} exceeds the support size {len(support)}")
    r = args.r if args.r is not None else regular_connectivity(arch)
    report, candidates = _bounds_for_support(arch, support, abs_x, r, args.one_d, args.k)
    out = report.to_dict()
    out["candidates"] = candidates
    _emit(out)
    return EXIT_OK


def _default_sweep_spec(n: int, k: int) -> HamiltonianSpec:
    return HamiltonianSpec.from_terms(n, 2, [(SupportPattern.on_sites(range(k), op=3), 1.0)])


def cmd_sweep(args) -> int:
    n, q = args.n, args.q
    if args.ham is not None:
        spec = _load_ham(args.ham)
        if (spec.n, spec.q) != (n, q):
            raise HamiltonianError(f"Hamiltonian is on (n={spec.n}, q={spec.q}), sweep on (n={n}, q={q})")
    else:
        if q != 2:
            spec = HamiltonianSpec.from_terms(n, q, [(SupportPattern.on_sites(range(args.k), op=1), 1.0)])
        else:
            spec = _default_sweep_spec(n, args.k)
    if args.d_min < 1 or args.d_max < args.d_min:
        raise ArchitectureError(f"invalid depth range [{args.d_min}, {args.d_max}]")
    seed = _seed(args)
    rows = []
    for d in range(args.d_min, args.d_max + 1):
        arch = brickwork_1d(n, q, d)
        config = EstimatorConfig(
            epsilon=args.epsilon, delta=args.delta, seed=seed, sample_override=args.samples, workers=args.workers
        )
        est = estimate_second_moment(arch, spec, config)
        r = regular_connectivity(arch)
        lower = upper = 0.0
        vacuous = False
        for pattern, w in zip(spec.patterns, spec.weights):
            sites = sorted(pattern.support)
            start, k = _ring_hull(n, sites)
            rep, _ = _bounds_for_support(arch, sites, pattern.weight, r, True, k)
            lower += w * rep.lower
            upper += w * rep.upper
            vacuous = vacuous or rep.vacuous_upper
        exact = exact_second_moment(arch, spec) if n <= MAX_EXACT_N else None
        if exact is not None and not lower <= exact <= upper:
            raise RuntimeError(f"bound sandwich violated at d={d}: {lower} <= {exact} <= {upper}")
        rows.append({"d": d, "estimate": est.estimate, "std_error": est.std_error,
                     "lower": lower, "upper": upper, "exact": exact, "vacuous_upper": vacuous})
    exacts = [row["exact"] for row in rows if row["exact"] is not None]
    if any(b > a for a, b in zip(exacts, exacts[1:])):
        log.warning("exact second moment is not monotone in depth on this sweep")
    try:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["d", "estimate", "std_error", "lower", "upper", "exact", "vacuous_upper"])
            for row in rows:
                writer.writerow([
                    row["d"], _fmt(row["estimate"]), _fmt(row["std_error"]), _fmt(row["lower"]),
                    _fmt(row["upper"]), "" if row["exact"] is None else _fmt(row["exact"]),
                    str(row["vacuous_upper"]).lower(),
                ])
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from exc
    _emit({"rows": len(rows), "out": str(args.out)})
    return EXIT_OK


def _haar_term(args, n: int) -> SupportPattern:
    if args.pauli is not None:
        if len(args.pauli) != n:
            raise HamiltonianError(f"Pauli string has length {len(args.pauli)}, expected {n}")
        if set(args.pauli.upper()) <= {"I"}:
            return SupportPattern(())
        return parse_pauli([(args.pauli, 1.0)]).patterns[0]
    sites = _parse_sites(args.sites)
    ops = _parse_sites(args.ops) if args.ops else [1] * len(sites)
    if len(ops) != len(sites):
        raise HamiltonianError("--sites and --ops differ in length")
    return SupportPattern(tuple(zip(sites, ops)))


def cmd_haar_check(args) -> int:
    arch = _load_arch(args.arch)
    term = _haar_term(args, arch.n)
    haar = haar_gx(arch, term, samples=args.samples, seed=_seed(args), workers=args.workers)
    exact = exact_gx(arch, term)
    diff = haar.estimate - exact
    if haar.std_error > 0:
        z = diff / haar.std_error
    else:
        z = 0.0 if diff == 0 else float("inf")
    _emit({"haar": haar.to_dict(), "exact": exact, "z_score": z})
    return EXIT_OK


def cmd_gen_1d(args) -> int:
    arch = brickwork_1d(args.n, args.q, args.d, p=args.p)
    try:
        arch.dump(args.out)
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from exc
    _emit({"out": str(args.out), "n": arch.n, "q": arch.q, "m": arch.m, "d": arch.d})
    return EXIT_OK


def cmd_lightcone(args) -> int:
    arch = _load_arch(args.arch)
    cone = backward_lightcone(arch, _parse_sites(args.support))
    _emit({"sites": sorted(cone.sites), "n_prime": cone.n_prime})
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatwalk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an architecture file against the model")
    p.add_argument("arch")
    p.add_argument("--lenient", action="store_true", help="allow sites never entangled")
    p.set_defaults(func=cmd_validate)

    def sampling(p, default_eps=0.05, default_delta=0.05):
        p.add_argument("--epsilon", type=float, default=default_eps)
        p.add_argument("--delta", type=float, default=default_delta)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None, help="override the Chernoff sample count")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("estimate", help="Monte Carlo estimate of E f^2")
    p.add_argument("arch")
    p.add_argument("ham")
    sampling(p)
    p.add_argument("--method", choices=("biased", "unbiased"), default="biased")
    p.add_argument("--reuse-trajectory", action="store_true",
                   help="score every term on each walk instead of drawing one term")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("exact", help="exact E f^2 by propagating the walk distribution")
    p.add_argument("arch")
    p.add_argument("ham")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bounds", help="analytic bounds on g_x")
    p.add_argument("arch")
    p.add_argument("--support", help="comma-separated sites of supp(x)")
    p.add_argument("--abs-x", type=int, default=None)
    p.add_argument("--one-d", action="store_true", help="also apply the periodic-brickwork bounds")
    p.add_argument("--k", type=int, default=None, help="width of the adjacent block holding supp(x)")
    p.add_argument("--r", type=int, default=None, help="regular connectivity, when it cannot be computed")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="depth sweep over the periodic brickwork, written as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--k", type=int, default=1, help="locality of the default Z..Z term")
    p.add_argument("--d-min", type=int, required=True)
    p.add_argument("--d-max", type=int, required=True)
    p.add_argument("--ham", default=None, help="Hamiltonian file (default: Z on sites 0..k-1)")
    sampling(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("haar-check", help="compare the walk with Haar statevector sampling for one term")
    p.add_argument("arch")
    p.add_argument("--pauli", help="Pauli string of the term, e.g. ZI")
    p.add_argument("--sites", help="comma-separated sites of the term")
    p.add_argument("--ops", help="comma-separated basis indices matching --sites")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_haar_check)

    p = sub.add_parser("gen-1d", help="write a periodic brickwork architecture")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_1d)

    p = sub.add_parser("lightcone", help="backward lightcone of a set of sites")
    p.add_argument("arch")
    p.add_argument("--support", required=True)
    p.set_defaults(func=cmd_lightcone)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ArchitectureError, HamiltonianError, OracleCapError, bd.BoundError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
