"""Command-line entry point.

Exit codes: 0 success, 1 numeric failure, 2 input error, 3 resource cap.
Stochastic commands print ``value  std_error  samples  seed`` separated by
tabs; the same seed gives byte-identical output for any ``--workers``.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import cochain, diagrams, differential, geometry, integrator, vassiliev, weights
from .diagrams import (
    BRAID, FLAVORS, PARITIES, DiagramError, DiagramSum, ParseError, ResourceLimitError, format_diagram,
    format_sum, parse_diagram,
)

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


class InputError(ValueError):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0 or value != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _read(path: str) -> str:
    """File contents; ``bundled:<name>`` reads a file shipped with the package."""
    if path.startswith("bundled:"):
        name = path.split(":", 1)[1]
        full = os.path.join(DATA_DIR, name + ".txt")
        if os.path.exists(full):
            with open(full, encoding="utf-8") as fh:
                return fh.read()
        if name in geometry.BUNDLED:
            return geometry.format_link(geometry.bundled(name))
        raise InputError(f"no bundled input named {name!r}")
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_diagram(path: str):
    d = parse_diagram(_read(path))
    diagrams.require_valid(d)
    return d


def _load_link(path: str, flavor: str | None = None):
    link = geometry.parse_link(_read(path))
    if flavor is not None and link.flavor != flavor:
        raise InputError(f"{path} is a {link.flavor}, expected a {flavor}")
    link.require_valid()
    return link


def _anomaly_table(specs) -> integrator.AnomalyTable:
    table = integrator.AnomalyTable()
    for spec in specs or []:
        path, sep, value = spec.rpartition("=")
        if not sep:
            raise InputError(f"--mu expects <diagram-file>=<value>, got {spec!r}")
        try:
            mu = float(value)
        except ValueError:
            raise InputError(f"bad mu value {value!r}") from None
        table.set(_load_diagram(path), mu)
    return table


def _pick_weight(m: int, k: int, flavor: str, parity: str, index: int):
    space = weights.weight_space(m, k, flavor, parity)
    if not space:
        raise InputError(f"no weight systems of order {k} for m={m} {flavor}")
    if not 1 <= index <= len(space):
        raise InputError(f"--basis-index must lie in 1..{len(space)}")
    return space[index - 1]


# ---------------------------------------------------------------------------
# subcommands

def cmd_enumerate(args, out):
    basis = cochain.basis(args.m, args.parity, args.flavor, args.order, args.degree,
                          args.max_vertices)
    out.write(f"# {len(basis)} diagrams\n")
    out.write("\n".join(format_diagram(d) for d in basis))


def cmd_delta(args, out):
    d = _load_diagram(args.diagram)
    out.write(format_sum(differential.delta(d)))


def cmd_cohomology(args, out):
    out.write(cochain.CohomologyReport.HEADER + "\n")
    if args.table:
        for order in range(1, args.order + 1):
            for degree in range(0, args.degree + 1):
                rep = cochain.cohomology(args.m, args.parity, args.flavor, order, degree,
                                         args.max_vertices)
                out.write(rep.as_row() + "\n")
    else:
        rep = cochain.cohomology(args.m, args.parity, args.flavor, args.order, args.degree,
                                 args.max_vertices)
        out.write(rep.as_row() + "\n")


def cmd_weights(args, out):
    space = weights.weight_space(args.m, args.k, args.flavor, args.parity)
    out.write(f"dim\t{len(space)}\n")
    for i, w in enumerate(space, start=1):
        out.write(f"\n# weight system {i}: values on chord diagrams\n")
        s = DiagramSum()
        for d, c in sorted(w.values.items()):
            s.add(d, Fraction(c), canonical=True)
        out.write(format_sum(s))


def cmd_integrate(args, out):
    d = _load_diagram(args.diagram)
    # braid diagrams need a braid geometry; link diagrams accept either
    link = _load_link(args.link, BRAID if d.flavor == BRAID else None)
    form = integrator.FormChoice(args.form, cap=args.theta_cap)
    est = integrator.integrate(d, link, form, args.samples, args.seed, args.workers)
    table = _anomaly_table(args.mu)
    if integrator.needs_anomaly(d) and table.mu(d) != 0:
        est = est + integrator.anomaly_correction(d, link, table, args.samples, args.seed,
                                                  args.workers).scale(-1)
    out.write(est.as_row() + "\n")


def cmd_invariant(args, out):
    link = _load_link(args.link, args.flavor)
    w = _pick_weight(link.m, args.order, args.flavor, args.parity, args.basis_index)
    est = integrator.invariant(w, link, args.samples, args.seed, _anomaly_table(args.mu),
                               args.workers)
    out.write(est.as_row() + "\n")


def cmd_finite_type_check(args, out):
    sl = vassiliev.parse_singular_link(_read(args.singular_link))
    if sl.base.flavor != args.flavor:
        raise InputError(f"{args.singular_link} is a {sl.base.flavor}, expected a {args.flavor}")
    sl.require_valid()
    w = _pick_weight(sl.base.m, args.order, args.flavor, args.parity, args.basis_index)

    def V(link, seed):
        return integrator.invariant(w, link, args.samples, seed, None, args.workers)

    est = vassiliev.finite_type_defect(V, sl, args.seed)
    out.write(est.as_row() + "\n")


def cmd_validate(args, out):
    text = _read(args.file)
    first = next((ln.strip() for ln in text.splitlines()
                  if ln.strip() and not ln.strip().startswith("#")), "")
    if first.startswith("n="):
        if any(ln.strip().startswith("sing:") for ln in text.splitlines()):
            sl = vassiliev.parse_singular_link(text)
            problems = sl.resolution_problems()
            kind = f"singular link, {sl.k} double points"
        else:
            link = geometry.parse_link(text)
            problems = link.validate()
            kind = f"{link.flavor}, m={link.m}"
    else:
        d = parse_diagram(text)
        problems = diagrams.validate(d)
        if not problems:
            g = diagrams.grading(d)
            kind = f"diagram, order {g.order}, degree {g.degree}"
        else:
            kind = "diagram"
    if problems:
        for p in problems:
            out.write(f"invalid\t{p}\n")
        raise InputError(f"{args.file}: {len(problems)} problem(s)")
    out.write(f"ok\t{kind}\n")


# ---------------------------------------------------------------------------
# parser

def _grading_flags(p, k_name: str = "order"):
    p.add_argument("--m", type=_positive_int, required=True, help="number of strands")
    p.add_argument("--parity", choices=PARITIES, default="odd",
                   help="edge orientation convention (odd parity is n = 3)")
    p.add_argument("--flavor", choices=FLAVORS, required=True, help="link or braid")


def _mc_flags(p):
    p.add_argument("--samples", type=_positive_int, default=1_000_000,
                   help="Monte Carlo samples (accepts 1e6)")
    p.add_argument("--seed", type=_nonneg_int, required=True, help="random seed (required)")
    p.add_argument("--workers", type=_positive_int, default=1,
                   help="worker processes; does not change results")


def _mu_flag(p):
    p.add_argument("--mu", action="append", metavar="DIAGRAM=VALUE",
                   help="anomaly coefficient for a single-strand diagram file (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkcsi",
        description="Diagram complexes, weight systems and configuration space integrals "
                    "for string links and braids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list a canonical diagram basis")
    _grading_flags(p)
    p.add_argument("--order", type=_nonneg_int, required=True)
    p.add_argument("--degree", type=_nonneg_int, required=True)
    p.add_argument("--max-vertices", type=_positive_int, default=diagrams.DEFAULT_MAX_VERTICES,
                   help="refuse bases needing more vertices (exit 3)")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("delta", help="apply the coboundary to a diagram file")
    p.add_argument("diagram", help="diagram file, or bundled:<name>")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("cohomology", help="dimension report for one bidegree or a table")
    _grading_flags(p)
    p.add_argument("--order", type=_positive_int, required=True,
                   help="order (with --table: largest order)")
    p.add_argument("--degree", type=_nonneg_int, required=True,
                   help="degree (with --table: largest degree)")
    p.add_argument("--table", action="store_true", help="sweep orders 1..order, degrees 0..degree")
    p.add_argument("--max-vertices", type=_positive_int, default=diagrams.DEFAULT_MAX_VERTICES)
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("weights", help="basis of the weight-system space")
    _grading_flags(p)
    p.add_argument("--k", type=_positive_int, required=True, help="order")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("integrate", help="configuration space integral of one diagram")
    p.add_argument("diagram", help="diagram file, or bundled:<name>")
    p.add_argument("link", help="link file, or bundled:<name>")
    _mc_flags(p)
    p.add_argument("--form", choices=("uniform", "bump"), default="uniform",
                   help="volume form on S^2")
    p.add_argument("--theta-cap", type=_positive_float, default=geometry.DEFAULT_THETA_CAP,
                   help="polar cap angle of the bump form")
    _mu_flag(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("invariant", help="finite type invariant of a link")
    p.add_argument("link", help="link file, or bundled:<name>")
    p.add_argument("--order", type=_positive_int, required=True)
    p.add_argument("--flavor", choices=FLAVORS, required=True)
    p.add_argument("--parity", choices=PARITIES, default="odd")
    p.add_argument("--basis-index", type=_positive_int, default=1,
                   help="which weight-system basis element to use")
    _mc_flags(p)
    _mu_flag(p)
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("finite-type-check",
                       help="alternating resolution sum of an invariant on a singular link")
    p.add_argument("singular_link", help="singular-link file, or bundled:<name>")
    p.add_argument("--order", type=_positive_int, required=True)
    p.add_argument("--flavor", choices=FLAVORS, required=True)
    p.add_argument("--parity", choices=PARITIES, default="odd")
    p.add_argument("--basis-index", type=_positive_int, default=1)
    _mc_flags(p)
    p.set_defaults(func=cmd_finite_type_check)

    p = sub.add_parser("validate", help="check a diagram, link or singular-link file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        args.func(args, out)
    except ResourceLimitError as exc:
        print(f"error: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except integrator.NumericError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, InputError, DiagramError, geometry.GeometryError,
            vassiliev.RealizerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
