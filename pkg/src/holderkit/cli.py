"""Command-line front end.

Exit codes: 0 when every reported limit converged, 2 when some limit did not
converge (diverged, oscillating or inconclusive), 1 for usage, parse and
domain errors. Diagnostics go to stderr; results go to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from holderkit.diffops import Direction
from holderkit.errors import DomainError, HolderKitError, InconsistentLimits, NonConvergent, ParseError
from holderkit.expansion import Ladder, compound_power_coeffs, error_curve, frac_taylor_coeffs
from holderkit.exprlang import FUNCTIONS, RealFn
from holderkit.ito import Compound2Fn, ito_derivative
from holderkit.limits import DEFAULT_TOL, EpsSchedule
from holderkit.regularize import ExponentLadder, multi_regularized_derivative, regularized_derivative
from holderkit.velocity import Route, holder_exponent, mixed_velocity

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENT = 0, 1, 2
TOL_ENV = "HOLDERKIT_TOL"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Validated command configuration; echoed into CSV output."""

    command: str
    expr: str | None = None
    at: float = 0.0
    beta: float | None = None
    alpha: float | None = None
    n: int = 0
    dir: str = "fwd"
    eps0: float = 2.0**-3
    ratio: float = 0.5
    steps: int = 16
    tol: float = DEFAULT_TOL
    output: str = "table"
    out_path: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def schedule(self) -> EpsSchedule:
        return EpsSchedule(self.eps0, self.ratio, self.steps)

    @property
    def directions(self) -> list[Direction]:
        if self.dir == "both":
            return [Direction.FORWARD, Direction.BACKWARD]
        return [Direction.parse(self.dir)]

    def header(self) -> str:
        items = {k: v for k, v in asdict(self).items() if k not in ("extra", "out_path", "output")}
        items.update(self.extra)
        return "# config: " + " ".join(f"{k}={_fmt_cfg(v)}" for k, v in items.items() if v is not None)


def _fmt_cfg(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v).replace(" ", "")


def _g(v) -> str:
    return f"{float(v):.17g}"


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number") from None
    return tol


class Report:
    """Rows for one of the three output schemas, rendered as a table or CSV."""

    def __init__(self, config: RunConfig, columns: Sequence[str]):
        self.config = config
        self.columns = list(columns)
        self.rows: list[list] = []
        self.failed = False

    def add(self, *row, ok: bool = True):
        self.rows.append(list(row))
        self.failed |= not ok

    def render(self) -> str:
        buf = io.StringIO()
        if self.config.output == "csv":
            buf.write(self.config.header() + "\n")
            buf.write(",".join(self.columns) + "\n")
            for row in self.rows:
                buf.write(",".join(_g(v) if isinstance(v, (float, int)) and not isinstance(v, bool) else str(v)
                                   for v in row) + "\n")
            return buf.getvalue()
        cells = [self.columns] + [[f"{v:.12g}" if isinstance(v, float) else str(v) for v in r] for r in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.columns))]
        for r in cells:
            buf.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
        return buf.getvalue()


def _fn(source: str) -> RealFn:
    return RealFn.from_expr(source)


def _velocity_row(report, name, est):
    report.add(name, float(est.value), str(est.status), float(est.residual_gamma), ok=est.converged)


def cmd_velocity(cfg: RunConfig) -> Report:
    f = _fn(cfg.expr)
    rep = Report(cfg, ["quantity", "value", "status", "residual"])
    values = {}
    for d in cfg.directions:
        vel = mixed_velocity(f, cfg.at, cfg.n, cfg.beta, d, cfg.schedule, cfg.extra.get("route", "definition"),
                             cfg.tol, strict=False)
        _velocity_row(rep, f"velocity_{d.short}", vel.estimate)
        rep.add(f"samples_used_{d.short}", vel.estimate.samples_used, "-", 0.0)
        values[d] = vel
    if len(values) == 2:
        fwd, bwd = values.values()
        rep.add("agreement", abs(fwd.value - bwd.value), "-", 0.0)
    return rep


def _series(cfg: RunConfig, d: Direction):
    """The requested series and the function it expands."""
    compound = cfg.extra.get("compound")
    if compound:
        if cfg.at != 0:
            raise UsageError("--compound expands about 0; use --at 0")
        if compound not in FUNCTIONS:
            raise UsageError(f"--compound takes a function name from {sorted(FUNCTIONS)}")
        g = _fn(f"{compound}(x)")
        target = _fn(f"{compound}(x^{cfg.alpha!r})")
        return compound_power_coeffs(g, cfg.alpha, cfg.n, d), target
    f = _fn(cfg.expr)
    return frac_taylor_coeffs(f, cfg.at, cfg.alpha, cfg.n, d, cfg.schedule, cfg.tol, strict=False), f


def cmd_expand(cfg: RunConfig) -> Report:
    rep = Report(cfg, ["k", "exponent", "coefficient", "status"] if len(cfg.directions) == 1
                 else ["dir", "k", "exponent", "coefficient", "status"])
    for d in cfg.directions:
        s, _ = _series(cfg, d)
        statuses = s.statuses()
        terms = s.terms() if s.ladder is Ladder.ALPHA_PLUS_K else [(0, 0.0, s.coeffs[0])] + s.terms()
        for k, p, c in terms:
            ok = statuses[k] in ("converged", "exact")
            row = (k, p, c, statuses[k])
            rep.add(*((d.short,) + row if len(cfg.directions) > 1 else row), ok=ok)
    return rep


def cmd_errorcurve(cfg: RunConfig) -> Report:
    lo, hi, points = cfg.extra["lo"], cfg.extra["hi"], cfg.extra["points"]
    if points < 1 or not (0 < lo < hi) or not all(map(math.isfinite, (lo, hi))):
        raise UsageError("empty or invalid grid: need 0 < --lo < --hi and --points >= 1")
    if len(cfg.directions) != 1:
        raise UsageError("errorcurve takes a single direction")
    d = cfg.directions[0]
    grid = [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), points)] if points > 1 else [lo]
    rep = Report(cfg, ["x", "abs_error"])
    s, f = _series(cfg, d)
    bad = [k for k, st in enumerate(s.statuses()) if st not in ("converged", "exact")]
    if bad:
        rep.failed = True
        print(f"warning: coefficients {bad} did not converge", file=sys.stderr)
    curve = error_curve(f, s, grid)
    for x, err in curve.points:
        rep.add(x, err)
    for x in curve.skipped:
        print(f"note: dropped grid point {x:.17g} (outside the domain)", file=sys.stderr)
    return rep


def cmd_regularize(cfg: RunConfig) -> Report:
    f = _fn(cfg.expr)
    rep = Report(cfg, ["quantity", "value", "status", "residual"])
    ladder_src = cfg.extra.get("ladder")
    for d in cfg.directions:
        if ladder_src:
            ladder = ExponentLadder(tuple(float(a) for a in ladder_src.split(",")))
            rd = multi_regularized_derivative(f, cfg.at, ladder, cfg.n, d, cfg.schedule, cfg.tol)
        else:
            rd = regularized_derivative(f, cfg.at, cfg.beta, d, cfg.schedule, cfg.tol, strict=False)
        _velocity_row(rep, f"regularized_{d.short}", rd.estimate)
        rep.add(f"kernel_{d.short}", rd.kernel_constant, "-", 0.0)
    return rep


def cmd_exponent(cfg: RunConfig) -> Report:
    f = _fn(cfg.expr)
    rep = Report(cfg, ["quantity", "value", "status", "residual"])
    for d in cfg.directions:
        r = holder_exponent(f, cfg.at, d, cfg.schedule, cfg.tol)
        rep.add(f"alpha_{d.short}", r.alpha_hat, "flagged" if r.flagged else "fit", r.slope_fit_residual)
        _velocity_row(rep, f"velocity_{d.short}", r.velocity_at_alpha.estimate)
    return rep


def cmd_ito(cfg: RunConfig) -> Report:
    f = Compound2Fn.from_expr(cfg.extra["f"])
    w = _fn(cfg.extra["w"])
    rep = Report(cfg, ["quantity", "value", "status", "residual"])
    for d in cfg.directions:
        r = ito_derivative(f, w, cfg.at, d, cfg.schedule, cfg.tol, check=False)
        ok = abs(r.rhs - r.direct) <= 10 * cfg.tol * max(1.0, abs(r.rhs))
        rep.add(f"ito_{d.short}", r.rhs, "converged" if ok else "inconsistent", abs(r.rhs - r.direct), ok=ok)
        rep.add(f"direct_{d.short}", r.direct, "converged", 0.0)
        for k, v in r.parts.items():
            rep.add(f"{k}_{d.short}", float(v), "-", 0.0)
    return rep


COMMANDS = {
    "velocity": cmd_velocity,
    "expand": cmd_expand,
    "errorcurve": cmd_errorcurve,
    "regularize": cmd_regularize,
    "exponent": cmd_exponent,
    "ito": cmd_ito,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="holderkit", description="Fractional velocities, expansions and regularized derivatives.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, expr=True):
        if expr:
            sp.add_argument("--expr", required=True, help="function of x, e.g. 'asin(1-x)'")
        sp.add_argument("--at", type=float, default=0.0, help="base point")
        sp.add_argument("--dir", choices=("fwd", "bwd", "both"), default="fwd")
        sp.add_argument("--eps0", type=float, default=2.0**-3)
        sp.add_argument("--ratio", type=float, default=0.5)
        sp.add_argument("--steps", type=int, default=16)
        sp.add_argument("--tol", type=float, default=None, help=f"default {DEFAULT_TOL} or ${TOL_ENV}")
        sp.add_argument("--output", choices=("table", "csv"), default="table")
        sp.add_argument("--out", default=None, help="write to this file instead of stdout")

    sp = sub.add_parser("velocity", help="fractional velocity of order n+beta")
    common(sp)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--route", choices=[r.value for r in Route], default="definition")

    for name in ("expand", "errorcurve"):
        sp = sub.add_parser(name, help="mixed-order Taylor coefficients" if name == "expand"
                            else "truncation error of the expansion on a log grid")
        common(sp, expr=False)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--expr")
        src.add_argument("--compound", help="outer function g of f(x) = g(x^alpha), e.g. 'cos'")
        sp.add_argument("--alpha", type=float, required=True)
        sp.add_argument("--n", type=int, default=2)
        if name == "errorcurve":
            sp.add_argument("--lo", type=float, default=1e-4)
            sp.add_argument("--hi", type=float, default=1e-1)
            sp.add_argument("--points", type=int, default=64)

    sp = sub.add_parser("regularize", help="regularized derivative")
    common(sp)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--ladder", default=None, help="comma-separated grades for multi-regularization")
    sp.add_argument("--n", type=int, default=0)

    sp = sub.add_parser("exponent", help="pointwise Holder exponent")
    common(sp)

    sp = sub.add_parser("ito", help="compound rule for f(x, w(x))")
    common(sp, expr=False)
    sp.add_argument("--f", required=True, help="function of x and w, e.g. 'w^2/2'")
    sp.add_argument("--w", required=True, help="function of x, e.g. 'sqrt(x)'")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    tol = ns.tol if ns.tol is not None else _default_tol()
    if not (tol > 0 and math.isfinite(tol)):
        raise UsageError(f"tolerance must be positive, got {tol}")
    cfg = RunConfig(
        command=ns.command,
        expr=getattr(ns, "expr", None),
        at=ns.at,
        beta=getattr(ns, "beta", None),
        alpha=getattr(ns, "alpha", None),
        n=getattr(ns, "n", 0),
        dir=ns.dir,
        eps0=ns.eps0,
        ratio=ns.ratio,
        steps=ns.steps,
        tol=tol,
        output=ns.output,
        out_path=ns.out,
    )
    for key in ("route", "compound", "lo", "hi", "points", "ladder", "f", "w"):
        if getattr(ns, key, None) is not None:
            cfg.extra[key] = getattr(ns, key)
    try:
        cfg.schedule
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.n < 0:
        raise UsageError("--n must be non-negative")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config(ns)
        report = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergent, InconsistentLimits) as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENT
    except (DomainError, HolderKitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    text = report.render()
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if report.failed:
        print("one or more limits did not converge", file=sys.stderr)
        return EXIT_NONCONVERGENT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
