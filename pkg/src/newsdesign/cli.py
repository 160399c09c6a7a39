"""Command-line front end.

Every command validates its numeric arguments before doing any work,
writes its output file atomically, and prints a one-line summary.
Exit status: 0 on success, 2 on invalid input, 3 when a computation fails.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import cheaptalk, commitment, horizon, infostruct, percentile
from .concavify import MIN_GRID, GridConfig, default_grid_size
from .gainloss import Quadratic, babbling_payoff, base_from_json, check_shape, spec_from_json, sqrt_spec

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
FIGURES = ("fig2", "fig3_left", "fig3_right", "figA1", "fig4", "figOA1", "tableOA1")


class InvalidInput(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInput(message)


# ---------------------------------------------------------------------------
# formatting and output


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".12g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence], title: str | None = None) -> str:
    buf = io.StringIO()
    if title:
        buf.write(f"# {title}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text: str, summary: str) -> None:
    """Write the payload to ``--out`` (then print the summary) or to stdout."""
    if args.out:
        write_atomic(args.out, text)
        print(summary)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument validation


def _load_json_arg(raw: str, what: str):
    text = raw
    if not raw.lstrip().startswith(("{", "[")):
        try:
            text = Path(raw).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidInput(f"cannot read {what} file {raw!r}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{what} is not valid JSON: {exc.msg}") from exc


def load_spec(raw: str):
    try:
        return spec_from_json(_load_json_arg(raw, "--mu"))
    except InvalidInput:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise InvalidInput(f"bad gain-loss specification: {exc}") from exc


def load_base(raw: str):
    obj = {"kind": "sqrt"} if raw.strip() == "sqrt" else _load_json_arg(raw, "--base")
    try:
        return base_from_json(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise InvalidInput(f"bad base specification: {exc}") from exc


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidInput(message)


def _prior(x: float, name: str = "--pi0", closed: bool = True) -> float:
    ok = 0.0 <= x <= 1.0 if closed else 0.0 < x < 1.0
    _require(math.isfinite(x) and ok, f"{name} must lie in {'[0, 1]' if closed else '(0, 1)'}, got {x}")
    return x


def _horizon(T: int) -> int:
    _require(T >= 2, f"--T must be at least 2, got {T}")
    return T


def _grid(n: int | None, fallback: int | None = None) -> GridConfig:
    if n is None:
        try:
            n = default_grid_size(fallback) if fallback is not None else default_grid_size()
        except ValueError as exc:
            raise InvalidInput(str(exc)) from exc
    _require(n >= MIN_GRID, f"--grid must be at least {MIN_GRID}, got {n}")
    return GridConfig(n=n)


# ---------------------------------------------------------------------------
# commands


def cmd_solve_commitment(args) -> None:
    spec = load_spec(args.mu)
    pi0, T, cfg = _prior(args.pi0), _horizon(args.T), _grid(args.grid)
    pol = commitment.solve(spec, pi0, T, cfg)
    report = infostruct.validate(pol.tree)
    if not report.ok:
        raise ArithmeticError(f"extracted tree failed validation: {report.violations[0].message}")
    if args.layers:
        rows = (r for layer in pol.layers for r in layer.rows())
        write_atomic(
            args.layers,
            csv_text(("period", "x", "U", "cavU", "support_lo", "support_hi"), rows, "commitment value layers"),
        )
    path = ",".join(fmt(b) for b in pol.good_path)
    emit(args, pol.tree.dumps() + "\n", f"value={fmt(pol.value)} good_path={path}")


def cmd_brute_force_t2(args) -> None:
    spec = load_spec(args.mu)
    pi0 = _prior(args.pi0)
    _require(args.grid >= 2, "--grid must be at least 2")
    res = commitment.brute_force_T2(spec, pi0, np.linspace(0.0, 1.0, args.grid))
    out = {"value": res.value, "support": list(res.best_support), "weights": list(res.weights)}
    emit(args, json_text(out), f"value={fmt(res.value)} support={','.join(fmt(p) for p in res.best_support)}")


def cmd_equilibria(args) -> None:
    spec = load_spec(args.mu)
    pi0, T = _prior(args.pi0), _horizon(args.T)
    out = []
    for lad in cheaptalk.ggn_enumerate(spec, pi0, T):
        pay = cheaptalk.ggn_payoff(spec, lad)
        out.append(
            {
                "beliefs": list(lad.beliefs),
                "value_good": pay.value_good,
                "value_bad": pay.value_bad,
                "total": pay.total,
            }
        )
    emit(args, json_text(out), f"ladders={len(out)}")


def cmd_pstar(args) -> None:
    spec = load_spec(args.mu)
    pi = _prior(args.pi, "--pi", closed=False)
    ps = cheaptalk.p_star(spec, pi)
    out = {"pi": pi, "roots": list(ps.roots), "tangent": list(ps.tangent)}
    emit(args, json_text(out), f"roots={len(ps.roots)}" + (f" {','.join(fmt(r) for r in ps.roots)}" if ps else ""))


def cmd_lambda_threshold(args) -> None:
    base = load_base(args.base)
    pi0 = _prior(args.pi0, closed=False)
    lam = cheaptalk.lambda_threshold(base, pi0)
    emit(args, json_text({"pi0": pi0, "lambda": lam}), f"lambda={fmt(lam)}")


def cmd_value_iteration(args) -> None:
    spec = load_spec(args.mu)
    _require(math.isfinite(args.delta) and 0.0 <= args.delta < 1.0, f"--delta must lie in [0, 1), got {args.delta}")
    _require(args.tol > 0, "--tol must be positive")
    res = horizon.value_iteration(spec, args.delta, _grid(args.grid, horizon.DEFAULT_GRID), tol=args.tol)
    text = csv_text(("p", "V"), zip(res.grid, res.values), f"random-horizon value function, delta={fmt(args.delta)}")
    emit(args, text, f"iterations={res.iterations} step={fmt(res.step)} V(0.5)={fmt(res(0.5))}")


def _table_row(sigma: float, lam: float, T: int, pi0: float, n: int | None) -> tuple[float, ...]:
    good, bad = percentile.gaussian_environment(sigma)
    pol = percentile.solve_percentile(good, bad, sqrt_spec(lam), pi0, T, _grid(n, percentile.PERCENTILE_GRID))
    return pol.good_path


def cmd_percentile_table(args) -> None:
    _require(math.isfinite(args.sigma) and args.sigma > 0, f"--sigma must be positive, got {args.sigma}")
    _require(math.isfinite(args.lam) and args.lam >= 1.0, f"--lambda must be at least 1, got {args.lam}")
    T, pi0 = _horizon(args.T), _prior(args.pi0, closed=False)
    path = _table_row(args.sigma, args.lam, T, pi0, args.grid)
    header = ("sigma",) + tuple(f"t{t}" for t in range(len(path)))
    text = csv_text(header, [(args.sigma,) + path], "percentile-table: percentile-based optimal good-state beliefs")
    emit(args, text, ",".join(f"{b:.2f}" for b in path))


def cmd_compare_info(args) -> None:
    spec = load_spec(args.mu)
    try:
        probs = [float(v) for v in args.probs.split(",")]
    except ValueError as exc:
        raise InvalidInput(f"--probs must be comma-separated numbers: {exc}") from exc
    _require(len(probs) >= 2, "--probs needs at least two success probabilities")
    _require(all(0.0 < q < 1.0 for q in probs), "each success probability must lie in (0, 1)")
    ch = infostruct.compare_gradual_oneshot(spec, args.prefers, probs)
    out = {
        "choice": ch.choice,
        "utility_gap": ch.utility_gap,
        "gradual_value": ch.gradual_value,
        "one_shot_value": ch.one_shot_value,
    }
    emit(args, json_text(out), f"choice={ch.choice} gap={fmt(ch.utility_gap)}")


def cmd_check_shape(args) -> None:
    rep = check_shape(load_spec(args.mu)).as_dict()
    emit(args, json_text(rep), " ".join(f"{k}={int(v)}" for k, v in sorted(rep.items())))


# ---------------------------------------------------------------------------
# figure and table data


def _fig2(out: Path) -> list[Path]:
    pol = commitment.solve(sqrt_spec(1.5), 0.5, 5)
    rows = (r for layer in pol.layers for r in layer.rows())
    a, b = out / "fig2_layers.csv", out / "fig2_path.csv"
    write_atomic(a, csv_text(("period", "x", "U", "cavU", "support_lo", "support_hi"), rows, "fig2: value layers"))
    write_atomic(b, csv_text(("t", "belief"), enumerate(pol.good_path), "fig2: good-state belief path"))
    return [a, b]


def _fig3_left(out: Path) -> list[Path]:
    alphas = np.round(np.linspace(2.01, 3.0, 100), 10)
    rows = [(a, commitment.quadratic_p_high(2.0, 1.0, a, 1.0, 0.1)) for a in alphas]
    p = out / "fig3_left.csv"
    write_atomic(p, csv_text(("alpha_n", "p_high"), rows, "fig3_left: optimal high posterior vs loss weight, prior 0.1"))
    return [p]


def _fig3_right(out: Path) -> list[Path]:
    priors = np.round(np.linspace(0.01, 0.99, 99), 10)
    rows = [(pi, commitment.quadratic_p_high(2.0, 1.0, 3.0, 1.0, pi), 0.5 * (pi + 1.0)) for pi in priors]
    p = out / "fig3_right.csv"
    write_atomic(p, csv_text(("pi0", "p_high", "midpoint"), rows, "fig3_right: optimal high posterior vs prior"))
    return [p]


def _figA1(out: Path) -> list[Path]:
    rows = []
    for lam in np.round(np.arange(1.0, 6.0 + 1e-9, 0.05), 10):
        spec = sqrt_spec(float(lam))
        best = cheaptalk.best_ggn_payoff(spec, 0.5, 2)
        rows.append((lam, best.payoff.total, babbling_payoff(spec, 0.5), best.ladder.J))
    p = out / "figA1.csv"
    write_atomic(
        p, csv_text(("lambda", "best_payoff", "babbling_payoff", "ladder_length"), rows, "figA1: highest equilibrium payoff vs loss aversion")
    )
    return [p]


def _fig4(out: Path) -> list[Path]:
    lad = horizon.ggn_infinite(Quadratic(2.0, 1.0, 2.1, 0.2), 1.0 / 3.0, 0.0)[-1]
    rows = [(j, b, inc) for j, (b, inc) in enumerate(zip((lad.pi0,) + lad.beliefs, (0.0,) + lad.increments))]
    p = out / "fig4.csv"
    write_atomic(p, csv_text(("j", "belief", "increment"), rows, "fig4: longest gradual-good-news ladder"))
    return [p]


def _figOA1(out: Path) -> list[Path]:
    spec = Quadratic(2.0, 1.0, 2.1, 0.2)
    deltas = (0.0, 0.8, 0.95)
    vals = [horizon.value_iteration(spec, d) for d in deltas]
    rows = zip(vals[0].grid, *(v.values for v in vals))
    p = out / "figOA1.csv"
    write_atomic(p, csv_text(("p",) + tuple(f"V_{d:g}" for d in deltas), rows, "figOA1: random-horizon value functions"))
    return [p]


def _tableOA1(out: Path) -> list[Path]:
    rows = [("percentile", s) + _table_row(s, 1.5, 5, 0.5, None) for s in (0.1, 1.0, 10.0)]
    rows.append(("mean", "any") + commitment.solve(sqrt_spec(1.5), 0.5, 5).good_path)
    p = out / "tableOA1.csv"
    header = ("model", "sigma") + tuple(f"t{t}" for t in range(6))
    write_atomic(p, csv_text(header, rows, "tableOA1: optimal disclosure of good news"))
    return [p]


_FIGURE_BUILDERS: dict[str, Callable[[Path], list[Path]]] = {
    "fig2": _fig2,
    "fig3_left": _fig3_left,
    "fig3_right": _fig3_right,
    "figA1": _figA1,
    "fig4": _fig4,
    "figOA1": _figOA1,
    "tableOA1": _tableOA1,
}


def emit_figure_data(which: str, out_dir: str | os.PathLike) -> list[Path]:
    if which not in _FIGURE_BUILDERS:
        raise InvalidInput(f"unknown figure target {which!r}; choose from {', '.join(FIGURES)}")
    return _FIGURE_BUILDERS[which](Path(out_dir))


def cmd_emit_figure(args) -> None:
    paths = emit_figure_data(args.which, args.out_dir)
    print(" ".join(str(p) for p in paths))


# ---------------------------------------------------------------------------
# parser and entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="newsdesign", description="Information design for news-utility receivers.")
    p.add_argument("--threads", type=int, default=None, help="threads for the parallel envelope kernel")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    def mu(sp):
        sp.add_argument("--mu", required=True, help="gain-loss spec as inline JSON or a JSON file path")

    def out(sp):
        sp.add_argument("--out", default=None, help="output file (default: write to stdout)")

    sp = add("solve-commitment", cmd_solve_commitment, "optimal information structure under commitment")
    mu(sp)
    sp.add_argument("--pi0", type=float, required=True)
    sp.add_argument("--T", type=int, required=True)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--layers", default=None, help="also write the value layers as CSV")
    out(sp)

    sp = add("brute-force-t2", cmd_brute_force_t2, "exhaustive two-period search over small supports")
    mu(sp)
    sp.add_argument("--pi0", type=float, required=True)
    sp.add_argument("--grid", type=int, default=401)
    out(sp)

    sp = add("equilibria", cmd_equilibria, "gradual-good-news cheap-talk equilibria")
    mu(sp)
    sp.add_argument("--pi0", type=float, required=True)
    sp.add_argument("--T", type=int, required=True)
    out(sp)

    sp = add("pstar", cmd_pstar, "bad-state indifference beliefs above a prior")
    mu(sp)
    sp.add_argument("--pi", type=float, required=True)
    out(sp)

    sp = add("lambda-threshold", cmd_lambda_threshold, "smallest loss weight with credible partial news")
    sp.add_argument("--base", required=True, help="'sqrt' or a base-branch JSON")
    sp.add_argument("--pi0", type=float, required=True)
    out(sp)

    sp = add("value-iteration", cmd_value_iteration, "random-horizon value function")
    mu(sp)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--tol", type=float, default=horizon.TOL)
    out(sp)

    sp = add("percentile-table", cmd_percentile_table, "percentile-model good-state path in a Gaussian environment")
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.5)
    sp.add_argument("--T", type=int, default=5)
    sp.add_argument("--pi0", type=float, default=0.5)
    sp.add_argument("--grid", type=int, default=None)
    out(sp)

    sp = add("compare-info", cmd_compare_info, "gradual versus one-shot information")
    mu(sp)
    sp.add_argument("--prefers", choices=("A", "B"), required=True)
    sp.add_argument("--probs", required=True, help="comma-separated per-period success probabilities")
    out(sp)

    sp = add("check-shape", cmd_check_shape, "shape properties of a gain-loss function")
    mu(sp)
    out(sp)

    sp = add("emit-figure", cmd_emit_figure, "write plot-ready CSV for a figure or table")
    sp.add_argument("--which", required=True, choices=FIGURES)
    sp.add_argument("--out-dir", default=".")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return EXIT_INVALID
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # module failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
