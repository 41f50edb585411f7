"""``hierdsg`` command line.

Exit status: 0 success, 1 usage error, 2 invalid design space or point,
3 a budget (enumeration cap or time limit) was exceeded.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import click
import numpy as np

from . import bo as bo_mod
from .configs import enumerate_discrete, hierarchical_names, sample_valid, stats as space_stats
from .distance import DistanceParams, pairwise_matrix
from .dot import to_dot
from .errors import BudgetError, HierDsgError
from .gp import Dataset, GpModel, SearchConfig, fit
from .graph import ACTIVE, DesignSpaceGraph
from .io import format_point, format_value, parse_design_space, read_points
from .kernels import HIER, KINDS, NAIVE, KernelHyperparams, gram as gram_matrix, naive_kernel_witness, spd_check
from .points import correct, is_valid, make_point
from .problems import ProblemSpec, evaluate, get_problem, list_problems

EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _load(space: str | None, problem: str | None) -> tuple[DesignSpaceGraph, ProblemSpec | None]:
    if (space is None) == (problem is None):
        raise click.UsageError("give exactly one of --space FILE or --problem NAME")
    if problem is not None:
        spec = get_problem(problem)
        return spec.graph, spec
    return parse_design_space(space), None


def _space_options(fn):
    fn = click.option("--problem", "problem", metavar="NAME", help="Built-in problem name.")(fn)
    fn = click.option("--space", "space", type=click.Path(dir_okay=False), metavar="FILE",
                      help="Design-space JSON file.")(fn)
    return fn


def _seed_option(fn):
    return click.option("--seed", default=0, show_default=True, type=int, help="Random seed (echoed).")(fn)


def _write_csv(path: str | None, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    if path is None:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[str(h) for h in header]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


def _valid_points(graph: DesignSpaceGraph, path: str):
    points = []
    for k, raw in enumerate(read_points(graph, path)):
        p = make_point(graph, raw)
        report = is_valid(graph, p)
        if not report.valid:
            raise click.ClickException(f"point {k + 1} is not valid: " + "; ".join(report.violations))
        points.append(p)
    return points


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Hierarchical design spaces: audit, distances, kernels, surrogates and BO."""


@cli.command()
@_space_options
def validate(space, problem):
    """Build the graph and report variable roles."""
    graph, _ = _load(space, problem)
    click.echo(f"valid: {graph.name} ({len(graph.design_names)} variables, {len(graph.intermediates)} intermediate)")
    rows = [(n, graph.decl(n).vtype, graph.roles[n].label) for n in graph.nodes]
    click.echo(_table(("name", "type", "role"), rows))


@cli.command()
@_space_options
@click.option("--cap", default=10**6, show_default=True, help="Enumeration cap.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write a CSV record.")
def stats(space, problem, cap, csv_path):
    """Valid versus declared discrete configurations."""
    graph, _ = _load(space, problem)
    row = space_stats(graph, cap).as_row()
    for k, v in row.items():
        click.echo(f"{k}={v}")
    _write_csv(csv_path, list(row), [list(row.values())])


@cli.command(name="enumerate")
@_space_options
@click.option("--all", "all_vars", is_flag=True, help="Full configurations instead of the hierarchical projection.")
@click.option("--cap", default=10**6, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
def enumerate_cmd(space, problem, all_vars, cap, csv_path):
    """List valid discrete configurations.

    By default rows are projected onto the variables with a non-neutral role.
    """
    graph, _ = _load(space, problem)
    names = list(graph.nodes) if all_vars else list(hierarchical_names(graph))
    rows = enumerate_discrete(graph, cap, project=names)
    shown = [["active" if v is ACTIVE else format_value(v) for v in r] for r in rows]
    click.echo(_table(names, shown))
    click.echo(f"{len(rows)} rows")
    _write_csv(csv_path, names, shown)


@cli.command()
@_space_options
@_seed_option
@click.option("-n", "--n", "count", default=100, show_default=True, type=click.IntRange(min=0))
@click.option("--out", type=click.Path(dir_okay=False), help="Point file to write (default: stdout).")
def sample(space, problem, seed, count, out):
    """Draw valid points."""
    graph, _ = _load(space, problem)
    click.echo(f"seed={seed}", err=out is None)
    points = sample_valid(graph, count, seed)
    text = "".join(format_point(graph, p) + "\n" for p in points)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {len(points)} points to {out}")
    else:
        click.echo(text, nl=False)


@cli.command(name="correct")
@_space_options
@click.option("--points", "points_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--quiet", is_flag=True, help="Only print the summary line.")
def correct_cmd(space, problem, points_path, out, quiet):
    """Snap raw points onto the valid set and print their activeness masks."""
    graph, _ = _load(space, problem)
    raws = read_points(graph, points_path)
    start = time.perf_counter()
    fixed = [correct(graph, raw) for raw in raws]
    elapsed = time.perf_counter() - start
    if not quiet:
        for point, mask in fixed:
            click.echo(format_point(graph, point) + "  active=" + "".join("1" if a else "0" for a in mask))
    if out:
        Path(out).write_text("".join(format_point(graph, p) + "\n" for p, _ in fixed), encoding="utf-8")
    click.echo(f"corrected {len(fixed)} points in {elapsed:.3f} s")


@cli.command()
@_space_options
@click.option("--points", "points_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--p", "p_norm", default=2.0, show_default=True, type=float, help="Norm exponent.")
@click.option("--mode", type=click.Choice(["metric", "unit"]), default="metric", show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
def distance(space, problem, points_path, p_norm, mode, csv_path):
    """Pairwise distances between the points in a file."""
    graph, _ = _load(space, problem)
    points = _valid_points(graph, points_path)
    if not points:
        raise click.UsageError("the point file is empty")
    D = pairwise_matrix(graph, points, DistanceParams.default(graph, p_norm, mode=mode))
    click.echo(_table([""] + [str(j) for j in range(len(points))],
                      [[i] + [f"{d:.6g}" for d in row] for i, row in enumerate(D)]))
    _write_csv(csv_path, ["i", "j", "distance"], [(i, j, repr(float(D[i, j]))) for i in range(len(D)) for j in range(len(D))])


def _hyperparams(graph, kind, theta, sigma2):
    hp = KernelHyperparams.default(graph, kind, sigma2=sigma2)
    return hp.with_theta(np.full(len(hp.theta), theta))


@cli.command()
@_space_options
@_seed_option
@click.option("--kernel", "kind", type=click.Choice(KINDS), default=HIER, show_default=True)
@click.option("--points", "points_path", type=click.Path(exists=True, dir_okay=False),
              help="Point file (default: sample --n points).")
@click.option("-n", "--n", "count", default=20, show_default=True, type=click.IntRange(min=1))
@click.option("--theta", default=1.0, show_default=True, type=float, help="Common scale for every parameter.")
@click.option("--sigma2", default=1.0, show_default=True, type=float)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write the matrix.")
def gram(space, problem, seed, kind, points_path, count, theta, sigma2, csv_path):
    """Gram matrix of a kernel and its smallest eigenvalue."""
    graph, _ = _load(space, problem)
    if points_path:
        points = _valid_points(graph, points_path)
    else:
        click.echo(f"seed={seed}")
        points = sample_valid(graph, count, seed)
    K = gram_matrix(graph, points, _hyperparams(graph, kind, theta, sigma2))
    eig, ok = spd_check(K)
    click.echo(f"kernel={kind} n={len(points)} min_eigenvalue={eig:.6g} spd={'yes' if ok else 'no'}")
    _write_csv(csv_path, [str(j) for j in range(len(K))], [[repr(float(x)) for x in row] for row in K])


@cli.command()
@_space_options
@_seed_option
@click.option("--kernel", "kinds", type=click.Choice(KINDS), multiple=True, help="Repeatable; default HIER, GD, CR.")
@click.option("--matrices", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--max-n", default=60, show_default=True, type=click.IntRange(min=2))
@click.option("--tol", default=1e-8, show_default=True, type=float, help="Allowed negative eigenvalue, relative to sigma2.")
@click.option("--witness", is_flag=True, help="Search for a non-SPD point set instead.")
@click.option("--trials", default=10_000, show_default=True, type=click.IntRange(min=1))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
def spdcheck(space, problem, seed, kinds, matrices, max_n, tol, witness, trials, csv_path):
    """Random Gram sweep (or a witness search) for positive definiteness."""
    graph, _ = _load(space, problem)
    click.echo(f"seed={seed}")
    if witness:
        kind = kinds[0] if kinds else NAIVE
        try:
            w = naive_kernel_witness(graph, seed, kind=kind, trials=trials)
        except HierDsgError as exc:
            click.echo(f"kernel={kind} witness=none ({exc})")
            return
        click.echo(f"kernel={kind} witness trial={w.trial} size={len(w.points)} min_eigenvalue={w.min_eigenvalue:.6g}")
        for p in w.points:
            click.echo("  " + format_point(graph, p))
        return
    kinds = kinds or (HIER, "GD", "CR")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    rows = []
    failed = False
    for kind in kinds:
        worst = np.inf
        base = KernelHyperparams.default(graph, kind)
        for m in range(matrices):
            n = int(rng.integers(2, max_n + 1))
            points = sample_valid(graph, n, np.random.SeedSequence([seed, 4, m]))
            sigma2 = float(10 ** rng.uniform(-1, 1))
            hp = base.with_theta(10 ** rng.uniform(-2, 2, size=len(base.theta)), sigma2=sigma2, nugget=0.0)
            eig, _ = spd_check(gram_matrix(graph, points, hp))
            worst = min(worst, eig / sigma2)
        ok = worst >= -tol
        failed |= not ok
        rows.append((kind, matrices, f"{worst:.3g}", "PASS" if ok else "FAIL"))
    click.echo(_table(("kernel", "matrices", "worst_min_eig/sigma2", "result"), rows))
    _write_csv(csv_path, ("kernel", "matrices", "worst_min_eig_over_sigma2", "result"), rows)
    if failed:
        sys.exit(EXIT_INVALID)


@cli.command(name="export-dot")
@_space_options
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (default: stdout).")
def export_dot(space, problem, out):
    """Graphviz rendering of the design space."""
    graph, _ = _load(space, problem)
    text = to_dot(graph)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _read_targets(path: str) -> list[float]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(float(line))
    return out


@click.command(name="model-fit")
@_space_options
@_seed_option
@click.option("--points", "points_path", type=click.Path(exists=True, dir_okay=False), help="Training points.")
@click.option("--targets", "targets_path", type=click.Path(exists=True, dir_okay=False),
              help="One target per line (default: evaluate the problem objective).")
@click.option("-n", "--n", "count", default=20, show_default=True, type=click.IntRange(min=2),
              help="Sample size when no point file is given.")
@click.option("--kernel", "kind", type=click.Choice(KINDS), default=HIER, show_default=True)
@click.option("--multistarts", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--max-evals", default=200, show_default=True, type=click.IntRange(min=1))
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False), help="Where to save the model.")
def model_fit(space, problem, seed, points_path, targets_path, count, kind, multistarts, max_evals, model_path):
    """Fit a GP surrogate and save it."""
    graph, spec = _load(space, problem)
    click.echo(f"seed={seed}")
    points = _valid_points(graph, points_path) if points_path else sample_valid(graph, count, seed)
    if targets_path:
        targets = _read_targets(targets_path)
    elif spec is not None:
        targets = [evaluate(spec, p) for p in points]
    else:
        raise click.UsageError("--targets is required with --space")
    if len(targets) != len(points):
        raise click.UsageError(f"{len(points)} points but {len(targets)} targets")
    dataset = Dataset(points, targets, spec.name if spec else graph.name, seed)
    model = fit(graph, dataset, kind, SearchConfig(multistarts, max_evals, seed=seed))
    model.save(model_path)
    hp = model.hyperparams
    click.echo(f"kernel={kind} n={len(points)} log_likelihood={model.log_marginal_likelihood:.6g}")
    click.echo(f"mean={model.mean:.6g} sigma2={hp.sigma2:.6g} nugget={hp.nugget:.3g}")
    click.echo("theta=" + ",".join(f"{t:.4g}" for t in hp.theta))
    click.echo(f"saved {model_path}")


@click.command(name="model-predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--points", "points_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
def model_predict(model_path, points_path, csv_path):
    """Posterior mean and variance at each point in a file."""
    model = GpModel.load(model_path)
    points = _valid_points(model.graph, points_path)
    mean, var = model.predict(points)
    rows = [(i, f"{m:.6g}", f"{v:.6g}") for i, (m, v) in enumerate(zip(mean, var))]
    click.echo(_table(("i", "mean", "variance"), rows))
    _write_csv(csv_path, ("i", "mean", "variance"), [(i, repr(float(m)), repr(float(v))) for i, (m, v) in enumerate(zip(mean, var))])


def _parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise click.BadParameter(f"cannot read {part!r}; use e.g. 0-9 or 1,4,7", param_hint="--seeds") from None
    if not seeds:
        raise click.BadParameter("no seeds given", param_hint="--seeds")
    return seeds


@click.command(name="bo-run")
@click.option("--problem", required=True, metavar="NAME")
@click.option("--kernel", "kind", type=click.Choice(KINDS), default=HIER, show_default=True)
@click.option("--acq", type=click.Choice(bo_mod.ACQUISITIONS), default=bo_mod.EI, show_default=True)
@click.option("--seeds", default="0", show_default=True, help="Seed list, e.g. 0-9 or 1,4,7.")
@click.option("--budget", default=50, show_default=True, type=click.IntRange(min=1))
@click.option("--doe", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--pool", default=512, show_default=True, type=click.IntRange(min=1))
@click.option("--baseline/--no-baseline", default=True, show_default=True, help="Also run random search.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), help="Line-delimited JSON trace.")
@click.option("--curves", "curves_path", type=click.Path(dir_okay=False),
              help="CSV of median and quartile incumbents per evaluation.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Final incumbents per seed.")
@click.option("--max-seconds", type=float, help="Stop with exit status 3 when exceeded.")
def bo_run(problem, kind, acq, seeds, budget, doe, pool, baseline, trace_path, curves_path, csv_path, max_seconds):
    """Bayesian optimization on a built-in problem, with a random-search baseline."""
    spec = get_problem(problem)
    seed_list = _parse_seeds(seeds)
    click.echo("seeds=" + ",".join(map(str, seed_list)))
    base = bo_mod.BoConfig(doe=doe, budget=budget, acquisition=acq, pool_size=pool, kernel=kind)
    methods = [("bo", bo_mod.run_bo)] + ([("random", bo_mod.run_random_baseline)] if baseline else [])
    traces: dict[str, list] = {m: [] for m, _ in methods}
    start = time.perf_counter()
    trace_fh = open(trace_path, "w", encoding="utf-8") if trace_path else None
    try:
        for seed in seed_list:
            for name, runner in methods:
                trace = runner(spec, replace(base, seed=seed))
                traces[name].append(trace)
                if trace_fh:
                    for row in bo_mod.trace_rows(trace, spec.graph):
                        trace_fh.write(json.dumps(row) + "\n")
            finals = "  ".join(f"{m}={traces[m][-1].final_incumbent:.6g}" for m, _ in methods)
            click.echo(f"seed {seed}: {finals}")
            if max_seconds is not None and time.perf_counter() - start > max_seconds:
                raise BudgetError(f"time limit of {max_seconds:g} s exceeded after seed {seed}")
    finally:
        if trace_fh:
            trace_fh.close()
    rows = []
    for m, _ in methods:
        s = bo_mod.summarize([t.final_incumbent for t in traces[m]])
        rows.append((m, s.n, f"{s.median:.6g}", f"{s.q1:.6g}", f"{s.q3:.6g}"))
    click.echo(_table(("method", "seeds", "median", "q1", "q3"), rows))
    if baseline:
        wins = sum(b.final_incumbent < r.final_incumbent for b, r in zip(traces["bo"], traces["random"]))
        click.echo(f"bo strictly better in {wins} of {len(seed_list)} seeds")
    _write_csv(csv_path, ("seed",) + tuple(m for m, _ in methods),
               [(s,) + tuple(repr(traces[m][k].final_incumbent) for m, _ in methods) for k, s in enumerate(seed_list)])
    if curves_path:
        header = ["evaluation"] + [f"{m}_{q}" for m, _ in methods for q in ("median", "q1", "q3")]
        curves = {m: np.array([t.incumbents for t in traces[m]]) for m, _ in methods}
        out = []
        for e in range(doe + budget):
            row: list[Any] = [e + 1]
            for m, _ in methods:
                q1, med, q3 = np.percentile(curves[m][:, e], [25, 50, 75])
                row += [repr(float(med)), repr(float(q1)), repr(float(q3))]
            out.append(row)
        _write_csv(curves_path, header, out)


@cli.command(name="problems-list")
def problems_list():
    """Built-in problems with their configuration counts."""
    rows = []
    for name in list_problems():
        spec = get_problem(name)
        rows.append((name, len(spec.graph.design_names), spec.n_configurations, spec.n_hierarchical, spec.description))
    click.echo(_table(("name", "variables", "configurations", "hierarchical", "description"), rows))


cli.add_command(model_fit)
cli.add_command(model_predict)
cli.add_command(bo_run)


@cli.group()
def model():
    """Surrogate models (same as model-fit / model-predict)."""


model.add_command(model_fit, "fit")
model.add_command(model_predict, "predict")


@cli.group(name="bo")
def bo_group():
    """Bayesian optimization (same as bo-run)."""


bo_group.add_command(bo_run, "run")


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the exit status instead of raising ``SystemExit``."""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="hierdsg", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except BudgetError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_BUDGET
    except HierDsgError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INVALID
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return rv if isinstance(rv, int) else 0
