"""Command-line entry point.

Each subcommand writes only the paths given by ``--out`` (and ``--plot`` /
``--variance-out`` where offered) and prints a JSON metadata block with the
parsed flags and wall time to stdout. Exit codes: 0 success, 1 validation or
usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings

import numpy as np

from .dynamics import (
    IntegrationConfig,
    InitialCondition,
    convergence_study,
    initial_profile,
    integrate,
)
from .errors import NumericalError, ValidationError
from .experiments import (
    SyntheticTrafficConfig,
    ingest_sensor_csv,
    run_regression_experiment,
    build_operator,
)
from .gp import fit_hyperparameters, posterior_predict, prior_sample
from .graphs import FamilyKind, GraphFamily, advection_operator, generate, is_balanced
from .io import (
    hyperparams_to_json,
    read_edge_csv,
    read_hyperparams_json,
    read_observations_csv,
    write_convergence_csv,
    write_edge_csv,
    write_posterior_csv,
    write_trajectory_csv,
)
from .kernel import MaternHyperparams, matern_kernel, thin_svd

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


def parse_family(name: str, n: int, v: float = 1.0, dx: float = 1.0) -> GraphFamily:
    """``upwind``, ``central``, ``lud``, ``nonuniform``, ``intersection``,
    ``star``, ``complete``, ``loop``; a ``-loop`` suffix wraps a line family
    periodically (``upwind-loop`` is ``loop``)."""
    name = name.strip().lower()
    periodic = False
    if name.endswith("-loop"):
        name, periodic = name[: -len("-loop")], True
    if name == "upwind" and periodic:
        name, periodic = "loop", False
    try:
        kind = FamilyKind(name)
    except ValueError:
        raise ValidationError(f"unknown graph family {name!r}") from None
    return GraphFamily(kind, n, v, dx, periodic)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive(kind):
    def conv(text):
        val = kind(text)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="graphadvect", description="Advection on directed graphs and spectral Matérn GPs.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("graph-gen", help="write a named graph family as an edge list")
    s.add_argument("--family", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--v", type=float, default=1.0)
    s.add_argument("--dx", type=_positive(float), default=1.0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="integrate du/dt = -L_adv u with RK5")
    s.add_argument("--graph", required=True)
    s.add_argument("--ic", choices=["step", "sine"], default="step")
    s.add_argument("--t-end", type=_positive(float), required=True)
    s.add_argument("--dt", type=_positive(float), required=True)
    s.add_argument("--dx", type=_positive(float), default=None,
                   help="node spacing on [0, 1] (default 1/(n-1))")
    s.add_argument("--v", type=float, default=None, help="velocity, for the CFL check")
    s.add_argument("--out", required=True)
    s.add_argument("--plot", default=None, help="also render the profiles to this image")

    s = sub.add_parser("converge", help="spatial convergence study")
    s.add_argument("--family", required=True)
    s.add_argument("--ic", choices=["step", "sine"], default="sine")
    s.add_argument("--resolutions", type=_int_list, default=[32, 64, 128, 256, 512])
    s.add_argument("--t-end", type=_positive(float), default=0.5)
    s.add_argument("--v", type=float, default=1.0)
    s.add_argument("--cfl", type=_positive(float), default=0.5)
    s.add_argument("--out", required=True)
    s.add_argument("--plot", default=None)

    s = sub.add_parser("prior-sample", help="draw from the graph Matérn prior")
    s.add_argument("--graph", required=True)
    s.add_argument("--operator", choices=["advection", "consensus"], default="advection")
    s.add_argument("--nu", type=_positive(float), required=True)
    s.add_argument("--kappa", type=_positive(float), required=True)
    s.add_argument("--scale", type=_positive(float), default=1.0)
    s.add_argument("--count", type=_positive(int), default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--variance-out", default=None,
                   help="CSV node,kernel_variance,empirical_variance")
    s.add_argument("--plot", default=None)

    s = sub.add_parser("fit", help="learn kernel hyperparameters from observations")
    s.add_argument("--graph", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--operator", choices=["advection", "consensus"], default="advection")
    s.add_argument("--budget", type=_positive(int), default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("predict", help="posterior mean and variance at every node")
    s.add_argument("--graph", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--hyperparams", required=True)
    s.add_argument("--operator", choices=["advection", "consensus"], default="advection")
    s.add_argument("--out", required=True)
    s.add_argument("--plot", default=None)

    s = sub.add_parser("experiment", help="synthetic traffic regression experiment")
    s.add_argument("--family", required=True)
    s.add_argument("--n", type=_int_list, default=[280, 325, 400])
    s.add_argument("--operator", choices=["advection", "consensus"], default="advection")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=_positive(int), default=200)
    s.add_argument("--noise-std", type=float, default=1.0)
    s.add_argument("--v", type=float, default=1.0)
    s.add_argument("--dx", type=_positive(float), default=1.0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("ingest", help="validate an edge list plus sensor snapshot")
    s.add_argument("--graph", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--validate-only", action="store_true")
    s.add_argument("--out", default=None, help="JSON summary path")
    return p


def _graph_and_basis(path, operator):
    g = read_edge_csv(path)
    return g, thin_svd(build_operator(g, operator))


def cmd_graph_gen(a):
    g = generate(parse_family(a.family, a.n, a.v, a.dx))
    write_edge_csv(g, a.out)
    return {"nodes": g.node_count, "edges": g.edge_count}


def cmd_solve(a):
    g = read_edge_csv(a.graph)
    n = g.node_count
    dx = a.dx if a.dx is not None else 1.0 / max(n - 1, 1)
    x = np.arange(n) * dx
    cfg = IntegrationConfig(dt=min(a.dt, a.t_end), t_end=a.t_end, v=a.v, dx=dx if a.v else None)
    states = integrate(advection_operator(g), initial_profile(x, InitialCondition(a.ic)), cfg)
    write_trajectory_csv(states, a.out)
    if a.plot:
        from .plotting import plot_trajectory

        plot_trajectory(states, x, a.plot)
    return {"steps": len(states) - 1, "cfl_ratio": cfg.cfl_ratio,
            "mass_initial": float(states[0].values.sum()), "mass_final": float(states[-1].values.sum())}


def cmd_converge(a):
    family = parse_family(a.family, max(a.resolutions, default=3), a.v, 1.0)
    report = convergence_study(family, a.ic, a.resolutions, a.t_end, cfl=a.cfl)
    write_convergence_csv(report, a.out)
    if a.plot:
        from .plotting import plot_convergence

        plot_convergence(report, a.plot)
    return {"slope": report.fitted_slope}


def cmd_prior_sample(a):
    g, f = _graph_and_basis(a.graph, a.operator)
    k = matern_kernel(f, MaternHyperparams(a.nu, a.kappa, a.scale))
    draws = np.array(prior_sample(k, a.count, a.seed))
    header = "sample," + ",".join(f"node_{i}" for i in range(g.node_count))
    rows = np.column_stack([np.arange(a.count), draws])
    np.savetxt(a.out, rows, delimiter=",", header=header, comments="",
               fmt=["%d"] + ["%.17g"] * g.node_count)
    kvar = np.diag(k.matrix)
    if a.variance_out:
        emp = draws.var(axis=0) if a.count > 1 else np.full(g.node_count, np.nan)
        np.savetxt(a.variance_out, np.column_stack([np.arange(g.node_count), kvar, emp]),
                   delimiter=",", header="node,kernel_variance,empirical_variance",
                   comments="", fmt=["%d", "%.17g", "%.17g"])
    if a.plot:
        from .plotting import plot_node_values

        plot_node_values(kvar, a.plot, ylabel="prior variance")
    return {"kernel_variance_min": float(kvar.min()), "kernel_variance_max": float(kvar.max())}


def cmd_fit(a):
    g, f = _graph_and_basis(a.graph, a.operator)
    d = read_observations_csv(a.data, g.node_count)
    h = fit_hyperparameters(f, d, budget=a.budget)
    post = posterior_predict(f, h, d)
    with open(a.out, "w") as fh:
        fh.write(hyperparams_to_json(h, post.final_nll) + "\n")
    return {"final_nll": post.final_nll}


def cmd_predict(a):
    g, f = _graph_and_basis(a.graph, a.operator)
    d = read_observations_csv(a.data, g.node_count)
    h = read_hyperparams_json(a.hyperparams)
    post = posterior_predict(f, h, d)
    write_posterior_csv(post, a.out)
    if a.plot:
        from .plotting import plot_node_values

        plot_node_values(post.mean, a.plot, spread=post.std, ylabel="posterior mean")
    return {"final_nll": post.final_nll}


def cmd_experiment(a):
    lines = []
    for n in a.n:
        family = parse_family(a.family, n, a.v, a.dx)
        cfg = SyntheticTrafficConfig(family, n, noise_std=a.noise_std, seed=a.seed)
        res = run_regression_experiment(cfg, a.operator, a.budget, a.seed)
        lines.append(res)
    with open(a.out, "w") as fh:
        for res in lines:
            fh.write(res.to_json() + "\n")
    return {"l2_errors": [r.l2_error for r in lines], "fit_seconds": [r.wall_time for r in lines]}


def cmd_ingest(a):
    g, d = ingest_sensor_csv(a.graph, a.data)
    summary = {
        "nodes": g.node_count,
        "edges": g.edge_count,
        "observations": len(d),
        "balanced": is_balanced(g, 1e-12),
    }
    if not a.validate_only and a.out:
        with open(a.out, "w") as fh:
            fh.write(json.dumps(summary, sort_keys=True) + "\n")
    return summary


COMMANDS = {
    "graph-gen": cmd_graph_gen,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "prior-sample": cmd_prior_sample,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "ingest": cmd_ingest,
}


def main(argv=None) -> int:
    parser = build_parser()
    t0 = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"missing subcommand\n{parser.format_usage().strip()}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    flags = {k: v for k, v in vars(args).items() if k != "command"}
    meta = {
        "subcommand": args.command,
        "flags": flags,
        "result": result,
        "warnings": [str(w.message) for w in caught],
        "wall_time": time.perf_counter() - t0,
    }
    print(json.dumps(meta, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
