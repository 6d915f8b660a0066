"""Delimited file formats: edge lists, observations, trajectories,
convergence tables, matrices, posteriors and fitted hyperparameters."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import EmptyData, ParseError, UnknownNode, ValidationError
from .graphs import DirectedGraph

EDGE_HEADER = ["source", "target", "weight"]
OBS_HEADER = ["node", "speed_mph"]


def _fmt(x) -> str:
    return repr(float(x))


def _rows(path, header):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        first = next(reader)
    except StopIteration:
        raise ParseError(f"{path}: empty file") from None
    if [c.strip() for c in first] != header:
        raise ParseError(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        yield lineno, [c.strip() for c in row]


def _parse_int(tok, where):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"{where}: {tok!r} is not an integer") from None


def _parse_float(tok, where):
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"{where}: {tok!r} is not a number") from None
    if not math.isfinite(val):
        raise ParseError(f"{where}: non-finite value {tok!r}")
    return val


def read_edge_csv(path, node_count=None) -> DirectedGraph:
    """Read ``source,target,weight``; node count defaults to max index + 1."""
    edges = []
    for lineno, (s, t, w) in _rows(path, EDGE_HEADER):
        where = f"{path}:{lineno}"
        edges.append((_parse_int(s, where), _parse_int(t, where), _parse_float(w, where)))
    if node_count is None:
        if not edges:
            raise EmptyData(f"{path}: no edges and no node count")
        node_count = 1 + max(max(s, t) for s, t, _ in edges)
    if any(s < 0 or t < 0 for s, t, _ in edges):
        raise ParseError(f"{path}: negative node index")
    return DirectedGraph(node_count, tuple(edges))


def write_edge_csv(g: DirectedGraph, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        for s, t, wt in g.edges:
            w.writerow([s, t, _fmt(wt)])


def read_observations_csv(path, node_count: int):
    """Rows of ``node,speed_mph``; one reading per node."""
    from .gp import TrainingData

    nodes, speeds = [], []
    seen = set()
    for lineno, (node, speed) in _rows(path, OBS_HEADER):
        where = f"{path}:{lineno}"
        k = _parse_int(node, where)
        if k in seen:
            raise ParseError(f"{where}: duplicate observation for node {k}")
        if not 0 <= k < node_count:
            raise UnknownNode(f"{where}: node {k} not in graph of {node_count} nodes")
        seen.add(k)
        nodes.append(k)
        speeds.append(_parse_float(speed, where))
    if not nodes:
        raise EmptyData(f"{path}: no observations")
    return TrainingData(np.array(nodes, dtype=np.int64), np.array(speeds))


def write_observations_csv(d, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OBS_HEADER)
        for k, y in zip(d.node_indices, d.targets):
            w.writerow([int(k), _fmt(y)])


def write_trajectory_csv(states, path):
    n = len(states[0].values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time"] + [f"node_{i}" for i in range(n)])
        for st in states:
            w.writerow([_fmt(st.time)] + [_fmt(x) for x in st.values])


def write_convergence_csv(report, path):
    with open(path, "w", newline="") as fh:
        fh.write(f"# slope={report.fitted_slope!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "error"])
        for n, e in zip(report.resolutions, report.errors):
            w.writerow([n, _fmt(e)])


def read_convergence_csv(path):
    """Return ``(resolutions, errors, slope)``."""
    slope = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("# slope="):
            slope = float(line.split("=", 1)[1])
    res, err = [], []
    for lineno, (n, e) in _rows(path, ["n", "error"]):
        res.append(_parse_int(n, lineno))
        err.append(_parse_float(e, lineno))
    return res, err, slope


def write_matrix_csv(m, path):
    np.savetxt(path, np.atleast_2d(m), delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))


def write_factorization(f, prefix):
    """Write ``<prefix>_U.csv``, ``<prefix>_sigma.csv`` and ``<prefix>_V.csv``."""
    prefix = str(prefix)
    paths = [f"{prefix}_U.csv", f"{prefix}_sigma.csv", f"{prefix}_V.csv"]
    write_matrix_csv(f.left_vectors, paths[0])
    np.savetxt(paths[1], f.singular_values, fmt="%.17g")
    write_matrix_csv(f.right_vectors, paths[2])
    return paths


def write_posterior_csv(post, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "mean", "variance"])
        for k, (m, v) in enumerate(zip(post.mean, post.variance)):
            w.writerow([k, _fmt(m), _fmt(v)])


def hyperparams_to_json(h, final_nll=None) -> str:
    obj = h.as_dict()
    obj["final_nll"] = None if final_nll is None else float(final_nll)
    return json.dumps(obj, sort_keys=True)


def read_hyperparams_json(path):
    from .kernel import MaternHyperparams

    try:
        obj = json.loads(Path(path).read_text())
        return MaternHyperparams(obj["nu"], obj["kappa"], obj["output_scale"], obj["noise_variance"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ParseError(f"{path}: bad hyperparameter file ({exc})") from exc
