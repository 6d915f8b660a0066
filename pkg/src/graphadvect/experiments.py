"""Synthetic traffic experiments: generate speeds on a graph, hold out 30%,
fit the spectral Matérn GP and score the held-out nodes."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DegenerateSplit, ValidationError
from .gp import TrainingData, fit_hyperparameters, l2_test_error, posterior_predict
from .graphs import (
    FamilyKind,
    GraphFamily,
    OperatorKind,
    advection_operator,
    consensus_operator,
    generate,
)
from .io import read_edge_csv, read_observations_csv
from .kernel import MaternHyperparams, thin_svd

__all__ = [
    "SyntheticTrafficConfig",
    "ExperimentResult",
    "DEFAULT_NODE_COUNTS",
    "generate_traffic_data",
    "holdout_split",
    "run_regression_experiment",
    "ingest_sensor_csv",
    "build_operator",
]

DEFAULT_NODE_COUNTS = (280, 325, 400)


@dataclass(frozen=True)
class SyntheticTrafficConfig:
    family: GraphFamily
    node_count: Optional[int] = None
    high_speed: float = 65.0
    low_speed: float = 15.0
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        n = self.family.n if self.node_count is None else int(self.node_count)
        if n < 10:
            raise ValidationError(f"node_count must be >= 10, got {n}")
        if n != self.family.n:
            object.__setattr__(self, "family", replace(self.family, n=n))
        object.__setattr__(self, "node_count", n)
        if not (self.high_speed > 0 and self.low_speed > 0):
            raise ValidationError("speeds must be positive")
        if not self.noise_std >= 0:
            raise ValidationError("noise_std must be >= 0")


@dataclass(frozen=True)
class ExperimentResult:
    operator_kind: OperatorKind
    family: GraphFamily
    node_count: int
    l2_error: float
    hyperparams: MaternHyperparams
    wall_time: float = 0.0
    final_nll: float = float("nan")
    seed: int = 0
    data_seed: int = 0
    fit_budget: int = 0

    def as_dict(self, include_timing: bool = False) -> dict:
        fam = self.family
        out = {
            "operator_kind": self.operator_kind.value,
            "family": {
                "kind": fam.kind.value,
                "n": fam.n,
                "v": fam.v,
                "dx": fam.dx,
                "periodic": fam.periodic,
            },
            "node_count": self.node_count,
            "l2_error": self.l2_error,
            "hyperparams": self.hyperparams.as_dict(),
            "final_nll": self.final_nll,
            "seed": self.seed,
            "data_seed": self.data_seed,
            "fit_budget": self.fit_budget,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = False) -> str:
        """One JSON line; without timing the text is byte-stable across runs."""
        return json.dumps(self.as_dict(include_timing), sort_keys=True)


def _ramp_speeds(n, low, high):
    # nodes whose centre (i + 1/2)/n lies in [0.45, 0.55] form the ramp
    i = np.arange(n)
    centre2 = 20 * i + 10
    ramp = (centre2 >= 9 * n) & (centre2 <= 11 * n)
    speeds = np.where(centre2 < 9 * n, low, high).astype(float)
    k = int(ramp.sum())
    speeds[ramp] = low + (high - low) * np.arange(1, k + 1) / (k + 1)
    return speeds


def generate_traffic_data(cfg: SyntheticTrafficConfig) -> TrainingData:
    """Speeds over all nodes in index order: the congested first half is slow
    (``low_speed``), the free second half fast (``high_speed``), joined by a
    linear ramp across the middle tenth, plus seeded Gaussian noise."""
    n = cfg.node_count
    y = _ramp_speeds(n, cfg.low_speed, cfg.high_speed)
    if cfg.noise_std > 0:
        y = y + cfg.noise_std * np.random.default_rng(cfg.seed).standard_normal(n)
    return TrainingData(np.arange(n), y)


def holdout_split(d: TrainingData, train_fraction: float = 0.7, seed: int = 0):
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must lie in (0, 1)")
    m = len(d)
    n_train = int(math.floor(train_fraction * m + 0.5))
    if n_train == 0 or n_train == m:
        raise DegenerateSplit(f"split of {m} points at {train_fraction} leaves a side empty")
    perm = np.random.default_rng(seed).permutation(m)
    return d.subset(np.sort(perm[:n_train])), d.subset(np.sort(perm[n_train:]))


def build_operator(g, operator_kind):
    kind = OperatorKind(operator_kind)
    if kind is OperatorKind.ADVECTION:
        return advection_operator(g)
    if kind is OperatorKind.CONSENSUS:
        return consensus_operator(g)
    raise ValidationError(f"experiments use advection or consensus, not {kind.value}")


def run_regression_experiment(
    cfg: SyntheticTrafficConfig,
    operator_kind=OperatorKind.ADVECTION,
    fit_budget: int = 200,
    seed: int = 0,
    train_fraction: float = 0.7,
) -> ExperimentResult:
    """Graph -> operator -> SVD -> data -> split -> fit -> predict -> score.

    ``cfg.seed`` drives the data noise, ``seed`` the train/test split.
    """
    kind = OperatorKind(operator_kind)
    t0 = time.perf_counter()
    g = generate(cfg.family)
    f = thin_svd(build_operator(g, kind))
    data = generate_traffic_data(cfg)
    train, test = holdout_split(data, train_fraction, seed)
    h = fit_hyperparameters(f, train, budget=fit_budget)
    post = posterior_predict(f, h, train)
    err = l2_test_error(post, test)
    return ExperimentResult(
        operator_kind=kind,
        family=cfg.family,
        node_count=cfg.node_count,
        l2_error=err,
        hyperparams=h,
        wall_time=time.perf_counter() - t0,
        final_nll=post.final_nll,
        seed=seed,
        data_seed=cfg.seed,
        fit_budget=fit_budget,
    )


def ingest_sensor_csv(graph_file, data_file, node_count=None):
    """Load a directed road graph and one snapshot of sensor speeds."""
    g = read_edge_csv(graph_file, node_count)
    return g, read_observations_csv(data_file, g.node_count)
