"""Combinatorial feature-ablation grid: configs x models x replicates.

Config enumeration follows the reporting convention: each online feature
alone, all online together, every offline subset of cardinality three (in
feature order), all offline, and the hybrid of everything — 9 configs for
the stock 2 online + 4 offline features.

Each grid cell owns a private seeded stream derived from (base_seed, config
index, model index, replicate), training slices are re-balanced per
replicate with seed base_seed + r, and every cell of a replicate shares the
same chronological split, so the whole report is reproducible byte for byte.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from . import baselines as bl
from .corpus import (Corpus, balance_sample, chronological_split, labels_array,
                     split_train_test, subcorpus)
from .embed import EmbeddingMatrix, assemble_matrix
from .errors import CovExplainError, DataError
from .model import TrainConfig, predict_labels, train

MODEL_NAMES = ("CovExplain", "Linear", "GaussianNB", "SvmRbf")

THREADS_ENV = "COVEXPLAIN_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Requested workers capped by the COVEXPLAIN_THREADS environment knob."""
    cap = os.environ.get(THREADS_ENV)
    limit = None
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            limit = None
    n = requested if requested and requested > 0 else 1
    return min(n, limit) if limit else n


@dataclass(frozen=True)
class FeatureConfig:
    name: str
    group: str                       # "Online" | "Offline" | "Hybrid"
    online: tuple[str, ...]
    offline: tuple[str, ...]

    def __post_init__(self):
        if self.group not in ("Online", "Offline", "Hybrid"):
            raise DataError(f"unknown group {self.group!r}")
        if self.group == "Online" and self.offline:
            raise DataError("Online configs cannot carry offline features")
        if self.group == "Offline" and self.online:
            raise DataError("Offline configs cannot carry online features")
        if self.group == "Hybrid" and not (self.online and self.offline):
            raise DataError("Hybrid configs need both modalities")
        if not self.online and not self.offline:
            raise DataError("empty feature config")


def _display(name: str) -> str:
    return name[:1].upper() + name[1:]


def enumerate_feature_sets(offline: Sequence[str],
                           online: Sequence[str]) -> list[FeatureConfig]:
    """Grid rows in reporting order; see module docstring."""
    offline = list(offline)
    online = list(online)
    configs: list[FeatureConfig] = []
    for name in online:
        configs.append(FeatureConfig(_display(name), "Online", (name,), ()))
    if len(online) > 1:
        configs.append(FeatureConfig("Online All", "Online", tuple(online), ()))
    if len(offline) >= 3:
        for combo in combinations(offline, 3):
            configs.append(FeatureConfig(
                "+".join(_display(f) for f in combo), "Offline", (), combo))
    elif offline:
        warnings.warn(
            f"only {len(offline)} offline features; skipping the "
            "cardinality-3 block", stacklevel=2)
    if offline:
        configs.append(FeatureConfig("Offline All", "Offline", (),
                                     tuple(offline)))
    if online and offline:
        configs.append(FeatureConfig("Online+Offline", "Hybrid",
                                     tuple(online), tuple(offline)))
    if not configs:
        raise DataError("no features to enumerate")
    return configs


# A trainer takes (X_train, y_train, cell_seed) and returns a predictor
# X -> 0/1 labels. Custom entries let tests inject stubs.
TrainerFn = Callable[[np.ndarray, np.ndarray, int], Callable[[np.ndarray], np.ndarray]]


def _builtin_trainers(train_config: TrainConfig, ridge: float, svm_c: float,
                      svm_gamma: float | None) -> dict[str, TrainerFn]:
    def fit_mlp(x, y, seed):
        cfg = TrainConfig(
            learning_rate=train_config.learning_rate,
            epochs=train_config.epochs,
            batch_size=train_config.batch_size,
            hidden_dim=train_config.hidden_dim,
            dropout_p=train_config.dropout_p,
            leaky_slope=train_config.leaky_slope,
            adamw=train_config.adamw,
            seed=seed,
            shuffle=train_config.shuffle,
        )
        params, _ = train(x, y, cfg)
        return lambda xt: predict_labels(params, xt)

    def fit_linear(x, y, seed):
        m = bl.fit_linear(x, y, ridge=ridge)
        return lambda xt: bl.predict(m, xt)

    def fit_gnb(x, y, seed):
        m = bl.fit_gnb(x, y)
        return lambda xt: bl.predict(m, xt)

    def fit_svm(x, y, seed):
        m = bl.fit_svm_rbf(x, y, c=svm_c, gamma=svm_gamma)
        return lambda xt: bl.predict(m, xt)

    return {"CovExplain": fit_mlp, "Linear": fit_linear,
            "GaussianNB": fit_gnb, "SvmRbf": fit_svm}


@dataclass
class CellStats:
    model: str
    accuracies: tuple[float, ...] = ()
    status: str = "ok"                # "ok" | "failed"
    error: str = ""

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float("nan")

    @property
    def std(self) -> float:
        # sample std over replicates; a single replicate reports 0.0
        if not self.accuracies:
            return float("nan")
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))


@dataclass
class AblationReport:
    configs: tuple[FeatureConfig, ...]
    models: tuple[str, ...]
    cells: list[list[CellStats]]      # [config][model]
    replicates: int
    seeds: tuple[int, ...]


def _cell_seed(base_seed: int, ci: int, mi: int, r: int) -> int:
    ss = np.random.SeedSequence((base_seed, ci, mi, r))
    return int(ss.generate_state(1)[0])


def run_matrix(corpus: Corpus,
               embeddings: Mapping[str, EmbeddingMatrix],
               configs: Sequence[FeatureConfig],
               models: Sequence[str | tuple[str, TrainerFn]],
               replicates: int,
               base_seed: int,
               *,
               k: int = 10,
               train_config: TrainConfig | None = None,
               ridge: float = 1e-3,
               svm_c: float = 1.0,
               svm_gamma: float | None = None,
               workers: int | None = None) -> AblationReport:
    """Train and evaluate every (config, model) cell over R replicates.

    The chronological split is computed once; every replicate re-balances the
    training slices with seed base_seed + r and evaluates on the untouched
    last slice. A cell that raises is marked failed and the grid continues.
    """
    if replicates < 1:
        raise DataError("replicates must be >= 1")
    if not configs:
        raise DataError("no feature configs given")
    if not models:
        raise DataError("no models given")
    tc = train_config or TrainConfig()
    builtin = _builtin_trainers(tc, ridge, svm_c, svm_gamma)
    trainers: list[tuple[str, TrainerFn]] = []
    for entry in models:
        if isinstance(entry, str):
            if entry not in builtin:
                raise DataError(f"unknown model {entry!r}; expected one of "
                                f"{sorted(builtin)} or a (name, trainer) pair")
            trainers.append((entry, builtin[entry]))
        else:
            trainers.append((entry[0], entry[1]))

    slices = chronological_split(corpus, k)
    train_posts, test_posts = split_train_test(corpus, slices)
    train_corpus = subcorpus(corpus, train_posts)
    y_test = labels_array(test_posts)

    cells = [[CellStats(model=name) for name, _ in trainers] for _ in configs]
    acc_lists: list[list[list[float]]] = [
        [[] for _ in trainers] for _ in configs]
    seeds = tuple(base_seed + r for r in range(replicates))
    # the held-out matrix never changes across replicates
    x_tests = [assemble_matrix(test_posts, embeddings, corpus.schema,
                               cfg.online, cfg.offline)[0] for cfg in configs]

    for r in range(replicates):
        balanced = balance_sample(train_corpus, base_seed + r)
        y_train = labels_array(balanced.posts)
        for ci, cfg in enumerate(configs):
            x_train, _ = assemble_matrix(balanced.posts, embeddings,
                                         corpus.schema, cfg.online, cfg.offline)
            x_test = x_tests[ci]

            def run_cell(mi: int) -> None:
                cell = cells[ci][mi]
                if cell.status == "failed":
                    return
                name, trainer = trainers[mi]
                try:
                    predictor = trainer(x_train, y_train,
                                        _cell_seed(base_seed, ci, mi, r))
                    pred = np.asarray(predictor(x_test))
                    acc = 100.0 * float((pred == y_test).mean())
                    acc_lists[ci][mi].append(acc)
                except CovExplainError as e:
                    cell.status = "failed"
                    cell.error = str(e)

            nw = worker_count(workers)
            if nw > 1:
                with ThreadPoolExecutor(max_workers=nw) as pool:
                    list(pool.map(run_cell, range(len(trainers))))
            else:
                for mi in range(len(trainers)):
                    run_cell(mi)

    for ci in range(len(configs)):
        for mi in range(len(trainers)):
            if cells[ci][mi].status == "ok":
                cells[ci][mi].accuracies = tuple(acc_lists[ci][mi])

    return AblationReport(configs=tuple(configs),
                          models=tuple(name for name, _ in trainers),
                          cells=cells, replicates=replicates, seeds=seeds)


def _fmt_cell(cell: CellStats) -> str:
    if cell.status != "ok":
        return "—(error)"
    return f"{cell.mean:.2f} ± {cell.std:.1f}"


def summarize(report: AblationReport) -> tuple[str, str]:
    """Render (markdown table, CSV). Best cell per model column is bold,
    runner-up underlined; failed cells render as an em-dash note."""
    # per-column best / runner-up over non-failed cells
    best: dict[int, int] = {}
    second: dict[int, int] = {}
    for mi in range(len(report.models)):
        scored = [(report.cells[ci][mi].mean, ci)
                  for ci in range(len(report.configs))
                  if report.cells[ci][mi].status == "ok"
                  and report.cells[ci][mi].accuracies]
        scored.sort(reverse=True)
        if scored:
            best[mi] = scored[0][1]
        if len(scored) > 1:
            second[mi] = scored[1][1]

    header = "| Group | Features | " + " | ".join(report.models) + " |"
    rule = "|---" * (2 + len(report.models)) + "|"
    lines = [header, rule]
    prev_group = None
    for ci, cfg in enumerate(report.configs):
        row = [cfg.group if cfg.group != prev_group else "", cfg.name]
        prev_group = cfg.group
        for mi in range(len(report.models)):
            cell = report.cells[ci][mi]
            text = _fmt_cell(cell)
            if cell.status == "ok":
                if best.get(mi) == ci:
                    text = f"**{text}**"
                elif second.get(mi) == ci:
                    text = f"<u>{text}</u>"
            row.append(text)
        lines.append("| " + " | ".join(row) + " |")
    markdown = "\n".join(lines) + "\n"

    csv_lines = ["group,config,model,mean_acc,std_acc,replicates,status"]
    for ci, cfg in enumerate(report.configs):
        for mi, model in enumerate(report.models):
            cell = report.cells[ci][mi]
            if cell.status == "ok":
                mean_s = f"{cell.mean:.6f}"
                std_s = f"{cell.std:.6f}"
                status = "ok"
            else:
                mean_s = ""
                std_s = ""
                status = "failed: " + cell.error.replace("\n", " ")
            if "," in status or '"' in status:
                status = '"' + status.replace('"', '""') + '"'
            name = cfg.name
            if "," in name:
                name = f'"{name}"'
            csv_lines.append(
                f"{cfg.group},{name},{model},{mean_s},{std_s},"
                f"{report.replicates},{status}")
    csv = "\n".join(csv_lines) + "\n"
    return markdown, csv
