"""The four data-fusion approaches and the weighted vote combiner.

Two early approaches merge fused per-source attributes into one table
(optionally reduced to the best attributes); the two late approaches
train one base model per input source and combine their class
probability distributions by a weighted average.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .errors import InvalidParamsError, SchemaMismatchError
from .learners import Model, predict, train
from .selection import reduce_to, select_best_attributes
from .tabular import DataTable, SourceBundle, join_on_id

APPROACHES = ("merge", "select", "ensemble", "ensemble-select")

#: Sources carrying input attributes (the exam only contributes the class).
INPUT_SOURCES = ("theory", "practice", "online")

AVERAGE_OF_PROBABILITIES = "average_of_probabilities"


@dataclass(frozen=True)
class FusionConfig:
    approach: str = "merge"
    weights: Mapping[str, float] = field(
        default_factory=lambda: {name: 1.0 for name in INPUT_SOURCES}
    )
    combination_rule: str = AVERAGE_OF_PROBABILITIES

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise InvalidParamsError(f"unknown approach {self.approach!r}")
        if self.combination_rule != AVERAGE_OF_PROBABILITIES:
            raise InvalidParamsError(
                f"unsupported combination rule {self.combination_rule!r}"
            )
        weights = dict(self.weights)
        if set(weights) != set(INPUT_SOURCES):
            raise InvalidParamsError(
                f"weights must cover exactly the input sources {INPUT_SOURCES}"
            )
        if any(w <= 0 for w in weights.values()):
            raise InvalidParamsError("all vote weights must be positive")
        object.__setattr__(self, "weights", weights)


@dataclass
class VoteModel:
    """One base model per source plus its vote weight."""

    models: dict[str, Model]
    weights: dict[str, float]
    combination_rule: str = AVERAGE_OF_PROBABILITIES

    @property
    def class_labels(self) -> tuple[str, ...]:
        return next(iter(self.models.values())).class_labels


def vote_predict(vote_model: VoteModel, rows_by_source: Mapping[str, Sequence]) -> tuple[float, ...]:
    """Weighted average of the base models' class distributions.

    Weights and probabilities are read as the decimal numbers their
    shortest float representation denotes and averaged with exact
    rational arithmetic, so the textbook example lands on its decimal
    answer and scaling all weights by a representable constant leaves
    the output bit-for-bit unchanged.
    """
    missing = set(vote_model.models) - set(rows_by_source)
    if missing:
        raise SchemaMismatchError(f"instance lacks parts for sources {sorted(missing)}")
    labels = vote_model.class_labels
    sums = [Fraction(0)] * len(labels)
    total_weight = Fraction(0)
    for name in sorted(vote_model.models):
        model = vote_model.models[name]
        if model.class_labels != labels:
            raise SchemaMismatchError("base models disagree on class labels")
        weight = Fraction(str(float(vote_model.weights[name])))
        total_weight += weight
        dist = predict(model, rows_by_source[name])
        for i, p in enumerate(dist):
            sums[i] += weight * Fraction(str(float(p)))
    return tuple(float(s / total_weight) for s in sums)


def vote_predict_label(vote_model: VoteModel, rows_by_source) -> str:
    dist = vote_predict(vote_model, rows_by_source)
    best = max(range(len(dist)), key=lambda i: (dist[i], -i))
    return vote_model.class_labels[best]


@dataclass
class PreparedData:
    """Datasets an approach trains on, plus what selection kept."""

    kind: str  # 'merged' | 'per_source'
    merged: DataTable | None = None
    per_source: dict[str, DataTable] = field(default_factory=dict)
    selected: dict[str, list[str]] = field(default_factory=dict)

    def tables(self) -> dict[str, DataTable]:
        if self.kind == "merged":
            return {"merged": self.merged}
        return dict(self.per_source)


def _source_with_class(bundle: SourceBundle, name: str) -> DataTable:
    pair = SourceBundle({name: bundle[name], "exam": bundle["exam"]})
    return join_on_id(pair, drop_id=False)


def prepare_approach(config: FusionConfig, bundle: SourceBundle) -> PreparedData:
    """Build the training dataset(s) for one preprocessed bundle."""
    if "exam" not in bundle.sources:
        raise SchemaMismatchError("bundle lacks the exam (class) source")
    if config.approach in ("merge", "select"):
        merged = join_on_id(bundle, drop_id=True)
        selected: dict[str, list[str]] = {}
        if config.approach == "select":
            names = select_best_attributes(merged)
            selected["merged"] = names
            merged = reduce_to(merged, names)
        return PreparedData(kind="merged", merged=merged, selected=selected)
    per_source = {}
    selected = {}
    for name in INPUT_SOURCES:
        if name not in bundle.sources:
            raise SchemaMismatchError(f"bundle lacks input source {name!r}")
        table = _source_with_class(bundle, name)
        if config.approach == "ensemble-select":
            names = select_best_attributes(table)
            selected[name] = names
            table = reduce_to(table, names)
        per_source[name] = table
    return PreparedData(kind="per_source", per_source=per_source, selected=selected)


def train_prepared(
    prepared: PreparedData,
    config: FusionConfig,
    algorithm: str,
    seed: int = 0,
    params=None,
    row_filter: Sequence[int] | None = None,
):
    """Train the approach's model(s); ``row_filter`` selects row positions."""

    def rows_of(table: DataTable) -> DataTable:
        if row_filter is None:
            return table
        return table.with_rows([table.rows[i] for i in row_filter])

    if prepared.kind == "merged":
        return train(algorithm, rows_of(prepared.merged), params=params, seed=seed)
    models = {
        name: train(algorithm, rows_of(table), params=params, seed=seed)
        for name, table in prepared.per_source.items()
    }
    return VoteModel(models=models, weights=dict(config.weights))


def run_approach(
    config: FusionConfig,
    bundle: SourceBundle,
    algorithm: str,
    seed: int = 0,
    params=None,
) -> tuple[Model | VoteModel, PreparedData]:
    """Prepare the configured approach on a bundle and train on all rows."""
    prepared = prepare_approach(config, bundle)
    model = train_prepared(prepared, config, algorithm, seed=seed, params=params)
    return model, prepared


def weight_search(
    bundle: SourceBundle,
    algorithm: str,
    grid: Sequence[float] = (1.0, 2.0),
    k: int = 10,
    seed: int = 0,
    params=None,
    approach: str = "ensemble",
) -> dict[str, float]:
    """Exhaustive vote-weight search over the grid by CV accuracy.

    Ties break toward the all-ones assignment, then lexicographically in
    canonical source order.
    """
    from .evaluation import cross_validate  # deferred: evaluation imports ensemble

    if approach not in ("ensemble", "ensemble-select"):
        raise InvalidParamsError("weight search applies to the ensemble approaches")
    grid = tuple(sorted(set(float(g) for g in grid)))
    if not grid:
        raise InvalidParamsError("empty weight grid")
    candidates = []
    for combo in product(grid, repeat=len(INPUT_SOURCES)):
        weights = dict(zip(INPUT_SOURCES, combo))
        config = FusionConfig(approach=approach, weights=weights)
        result = cross_validate(config, algorithm, bundle, k=k, seed=seed, params=params)
        all_ones = all(w == 1.0 for w in combo)
        candidates.append((-result.accuracy_pct, 0 if all_ones else 1, combo, weights))
    candidates.sort(key=lambda entry: entry[:3])
    return candidates[0][3]
