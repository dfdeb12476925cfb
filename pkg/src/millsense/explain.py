"""Feature-importance reports: permutation importance, subset-conditioned
analysis, and ranking comparison.

Permutation importance is reported as error degradation: with P the MSE of
the model's predictions, score_i is the mean over repeats of
P(column i permuted) - P(original), so larger means more important and an
unused feature scores exactly zero. The permutation of feature i on repeat r
is drawn from ``default_rng(SeedSequence((seed, i, r)))``; scores are
therefore independent of evaluation order.

Rankings sort features by descending score, breaking ties by ascending
feature name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    FeatureSetMismatch,
    InvariantViolation,
    SchemaError,
    SubsetTooSmall,
    UnfittedModel,
    UnknownTarget,
)
from .forest import Forest, gini_importance, predict_matrix
from .metrics import mse

_REPORT_HEADER = "millsense-importance 1"

GINI = "gini"
PERMUTATION = "permutation"


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    method: str                      # "gini" or "permutation"
    subset_label: str                # "all", "train", "test", or a predicate
    feature_names: tuple[str, ...]
    scores: np.ndarray
    ranking: tuple[str, ...]
    repeats: int | None = None       # permutation only
    seed: int | None = None          # permutation only

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        if self.method not in (GINI, PERMUTATION):
            raise InvariantViolation(f"unknown method {self.method!r}")
        if scores.size != len(self.feature_names):
            raise DimensionMismatch("scores length must match feature names")
        if sorted(self.ranking) != sorted(self.feature_names):
            raise InvariantViolation("ranking must be a permutation of the feature names")
        if self.ranking != _rank(self.feature_names, scores):
            raise InvariantViolation("ranking is inconsistent with the scores")

    def score_of(self, name: str) -> float:
        return float(self.scores[self.feature_names.index(name)])


def _rank(names: Sequence[str], scores: np.ndarray) -> tuple[str, ...]:
    by_name = dict(zip(names, scores))
    return tuple(sorted(names, key=lambda nm: (-by_name[nm], nm)))


def make_report(
    method: str,
    subset_label: str,
    names: Sequence[str],
    scores: np.ndarray,
    repeats: int | None = None,
    seed: int | None = None,
) -> ImportanceReport:
    names = tuple(names)
    return ImportanceReport(
        method=method,
        subset_label=subset_label,
        feature_names=names,
        scores=np.asarray(scores, dtype=float),
        ranking=_rank(names, np.asarray(scores, dtype=float)),
        repeats=repeats,
        seed=seed,
    )


def gini_report(model: Forest, subset_label: str = "all") -> ImportanceReport:
    """Normalized impurity-decrease importances as a report."""
    return make_report(GINI, subset_label, model.feature_names, gini_importance(model))


def permutation_importance(
    model: Forest,
    X: np.ndarray,
    y: np.ndarray,
    repeats: int = 10,
    seed: int = 0,
    subset_label: str = "all",
) -> ImportanceReport:
    """Mean MSE degradation per feature over ``repeats`` seeded column
    permutations."""
    if not model.trees:
        raise UnfittedModel("model has no trees")
    if repeats < 1:
        raise InvariantViolation(f"repeats must be >= 1, got {repeats}")
    if seed < 0:
        raise InvariantViolation(f"seed must be non-negative, got {seed}")
    X = np.array(X, dtype=float)  # private copy; columns are permuted in place
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected an (n, {model.n_features}) matrix, got shape {X.shape}"
        )
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.size} entries")

    n = X.shape[0]
    p_original = mse(y, predict_matrix(model, X))
    scores = np.zeros(model.n_features, dtype=float)
    for i in range(model.n_features):
        original = X[:, i].copy()
        acc = 0.0
        for r in range(repeats):
            rng = np.random.default_rng(np.random.SeedSequence((seed, i, r)))
            X[:, i] = original[rng.permutation(n)]
            acc += mse(y, predict_matrix(model, X)) - p_original
        X[:, i] = original
        scores[i] = acc / repeats
    return make_report(
        PERMUTATION, subset_label, model.feature_names, scores, repeats=repeats, seed=seed
    )


_ATOM_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(<=|>)\s*([-+0-9.eE]+)\s*$")

Atom = tuple[str, str, float]


def parse_predicate(text: str) -> list[Atom]:
    """Parse a conjunction like ``"f<=0.45 & ap>1.0"`` into (name, op, value)
    atoms; atoms are joined by ``&``."""
    atoms = []
    for part in text.split("&"):
        m = _ATOM_RE.match(part)
        if m is None:
            raise SchemaError(f"malformed predicate atom {part.strip()!r}")
        atoms.append((m.group(1), m.group(2), float(m.group(3))))
    if not atoms:
        raise SchemaError("empty predicate")
    return atoms


def predicate_label(atoms: Sequence[Atom]) -> str:
    return " & ".join(f"{nm}{op}{format(v, 'g')}" for nm, op, v in atoms)


def subset_importance(
    model: Forest,
    X: np.ndarray,
    y: np.ndarray,
    predicate: str | Sequence[Atom],
    repeats: int = 10,
    seed: int = 0,
) -> ImportanceReport:
    """Permutation importance restricted to the rows matching ``predicate``
    (a conjunction of ``name<=v`` / ``name>v`` atoms over feature names)."""
    atoms = parse_predicate(predicate) if isinstance(predicate, str) else list(predicate)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    mask = np.ones(X.shape[0], dtype=bool)
    for name, op, value in atoms:
        if name not in model.feature_names:
            raise UnknownTarget(f"predicate names unknown feature {name!r}")
        col = X[:, model.feature_names.index(name)]
        mask &= (col <= value) if op == "<=" else (col > value)
    if int(mask.sum()) < 5:
        raise SubsetTooSmall(
            f"predicate {predicate_label(atoms)!r} selects only {int(mask.sum())} rows"
        )
    return permutation_importance(
        model, X[mask], y[mask], repeats=repeats, seed=seed,
        subset_label=predicate_label(atoms),
    )


def compare_rankings(a: ImportanceReport, b: ImportanceReport) -> tuple[float, list[str]]:
    """Kendall rank correlation between two rankings plus the features whose
    rank position differs (listed in ``a``'s ranking order)."""
    if set(a.feature_names) != set(b.feature_names):
        raise FeatureSetMismatch("reports cover different feature sets")
    rank_a = {nm: i for i, nm in enumerate(a.ranking)}
    rank_b = {nm: i for i, nm in enumerate(b.ranking)}
    names = list(a.ranking)
    m = len(names)
    discordant = 0
    for i in range(m):
        for j in range(i + 1, m):
            da = rank_a[names[i]] - rank_a[names[j]]
            db = rank_b[names[i]] - rank_b[names[j]]
            if da * db < 0:
                discordant += 1
    n_pairs = m * (m - 1) // 2
    tau = 1.0 - 2.0 * discordant / n_pairs if n_pairs else 1.0
    displaced = [nm for nm in a.ranking if rank_a[nm] != rank_b[nm]]
    return tau, displaced


def report_to_text(report: ImportanceReport) -> str:
    lines = [
        _REPORT_HEADER,
        f"method {report.method}",
        f"subset_label {report.subset_label}",
    ]
    if report.method == PERMUTATION:
        lines.append(f"repeats {report.repeats}")
        lines.append(f"seed {report.seed}")
    for nm, v in zip(report.feature_names, report.scores):
        lines.append(f"score {nm} {format(float(v), '.17g')}")
    lines.append("ranking " + " ".join(report.ranking))
    return "\n".join(lines) + "\n"


def report_from_text(text: str) -> ImportanceReport:
    lines = text.splitlines()
    if not lines or lines[0] != _REPORT_HEADER:
        raise SchemaError(f"not a {_REPORT_HEADER!r} report")
    fields: dict[str, str] = {}
    names: list[str] = []
    scores: list[float] = []
    ranking: tuple[str, ...] = ()
    for line in lines[1:]:
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "score":
            nm, _, val = rest.partition(" ")
            names.append(nm)
            scores.append(float(val))
        elif key == "ranking":
            ranking = tuple(rest.split())
        else:
            fields[key] = rest
    report = ImportanceReport(
        method=fields.get("method", ""),
        subset_label=fields.get("subset_label", "all"),
        feature_names=tuple(names),
        scores=np.array(scores, dtype=float),
        ranking=ranking,
        repeats=int(fields["repeats"]) if "repeats" in fields else None,
        seed=int(fields["seed"]) if "seed" in fields else None,
    )
    return report
