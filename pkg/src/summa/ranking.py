"""Score-to-rank transformation and supervised performance oracles.

Ranks run 1..N per method, rank 1 being the sample the method is most
confident belongs to the positive class.  The performance measure

    delta = <rank | class 0> - <rank | class 1>

is positive for an informative method under that convention and relates
to the area under the ROC curve by ``auroc = delta / n + 1/2``.

The scalar oracles (:func:`delta`, :func:`auroc_rectangle`,
:func:`mann_whitney_u0`) propagate exact arithmetic: given Python ints
or :class:`fractions.Fraction` ranks they return exact rationals, which
the equivalence tests rely on.  ndarray inputs take a fast float path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .exceptions import DegenerateLabels, InvalidInput, TiesUnsupported

STRICT = "strict"
MIDRANK = "midrank"


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _default_ids(prefix: str, n: int) -> tuple[str, ...]:
    width = max(2, len(str(n - 1)))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(n))


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """M x N matrix of per-method confidence scores (higher => positive)."""

    values: np.ndarray
    method_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise InvalidInput("scores must form a 2-D matrix")
        m, n = values.shape
        if m < 1 or n < 2:
            raise InvalidInput(f"need at least 1 method and 2 samples, got {m}x{n}")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("scores must be finite")
        object.__setattr__(self, "values", _frozen_array(values))
        object.__setattr__(self, "method_ids", tuple(self.method_ids))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        if len(self.method_ids) != m or len(self.sample_ids) != n:
            raise InvalidInput("id lists must match the matrix shape")

    @classmethod
    def from_array(cls, values, method_ids=None, sample_ids=None) -> "ScoreMatrix":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        m, n = values.shape
        return cls(
            values,
            tuple(method_ids) if method_ids is not None else _default_ids("m", m),
            tuple(sample_ids) if sample_ids is not None else _default_ids("s", n),
        )

    @property
    def n_methods(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class RankMatrix:
    """M x N matrix of sample ranks, one row per method.

    Under the strict tie policy every row is a permutation of 1..N;
    under midrank tied entries share their average position, so rows
    still sum to N(N+1)/2.
    """

    ranks: np.ndarray
    tie_policy: str
    method_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        ranks = np.atleast_2d(np.asarray(self.ranks, dtype=float))
        m, n = ranks.shape
        if m < 1 or n < 2:
            raise InvalidInput(f"need at least 1 method and 2 samples, got {m}x{n}")
        if self.tie_policy not in (STRICT, MIDRANK):
            raise InvalidInput(f"unknown tie policy {self.tie_policy!r}")
        if self.tie_policy == STRICT:
            expected = np.arange(1, n + 1, dtype=float)
            if not all(np.array_equal(np.sort(row), expected) for row in ranks):
                raise InvalidInput("strict rows must each be a permutation of 1..N")
        else:
            if np.any(ranks < 1.0) or np.any(ranks > n):
                raise InvalidInput("midrank entries must lie in [1, N]")
            target = n * (n + 1) / 2.0
            if not np.allclose(ranks.sum(axis=1), target, rtol=0, atol=1e-6 * target):
                raise InvalidInput("midrank rows must sum to N(N+1)/2")
        object.__setattr__(self, "ranks", _frozen_array(ranks))
        object.__setattr__(self, "method_ids", tuple(self.method_ids))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        if len(self.method_ids) != m or len(self.sample_ids) != n:
            raise InvalidInput("id lists must match the matrix shape")

    @property
    def n_methods(self) -> int:
        return self.ranks.shape[0]

    @property
    def n_samples(self) -> int:
        return self.ranks.shape[1]


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Binary class labels, 1 = positive."""

    labels: np.ndarray
    n_positive: int = field(init=False)
    n_negative: int = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise InvalidInput("labels must be 1-D")
        values = np.unique(labels)
        if not np.all(np.isin(values, (0, 1))):
            raise InvalidInput(f"labels must be 0/1, got values {values}")
        labels = _frozen_array(labels, dtype=np.int8)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_positive", int(labels.sum()))
        object.__setattr__(self, "n_negative", int(labels.size - labels.sum()))

    @classmethod
    def coerce(cls, labels) -> "LabelVector":
        return labels if isinstance(labels, cls) else cls(np.asarray(labels))

    def __len__(self) -> int:
        return self.labels.size

    def require_both_classes(self):
        if self.n_positive == 0 or self.n_negative == 0:
            raise DegenerateLabels(
                "need at least one sample from each class "
                f"(got {self.n_positive} positive of {len(self)})"
            )


def rank_transform(scores: ScoreMatrix, tie_policy: str = MIDRANK) -> RankMatrix:
    """Convert scores to per-method ranks; higher score => lower rank number.

    Strict policy breaks ties by ascending sample index; midrank assigns
    tied entries their average rank.  Any strictly increasing transform
    of a method's scores leaves its ranks unchanged.
    """
    if tie_policy not in (STRICT, MIDRANK):
        raise InvalidInput(f"unknown tie policy {tie_policy!r}")
    method = "ordinal" if tie_policy == STRICT else "average"
    ranks = rankdata(-scores.values, method=method, axis=1)
    return RankMatrix(ranks, tie_policy, scores.method_ids, scores.sample_ids)


def _ratio(num, den):
    # Integer numerator and denominator stay exact.
    if isinstance(num, int) and isinstance(den, int):
        return Fraction(num, den)
    return num / den


def delta(ranks, labels) -> float | Fraction:
    """Difference of class-conditional mean ranks, <r|0> - <r|1>.

    Positive when the method tends to rank positive samples first.
    ndarray ranks return a float; sequences of ints or Fractions return
    the exact rational value.
    """
    labels = LabelVector.coerce(labels)
    labels.require_both_classes()
    if len(labels) != len(ranks):
        raise InvalidInput("ranks and labels must have equal length")
    if isinstance(ranks, np.ndarray):
        r = np.asarray(ranks, dtype=float)
        mask = labels.labels == 0
        return float(r[mask].mean() - r[~mask].mean())
    s0 = sum(r for r, lab in zip(ranks, labels.labels) if lab == 0)
    s1 = sum(r for r, lab in zip(ranks, labels.labels) if lab == 1)
    return _ratio(s0, labels.n_negative) - _ratio(s1, labels.n_positive)


def auroc_from_delta(delta_value, n_samples: int):
    """AUROC implied by a conditional mean-rank difference: delta/N + 1/2."""
    if n_samples < 2:
        raise InvalidInput("need at least 2 samples")
    return delta_value / n_samples + Fraction(1, 2)


def _labels_by_rank(ranks, labels: LabelVector) -> list[int]:
    """Class label of the sample at each rank position 1..N, strict only."""
    n = len(labels)
    by_rank: list[int | None] = [None] * n
    for sample, rank in enumerate(ranks):
        r = float(rank)
        idx = int(r) - 1
        if r != int(r) or not 0 <= idx < n or by_rank[idx] is not None:
            raise TiesUnsupported(
                "rectangle-rule AUROC is defined only on tie-free rank permutations"
            )
        by_rank[idx] = int(labels.labels[sample])
    return by_rank  # type: ignore[return-value]


def auroc_rectangle(ranks, labels) -> float | Fraction:
    """Rectangle-rule AUROC: sum of TPR * (FPR step) walking ranks 1..N.

    Exact oracle against which the delta-based estimate is validated;
    requires strict (permutation) ranks.
    """
    labels = LabelVector.coerce(labels)
    labels.require_both_classes()
    if len(labels) != len(ranks):
        raise InvalidInput("ranks and labels must have equal length")
    by_rank = _labels_by_rank(ranks, labels)
    true_pos = 0
    concordant = 0
    for lab in by_rank:
        if lab == 1:
            true_pos += 1
        else:
            concordant += true_pos
    value = _ratio(concordant, labels.n_positive * labels.n_negative)
    return float(value) if isinstance(ranks, np.ndarray) else value


def mann_whitney_u0(ranks, labels):
    """Mann-Whitney U statistic of the negative class.

    U0 = sum of class-0 ranks - N0(N0+1)/2, which satisfies
    U0 = (N1 N0 / N)(delta + N/2) and auroc = U0 / (N0 N1).
    Integer ranks give an exact integer result.
    """
    labels = LabelVector.coerce(labels)
    labels.require_both_classes()
    if len(labels) != len(ranks):
        raise InvalidInput("ranks and labels must have equal length")
    n0 = labels.n_negative
    if isinstance(ranks, np.ndarray):
        r = np.asarray(ranks, dtype=float)
        return float(r[labels.labels == 0].sum() - n0 * (n0 + 1) / 2.0)
    s0 = sum(r for r, lab in zip(ranks, labels.labels) if lab == 0)
    return s0 - (n0 * (n0 + 1)) // 2


def reverse_ranks(ranks: Sequence | np.ndarray, n_samples: int):
    """Map each rank r to N+1-r, flipping the method's sign convention."""
    if isinstance(ranks, np.ndarray):
        return n_samples + 1 - ranks
    return type(ranks)(n_samples + 1 - r for r in ranks)
