"""QMS22 semi-supervised anomaly detection.

The detector turns one-class training data into an m-class separation
task: member set 1 holds every sample (training normals plus the
unlabeled test batch), while sets 2..m each hold the training normals
minus one part of a shuffled (m-1)-way split. A test sample whose f_1
undercuts the other member functions looks like the training data;
one that every f_i >= 2 beats is an outlier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HyperParams, QmsModel, TrainingProblem, cpm_optimize

__all__ = [
    "SsadProblem",
    "MemberSetPlan",
    "build_member_sets",
    "outlier_score",
    "outlier_scores",
    "run_qms22",
    "select_top_k",
]


@dataclass(frozen=True)
class SsadProblem:
    """Normal-only training samples plus the test batch to score.

    test_labels (truthy = outlier) are optional and used only for
    evaluation, never by the detector.
    """

    train_normals: np.ndarray
    test_samples: np.ndarray
    test_labels: np.ndarray | None = None

    def __post_init__(self):
        train = np.atleast_2d(np.asarray(self.train_normals, dtype=np.float64))
        test = np.atleast_2d(np.asarray(self.test_samples, dtype=np.float64))
        if train.shape[0] == 0 or test.shape[0] == 0:
            raise ValueError("need non-empty training and test sets")
        if train.shape[1] != test.shape[1]:
            raise ValueError(f"feature dimensions differ: train "
                             f"{train.shape[1]}, test {test.shape[1]}")
        object.__setattr__(self, "train_normals", train)
        object.__setattr__(self, "test_samples", test)
        if self.test_labels is not None:
            labels = np.asarray(self.test_labels).astype(bool)
            if labels.shape != (test.shape[0],):
                raise ValueError("test_labels length must match test_samples")
            object.__setattr__(self, "test_labels", labels)


@dataclass(frozen=True)
class MemberSetPlan:
    """Index-level layout of the m member sets.

    parts: the m-1 disjoint training parts (indices into the training
        set) removed from member sets 2..m respectively.
    member_sets: indices into the pooled sample matrix whose rows are the
        test samples first (original order) then the training normals
        (original order). Set 1 is everything; set i >= 2 is the training
        normals minus parts[i-2], kept in training order.
    weight_1: |set 2| / |set 1|, the loss weight of member set 1; all
        other weights are 1.
    """

    parts: tuple[np.ndarray, ...]
    member_sets: tuple[np.ndarray, ...]
    weight_1: float
    n_train: int
    n_test: int

    @property
    def class_weights(self) -> tuple[float, ...]:
        return (self.weight_1,) + (1.0,) * (len(self.member_sets) - 1)


def build_member_sets(problem: SsadProblem, m: int, seed: int) -> MemberSetPlan:
    """Shuffle the training normals and plan the m member sets.

    The shuffle uses numpy's seeded default generator (PCG64), so the
    split is reproducible across platforms. The m-1 parts differ in size
    by at most one: |train| mod (m-1) leftovers go one each to the
    lowest-indexed parts.
    """
    n_train = problem.train_normals.shape[0]
    n_test = problem.test_samples.shape[0]
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if n_train < m - 1:
        raise ValueError(f"need at least m - 1 = {m - 1} training normals "
                         f"to split into parts, got {n_train}")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(n_train)
    base, leftover = divmod(n_train, m - 1)
    sizes = [base + 1 if i < leftover else base for i in range(m - 1)]
    bounds = np.cumsum(sizes)
    parts = tuple(np.sort(piece) for piece in np.split(shuffled, bounds[:-1]))

    full = np.arange(n_test + n_train)
    member_sets = [full]
    for part in parts:
        keep = np.setdiff1d(np.arange(n_train), part, assume_unique=True)
        member_sets.append(keep + n_test)
    weight_1 = member_sets[1].size / full.size
    return MemberSetPlan(parts=parts, member_sets=tuple(member_sets),
                         weight_1=weight_1, n_train=n_train, n_test=n_test)


def outlier_scores(model: QmsModel, samples, guard: float | None = None) -> np.ndarray:
    """Score each row of `samples`: sum over i >= 2 of the clipped
    relative excess max(0, (f_i(x) - f_1(x)) / (f_1(x) + guard)).

    Zero exactly when f_1 is the (weak) maximum; large when the
    all-samples member function is the only small one.
    """
    if guard is None:
        guard = model.hyperparams.denom_guard
    values = model.member_values(samples)
    f1 = values[:, :1]
    excess = (values[:, 1:] - f1) / (f1 + guard)
    return np.maximum(excess, 0.0).sum(axis=1)


def outlier_score(model: QmsModel, x, guard: float | None = None) -> float:
    """Score a single sample; see outlier_scores."""
    return float(outlier_scores(model, np.asarray(x, dtype=np.float64)[None, :],
                                guard)[0])


def run_qms22(problem: SsadProblem, hp: HyperParams | None = None) -> np.ndarray:
    """Train the detector and score every test sample.

    Builds the member-set plan from hp.seed, trains with class weights
    (|set 2| / |set 1|, 1, ..., 1), and returns one nonnegative score per
    test sample (higher = more anomalous). Deterministic given (problem,
    hp). With iterations=0 all member functions are identical and every
    score is 0.
    """
    if hp is None:
        hp = HyperParams()
    plan = build_member_sets(problem, hp.m, hp.seed)
    pooled = np.vstack([problem.test_samples, problem.train_normals])
    training = TrainingProblem(pooled, plan.member_sets, plan.class_weights)
    model = cpm_optimize(training, hp)
    return outlier_scores(model, problem.test_samples)


def select_top_k(scores, k: int) -> np.ndarray:
    """0-based indices of the k largest scores, ascending.

    Ties at the selection boundary are broken toward the lower index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= k <= scores.size:
        raise ValueError(f"k must be between 0 and {scores.size}, got {k}")
    # lexsort: primary key descending score, secondary ascending index
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])
