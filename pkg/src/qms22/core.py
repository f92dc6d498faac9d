"""Quadratic multiform separation: model types, ratio loss, and the
coordinate perturbation trainer.

A classifier is a bank of m quadratic "member functions"
``f_i(x) = ||A_i x - b_i||^2``; a sample is assigned to the class whose
member function is smallest. Training minimizes a clipped ratio loss by
perturbing one matrix/offset entry at a time and keeping only strict
improvements. The trainer never recomputes the loss from scratch: a
residual cache turns each single-entry perturbation into a rank-one
update of the affected member values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "HyperParams",
    "MemberFunction",
    "QmsModel",
    "TrainingProblem",
    "ResidualCache",
    "pair_term",
    "loss_full",
    "cpm_optimize",
]

# entry locators for a single scalar parameter of one member function:
# ("a", k, l) is A[k, l]; ("b", k) is b[k]
EntryRef = tuple


@dataclass(frozen=True)
class HyperParams:
    """Training hyperparameters.

    Defaults are the benchmark settings QMS22 was tuned with: seven member
    functions with ten rows each, clip threshold 0.5, sixty sweeps, unit
    steps for matrix entries, 255-unit steps for offsets, and offsets
    started at (25500, 0, ..., 0). They assume features normalized to a
    max-abs of roughly 255.

    Attributes:
        m: number of member functions (classes), >= 2.
        q: rows per member matrix, >= 1.
        alpha: ratio clip threshold in [0, 1).
        iterations: number of full coordinate sweeps, >= 0.
        step_a: perturbation distance for entries of each A, > 0.
        step_b: perturbation distance for entries of each b, > 0.
        b_init: initial value of the first entry of each b.
        denom_guard: small positive value added to every ratio denominator.
        seed: RNG seed for the parts shuffle in the detector pipeline;
            training itself draws no random numbers.
    """

    m: int = 7
    q: int = 10
    alpha: float = 0.5
    iterations: int = 60
    step_a: float = 1.0
    step_b: float = 255.0
    b_init: float = 25500.0
    denom_guard: float = 1e-12
    seed: int = 42

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.step_a <= 0 or self.step_b <= 0:
            raise ValueError("step sizes must be positive")
        if self.denom_guard <= 0:
            raise ValueError(f"denom_guard must be > 0, got {self.denom_guard}")


@dataclass(frozen=True)
class MemberFunction:
    """One quadratic form f(x) = ||a @ x - b||^2 with a of shape (q, p)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
            raise ValueError(f"need a (q, p) matrix and length-q vector, "
                             f"got shapes {a.shape} and {b.shape}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("member function entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def q(self) -> int:
        return self.a.shape[0]

    @property
    def p(self) -> int:
        return self.a.shape[1]

    def evaluate(self, x) -> float:
        """Return ||a @ x - b||^2, always >= 0."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.p,):
            raise ValueError(f"expected a feature vector of length {self.p}, "
                             f"got shape {x.shape}")
        r = self.a @ x - self.b
        return float(r @ r)


@dataclass(frozen=True)
class QmsModel:
    """A trained bank of member functions plus the settings that made it."""

    members: tuple[MemberFunction, ...]
    hyperparams: HyperParams

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) != self.hyperparams.m:
            raise ValueError(f"expected {self.hyperparams.m} member functions, "
                             f"got {len(members)}")
        shapes = {(f.q, f.p) for f in members}
        if len(shapes) != 1:
            raise ValueError(f"member functions disagree on shape: {shapes}")
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return len(self.members)

    @property
    def p(self) -> int:
        return self.members[0].p

    def member_values(self, samples) -> np.ndarray:
        """Evaluate every member function on rows of `samples`.

        Returns an (n_samples, m) array with column i holding f_i.
        """
        x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        if x.shape[1] != self.p:
            raise ValueError(f"expected feature dimension {self.p}, "
                             f"got {x.shape[1]}")
        out = np.empty((x.shape[0], self.m))
        for i, f in enumerate(self.members):
            r = x @ f.a.T - f.b
            out[:, i] = np.einsum("ij,ij->i", r, r)
        return out

    def classify(self, x) -> int:
        """Class label in {1, ..., m} of the smallest member value.

        Ties go to the lowest index, so a fresh symmetric model labels
        everything class 1. Labels are 1-based by convention.
        """
        values = self.member_values(np.asarray(x, dtype=np.float64)[None, :])
        return int(np.argmin(values[0])) + 1


def pair_term(fi: float, fj: float, alpha: float, guard: float) -> float:
    """One summand of the ratio loss: max(alpha, fi / (fj + guard)).

    Total for all inputs; the guard keeps fj = 0 finite.
    """
    return max(alpha, fi / (fj + guard))


class TrainingProblem:
    """Member sets and their loss weights.

    Samples live in one pooled (n, p) matrix and each member set is an
    index array into it, so a sample shared by several member sets is
    stored once. `from_member_sets` accepts the plain one-list-per-class
    form and pools it.
    """

    def __init__(self, samples, member_sets, class_weights=None):
        self.samples = np.ascontiguousarray(samples, dtype=np.float64)
        if (self.samples.ndim != 2 or self.samples.shape[0] == 0
                or self.samples.shape[1] == 0):
            raise ValueError("samples must be a non-empty (n, p) matrix")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples must be finite")
        n = self.samples.shape[0]
        sets = []
        for idx in member_sets:
            idx = np.asarray(idx, dtype=np.intp)
            if idx.size == 0:
                raise ValueError("every member set must be non-empty")
            if idx.min() < 0 or idx.max() >= n:
                raise ValueError("member set index out of range")
            sets.append(idx)
        if len(sets) < 2:
            raise ValueError("need at least two member sets")
        self.member_sets = tuple(sets)
        if class_weights is None:
            class_weights = (1.0,) * len(sets)
        weights = tuple(float(w) for w in class_weights)
        if len(weights) != len(sets):
            raise ValueError(f"got {len(weights)} weights for "
                             f"{len(sets)} member sets")
        if any(w <= 0 for w in weights):
            raise ValueError("class weights must be positive")
        self.class_weights = weights

    @classmethod
    def from_member_sets(cls, member_sets, class_weights=None):
        """Build a problem from one sample collection per class."""
        arrays = [np.atleast_2d(np.asarray(s, dtype=np.float64))
                  for s in member_sets]
        if not arrays:
            raise ValueError("need at least two member sets")
        dims = {a.shape[1] for a in arrays}
        if len(dims) != 1:
            raise ValueError(f"member sets disagree on feature dimension: {dims}")
        pooled = np.vstack(arrays)
        sets = []
        start = 0
        for a in arrays:
            sets.append(np.arange(start, start + a.shape[0]))
            start += a.shape[0]
        return cls(pooled, sets, class_weights)

    @property
    def m(self) -> int:
        return len(self.member_sets)

    @property
    def p(self) -> int:
        return self.samples.shape[1]


def loss_full(problem: TrainingProblem, model: QmsModel) -> float:
    """Weighted ratio loss of `model` on `problem`, summed directly.

    For every class i, every sample of member set i contributes
    ``w_i * max(alpha, f_i(x) / (f_j(x) + guard))`` for each j != i.
    """
    if model.m != problem.m:
        raise ValueError(f"model has {model.m} member functions, "
                         f"problem has {problem.m} member sets")
    if model.p != problem.p:
        raise ValueError(f"model expects dimension {model.p}, "
                         f"problem has {problem.p}")
    hp = model.hyperparams
    values = model.member_values(problem.samples)
    total = 0.0
    for i, (idx, w) in enumerate(zip(problem.member_sets,
                                     problem.class_weights)):
        fi = values[idx, i]
        for j in range(problem.m):
            if j == i:
                continue
            ratio = fi / (values[idx, j] + hp.denom_guard)
            total += w * float(np.maximum(hp.alpha, ratio).sum())
    return total


def _initial_members(hp: HyperParams, p: int) -> tuple[MemberFunction, ...]:
    # every class starts identical: A zero, b = (b_init, 0, ..., 0)
    b = np.zeros(hp.q)
    b[0] = hp.b_init
    return tuple(MemberFunction(np.zeros((hp.q, p)), b.copy())
                 for _ in range(hp.m))


class ResidualCache:
    """Residuals r_i(x) = A_i x - b_i and member values for every class
    and pooled sample, kept consistent under single-entry updates.

    Perturbing A_i[k, l] by delta shifts r_i(x)[k] by delta * x[l], so

        f_i'(x) = f_i(x) + 2 * delta * x[l] * r_i(x)[k] + delta^2 * x[l]^2

    (for b_i[k] the shift is -delta). Only loss terms involving f_i are
    revisited: the numerator terms of member set i and the terms where
    f_i sits in a denominator. Cost per delta query is O(n * m).
    """

    def __init__(self, problem: TrainingProblem, model: QmsModel):
        if model.m != problem.m or model.p != problem.p:
            raise ValueError("model and problem shapes disagree")
        self.problem = problem
        self.hp = model.hyperparams
        m = problem.m
        n = problem.samples.shape[0]
        self._xt = np.ascontiguousarray(problem.samples.T)     # (p, n)
        self._xt_sq = self._xt * self._xt
        self._a = np.stack([f.a for f in model.members]).copy()  # (m, q, p)
        self._b = np.stack([f.b for f in model.members]).copy()  # (m, q)
        # residuals as (m, q, n) so one matrix row is contiguous
        self._r = np.einsum("mqp,pn->mqn", self._a, self._xt)
        self._r -= self._b[:, :, None]
        self._f = np.einsum("mqn,mqn->mn", self._r, self._r)     # (m, n)

        # flat term tables per perturbed class c:
        #   numerator side: terms (i=c, x in set c, j != c)
        #   denominator side: terms (i=j != c, x in set j, denominator c)
        self._num_sample = []
        self._num_den = []
        self._den_sample = []
        self._den_num = []
        self._den_w = []
        w = np.asarray(problem.class_weights)
        for c in range(m):
            others = [j for j in range(m) if j != c]
            own = problem.member_sets[c]
            self._num_sample.append(np.tile(own, len(others)))
            self._num_den.append(np.repeat(np.asarray(others, dtype=np.intp),
                                           own.size))
            ds = np.concatenate([problem.member_sets[j] for j in others])
            dn = np.repeat(np.asarray(others, dtype=np.intp),
                           [problem.member_sets[j].size for j in others])
            self._den_sample.append(ds)
            self._den_num.append(dn)
            self._den_w.append(np.repeat(w[others],
                                         [problem.member_sets[j].size
                                          for j in others]))
        self._loss = self._terms_total()

    @property
    def loss(self) -> float:
        """Current loss, tracked incrementally across accepted moves."""
        return self._loss

    def _terms_total(self) -> float:
        hp = self.hp
        total = 0.0
        for c in range(self.problem.m):
            fc = self._f[c]
            den = self._f[self._num_den[c], self._num_sample[c]] + hp.denom_guard
            ratios = np.maximum(hp.alpha, fc[self._num_sample[c]] / den)
            total += self.problem.class_weights[c] * float(ratios.sum())
        return total

    def _perturbation(self, class_i: int, entry: EntryRef):
        # returns (k, h, usq): f_new = f + 2*delta*h + delta^2*usq
        if entry[0] == "a":
            _, k, l = entry
            return k, self._xt[l] * self._r[class_i, k], self._xt_sq[l]
        if entry[0] == "b":
            _, k = entry
            return k, -self._r[class_i, k], 1.0
        raise ValueError(f"unknown entry locator {entry!r}")

    def _deltas(self, class_i: int, entry: EntryRef, deltas):
        hp = self.hp
        _, h, usq = self._perturbation(class_i, entry)
        fc = self._f[class_i]
        ns, nd = self._num_sample[class_i], self._num_den[class_i]
        ds = self._den_sample[class_i]
        den_vals = self._f[nd, ns] + hp.denom_guard
        num_vals = self._f[self._den_num[class_i], ds]
        w_own = self.problem.class_weights[class_i]
        dw = self._den_w[class_i]
        old = (w_own * np.maximum(hp.alpha, fc[ns] / den_vals).sum()
               + (dw * np.maximum(hp.alpha, num_vals / (fc[ds] + hp.denom_guard))).sum())
        out = []
        for d in deltas:
            f_new = fc + (2.0 * d) * h + (d * d) * usq
            np.maximum(f_new, 0.0, out=f_new)
            new = (w_own * np.maximum(hp.alpha, f_new[ns] / den_vals).sum()
                   + (dw * np.maximum(hp.alpha, num_vals / (f_new[ds] + hp.denom_guard))).sum())
            out.append(float(new - old))
        return out

    def loss_delta(self, class_i: int, entry: EntryRef, delta: float) -> float:
        """Loss change from adding `delta` to one entry of class `class_i`,
        without applying it. Exact zero for delta = 0.
        """
        return self._deltas(class_i, entry, (delta,))[0]

    def apply(self, class_i: int, entry: EntryRef, delta: float, loss_delta: float):
        """Commit a move: update the parameter, residuals, member values,
        and the tracked loss.
        """
        k, h, usq = self._perturbation(class_i, entry)
        f_new = self._f[class_i] + (2.0 * delta) * h + (delta * delta) * usq
        np.maximum(f_new, 0.0, out=f_new)
        self._f[class_i] = f_new
        if entry[0] == "a":
            self._a[class_i, k, entry[2]] += delta
            self._r[class_i, k] += delta * self._xt[entry[2]]
        else:
            self._b[class_i, k] += delta
            self._r[class_i, k] -= delta
        self._loss += loss_delta

    def members(self) -> tuple[MemberFunction, ...]:
        """Snapshot of the current member functions."""
        return tuple(MemberFunction(self._a[i].copy(), self._b[i].copy())
                     for i in range(self.problem.m))

    def max_relative_drift(self) -> float:
        """Worst relative deviation of cached state from a recomputation."""
        r_exact = np.einsum("mqp,pn->mqn", self._a, self._xt)
        r_exact -= self._b[:, :, None]
        f_exact = np.einsum("mqn,mqn->mn", r_exact, r_exact)
        f_err = np.abs(self._f - f_exact) / np.maximum(np.abs(f_exact), 1.0)
        r_err = np.abs(self._r - r_exact) / np.maximum(np.abs(r_exact), 1.0)
        return float(max(f_err.max(), r_err.max()))


def cpm_optimize(problem: TrainingProblem, hp: HyperParams,
                 on_accept: Callable | None = None,
                 verify_cache: bool = False) -> QmsModel:
    """Train a model by coordinate perturbation.

    Every sweep visits each class in order; within a class, each entry of
    A row by row, then each entry of b top to bottom. At each entry the
    loss change of +/- one step is evaluated incrementally and the larger
    strict decrease is kept (ties prefer +step); otherwise the entry is
    left alone. Steps are constant, there is no line search, and each
    entry is touched once per sweep, so the run is fully deterministic.

    Args:
        problem: member sets and weights.
        hp: hyperparameters; hp.m must match the problem.
        on_accept: diagnostic hook called as
            on_accept(sweep, class_i, entry, delta, loss) after each
            accepted move.
        verify_cache: when true, check the residual cache against a full
            recomputation after every sweep (slow; tests only).

    Returns:
        The trained QmsModel. iterations=0 returns the initial model
        (A zero, b = (b_init, 0, ..., 0)).
    """
    if hp.m != problem.m:
        raise ValueError(f"hp.m = {hp.m} but problem has {problem.m} member sets")
    model0 = QmsModel(_initial_members(hp, problem.p), hp)
    cache = ResidualCache(problem, model0)
    p = problem.p
    for sweep in range(hp.iterations):
        for c in range(hp.m):
            for k in range(hp.q):
                for l in range(p):
                    _consider(cache, sweep, c, ("a", k, l), hp.step_a, on_accept)
            for k in range(hp.q):
                _consider(cache, sweep, c, ("b", k), hp.step_b, on_accept)
        if verify_cache and cache.max_relative_drift() > 1e-9:
            raise AssertionError("residual cache drifted beyond 1e-9")
    return QmsModel(cache.members(), hp)


def _consider(cache: ResidualCache, sweep: int, class_i: int, entry: EntryRef,
              step: float, on_accept) -> None:
    d_plus, d_minus = cache._deltas(class_i, entry, (step, -step))
    if d_plus <= d_minus:
        delta, d = step, d_plus
    else:
        delta, d = -step, d_minus
    if d < 0.0:
        before = cache.loss
        cache.apply(class_i, entry, delta, d)
        # accepted moves must strictly decrease the tracked loss
        assert cache.loss < before, "accepted move did not decrease the loss"
        if on_accept is not None:
            on_accept(sweep, class_i, entry, delta, cache.loss)
