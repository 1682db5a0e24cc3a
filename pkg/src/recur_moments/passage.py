"""Exact passage-time laws of finite Markov chains and their calculus.

A law is the distribution of a first-passage time T_ij (first hit of j from
i, counting from step 1; i = j gives the first return).  Representations:

* dense: log-pmf over n = 1..horizon plus explicitly tracked tail mass
  P(T > horizon), computed by propagating the taboo vector
  q_n(k) = P(X_n = k, j not yet hit) with one sparse vector-matrix product
  per step;
* sparse: integer atoms with log-weights (:class:`AtomicDist`), for laws with
  few support points or astronomically small masses.

Every operation conserves mass explicitly: whatever cannot be assigned to a
support point (truncation beyond the horizon, pruning below the underflow
floor, operand tails) is moved into the tail bucket, never dropped.  Tail
*certificates* (N0, rho) assert the computed survival ratios satisfy
P(T > n+1) <= rho P(T > n) for all computed n >= N0; downstream moment code
refuses to extrapolate without one.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._atomic import AtomicDist
from .chain import TransitionKernel, StateRef
from .errors import IncomparableLaws, InvalidInput, NoSuchPath
from .logspace import LOG_ZERO, PRUNE_FLOOR_LOG, log_add, log_sub, logsumexp

__all__ = [
    "AtomicDist", "TailCert", "PassageLaw", "DominationReport",
    "first_passage_law", "hit_before_return_prob", "conditioned_return_law",
    "conditioned_hit_law", "crossing_return_law", "convolve",
    "geometric_compound", "mixture", "stochastic_dominates",
    "law_to_csv", "law_from_csv",
]

_MASS_TOL = 1e-10

#: Linear-space cache threshold: below this, exp() underflows unacceptably.
_LIN_FLOOR = 1e-300


@dataclass(frozen=True)
class TailCert:
    """Certified geometric tail: P(T > n+1) <= rho P(T > n) for every
    computed n >= start."""

    start: int
    rho: float

    def __post_init__(self):
        if self.start < 1:
            raise InvalidInput("certificate start must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise InvalidInput(f"certificate ratio must be in (0, 1), got {self.rho}")


class PassageLaw:
    """Distribution of a positive-integer passage time (dense or sparse)."""

    def __init__(self, *, log_pmf=None, lin_pmf=None, atomic=None,
                 log_tail=LOG_ZERO, tail_cert=None, _validate=True):
        self._log_pmf = log_pmf
        self._lin_pmf = lin_pmf
        self._atomic = atomic
        self._log_tail = float(atomic.log_tail) if atomic is not None else float(log_tail)
        self._tail_cert = tail_cert
        if _validate:
            self._check()

    # -- constructors ------------------------------------------------------

    @classmethod
    def dense(cls, pmf, tail: float, tail_cert: TailCert | None = None) -> "PassageLaw":
        """Dense law from a linear-space pmf over n = 1..len(pmf)."""
        pmf = np.asarray(pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size == 0:
            raise InvalidInput("dense pmf must be a nonempty 1-d array")
        if np.any(pmf < 0) or tail < 0:
            raise InvalidInput("probabilities must be nonnegative")
        with np.errstate(divide="ignore"):
            log_pmf = np.log(pmf)
        log_tail = math.log(tail) if tail > 0 else LOG_ZERO
        return cls(log_pmf=log_pmf, lin_pmf=pmf, log_tail=log_tail, tail_cert=tail_cert)

    @classmethod
    def dense_log(cls, log_pmf, log_tail: float, tail_cert: TailCert | None = None) -> "PassageLaw":
        log_pmf = np.asarray(log_pmf, dtype=float)
        if log_pmf.ndim != 1 or log_pmf.size == 0:
            raise InvalidInput("dense log-pmf must be a nonempty 1-d array")
        finite = log_pmf[log_pmf > LOG_ZERO]
        lin = None
        if finite.size == 0 or finite.min() >= math.log(_LIN_FLOOR):
            lin = np.exp(log_pmf)
        return cls(log_pmf=log_pmf, lin_pmf=lin, log_tail=log_tail, tail_cert=tail_cert)

    @classmethod
    def sparse(cls, atomic: AtomicDist, tail_cert: TailCert | None = None) -> "PassageLaw":
        return cls(atomic=atomic, tail_cert=tail_cert)

    @classmethod
    def point(cls, value: int) -> "PassageLaw":
        return cls.sparse(AtomicDist.point_mass(value))

    # -- validation --------------------------------------------------------

    def _check(self) -> None:
        total = self.log_total_mass()
        if not abs(total) <= _MASS_TOL:
            raise InvalidInput(f"law mass off by more than 1e-10: log total = {total}")
        if self._tail_cert is not None and self.is_dense:
            surv = self.survival_array()
            n0, rho = self._tail_cert.start, self._tail_cert.rho
            if n0 <= surv.size - 1:
                lhs = surv[n0:]
                rhs = rho * surv[n0 - 1:-1]
                if not np.all(lhs <= rhs + 1e-15):
                    raise InvalidInput("tail certificate violated on computed points")

    # -- accessors ---------------------------------------------------------

    @property
    def is_dense(self) -> bool:
        return self._log_pmf is not None

    @property
    def horizon(self) -> int:
        """Largest n with computed pmf (dense horizon, or the top atom)."""
        if self.is_dense:
            return int(self._log_pmf.size)
        return self._atomic.max_atom

    @property
    def log_pmf(self) -> np.ndarray:
        if not self.is_dense:
            raise InvalidInput("sparse law has no dense pmf array")
        return self._log_pmf

    @property
    def atomic(self) -> AtomicDist:
        if self.is_dense:
            raise InvalidInput("dense law has no atomic representation")
        return self._atomic

    @property
    def log_tail(self) -> float:
        return self._log_tail

    @property
    def tail_cert(self) -> TailCert | None:
        return self._tail_cert

    @property
    def is_complete(self) -> bool:
        return self._log_tail == LOG_ZERO

    def log_total_mass(self) -> float:
        if self.is_dense:
            return log_add(logsumexp(self._log_pmf), self._log_tail)
        return self._atomic.log_mass()

    def linear_pmf(self) -> np.ndarray | None:
        """Linear-space dense pmf when it is exactly representable, else None."""
        return self._lin_pmf if self.is_dense else None

    def log_prob(self, n: int) -> float:
        if n < 1:
            raise InvalidInput("passage times are >= 1")
        if self.is_dense:
            return float(self._log_pmf[n - 1]) if n <= self.horizon else LOG_ZERO
        return self._atomic.log_prob(n)

    def prob(self, n: int) -> float:
        lp = self.log_prob(n)
        return math.exp(lp) if lp > LOG_ZERO else 0.0

    def pmf_array(self, horizon: int | None = None) -> np.ndarray:
        """Linear pmf over 1..horizon; exact, so sparse laws must be complete
        (their zero entries are then known to be zero)."""
        h = horizon if horizon is not None else self.horizon
        if self.is_dense:
            if h > self.horizon:
                raise InvalidInput("cannot extend a dense pmf beyond its horizon")
            return (self._lin_pmf if self._lin_pmf is not None
                    else np.exp(self._log_pmf))[:h].copy()
        if not self._atomic.is_complete:
            raise IncomparableLaws("sparse law has unassigned mass at unknown support points")
        out = np.zeros(h)
        for v, lp in zip(self._atomic.atoms, self._atomic.log_probs):
            if v <= h:
                out[v - 1] = math.exp(lp)
        return out

    def survival_array(self) -> np.ndarray:
        """S_n = P(T > n) for n = 1..horizon (linear space)."""
        if self.is_dense:
            pmf = self._lin_pmf if self._lin_pmf is not None else np.exp(self._log_pmf)
            tail = math.exp(self._log_tail) if self._log_tail > LOG_ZERO else 0.0
            return tail + np.cumsum(pmf[::-1])[::-1] - pmf
        pmf = self.pmf_array()
        tail = math.exp(self._log_tail) if self._log_tail > LOG_ZERO else 0.0
        return tail + np.cumsum(pmf[::-1])[::-1] - pmf

    def mean_within_horizon(self) -> float:
        """sum_n n P(T = n) over the computed support (ignores the tail)."""
        if self.is_dense:
            ns = np.arange(1, self.horizon + 1, dtype=float)
            mask = self._log_pmf > LOG_ZERO
            return float(math.exp(logsumexp(np.log(ns[mask]) + self._log_pmf[mask]))) if mask.any() else 0.0
        return float(math.exp(logsumexp(np.log(self._atomic.atoms.astype(float)) + self._atomic.log_probs)))

    def to_dense(self, horizon: int) -> "PassageLaw":
        """Re-represent on 1..horizon; mass beyond moves into the tail.
        Extending a dense law beyond its horizon requires a complete law."""
        if horizon < 1:
            raise InvalidInput("horizon must be >= 1")
        if self.is_dense:
            if horizon == self.horizon:
                return self
            if horizon < self.horizon:
                log_head = self._log_pmf[:horizon]
                log_moved = logsumexp(self._log_pmf[horizon:])
                return PassageLaw.dense_log(log_head, log_add(self._log_tail, log_moved))
            if not self.is_complete:
                raise InvalidInput("cannot extend an incomplete dense law")
            log_pad = np.full(horizon, LOG_ZERO)
            log_pad[:self.horizon] = self._log_pmf
            return PassageLaw.dense_log(log_pad, LOG_ZERO)
        out = np.full(horizon, LOG_ZERO)
        moved = [self._log_tail]
        for v, lp in zip(self._atomic.atoms, self._atomic.log_probs):
            if v <= horizon:
                out[v - 1] = lp
            else:
                moved.append(float(lp))
        return PassageLaw.dense_log(out, logsumexp(moved))

    def __repr__(self):
        kind = f"dense[1..{self.horizon}]" if self.is_dense else f"sparse[{self._atomic.atoms.size} atoms]"
        return f"PassageLaw({kind}, log_tail={self._log_tail:.6g})"


# ---------------------------------------------------------------------------
# first-passage propagation


def _derive_tail_cert(surv: np.ndarray, *, window: int = 20,
                      var_tol: float = 1e-6, slack: float = 1e-6) -> TailCert | None:
    """Detect a stabilized survival ratio and certify it.

    Once the ratio P(T > n+1)/P(T > n) varies by less than ``var_tol`` over
    ``window`` consecutive steps, the certified rho is the maximum observed
    ratio from the window start through the horizon, plus ``slack`` — so the
    certificate holds on every computed point by construction.  A survival
    that hits exactly zero certifies trivially.
    """
    zero = np.nonzero(surv == 0.0)[0]
    if zero.size:
        return TailCert(start=int(zero[0]) + 1, rho=0.5)
    if surv.size < window + 1:
        return None
    ratios = surv[1:] / surv[:-1]
    windows = sliding_window_view(ratios, window)
    spread = windows.max(axis=1) - windows.min(axis=1)
    hits = np.nonzero(spread < var_tol)[0]
    if hits.size == 0:
        return None
    w = int(hits[0])
    rho = float(ratios[w:].max()) + slack
    if not rho < 1.0:
        return None
    return TailCert(start=w + 1, rho=rho)


def first_passage_law(kernel: TransitionKernel, source: StateRef, target: StateRef,
                      horizon: int) -> PassageLaw:
    """Exact law of the first hit of ``target`` from ``source`` up to
    ``horizon`` (source = target gives the first return).

    One sparse vector-matrix product per step: mass flowing into the target
    at step n is recorded as P(T = n) and removed before propagating on.
    """
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    i, j = kernel.index_of(source), kernel.index_of(target)
    mat = kernel.csr
    q = np.zeros(kernel.n_states)
    q[i] = 1.0
    pmf = np.zeros(horizon)
    surv = np.zeros(horizon)
    for t in range(horizon):
        r = q @ mat
        pmf[t] = r[j]
        r[j] = 0.0
        q = r
        surv[t] = q.sum()
    cert = _derive_tail_cert(surv)
    return PassageLaw.dense(pmf, float(surv[-1]), tail_cert=cert)


def hit_before_return_prob(kernel: TransitionKernel, source: StateRef,
                           target: StateRef) -> float:
    """P(walk from i visits j strictly before returning to i), by a linear
    solve with both i and j treated as absorbing after the first step."""
    i, j = kernel.index_of(source), kernel.index_of(target)
    if i == j:
        raise InvalidInput("source and target must differ")
    mat = kernel.dense_matrix
    others = [k for k in range(kernel.n_states) if k not in (i, j)]
    if others:
        sub = mat[np.ix_(others, others)]
        rhs = mat[others, j]
        h = np.linalg.solve(np.eye(len(others)) - sub, rhs)
        pi = float(mat[i, j] + mat[i, others] @ h)
    else:
        pi = float(mat[i, j])
    return min(max(pi, 0.0), 1.0)


def _reachable_without(kernel: TransitionKernel, sources, blocked: int) -> set[int]:
    """States reachable from ``sources`` along positive-probability edges
    that never enter ``blocked``."""
    seen = set()
    stack = [s for s in sources if s != blocked]
    while stack:
        k = stack.pop()
        if k in seen:
            continue
        seen.add(k)
        for nxt, _ in kernel.out_edges(k):
            if nxt != blocked and nxt not in seen:
                stack.append(nxt)
    return seen


def _has_return_avoiding(kernel: TransitionKernel, i: int, j: int) -> bool:
    first = [k for k, _ in kernel.out_edges(i)]
    if i in first:
        return True
    reach = _reachable_without(kernel, [k for k in first if k != j], j)
    return any(i in (k for k, _ in kernel.out_edges(r)) for r in reach)


def _has_hit_avoiding_return(kernel: TransitionKernel, i: int, j: int) -> bool:
    first = [k for k, _ in kernel.out_edges(i)]
    if j in first:
        return True
    reach = _reachable_without(kernel, [k for k in first if k != i], i)
    return j in reach or any(j in (k for k, _ in kernel.out_edges(r)) for r in reach)


def _conditional_dense(pmf_raw: np.ndarray, denom: float) -> PassageLaw:
    pmf = pmf_raw / denom
    tail = max(0.0, 1.0 - float(pmf.sum()))
    return PassageLaw.dense(pmf, tail)


def conditioned_return_law(kernel: TransitionKernel, source: StateRef, target: StateRef,
                           horizon: int) -> PassageLaw:
    """Law of the return time of i restricted to excursions that never visit
    j, renormalized (the U law of the return-time decomposition).

    Raises :class:`NoSuchPath` when every return from i passes through j.
    No tail certificate is attached: the conditional survival comes from a
    cancellation-prone subtraction, so certifying its ratios would be
    guesswork.
    """
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    i, j = kernel.index_of(source), kernel.index_of(target)
    if i == j:
        raise InvalidInput("source and target must differ")
    if not _has_return_avoiding(kernel, i, j):
        raise NoSuchPath(f"every return from {kernel.states[i]!r} visits {kernel.states[j]!r}")
    p = 1.0 - hit_before_return_prob(kernel, i, j)
    pmf_raw, _ = _taboo_absorb(kernel, i, absorb=i, kill=j, horizon=horizon)
    return _conditional_dense(pmf_raw, p)


def conditioned_hit_law(kernel: TransitionKernel, source: StateRef, target: StateRef,
                        horizon: int) -> PassageLaw:
    """Law of the first hit of j from i restricted to paths that do not
    return to i first, renormalized (the V law of the decomposition)."""
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    i, j = kernel.index_of(source), kernel.index_of(target)
    if i == j:
        raise InvalidInput("source and target must differ")
    if not _has_hit_avoiding_return(kernel, i, j):
        raise NoSuchPath(f"no path from {kernel.states[i]!r} reaches {kernel.states[j]!r} "
                         "before returning")
    pi = hit_before_return_prob(kernel, i, j)
    pmf_raw, _ = _taboo_absorb(kernel, i, absorb=j, kill=i, horizon=horizon)
    return _conditional_dense(pmf_raw, pi)


def crossing_return_law(kernel: TransitionKernel, source: StateRef, target: StateRef,
                        horizon: int) -> PassageLaw:
    """Law of the return time of i restricted to excursions that do visit j,
    renormalized; computed by propagating a visited-j flag alongside the
    taboo vector (an independent route from the unconditioned law)."""
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    i, j = kernel.index_of(source), kernel.index_of(target)
    if i == j:
        raise InvalidInput("source and target must differ")
    pi = hit_before_return_prob(kernel, i, j)
    if pi <= 0.0:
        raise NoSuchPath(f"no return from {kernel.states[i]!r} visits {kernel.states[j]!r}")
    _, pmf_cross = _return_split(kernel, i, j, horizon)
    return _conditional_dense(pmf_cross, pi)


def _taboo_absorb(kernel: TransitionKernel, start: int, *, absorb: int, kill: int,
                  horizon: int) -> tuple[np.ndarray, float]:
    """Propagate from ``start``; record mass entering ``absorb`` per step and
    delete mass entering ``kill``.  Returns (absorbed pmf, alive mass)."""
    mat = kernel.csr
    q = np.zeros(kernel.n_states)
    q[start] = 1.0
    pmf = np.zeros(horizon)
    for t in range(horizon):
        r = q @ mat
        pmf[t] = r[absorb]
        r[absorb] = 0.0
        r[kill] = 0.0
        q = r
    return pmf, float(q.sum())


def _return_split(kernel: TransitionKernel, i: int, j: int,
                  horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Return-time pmf of i split by whether j was visited en route."""
    mat = kernel.csr
    q0 = np.zeros(kernel.n_states)  # j not yet visited
    q1 = np.zeros(kernel.n_states)  # j visited
    q0[i] = 1.0
    pmf_avoid = np.zeros(horizon)
    pmf_cross = np.zeros(horizon)
    for t in range(horizon):
        r0 = q0 @ mat
        r1 = q1 @ mat
        pmf_avoid[t] = r0[i]
        pmf_cross[t] = r1[i]
        r1[j] += r0[j]
        r0[j] = 0.0
        r0[i] = 0.0
        r1[i] = 0.0
        q0, q1 = r0, r1
    return pmf_avoid, pmf_cross


# ---------------------------------------------------------------------------
# convolution


def _merge_sorted(vals: np.ndarray, lws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate values by logsumexp; inputs in any order."""
    order = np.argsort(vals, kind="stable")
    vals, lws = vals[order], lws[order]
    uniq, starts = np.unique(vals, return_index=True)
    merged = np.logaddexp.reduceat(lws, starts)
    return uniq, merged


def _cross_sum(va, la, vb, lb, horizon: int | None,
               floor_log: float) -> tuple[np.ndarray, np.ndarray, float, float]:
    """All pairwise sums with log-weight products; returns
    (values, log-weights, log moved beyond horizon, log pruned below floor)."""
    vals = (va[:, None] + vb[None, :]).ravel()
    lws = (la[:, None] + lb[None, :]).ravel()
    moved = LOG_ZERO
    if horizon is not None:
        beyond = vals > horizon
        if beyond.any():
            moved = logsumexp(lws[beyond])
            vals, lws = vals[~beyond], lws[~beyond]
    if vals.size:
        vals, lws = _merge_sorted(vals, lws)
    pruned = LOG_ZERO
    low = lws < floor_log
    if low.any():
        pruned = logsumexp(lws[low])
        vals, lws = vals[~low], lws[~low]
    return vals, lws, moved, pruned


def _combined_tail(log_tail_a: float, log_tail_b: float) -> float:
    """log of 1 - (1 - ta)(1 - tb) = ta + tb - ta tb, stably."""
    if log_tail_a == LOG_ZERO:
        return log_tail_b
    if log_tail_b == LOG_ZERO:
        return log_tail_a
    return log_sub(log_add(log_tail_a, log_tail_b), log_tail_a + log_tail_b)


def _conv_atomic(a: AtomicDist, b: AtomicDist, horizon: int | None,
                 floor_log: float) -> AtomicDist:
    vals, lws, moved, pruned = _cross_sum(a.atoms, a.log_probs, b.atoms, b.log_probs,
                                          horizon, floor_log)
    if vals.size == 0:
        raise InvalidInput("convolution left no atoms within the horizon")
    tail = logsumexp([_combined_tail(a.log_tail, b.log_tail), moved, pruned])
    return AtomicDist(vals, lws, tail)


def _conv_dense(a: PassageLaw, b: PassageLaw, horizon: int | None) -> PassageLaw:
    ha, hb = a.horizon, b.horizon
    h = horizon if horizon is not None else ha + hb
    lin_a, lin_b = a.linear_pmf(), b.linear_pmf()
    if lin_a is not None and lin_b is not None:
        full = np.convolve(lin_a, lin_b)  # support 2..ha+hb
        out = np.zeros(h)
        upper = min(h, ha + hb)
        if upper >= 2:
            out[1:upper] = full[:upper - 1]
        moved = float(full[max(upper - 1, 0):].sum())
        ta = math.exp(a.log_tail) if a.log_tail > LOG_ZERO else 0.0
        tb = math.exp(b.log_tail) if b.log_tail > LOG_ZERO else 0.0
        return PassageLaw.dense(out, ta + tb - ta * tb + moved)
    la, lb = a.log_pmf, b.log_pmf
    out = np.full(h, LOG_ZERO)
    moved_parts = []
    for n in range(2, ha + hb + 1):
        k_lo, k_hi = max(1, n - hb), min(ha, n - 1)
        if k_lo > k_hi:
            continue
        val = logsumexp(la[k_lo - 1:k_hi] + lb[n - k_hi - 1:n - k_lo][::-1])
        if n <= h:
            out[n - 1] = val
        else:
            moved_parts.append(val)
    tail = logsumexp([_combined_tail(a.log_tail, b.log_tail)] + moved_parts)
    return PassageLaw.dense_log(out, tail)


def convolve(a, b, *, horizon: int | None = None,
             floor_log: float = PRUNE_FLOOR_LOG):
    """Distribution of the sum of two independent passage times.

    Dense x dense and sparse x sparse only (convert explicitly to mix);
    :class:`AtomicDist` inputs convolve to an :class:`AtomicDist`.  Mass
    landing beyond ``horizon`` or below the pruning floor moves to the tail.
    """
    if isinstance(a, AtomicDist) and isinstance(b, AtomicDist):
        return _conv_atomic(a, b, horizon, floor_log)
    if not (isinstance(a, PassageLaw) and isinstance(b, PassageLaw)):
        raise InvalidInput("convolve needs two PassageLaw or two AtomicDist operands")
    if a.is_dense and b.is_dense:
        return _conv_dense(a, b, horizon)
    if not a.is_dense and not b.is_dense:
        return PassageLaw.sparse(_conv_atomic(a.atomic, b.atomic, horizon, floor_log))
    raise InvalidInput("cannot convolve dense with sparse; convert one side first")


# ---------------------------------------------------------------------------
# geometric compound


def geometric_compound(u: PassageLaw, v: PassageLaw, pi: float, *,
                       budget: int | None = None, horizon: int | None = None,
                       floor_log: float = PRUNE_FLOOR_LOG) -> PassageLaw:
    """Law of U_1 + ... + U_M + V with M geometric: P(M = m) = (1-pi)^m pi.

    This is the return-time decomposition of a passage i -> j: M failed
    excursions (law U), then the successful crossing (law V), with pi the
    hit-before-return probability.  pi = 1 returns V unchanged.  The series
    sum_m pi (1-pi)^m U^{*m} * V is truncated once the remaining geometric
    mass falls below the pruning floor, the term count exceeds ``budget``, or
    every later term lies beyond the horizon; all truncated mass lands in the
    tail.  Within the horizon the pmf is exact as long as the operand
    horizons are at least ``horizon - 1``.
    """
    if not 0.0 < pi <= 1.0:
        raise InvalidInput(f"pi must be in (0, 1], got {pi}")
    if pi == 1.0:
        return v
    if not (isinstance(u, PassageLaw) and isinstance(v, PassageLaw)):
        raise InvalidInput("geometric_compound needs PassageLaw operands")
    if u.is_dense != v.is_dense:
        raise InvalidInput("geometric_compound needs operands in the same representation")
    log_q = math.log1p(-pi)
    log_pi = math.log(pi)
    if u.is_dense:
        h = horizon if horizon is not None else max(u.horizon, v.horizon)
        return _compound_dense(u, v, pi, log_q, h, budget)
    if horizon is None:
        raise InvalidInput("sparse geometric_compound needs an explicit horizon")
    return _compound_sparse(u, v, log_pi, log_q, horizon, budget, floor_log)


def _compound_dense(u: PassageLaw, v: PassageLaw, pi: float, log_q: float,
                    h: int, budget: int | None) -> PassageLaw:
    budget_eff = min(budget if budget is not None else h, h)
    lin_u, lin_v = u.linear_pmf(), v.linear_pmf()
    if lin_u is None or lin_v is None:
        raise InvalidInput("dense geometric_compound needs linear-representable laws; "
                           "use sparse laws for sub-underflow masses")
    tail_u = math.exp(u.log_tail) if u.log_tail > LOG_ZERO else 0.0
    tail_v = math.exp(v.log_tail) if v.log_tail > LOG_ZERO else 0.0
    c = np.zeros(h)
    upper = min(h, v.horizon)
    c[:upper] = lin_v[:upper]
    c_tail = tail_v + float(lin_v[upper:].sum())
    acc = np.zeros(h)
    acc_tail = 0.0
    m = 0
    while True:
        w = pi * math.exp(m * log_q)
        acc += w * c
        acc_tail += w * c_tail
        m += 1
        remaining = math.exp(m * log_q)
        if m > budget_eff or remaining < math.exp(PRUNE_FLOOR_LOG) or c.sum() == 0.0:
            acc_tail += remaining
            break
        full = np.convolve(c, lin_u)
        nxt = np.zeros(h)
        nxt[1:] = full[:h - 1]
        moved = float(full[h - 1:].sum())
        c_tail = c_tail + tail_u - c_tail * tail_u + moved
        c = nxt
    return PassageLaw.dense(acc, acc_tail)


def _compound_sparse(u: PassageLaw, v: PassageLaw, log_pi: float, log_q: float,
                     horizon: int, budget: int | None, floor_log: float) -> PassageLaw:
    ua, va = u.atomic, v.atomic
    budget_eff = min(budget if budget is not None else horizon, horizon)
    keep = va.atoms <= horizon
    vals, lws = va.atoms[keep], va.log_probs[keep]
    c_tail = logsumexp([va.log_tail, logsumexp(va.log_probs[~keep])])
    acc_vals: list[np.ndarray] = []
    acc_lws: list[np.ndarray] = []
    tail_parts: list[float] = []
    m = 0
    while True:
        w = log_pi + m * log_q
        if vals.size:
            acc_vals.append(vals)
            acc_lws.append(lws + w)
        tail_parts.append(w + c_tail)
        m += 1
        remaining = m * log_q
        if m > budget_eff or remaining < floor_log or vals.size == 0:
            tail_parts.append(remaining)
            break
        vals, lws, moved, pruned = _cross_sum(vals, lws, ua.atoms, ua.log_probs,
                                              horizon, floor_log)
        c_tail = logsumexp([_combined_tail(c_tail, ua.log_tail), moved, pruned])
    if not acc_vals:
        raise InvalidInput("geometric compound left no atoms within the horizon")
    all_vals = np.concatenate(acc_vals)
    all_lws = np.concatenate(acc_lws)
    vals_m, lws_m = _merge_sorted(all_vals, all_lws)
    return PassageLaw.sparse(AtomicDist(vals_m, lws_m, logsumexp(tail_parts)))


# ---------------------------------------------------------------------------
# mixtures and domination


def mixture(laws, weights, *, tol: float = 1e-12) -> PassageLaw:
    """Weighted mixture of laws in a common representation.

    Dense inputs are truncated to the shortest horizon (excess mass moves to
    the respective tails); weights must sum to 1 within ``tol``.
    """
    laws = list(laws)
    weights = np.asarray(list(weights), dtype=float)
    if len(laws) == 0 or weights.size != len(laws):
        raise InvalidInput("need matching nonempty laws and weights")
    if np.any(weights < 0):
        raise InvalidInput("mixture weights must be nonnegative")
    if abs(weights.sum() - 1.0) > tol:
        raise InvalidInput(f"mixture weights must sum to 1 within {tol}")
    pairs = [(w, law) for w, law in zip(weights, laws) if w > 0]
    if not pairs:
        raise InvalidInput("all mixture weights are zero")
    if all(law.is_dense for _, law in pairs):
        h = min(law.horizon for _, law in pairs)
        comp = [law.to_dense(h) for _, law in pairs]
        log_w = np.log(np.array([w for w, _ in pairs]))
        stack = np.stack([c.log_pmf for c in comp]) + log_w[:, None]
        with np.errstate(invalid="ignore"):
            log_pmf = np.logaddexp.reduce(stack, axis=0)
        tails = [w + c.log_tail for w, c in zip(log_w, comp)]
        return PassageLaw.dense_log(log_pmf, logsumexp(tails))
    if all(not law.is_dense for _, law in pairs):
        all_vals, all_lws, tails = [], [], []
        for w, law in pairs:
            lw = math.log(w)
            all_vals.append(law.atomic.atoms)
            all_lws.append(law.atomic.log_probs + lw)
            tails.append(lw + law.atomic.log_tail)
        vals, lws = _merge_sorted(np.concatenate(all_vals), np.concatenate(all_lws))
        return PassageLaw.sparse(AtomicDist(vals, lws, logsumexp(tails)))
    raise InvalidInput("cannot mix dense and sparse laws; convert first")


@dataclass(frozen=True)
class DominationReport:
    """Outcome of a CDF comparison: a dominates b iff CDF_a <= CDF_b + tol at
    every computed point."""

    dominates: bool
    max_cdf_violation: float
    tol: float


def stochastic_dominates(a: PassageLaw, b: PassageLaw, tol: float = 1e-10) -> DominationReport:
    """Check whether a is stochastically larger than b on the computed range.

    Dense laws must share a horizon; sparse laws must both be complete (an
    unassigned tail makes the CDF unknowable).  The violation reported is
    max over computed n of CDF_a(n) - CDF_b(n), clipped at zero.
    """
    if a.is_dense and b.is_dense:
        if a.horizon != b.horizon:
            raise IncomparableLaws(f"horizons differ: {a.horizon} vs {b.horizon}")
        sa, sb = a.survival_array(), b.survival_array()
        violation = float(max(0.0, (sb - sa).max()))
        return DominationReport(violation <= tol, violation, tol)
    if not a.is_dense and not b.is_dense:
        for name, law in (("a", a), ("b", b)):
            if math.exp(law.log_tail) > tol:
                raise IncomparableLaws(f"sparse law {name} has unassigned tail mass")
        grid = np.union1d(a.atomic.atoms, b.atomic.atoms)

        def cdf_at(law: PassageLaw) -> np.ndarray:
            cum = np.concatenate([[0.0], np.cumsum(law.atomic.probs())])
            idx = np.searchsorted(law.atomic.atoms, grid, side="right")
            return cum[idx]

        violation = float(max(0.0, (cdf_at(a) - cdf_at(b)).max()))
        return DominationReport(violation <= tol, violation, tol)
    raise IncomparableLaws("cannot compare dense with sparse; convert first")


# ---------------------------------------------------------------------------
# CSV serialization


def law_to_csv(law: PassageLaw, path_or_file) -> None:
    """Write ``n,prob,log_prob`` rows (all of 1..horizon for dense laws,
    atoms for sparse) plus tail/certificate footer rows."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        # fixed terminator: byte-identical output on every platform
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "prob", "log_prob"])
        if law.is_dense:
            for n in range(1, law.horizon + 1):
                lp = float(law.log_pmf[n - 1])
                writer.writerow([n, f"{math.exp(lp) if lp > LOG_ZERO else 0.0:.17g}", f"{lp:.17g}"])
        else:
            for v, lp in zip(law.atomic.atoms, law.atomic.log_probs):
                writer.writerow([int(v), f"{math.exp(lp):.17g}", f"{float(lp):.17g}"])
        lt = law.log_tail
        writer.writerow(["tail_mass", f"{math.exp(lt) if lt > LOG_ZERO else 0.0:.17g}", f"{lt:.17g}"])
        cert = law.tail_cert
        writer.writerow(["tail_cert_N0", cert.start if cert else "", ""])
        writer.writerow(["tail_cert_rho", f"{cert.rho:.17g}" if cert else "", ""])
    finally:
        if own:
            fh.close()


def law_from_csv(path_or_file) -> PassageLaw:
    """Inverse of :func:`law_to_csv`.  Contiguous support starting at 1 is
    reconstructed as dense, anything else as sparse."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, newline="") if own else path_or_file
    try:
        ns: list[int] = []
        lps: list[float] = []
        log_tail = LOG_ZERO
        cert_n0: int | None = None
        cert_rho: float | None = None
        for row in csv.reader(fh):
            if not row or row[0] == "n":
                continue
            key = row[0]
            if key == "tail_mass":
                log_tail = float(row[2])
            elif key == "tail_cert_N0":
                cert_n0 = int(row[1]) if row[1] else None
            elif key == "tail_cert_rho":
                cert_rho = float(row[1]) if row[1] else None
            else:
                ns.append(int(key))
                lps.append(float(row[2]))
    finally:
        if own:
            fh.close()
    if not ns:
        raise InvalidInput("law CSV contains no support rows")
    cert = TailCert(cert_n0, cert_rho) if cert_n0 is not None and cert_rho is not None else None
    ns_arr = np.asarray(ns, dtype=np.int64)
    lp_arr = np.asarray(lps, dtype=float)
    if ns_arr[0] == 1 and np.all(np.diff(ns_arr) == 1):
        return PassageLaw.dense_log(lp_arr, log_tail, tail_cert=cert)
    keep = lp_arr > LOG_ZERO
    return PassageLaw.sparse(AtomicDist(ns_arr[keep], lp_arr[keep], log_tail), tail_cert=cert)


def law_to_csv_text(law: PassageLaw) -> str:
    buf = io.StringIO()
    law_to_csv(law, buf)
    return buf.getvalue()
