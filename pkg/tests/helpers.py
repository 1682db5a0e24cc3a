"""Independent oracles for the test suite.

Everything here is deliberately naive: explicit path enumeration, absorbing
iteration to convergence, and closed forms.  Production code must agree with
these, not the other way round.
"""

from __future__ import annotations

import numpy as np

from recur_moments import TransitionKernel


def enumerate_passage_pmf(kernel: TransitionKernel, start: int, absorb: int,
                          horizon: int, *, kill: int | None = None,
                          require_visit: int | None = None) -> dict[int, float]:
    """First-passage pmf by summing over every path of length <= horizon.

    A path ends when it enters ``absorb`` (the step count is recorded), dies
    when it enters ``kill``, and counts only if it passed through
    ``require_visit`` (when given) strictly before absorbing.  Exponential in
    the horizon; keep horizon <= 10 and states <= 4.
    """
    mat = kernel.dense_matrix
    n = kernel.n_states
    out: dict[int, float] = {}

    def rec(state: int, t: int, prob: float, visited: bool) -> None:
        if t == horizon:
            return
        for nxt in range(n):
            p = mat[state, nxt]
            if p == 0.0:
                continue
            q = prob * p
            if nxt == absorb:
                if require_visit is None or visited:
                    out[t + 1] = out.get(t + 1, 0.0) + q
            elif kill is not None and nxt == kill:
                continue
            else:
                rec(nxt, t + 1, q, visited or nxt == require_visit)

    rec(start, 0, 1.0, False)
    return out


def pmf_dict_to_array(pmf: dict[int, float], horizon: int) -> np.ndarray:
    out = np.zeros(horizon)
    for t, p in pmf.items():
        if t <= horizon:
            out[t - 1] = p
    return out


def absorbed_mass_iterative(kernel: TransitionKernel, start: int, absorb: int,
                            kill: int, max_steps: int = 100_000,
                            tol: float = 1e-15) -> float:
    """P(enter ``absorb`` before ``kill``) by propagating until the alive
    mass is negligible.  Independent of the linear-solve route."""
    mat = kernel.dense_matrix
    q = np.zeros(kernel.n_states)
    q[start] = 1.0
    total = 0.0
    for _ in range(max_steps):
        q = q @ mat
        total += q[absorb]
        q[absorb] = 0.0
        q[kill] = 0.0
        if q.sum() < tol:
            break
    return total


def brute_convolve_dicts(a: dict[int, float], b: dict[int, float]) -> dict[int, float]:
    out: dict[int, float] = {}
    for x, p in a.items():
        for y, q in b.items():
            out[x + y] = out.get(x + y, 0.0) + p * q
    return out


def hitting_time_means(kernel: TransitionKernel, target: int) -> np.ndarray:
    """E[T_{i -> target}] for every i by the standard linear system
    m = 1 + Q m over the non-target states."""
    n = kernel.n_states
    mat = kernel.dense_matrix
    others = [s for s in range(n) if s != target]
    sub = mat[np.ix_(others, others)]
    m_others = np.linalg.solve(np.eye(len(others)) - sub, np.ones(len(others)))
    means = np.zeros(n)
    for pos, s in enumerate(others):
        means[s] = m_others[pos]
    # return-time of the target itself: 1 + sum_k P(target, k) m_k
    means[target] = 1.0 + sum(p * means[k] for k, p in kernel.out_edges(target) if k != target)
    return means


def two_state_return_pmf_11(p: float, horizon: int) -> np.ndarray:
    """Closed form for the return time of the bouncing state: 1 -> 0 surely,
    then a geometric wait: P(T = k) = p (1-p)^(k-2) for k >= 2."""
    out = np.zeros(horizon)
    for k in range(2, horizon + 1):
        out[k - 1] = p * (1.0 - p) ** (k - 2)
    return out
