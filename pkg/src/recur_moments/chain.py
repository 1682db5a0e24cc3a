"""Finite Markov chains: construction, validation, stationary laws, sampling.

Kernels are stored as sparse rows of (target index, probability) pairs over
named states.  Two parametric families get first-class support because their
passage times have exact closed forms used all over the test suite:

* the two-state chain 0 -> 1 with probability p, 0 -> 0 otherwise, 1 -> 0
  surely;
* "petal" chains: a hub state 1 with an exit state 0 (1 -> 0 with
  probability p, 0 -> 1 surely) and two fans of deterministic loops whose
  lengths are drawn from atomic distributions U1, U2 (each fan entered with
  probability (1-p)/2).  A loop of length x returns to the hub after exactly
  x steps, so the return law of the hub is the p-weighted mixture of a point
  mass at 2 with U1 and U2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceFailure, InvalidInput
from .logspace import logsumexp

if TYPE_CHECKING:
    from ._atomic import AtomicDist

ROW_SUM_TOL = 1e-12

StateRef = Union[int, str]


@dataclass
class TransitionKernel:
    """Row-stochastic kernel over named states.

    ``rows[i]`` lists (target index, probability) with strictly positive
    probabilities; absent targets have probability zero.  Instances are
    treated as immutable once built.
    """

    states: list[str]
    rows: list[list[tuple[int, float]]]

    @property
    def n_states(self) -> int:
        return len(self.states)

    @cached_property
    def _state_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.states)}

    def index_of(self, state: StateRef) -> int:
        if isinstance(state, str):
            try:
                return self._state_index[state]
            except KeyError:
                raise InvalidInput(f"unknown state {state!r}") from None
        idx = int(state)
        if not 0 <= idx < self.n_states:
            raise InvalidInput(f"state index {idx} out of range")
        return idx

    @cached_property
    def dense_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n_states, self.n_states))
        for i, row in enumerate(self.rows):
            for j, p in row:
                mat[i, j] += p
        return mat

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            for j, p in row:
                ri.append(i)
                ci.append(j)
                data.append(p)
        return sparse.csr_matrix((data, (ri, ci)), shape=(self.n_states, self.n_states))

    def out_edges(self, i: int) -> list[tuple[int, float]]:
        return self.rows[i]

    # -- JSON round trip ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "states": list(self.states),
            "rows": [[[self.states[j], p] for j, p in row] for row in self.rows],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TransitionKernel":
        try:
            states = [str(s) for s in obj["states"]]
            raw_rows = obj["rows"]
        except (KeyError, TypeError):
            raise InvalidInput("chain JSON needs 'states' and 'rows'") from None
        index = {name: i for i, name in enumerate(states)}
        if len(index) != len(states):
            raise InvalidInput("duplicate state names")
        if len(raw_rows) != len(states):
            raise InvalidInput("rows and states disagree in length")
        rows: list[list[tuple[int, float]]] = []
        for raw in raw_rows:
            row: list[tuple[int, float]] = []
            for entry in raw:
                try:
                    target, p = entry
                except (TypeError, ValueError):
                    raise InvalidInput(f"bad row entry {entry!r}") from None
                if target not in index:
                    raise InvalidInput(f"unknown target state {target!r}")
                row.append((index[target], float(p)))
            rows.append(row)
        kernel = cls(states, rows)
        report = validate_kernel(kernel)
        if not report.ok:
            raise InvalidInput(f"invalid chain: {report.summary()}")
        return kernel


def save_kernel_json(kernel: TransitionKernel, path) -> None:
    with open(path, "w") as fh:
        json.dump(kernel.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_kernel_json(path) -> TransitionKernel:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"chain file is not valid JSON: {exc}") from None
    return TransitionKernel.from_json_dict(obj)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class KernelReport:
    """Outcome of :func:`validate_kernel`; collects violations instead of
    raising so callers can show all of them at once."""

    row_sum_violations: tuple[tuple[str, float], ...]
    probability_violations: tuple[tuple[str, str, float], ...]
    target_violations: tuple[tuple[str, int], ...]
    irreducible: bool
    n_strong_components: int

    @property
    def ok(self) -> bool:
        return (not self.row_sum_violations and not self.probability_violations
                and not self.target_violations and self.irreducible)

    def summary(self) -> str:
        parts = []
        if self.row_sum_violations:
            parts.append(f"{len(self.row_sum_violations)} row sum(s) off by more than {ROW_SUM_TOL}")
        if self.probability_violations:
            parts.append(f"{len(self.probability_violations)} probability(ies) outside (0, 1]")
        if self.target_violations:
            parts.append(f"{len(self.target_violations)} out-of-range target(s)")
        if not self.irreducible:
            parts.append(f"not irreducible ({self.n_strong_components} strong components)")
        return "; ".join(parts) if parts else "ok"


def validate_kernel(kernel: TransitionKernel, tol: float = ROW_SUM_TOL) -> KernelReport:
    """Check row sums (within ``tol`` of 1), probability ranges, target
    indices, and strong connectivity of the positive-probability graph."""
    n = kernel.n_states
    row_sum_bad: list[tuple[str, float]] = []
    prob_bad: list[tuple[str, str, float]] = []
    target_bad: list[tuple[str, int]] = []
    edges_r, edges_c = [], []
    for i, row in enumerate(kernel.rows):
        total = 0.0
        for j, p in row:
            if not 0 <= j < n:
                target_bad.append((kernel.states[i], j))
                continue
            if not 0.0 < p <= 1.0 + tol:
                prob_bad.append((kernel.states[i], kernel.states[j], p))
            total += p
            if p > 0:
                edges_r.append(i)
                edges_c.append(j)
        if abs(total - 1.0) > tol:
            row_sum_bad.append((kernel.states[i], total))
    graph = sparse.csr_matrix((np.ones(len(edges_r)), (edges_r, edges_c)), shape=(n, n))
    n_comp, _ = connected_components(graph, directed=True, connection="strong")
    return KernelReport(tuple(row_sum_bad), tuple(prob_bad), tuple(target_bad),
                        n_comp == 1, int(n_comp))


# ---------------------------------------------------------------------------
# built-in constructions


def build_two_state(p: float) -> TransitionKernel:
    """States {0, 1}: 0 -> 1 with probability p, 0 -> 0 otherwise, 1 -> 0
    surely.  Requires 0 < p < 1."""
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"two-state chain needs 0 < p < 1, got {p}")
    return TransitionKernel(["0", "1"], [[(0, 1.0 - p), (1, p)], [(0, 1.0)]])


def petal_state_name(side: str, petal: int, step: int) -> str:
    return f"{side}:{petal}:{step}"


def _truncate_side(dist: "AtomicDist", max_petals: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep the ``max_petals`` largest-mass atoms; renormalize the kept mass.

    Returns (values ascending, linear probabilities summing to 1).  Ties are
    broken toward smaller atom values for determinism.
    """
    order = sorted(range(dist.atoms.size), key=lambda k: (-dist.log_probs[k], dist.atoms[k]))
    keep = sorted(order[:max_petals])
    values = dist.atoms[keep]
    log_kept = dist.log_probs[keep]
    probs = np.exp(log_kept - logsumexp(log_kept))
    return values.astype(np.int64), probs


def build_petal_chain(u1: "AtomicDist", u2: "AtomicDist", p: float,
                      max_petals: int) -> TransitionKernel:
    """Finite kernel realizing the petal chain for loop-length laws U1, U2.

    Each side keeps its ``max_petals`` largest-mass atoms (renormalized), so
    the row of the hub state sums to 1 exactly.  A loop of length x >= 2 gets
    x-1 interior states walked deterministically; a loop of length 1 becomes
    a self-transition of the hub.
    """
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"petal chain needs 0 < p < 1, got {p}")
    if max_petals < 1:
        raise InvalidInput("max_petals must be >= 1")
    sides = {"L": _truncate_side(u1, max_petals), "R": _truncate_side(u2, max_petals)}

    states = ["0", "1"]
    for side in ("L", "R"):
        values, _ = sides[side]
        for n_idx, x in enumerate(values, start=1):
            for m in range(1, int(x)):
                states.append(petal_state_name(side, n_idx, m))
    index = {name: i for i, name in enumerate(states)}

    hub_targets: dict[int, float] = {index["0"]: p}
    rows: list[list[tuple[int, float]]] = [[] for _ in states]
    rows[index["0"]] = [(index["1"], 1.0)]
    for side in ("L", "R"):
        values, probs = sides[side]
        for n_idx, (x, w) in enumerate(zip(values, probs), start=1):
            weight = (1.0 - p) / 2.0 * float(w)
            x = int(x)
            if x == 1:
                hub_targets[index["1"]] = hub_targets.get(index["1"], 0.0) + weight
                continue
            first = index[petal_state_name(side, n_idx, 1)]
            hub_targets[first] = hub_targets.get(first, 0.0) + weight
            for m in range(1, x):
                here = index[petal_state_name(side, n_idx, m)]
                nxt = index["1"] if m == x - 1 else index[petal_state_name(side, n_idx, m + 1)]
                rows[here] = [(nxt, 1.0)]
    rows[index["1"]] = sorted(hub_targets.items())
    return TransitionKernel(states, rows)


def random_kernel(n_states: int, rng: np.random.Generator,
                  min_prob: float = 0.05) -> TransitionKernel:
    """Random fully-supported kernel: Dirichlet rows floored at roughly
    ``min_prob`` per entry, hence irreducible and aperiodic."""
    if n_states < 1:
        raise InvalidInput("need at least one state")
    mat = rng.dirichlet(np.ones(n_states), size=n_states)
    mat = (mat + min_prob) / (1.0 + n_states * min_prob)
    mat /= mat.sum(axis=1, keepdims=True)
    states = [str(i) for i in range(n_states)]
    rows = [[(j, float(mat[i, j])) for j in range(n_states)] for i in range(n_states)]
    return TransitionKernel(states, rows)


# ---------------------------------------------------------------------------
# stationary distribution


def stationary_distribution(kernel: TransitionKernel, tol: float = 1e-10) -> np.ndarray:
    """Stationary vector of an irreducible kernel by state-reduction
    elimination, which keeps every intermediate quantity nonnegative (no
    cancellation, and periodic chains need no special treatment).

    Raises :class:`ConvergenceFailure` if the residual ||pi P - pi||_1
    exceeds ``tol``, e.g. because the kernel is reducible.
    """
    n = kernel.n_states
    mat = kernel.dense_matrix.copy()
    scales = np.empty(n)
    for k in range(n - 1, 0, -1):
        s = mat[k, :k].sum()
        if s <= 0.0:
            raise ConvergenceFailure("state elimination hit a zero pivot; kernel not irreducible?")
        scales[k] = s
        mat[:k, :k] += np.outer(mat[:k, k], mat[k, :k]) / s
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = (pi[:k] @ mat[:k, k]) / scales[k]
    pi /= pi.sum()
    residual = float(np.abs(pi @ kernel.dense_matrix - pi).sum())
    if residual > tol:
        raise ConvergenceFailure(f"stationary residual {residual:g} exceeds {tol:g}")
    return pi


# ---------------------------------------------------------------------------
# parametric chains


@dataclass(frozen=True)
class TwoStateChain:
    """Parametric handle on :func:`build_two_state` with closed-form sampling."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidInput(f"two-state chain needs 0 < p < 1, got {self.p}")

    def kernel(self) -> TransitionKernel:
        return build_two_state(self.p)


@dataclass(frozen=True)
class PetalChain:
    """Parametric petal chain; loop-length laws must be complete atomic
    distributions.  Sampling treats a whole loop traversal as one macro-step."""

    u1: "AtomicDist"
    u2: "AtomicDist"
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidInput(f"petal chain needs 0 < p < 1, got {self.p}")
        for name, dist in (("u1", self.u1), ("u2", self.u2)):
            if not dist.is_complete:
                raise InvalidInput(f"{name} must be a complete distribution (no tail mass)")

    def kernel(self, max_petals: int | None = None) -> TransitionKernel:
        cap = max_petals if max_petals is not None else max(self.u1.atoms.size, self.u2.atoms.size)
        return build_petal_chain(self.u1, self.u2, self.p, cap)

    def loop_mixture(self) -> tuple[np.ndarray, np.ndarray]:
        """Merged atoms and linear probabilities of the even U1/U2 mixture."""
        merged: dict[int, float] = {}
        for dist in (self.u1, self.u2):
            for v, w in zip(dist.atoms, dist.probs()):
                merged[int(v)] = merged.get(int(v), 0.0) + 0.5 * float(w)
        values = np.array(sorted(merged), dtype=np.int64)
        probs = np.array([merged[int(v)] for v in values])
        return values, probs / probs.sum()


ParametricChain = Union[TwoStateChain, PetalChain]
ChainLike = Union[TransitionKernel, TwoStateChain, PetalChain]


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class TrajectorySample:
    """One simulated passage.  ``passage_time`` is None when the walk was
    censored at the cap; ``steps_used`` counts simulation steps consumed
    (macro-steps for parametric chains)."""

    passage_time: int | None
    censored: bool
    steps_used: int


def _segment_sums(draws: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sum consecutive segments of ``draws`` with lengths ``counts``
    (zero-length segments allowed)."""
    cs = np.concatenate([[0], np.cumsum(draws)])
    ends = np.cumsum(counts)
    return cs[ends] - cs[ends - counts]


def _kernel_passage_times(kernel: TransitionKernel, i: int, j: int, n: int,
                          cap: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    cum = np.cumsum(kernel.dense_matrix, axis=1)
    times = np.full(n, cap, dtype=np.int64)
    censored = np.ones(n, dtype=bool)
    active = np.arange(n)
    state = np.full(n, i, dtype=np.int64)
    for t in range(1, cap + 1):
        if active.size == 0:
            break
        u = rng.random(active.size)
        nxt = (cum[state[active]] <= u[:, None]).sum(axis=1)
        np.clip(nxt, 0, kernel.n_states - 1, out=nxt)
        hit = nxt == j
        if hit.any():
            done = active[hit]
            times[done] = t
            censored[done] = False
            active = active[~hit]
            nxt = nxt[~hit]
        state[active] = nxt
    return times, censored


def _two_state_times(chain: TwoStateChain, src: int, tgt: int, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    p = chain.p
    if (src, tgt) == (0, 0):
        return 1 + (rng.random(n) < p).astype(np.int64)
    if (src, tgt) == (0, 1):
        return rng.geometric(p, size=n).astype(np.int64)
    if (src, tgt) == (1, 0):
        return np.ones(n, dtype=np.int64)
    return 1 + rng.geometric(p, size=n).astype(np.int64)


def _petal_times(chain: PetalChain, src: int, tgt: int, n: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Returns (times, macro_steps).  Loop traversals count as one macro-step."""
    values, probs = chain.loop_mixture()
    p = chain.p

    def loop_sums(counts: np.ndarray) -> np.ndarray:
        total = int(counts.sum())
        draws = rng.choice(values, size=total, p=probs) if total else np.empty(0, dtype=np.int64)
        return _segment_sums(draws, counts)

    if (src, tgt) == (0, 1):
        return np.ones(n, dtype=np.int64), np.ones(n, dtype=np.int64)
    if (src, tgt) == (1, 1):
        exit_first = rng.random(n) < p
        times = np.empty(n, dtype=np.int64)
        times[exit_first] = 2
        k = int((~exit_first).sum())
        if k:
            times[~exit_first] = rng.choice(values, size=k, p=probs)
        return times, np.where(exit_first, 2, 1).astype(np.int64)
    loops = rng.geometric(p, size=n).astype(np.int64) - 1  # loops before exiting
    sums = loop_sums(loops)
    if (src, tgt) == (1, 0):
        return sums + 1, loops + 1
    if (src, tgt) == (0, 0):
        return sums + 2, loops + 2
    raise InvalidInput(f"unsupported petal macro passage {src} -> {tgt}")


def _resolve_binary_state(state: StateRef) -> int:
    if isinstance(state, str):
        if state in ("0", "1"):
            return int(state)
        raise InvalidInput(f"parametric chains expose states '0' and '1', got {state!r}")
    idx = int(state)
    if idx not in (0, 1):
        raise InvalidInput(f"parametric chains expose states 0 and 1, got {idx}")
    return idx


def sample_passage_times(chain: ChainLike, source: StateRef, target: StateRef,
                         n_samples: int, cap: int, *,
                         seed: int | None = None,
                         rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized passage sampling; returns (times, censored) arrays.

    Censored entries report ``cap`` in ``times``.  Parametric chains use
    their closed-form macro-step samplers; kernels step state by state.
    """
    if n_samples < 0:
        raise InvalidInput("n_samples must be >= 0")
    if cap < 1:
        raise InvalidInput("cap must be >= 1")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
    if isinstance(chain, TransitionKernel):
        i, j = chain.index_of(source), chain.index_of(target)
        return _kernel_passage_times(chain, i, j, n_samples, cap, rng)
    src, tgt = _resolve_binary_state(source), _resolve_binary_state(target)
    if isinstance(chain, TwoStateChain):
        times = _two_state_times(chain, src, tgt, n_samples, rng)
    else:
        times, _ = _petal_times(chain, src, tgt, n_samples, rng)
    censored = times > cap
    times = np.where(censored, cap, times).astype(np.int64)
    return times, censored


def sample_passage(chain: ChainLike, source: StateRef, target: StateRef,
                   cap: int, *, seed: int | None = None,
                   rng: np.random.Generator | None = None) -> TrajectorySample:
    """Single-trajectory convenience wrapper around the vectorized sampler."""
    times, censored = sample_passage_times(chain, source, target, 1, cap, seed=seed, rng=rng)
    t, c = int(times[0]), bool(censored[0])
    return TrajectorySample(None if c else t, c, cap if c else t)


def passage_sampler(chain: ChainLike, source: StateRef, target: StateRef):
    """Bind (chain, source, target) into a sampler callable
    ``(n, cap, rng) -> (times, censored)`` for the Monte Carlo machinery."""

    def sampler(n: int, cap: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return sample_passage_times(chain, source, target, n, cap, rng=rng)

    return sampler
