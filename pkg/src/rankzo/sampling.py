"""Gaussian direction batches, the rank oracle, and query accounting.

The sampler draws ``n`` i.i.d. standard normal directions per iteration
from a counter-based Philox generator (64-bit seed), so every batch is
reproducible bit for bit across platforms.  ``n`` must be divisible by 4
because the selected index set splits into a best quartile and a worst
quartile.

The rank oracle evaluates the ``n`` probe points ``x + alpha * u_i``,
charges ``n`` queries, and returns only the stable ascending permutation
of the values.  Callers in the practical regime consume nothing but the
permutation; the raw values stay on the :class:`RankedBatch` purely as an
instrumentation side channel for theory validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .objective import Objective, evaluate_batch

__all__ = [
    "DirectionBatch",
    "RankedBatch",
    "QueryLedger",
    "NonFiniteValueError",
    "new_generator",
    "sample_directions",
    "rank_oracle",
    "selected_index_set",
    "selected_ranks",
]


class NonFiniteValueError(ValueError):
    """A probe returned nan/inf; ``index`` is the offending sample."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite objective value {value!r} at sample index {index}")


def new_generator(seed: int) -> np.random.Generator:
    """Philox-backed generator for a documented 64-bit seed."""
    return np.random.Generator(np.random.Philox(seed))


def _state_token(rng: np.random.Generator) -> str:
    state = rng.bit_generator.state
    try:
        counter = state["state"]["counter"]
        return "philox:" + ",".join(str(int(c)) for c in counter)
    except (KeyError, TypeError):
        return type(rng.bit_generator).__name__


@dataclass(frozen=True)
class DirectionBatch:
    """``n`` standard normal rows of dimension ``d`` plus the RNG state id."""

    u: np.ndarray
    n: int
    seed_state: str

    @property
    def dim(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class RankedBatch:
    """A direction batch together with the rank oracle's output.

    ``perm[j]`` is the original sample index of the (j+1)-th smallest
    probe value, i.e. ``fvals[perm[0]] <= fvals[perm[1]] <= ...`` with
    ties broken by ascending original index.  ``fvals`` is
    instrumentation only.
    """

    batch: DirectionBatch
    perm: np.ndarray
    fvals: np.ndarray
    queries_charged: int

    @property
    def n(self) -> int:
        return self.batch.n

    def directions_at_ranks(self, ranks: np.ndarray) -> np.ndarray:
        """Rows ``u_(k)`` for 1-based ranks ``k`` (rank 1 = best)."""
        return self.batch.u[self.perm[np.asarray(ranks) - 1]]

    def values_at_ranks(self, ranks: np.ndarray) -> np.ndarray:
        """Instrumentation: probe values at 1-based ranks."""
        return self.fvals[self.perm[np.asarray(ranks) - 1]]


@dataclass
class QueryLedger:
    """Counts objective queries; one entry per charging event."""

    per_call: List[int] = field(default_factory=list)

    @property
    def total_queries(self) -> int:
        return int(sum(self.per_call))

    def charge(self, n: int) -> None:
        if n < 0:
            raise ValueError("cannot charge a negative query count")
        self.per_call.append(int(n))


def sample_directions(rng: np.random.Generator, n: int, d: int) -> DirectionBatch:
    """Draw an ``n x d`` standard normal batch, advancing ``rng``.

    Same generator state in, same batch out (bitwise).
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if n < 4 or n % 4 != 0:
        raise ValueError(f"n must be >= 4 and divisible by 4, got {n}")
    token = _state_token(rng)
    u = rng.standard_normal((n, d))
    return DirectionBatch(u=u, n=n, seed_state=token)


def rank_oracle(obj: Objective, x: np.ndarray, alpha: float,
                batch: DirectionBatch, ledger: QueryLedger) -> RankedBatch:
    """Evaluate the ``n`` probes ``x + alpha*u_i``, charge ``n`` queries,
    and return the stable ascending permutation of the values."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x = np.asarray(x, dtype=float)
    points = x[None, :] + alpha * batch.u
    fvals = evaluate_batch(obj, points)
    ledger.charge(batch.n)
    bad = np.flatnonzero(~np.isfinite(fvals))
    if bad.size:
        raise NonFiniteValueError(int(bad[0]), float(fvals[bad[0]]))
    perm = np.argsort(fvals, kind="stable")
    return RankedBatch(batch=batch, perm=perm, fvals=fvals,
                       queries_charged=batch.n)


def selected_index_set(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """1-based rank sets (best quartile, worst quartile).

    ``k_plus`` = ranks 1..n/4, ``k_minus`` = ranks 3n/4+1..n; their union
    is the selected set of size n/2 that receives nonzero weights.
    """
    if n % 4 != 0 or n < 4:
        raise ValueError(f"n must be >= 4 and divisible by 4, got {n}")
    k_plus = np.arange(1, n // 4 + 1)
    k_minus = np.arange(3 * n // 4 + 1, n + 1)
    return k_plus, k_minus


def selected_ranks(n: int, positive_only: bool = False) -> np.ndarray:
    """Concatenated selected ranks; just the best quartile when ablating."""
    k_plus, k_minus = selected_index_set(n)
    if positive_only:
        return k_plus
    return np.concatenate([k_plus, k_minus])
