"""Hot numeric kernels: numba-jitted with pure-numpy fallbacks.

Two inner loops dominate runtime at desk scale: summing a factored joint
over all free configurations (the enumeration engine) and the Monte Carlo
distinct-allele counter behind the masking probability. Both ship in two
interchangeable implementations:

  * a numba ``@njit`` kernel (default when numba imports), and
  * a vectorized pure-numpy path.

Set ``EVLR_DISABLE_NUMBA=1`` before import to force the numpy path; the flag
also makes the package usable where numba has no wheel. Both paths are exact
and produce identical results for identical inputs (the Monte Carlo variants
consume the same pre-drawn uniforms), which ``tests/test_kernels.py`` checks
and ``benchmarks/bench_kernels.py`` times.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_DISABLED = os.environ.get("EVLR_DISABLE_NUMBA", "0") == "1"

try:
    if _ENV_DISABLED:
        raise ImportError("disabled via EVLR_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in CI
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        """No-op decorator standing in for numba.njit."""
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


USING_NUMBA = HAVE_NUMBA


# ---------------------------------------------------------------------------
# factored joint marginal (enumeration engine inner loop)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _joint_marginal_jit(values, offsets, strides, cards, target_pos):
    """Odometer walk over all free configurations, accumulating the target.

    values: concatenated flat factor tables (evidence already sliced out).
    offsets: per-factor start offset into values.
    strides[f, j]: flat-index step in factor f when free node j increments.
    cards[j]: cardinality of free node j.
    """
    n_free = cards.shape[0]
    n_fac = offsets.shape[0] - 1
    out = np.zeros(cards[target_pos], dtype=np.float64)
    digits = np.zeros(n_free, dtype=np.int64)
    idx = offsets[: n_fac].copy()

    total = 1
    for j in range(n_free):
        total *= cards[j]

    for _ in range(total):
        p = 1.0
        for f in range(n_fac):
            p *= values[idx[f]]
        out[digits[target_pos]] += p
        # mixed-radix increment with incremental index updates
        d = 0
        while d < n_free:
            digits[d] += 1
            for f in range(n_fac):
                idx[f] += strides[f, d]
            if digits[d] < cards[d]:
                break
            digits[d] = 0
            for f in range(n_fac):
                idx[f] -= cards[d] * strides[f, d]
            d += 1
    return out


def joint_marginal_numba(factors, axes_lists, cards, target_pos):
    """Flatten evidence-sliced factors and run the jitted odometer kernel."""
    n_free = len(cards)
    n_fac = len(factors)
    flat = [np.ascontiguousarray(f, dtype=np.float64).ravel() for f in factors]
    offsets = np.zeros(n_fac + 1, dtype=np.int64)
    for i, v in enumerate(flat):
        offsets[i + 1] = offsets[i] + v.size
    values = np.concatenate(flat) if flat else np.ones(1)
    strides = np.zeros((n_fac, n_free), dtype=np.int64)
    for i, (f, axes) in enumerate(zip(factors, axes_lists)):
        step = 1
        for axis_dim, free_id in zip(reversed(f.shape), reversed(axes)):
            strides[i, free_id] = step
            step *= axis_dim
    return _joint_marginal_jit(
        values, offsets, strides,
        np.asarray(cards, dtype=np.int64), int(target_pos),
    )


def joint_marginal_numpy(factors, axes_lists, cards, target_pos):
    """Broadcast-multiply the factors into the free joint, then marginalize."""
    shape = tuple(int(c) for c in cards)
    joint = np.ones(shape, dtype=np.float64)
    for f, axes in zip(factors, axes_lists):
        view_shape = [1] * len(shape)
        for dim, free_id in zip(f.shape, axes):
            view_shape[free_id] = dim
        joint *= np.asarray(f, dtype=np.float64).reshape(view_shape)
    sum_axes = tuple(i for i in range(len(shape)) if i != target_pos)
    return joint.sum(axis=sum_axes) if sum_axes else joint


def joint_marginal(factors, axes_lists, cards, target_pos):
    """Marginal over one free node of a product of evidence-sliced factors.

    Args:
        factors: list of ndarrays; axes of each are a subset of the free
            nodes in ascending free-node order.
        axes_lists: per factor, the free-node ids of its axes.
        cards: cardinalities of the free nodes.
        target_pos: which free node to keep.

    Returns:
        Unnormalized marginal vector of length cards[target_pos].
    """
    if USING_NUMBA:
        return joint_marginal_numba(factors, axes_lists, cards, target_pos)
    return joint_marginal_numpy(factors, axes_lists, cards, target_pos)


# ---------------------------------------------------------------------------
# masking Monte Carlo (distinct-allele counting)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _count_leq_distinct_jit(uniforms, cum_p, max_distinct):
    n_samples, n_draws = uniforms.shape
    k = cum_p.shape[0]
    seen = np.zeros(k, dtype=np.uint8)
    hits = 0
    for s in range(n_samples):
        for j in range(k):
            seen[j] = 0
        distinct = 0
        for t in range(n_draws):
            a = np.searchsorted(cum_p, uniforms[s, t], side="right")
            if a >= k:
                a = k - 1
            if seen[a] == 0:
                seen[a] = 1
                distinct += 1
        if distinct <= max_distinct:
            hits += 1
    return hits


def count_leq_distinct_numba(uniforms, cum_p, max_distinct):
    return int(_count_leq_distinct_jit(
        np.ascontiguousarray(uniforms, dtype=np.float64),
        np.ascontiguousarray(cum_p, dtype=np.float64),
        int(max_distinct),
    ))


def count_leq_distinct_numpy(uniforms, cum_p, max_distinct):
    draws = np.searchsorted(cum_p, uniforms, side="right")
    np.clip(draws, 0, len(cum_p) - 1, out=draws)
    draws.sort(axis=1)
    distinct = (np.diff(draws, axis=1) != 0).sum(axis=1) + 1
    return int((distinct <= max_distinct).sum())


def count_leq_distinct(uniforms, cum_p, max_distinct):
    """Samples (rows of categorical draws via inverse-CDF on the uniforms)
    showing at most ``max_distinct`` distinct categories."""
    if USING_NUMBA:
        return count_leq_distinct_numba(uniforms, cum_p, max_distinct)
    return count_leq_distinct_numpy(uniforms, cum_p, max_distinct)


__all__ = [
    "HAVE_NUMBA",
    "USING_NUMBA",
    "joint_marginal",
    "joint_marginal_numba",
    "joint_marginal_numpy",
    "count_leq_distinct",
    "count_leq_distinct_numba",
    "count_leq_distinct_numpy",
]
