"""Exact subgraph counts for circle geometric graphs.

Two vertices are adjacent when their wraparound distance is at most r
(boundary closed).  Degrees and triangles are counted on the sorted
positions with binary searches, giving an O(n log n) path that stays exact:
counts are returned as Python ints and all intermediate accumulations are
proven to fit in int64 for n up to 2^20.

Triangle counting has two routes:

* a forward-window count, exact whenever r < 1/3 (the hot path: each
  triangle has exactly one anchor whose forward r-arc contains the other
  two vertices);
* an edge-based count via circular arc intersections, valid for any
  r <= 0.5 (the window argument breaks for large r: {0, 0.4, 0.8} at
  r = 0.4 is a triangle none of whose forward arcs holds both others).

``brute_force_counts`` implements the adjacency definition literally and is
the oracle that every fast path is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Σ d_i (d_i - 1) <= n^3 <= 2^60 for n <= 2^20, so int64 accumulation is exact.
_MAX_INT64_SAFE_N = 1 << 20

_BRUTE_FORCE_LIMIT = 2000

WINDOW_RADIUS_LIMIT = 1.0 / 3.0


@dataclass(frozen=True)
class SubgraphCounts:
    """Exact counts for one graph realization.

    ``ordered_two_paths`` is the ordered count Σ_i d_i (d_i - 1); six times
    the triangle count never exceeds it.
    """
    n: int
    edges: int
    ordered_two_paths: int
    triangles: int


def _positions(sample):
    pos = np.asarray(getattr(sample, "positions", sample), dtype=float)
    if pos.ndim != 1:
        raise ValueError("positions must be one-dimensional")
    return pos


def _check_sorted(pos):
    if pos.size and (np.any(np.diff(pos) < 0)
                     or pos[0] < 0.0 or pos[-1] >= 1.0):
        raise ValueError("positions must be sorted ascending within [0, 1)")


def _check_radius(r):
    if not 0.0 <= r <= 0.5:
        raise ValueError(f"radius must lie in [0, 0.5], got {r}")


def _int_sum(values):
    if values.size == 0:
        return 0
    return int(np.sum(values, dtype=np.int64))


# Positions live in [0, 2) after lifting, so a couple of ulps there is
# bounded by 2e-15; searchsorted bounds are widened by this margin and the
# few pairs inside it are decided by the exact distance expression instead.
_TIE_MARGIN = 2e-15


def _pair_counts(pos, r):
    """Single-decision adjacency counts over the sorted positions, r < 0.5.

    Every unordered pair (i < j) is classified exactly once, with the same
    floating-point expressions brute force uses: near-side adjacency is
    pos[j] - pos[i] <= r, far-side (wrap) adjacency is
    1 - (pos[j] - pos[i]) <= r.  Searchsorted handles everything outside a
    few-ulp margin around the thresholds; margin candidates are tested with
    the exact expression, so ties never produce an incoherent graph.

    Returns int64 arrays (near_fwd, wrap_fwd, near_back, wrap_back):
    counts of adjacent partners with larger index (fwd) and smaller index
    (back), split by which side of the circle realizes the distance.
    """
    n = pos.size
    idx = np.arange(n)
    near_fwd = np.zeros(n, dtype=np.int64)
    wrap_fwd = np.zeros(n, dtype=np.int64)
    near_diff = np.zeros(n + 1, dtype=np.int64)
    wrap_diff = np.zeros(n + 1, dtype=np.int64)

    # near side: pairs (i, j > i) with pos[j] - pos[i] <= r
    bound = pos + r
    sure = np.maximum(np.searchsorted(pos, bound - _TIE_MARGIN, side="right"),
                      idx + 1)
    maybe = np.maximum(np.searchsorted(pos, bound + _TIE_MARGIN, side="right"),
                       sure)
    near_fwd += sure - (idx + 1)
    np.add.at(near_diff, idx + 1, 1)
    np.add.at(near_diff, sure, -1)
    for i in np.nonzero(maybe > sure)[0]:
        js = np.arange(sure[i], maybe[i])
        ok = js[pos[js] - pos[i] <= r]
        near_fwd[i] += ok.size
        np.add.at(near_diff, ok, 1)
        np.add.at(near_diff, ok + 1, -1)

    # wrap side: pairs (i, j > i) with 1 - (pos[j] - pos[i]) <= r
    wbound = pos + (1.0 - r)
    lo_w = np.maximum(np.searchsorted(pos, wbound - _TIE_MARGIN, side="left"),
                      idx + 1)
    hi_w = np.maximum(np.searchsorted(pos, wbound + _TIE_MARGIN, side="left"),
                      lo_w)
    wrap_fwd += n - hi_w
    np.add.at(wrap_diff, hi_w, 1)
    wrap_diff[n] -= n
    for i in np.nonzero(hi_w > lo_w)[0]:
        js = np.arange(lo_w[i], hi_w[i])
        ok = js[1.0 - (pos[js] - pos[i]) <= r]
        wrap_fwd[i] += ok.size
        np.add.at(wrap_diff, ok, 1)
        np.add.at(wrap_diff, ok + 1, -1)

    near_back = np.cumsum(near_diff)[:n]
    wrap_back = np.cumsum(wrap_diff)[:n]
    return near_fwd, wrap_fwd, near_back, wrap_back


def _validated_positions(sample, r):
    pos = _positions(sample)
    _check_sorted(pos)
    _check_radius(r)
    if pos.size > _MAX_INT64_SAFE_N:
        raise ValueError(
            f"n={pos.size} exceeds the supported maximum {_MAX_INT64_SAFE_N}")
    return pos


def degrees(sample, r):
    """Degree of every vertex, by circular windows over the sorted positions."""
    pos = _validated_positions(sample, r)
    n = pos.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if r == 0.5:
        # max distance on the circle is 0.5: complete graph
        return np.full(n, n - 1, dtype=np.int64)
    near_fwd, wrap_fwd, near_back, wrap_back = _pair_counts(pos, r)
    return near_fwd + wrap_fwd + near_back + wrap_back


def count_two_paths(degree_array):
    """Ordered 2-path count Σ_i d_i (d_i - 1)."""
    d = np.asarray(degree_array, dtype=np.int64)
    return _int_sum(d * (d - 1))


def count_triangles_window(sample, r):
    """Triangles via forward-arc pair counts; exact only for r < 1/3.

    m_i = number of points in the forward arc (x_i, x_i + r] (wrapping, ties
    broken by sorted index); each triangle is C(m, 2)-counted at its unique
    anchor because the three circular gaps sum to 1 and at most one can
    exceed r when all pairwise distances are <= r < 1/3.
    """
    pos = _validated_positions(sample, r)
    if r >= WINDOW_RADIUS_LIMIT:
        raise ValueError(f"window counting requires r < 1/3, got {r}")
    if pos.size < 3:
        return 0
    near_fwd, _, _, wrap_back = _pair_counts(pos, r)
    m = near_fwd + wrap_back
    return _int_sum(m * (m - 1) // 2)


def _expand_ranges(starts, ends):
    """(anchor, member) index pairs for the ranges [starts_i, ends_i)."""
    lengths = np.maximum(ends - starts, 0)
    total = int(lengths.sum())
    if total == 0:
        return (np.zeros(0, dtype=np.int64),) * 2
    anchors = np.repeat(np.arange(starts.size), lengths)
    offsets = np.repeat(np.cumsum(lengths) - lengths, lengths)
    members = np.arange(total) - offsets + np.repeat(starts, lengths)
    return anchors, members


def _forward_edges(pos, r):
    """Unordered edges as (i, j) index arrays with i < j in sorted order.

    Same single-decision tie semantics as _pair_counts: each pair is
    classified once, by the exact distance expression inside the margin.
    """
    n = pos.size
    idx = np.arange(n)
    parts_i, parts_j = [], []

    bound = pos + r
    sure = np.maximum(np.searchsorted(pos, bound - _TIE_MARGIN, side="right"),
                      idx + 1)
    maybe = np.maximum(np.searchsorted(pos, bound + _TIE_MARGIN, side="right"),
                       sure)
    ai, aj = _expand_ranges(idx + 1, sure)
    parts_i.append(ai); parts_j.append(aj)
    mi, mj = _expand_ranges(sure, maybe)
    keep = pos[mj] - pos[mi] <= r
    parts_i.append(mi[keep]); parts_j.append(mj[keep])

    wbound = pos + (1.0 - r)
    lo_w = np.maximum(np.searchsorted(pos, wbound - _TIE_MARGIN, side="left"),
                      idx + 1)
    hi_w = np.maximum(np.searchsorted(pos, wbound + _TIE_MARGIN, side="left"),
                      lo_w)
    ai, aj = _expand_ranges(hi_w, np.full(n, n))
    parts_i.append(ai); parts_j.append(aj)
    mi, mj = _expand_ranges(lo_w, hi_w)
    keep = 1.0 - (pos[mj] - pos[mi]) <= r
    parts_i.append(mi[keep]); parts_j.append(mj[keep])

    return (np.concatenate(parts_i).astype(np.int64),
            np.concatenate(parts_j).astype(np.int64))


def _count_in_closed_arc(pos, ext, center_a, center_b, lo, hi, r):
    """Points of the lifted array inside [lo, hi], exact at the boundaries.

    Interior points (a margin away from either end) are counted by binary
    search; boundary candidates are resolved by the exact distance test
    against both arc centers.
    """
    if hi < lo - 2.0 * _TIE_MARGIN:
        return 0
    a1 = np.searchsorted(ext, lo - _TIE_MARGIN, side="left")
    a2 = np.searchsorted(ext, lo + _TIE_MARGIN, side="left")
    a3 = np.searchsorted(ext, hi - _TIE_MARGIN, side="right")
    a4 = np.searchsorted(ext, hi + _TIE_MARGIN, side="right")
    a2 = min(a2, a4)
    a3 = max(a3, a2)
    count = a3 - a2
    candidates = np.concatenate([np.arange(a1, a2), np.arange(a3, a4)])
    if candidates.size:
        z = pos[candidates % pos.size]
        da = np.abs(z - center_a)
        db = np.abs(z - center_b)
        ok = (np.minimum(da, 1.0 - da) <= r) & (np.minimum(db, 1.0 - db) <= r)
        count += int(np.count_nonzero(ok))
    return count


def count_triangles_edge_based(sample, r):
    """Triangles for any r <= 0.5: common neighbors per edge via binary search.

    For each unordered edge the common-neighbor region is the intersection
    of the two closed neighborhood arcs: a single circular arc for small r
    and up to two once the arcs also meet around the far side.  Every
    component is enumerated, its points are counted against the sorted
    positions, the two endpoints are subtracted, and the total over edges
    is divided by 3.
    """
    pos = _validated_positions(sample, r)
    n = pos.size
    if n < 3:
        return 0
    if 2.0 * r >= 1.0:
        # max distance on the circle is 0.5: complete graph
        return n * (n - 1) * (n - 2) // 6
    ei, ej = _forward_edges(pos, r)
    if ei.size == 0:
        return 0
    ext = np.concatenate([pos, pos + 1.0])
    length = 2.0 * r
    triple_counted = 0
    for i, j in zip(ei, ej):
        sa = (pos[i] - r) % 1.0
        sb = (pos[j] - r) % 1.0
        in_arcs = 0
        for k in (-1.0, 0.0, 1.0):
            lo = max(sa, sb + k)
            hi = min(sa + length, sb + length + k)
            in_arcs += _count_in_closed_arc(pos, ext, pos[i], pos[j], lo, hi, r)
        # the endpoints themselves always lie in the intersection
        triple_counted += in_arcs - 2
    return triple_counted // 3


def counts(sample, r):
    """All subgraph counts: window route when r < 1/3, edge route otherwise."""
    pos = _validated_positions(sample, r)
    n = pos.size
    if n and r != 0.5 and r < WINDOW_RADIUS_LIMIT:
        # one pass of the pair machinery serves degrees and triangles both
        near_fwd, wrap_fwd, near_back, wrap_back = _pair_counts(pos, r)
        deg = near_fwd + wrap_fwd + near_back + wrap_back
        m = near_fwd + wrap_back
        triangles = _int_sum(m * (m - 1) // 2) if n >= 3 else 0
    else:
        deg = degrees(pos, r)
        triangles = count_triangles_edge_based(pos, r)
    edges = _int_sum(deg) // 2
    two_paths = count_two_paths(deg)
    return SubgraphCounts(n=n, edges=edges, ordered_two_paths=two_paths,
                          triangles=triangles)


def clustering_coefficient(subgraph_counts):
    """6 * triangles / ordered 2-paths; None when the graph has no 2-path."""
    if subgraph_counts.ordered_two_paths == 0:
        return None
    return 6.0 * subgraph_counts.triangles / subgraph_counts.ordered_two_paths


def brute_force_counts(sample, r):
    """O(n^2)/O(n^3) counts straight from the adjacency definition.

    The oracle for every fast path; guarded to n <= 2000.  The triple scan
    is the trace of A^3, evaluated in float64 where it is exact for this n.
    """
    pos = _positions(sample)
    _check_radius(r)
    n = pos.size
    if n > _BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force capped at n={_BRUTE_FORCE_LIMIT}, got {n}")
    if n == 0:
        return SubgraphCounts(n=0, edges=0, ordered_two_paths=0, triangles=0)
    diff = np.abs(pos[:, None] - pos[None, :])
    dist = np.minimum(diff, 1.0 - diff)
    adj = dist <= r
    np.fill_diagonal(adj, False)
    deg = adj.sum(axis=1).astype(np.int64)
    edges = _int_sum(deg) // 2
    two_paths = count_two_paths(deg)
    m = adj.astype(np.float64)
    closed_ordered = float(np.trace(m @ m @ m))
    triangles = int(round(closed_ordered)) // 6
    return SubgraphCounts(n=n, edges=edges, ordered_two_paths=two_paths,
                          triangles=triangles)
