"""Partition lyricists into five entropy groups.

Group 0 always holds exactly the zero-entropy lyricists. The remaining
lyricists are split into groups 1..4 either by an equal-count quantile rule
or by 1-D k-means (k=4) seeded from the quantile split. Ties are broken by
lyricist id everywhere so identical inputs give identical groupings.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError, NonConvergenceError, TooFewLyricistsError

N_SPLIT_GROUPS = 4  # nonzero-entropy groups; group 0 is the zero-entropy group


@dataclass(frozen=True)
class GroupStats:
    count: int
    avg_songs: float
    total_songs: int
    avg_entropy: float
    min_entropy: float
    max_entropy: float


@dataclass(frozen=True)
class Grouping:
    method: str  # "quantile" | "kmeans"
    groups: tuple[tuple[str, ...], ...]  # 5 ordered lyricist-id lists
    stats: tuple[GroupStats, ...]

    @property
    def assignment(self) -> dict[str, int]:
        return {lid: k for k, group in enumerate(self.groups) for lid in group}

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "groups": [list(g) for g in self.groups],
            "stats": [vars(s) for s in self.stats],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Grouping":
        return cls(
            method=data["method"],
            groups=tuple(tuple(g) for g in data["groups"]),
            stats=tuple(GroupStats(**s) for s in data["stats"]),
        )


def _group_stats(member_ids, by_id) -> GroupStats:
    if not member_ids:
        return GroupStats(0, 0.0, 0, 0.0, 0.0, 0.0)
    songs = [by_id[lid].song_count for lid in member_ids]
    entropies = [by_id[lid].entropy for lid in member_ids]
    return GroupStats(
        count=len(member_ids),
        avg_songs=sum(songs) / len(songs),
        total_songs=sum(songs),
        avg_entropy=sum(entropies) / len(entropies),
        min_entropy=min(entropies),
        max_entropy=max(entropies),
    )


def _build(method, member_lists, by_id) -> Grouping:
    groups = tuple(tuple(g) for g in member_lists)
    stats = tuple(_group_stats(g, by_id) for g in groups)
    return Grouping(method=method, groups=groups, stats=stats)


def _split_zero_nonzero(stats):
    by_id = {s.lyricist_id: s for s in stats}
    if len(by_id) != len(stats):
        raise DataError("duplicate lyricist_id in stats")
    zero = sorted((s.lyricist_id for s in stats if s.entropy == 0.0))
    nonzero = sorted(
        ((s.entropy, s.lyricist_id) for s in stats if s.entropy != 0.0)
    )
    return by_id, zero, nonzero


def group_quantile(stats) -> Grouping:
    """Equal-count split of nonzero-entropy lyricists into 4 ordered groups.

    With n nonzero lyricists ranked ascending by entropy, group k takes rank
    positions floor(n(k-1)/4)+1 through floor(nk/4); fractional boundaries
    truncate, so sizes differ by at most one.
    """
    by_id, zero, nonzero = _split_zero_nonzero(stats)
    n = len(nonzero)
    if n < N_SPLIT_GROUPS:
        raise TooFewLyricistsError(
            f"need at least {N_SPLIT_GROUPS} lyricists with nonzero entropy, got {n}"
        )
    members = [zero]
    for k in range(1, N_SPLIT_GROUPS + 1):
        start = (n * (k - 1)) // N_SPLIT_GROUPS
        end = (n * k) // N_SPLIT_GROUPS
        members.append([lid for _, lid in nonzero[start:end]])
    return _build("quantile", members, by_id)


def _sse(values, centroid) -> float:
    return sum((v - centroid) ** 2 for v in values)


def _optimal_contiguous_partition(values, k: int) -> tuple[float, list[tuple[int, int]]]:
    """Exact minimum-SSE split of sorted values into k non-empty contiguous runs.

    O(n^2 k) dynamic program over half-open boundaries. Ties between equal-SSE
    partitions resolve toward the earliest boundary, so the result is
    deterministic. Returns (sse, [(start, end), ...]).
    """
    n = len(values)
    pre = [0.0]
    pre2 = [0.0]
    for v in values:
        pre.append(pre[-1] + v)
        pre2.append(pre2[-1] + v * v)

    def cost(i: int, j: int) -> float:
        s = pre[j] - pre[i]
        ss = pre2[j] - pre2[i]
        # cancellation can push a constant run a hair below zero
        return max(0.0, ss - s * s / (j - i))

    inf = float("inf")
    dp = [[inf] * (k + 1) for _ in range(n + 1)]
    back = [[0] * (k + 1) for _ in range(n + 1)]
    dp[0][0] = 0.0
    for j in range(1, n + 1):
        for m in range(1, min(k, j) + 1):
            best = inf
            arg = m - 1
            for i in range(m - 1, j):
                cand = dp[i][m - 1] + cost(i, j)
                if cand < best:
                    best = cand
                    arg = i
            dp[j][m] = best
            back[j][m] = arg
    bounds: list[tuple[int, int]] = []
    j = n
    for m in range(k, 0, -1):
        i = back[j][m]
        bounds.append((i, j))
        j = i
    bounds.reverse()
    return dp[n][k], bounds


def group_kmeans(stats, init: Grouping, max_iters: int = 1000) -> Grouping:
    """Lloyd's k-means (k=4) on the 1-D nonzero entropies.

    Centroids start at the means of the init grouping's groups 1..4.
    Assignment ties go to the lower-index centroid; an emptied cluster is
    re-seeded with the point currently farthest from its own centroid.
    Clusters are relabeled 1..4 in ascending centroid order, and the
    zero-entropy group 0 is carried over untouched.

    Lloyd from a single init can stall in a local minimum, so after it
    converges the contiguous boundaries are refined with an exact 1-D
    dynamic program. The refinement never raises the objective; in 1-D the
    optimal k-means clusters are contiguous in sorted order, so the refined
    result is the true objective minimum.
    """
    by_id, zero, nonzero = _split_zero_nonzero(stats)
    if init.method != "quantile":
        raise DataError(f"init grouping must be quantile, got {init.method!r}")
    init_nonzero = {lid for g in init.groups[1:] for lid in g}
    if init_nonzero != {lid for _, lid in nonzero}:
        raise DataError("init grouping covers a different lyricist set")

    points = nonzero  # (entropy, lyricist_id), ascending
    k = N_SPLIT_GROUPS
    centroids = []
    for group in init.groups[1:]:
        values = [by_id[lid].entropy for lid in group]
        centroids.append(sum(values) / len(values))

    assign = [-1] * len(points)
    prev_objective = None
    seen: set[tuple[int, ...]] = set()
    for _ in range(max_iters):
        new_assign = []
        for value, _lid in points:
            dists = [abs(value - c) for c in centroids]
            new_assign.append(dists.index(min(dists)))

        # Re-seed any emptied cluster with the point farthest from its own
        # centroid, never draining a donor cluster below one point.
        sizes = [new_assign.count(j) for j in range(k)]
        for j in range(k):
            if sizes[j] > 0:
                continue
            candidates = [
                (abs(points[i][0] - centroids[new_assign[i]]), points[i][1], i)
                for i in range(len(points))
                if sizes[new_assign[i]] > 1
            ]
            if not candidates:
                break
            candidates.sort(key=lambda c: (-c[0], c[1]))
            _, _, idx = candidates[0]
            sizes[new_assign[idx]] -= 1
            new_assign[idx] = j
            sizes[j] = 1

        for j in range(k):
            values = [points[i][0] for i in range(len(points)) if new_assign[i] == j]
            if values:
                centroids[j] = sum(values) / len(values)
        objective = sum(
            _sse([points[i][0] for i in range(len(points)) if new_assign[i] == j], centroids[j])
            for j in range(k)
        )
        if prev_objective is not None and objective > prev_objective + 1e-9:
            raise AssertionError(
                f"k-means objective increased: {prev_objective} -> {objective}"
            )
        prev_objective = objective
        if new_assign == assign:
            break
        state = tuple(new_assign)
        if state in seen:
            # re-seeding can cycle between states on an objective plateau
            # (duplicate values, fewer distinct values than k); monotonicity
            # makes every state in the cycle objective-equal, so any of them
            # is a valid stopping point
            assign = new_assign
            break
        seen.add(state)
        assign = new_assign
    else:
        raise NonConvergenceError(
            f"k-means did not converge within {max_iters} iterations",
            assignment=dict(zip((lid for _, lid in points), assign)),
        )

    # Relabel 1..4 in ascending centroid order.
    order = sorted(range(k), key=lambda j: (centroids[j], j))
    relabel = {old: new for new, old in enumerate(order)}
    labels = [relabel[a] for a in assign]
    if labels != sorted(labels):
        # Equal values re-seeded across equal centroids can interleave ids;
        # that is only ever a tie swap, so sorting the labels must leave the
        # objective untouched. Anything else is a real contiguity violation.
        values_only = [value for value, _ in points]

        def _labels_sse(lab):
            total = 0.0
            for j in range(k):
                vals = [values_only[i] for i in range(len(lab)) if lab[i] == j]
                if vals:
                    total += _sse(vals, sum(vals) / len(vals))
            return total

        resorted = sorted(labels)
        if abs(_labels_sse(resorted) - _labels_sse(labels)) > 1e-12:
            raise AssertionError(
                "k-means clusters are not contiguous in sorted entropy order"
            )
        labels = resorted

    # Exact boundary refinement; adopt only a strict improvement so a
    # converged optimal Lloyd result passes through untouched.
    values = [value for value, _ in points]
    opt_sse, segments = _optimal_contiguous_partition(values, k)
    if opt_sse > prev_objective + 1e-9:
        raise AssertionError(
            f"refinement raised the objective: {prev_objective} -> {opt_sse}"
        )
    if opt_sse < prev_objective - 1e-12:
        labels = [m for m, (start, end) in enumerate(segments) for _ in range(end - start)]

    members = [zero] + [[] for _ in range(k)]
    for (_, lid), label in zip(points, labels):
        members[label + 1].append(lid)
    return _build("kmeans", members, by_id)


def within_group_variance(grouping: Grouping, stats) -> float:
    """Total within-group squared deviation of entropy over groups 1..4."""
    by_id = {s.lyricist_id: s for s in stats}
    total = 0.0
    for group in grouping.groups[1:]:
        values = [by_id[lid].entropy for lid in group]
        if values:
            total += _sse(values, sum(values) / len(values))
    return total
