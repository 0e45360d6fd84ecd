"""Residual-minimising choice of a symmetry model, exhaustively over a pool or
by greedy descent through the coarsening lattice."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DimensionMismatch, EmptyPool, NoCoarseningError
from .partitions import (
    DEFAULT_ENUMERATION_CAP,
    Partition,
    PartitionClass,
    enumerate_partitions,
    has_three_crossing,
    merged_labels,
    valid_merges,
)
from .subspace import DesignSample, FitResult, SubspaceModel, as_model, fit_subspace

TIE_RTOL = 1e-12


@dataclass
class SelectionResult:
    model: SubspaceModel
    fit: FitResult
    residual_trace: list[tuple[int, float]] = field(default_factory=list)
    candidates_examined: int = 0

    @property
    def partition(self) -> Partition:
        return self.model.partition


def build_pool(
    d: int,
    d0: int,
    c: PartitionClass = PartitionClass.ALL,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[SubspaceModel]:
    """Models of every class-``c`` partition with at most ``d0`` blocks."""
    return [SubspaceModel.from_partition(p) for p in enumerate_partitions(d, c, d0, cap=cap)]


def _tie_tolerance(best: float, data: DesignSample) -> float:
    return TIE_RTOL * (abs(best) + float(data.Y @ data.Y))


def select_bruteforce(data: DesignSample, pool: Sequence[SubspaceModel]) -> SelectionResult:
    """Pool member with the smallest residual; ties go to fewer blocks, then to
    the canonically smaller partition."""
    pool = [as_model(m) for m in pool]
    if not pool:
        raise EmptyPool("model pool is empty")
    fits = [fit_subspace(data, m) for m in pool]
    res = np.array([f.residual_sq for f in fits])
    tol = _tie_tolerance(res.min(), data)
    tied = np.flatnonzero(res <= res.min() + tol)
    best = min(tied, key=lambda i: (pool[i].k, pool[i].partition.rgs))
    return SelectionResult(pool[best], fits[best], [], len(pool))


def _rss_direct(data: DesignSample, labels: np.ndarray, k: int) -> float:
    Z = np.zeros((data.n, k))
    np.add.at(Z.T, labels, data.X.T)
    coeffs = np.linalg.lstsq(Z, data.Y, rcond=None)[0]
    r = data.Y - Z @ coeffs
    return float(r @ r)


def select_greedy(data: DesignSample, d0: int, c: PartitionClass = PartitionClass.NONCROSSING) -> SelectionResult:
    """Start from the finest partition and repeatedly apply the in-class two-block
    merge with the smallest residual until ``d0`` blocks remain.

    While the reduced Gram matrix is well conditioned, the residual of each
    candidate merge is the current residual plus the cost of imposing
    c_a = c_b on the current fit, (c_a - c_b)^2 / (G^-1_aa + G^-1_bb - 2 G^-1_ab),
    so a step costs one k x k inversion instead of one regression per candidate.
    """
    c = PartitionClass.parse(c)
    d = data.d
    if not 1 <= d0 <= d:
        raise ArgumentError(f"need 1 <= d0 <= d, got d0={d0}, d={d}")
    p = Partition.finest(d)
    if d0 == d:
        m = SubspaceModel.from_partition(p)
        return SelectionResult(m, fit_subspace(data, m), [], 0)

    gram = data.X.T @ data.X
    xty = data.X.T @ data.Y
    rss = _rss_direct(data, p.labels, p.k)
    trace = [(p.k, rss)]
    examined = 0
    tol_scale = float(data.Y @ data.Y)

    while p.k > d0:
        pairs = valid_merges(p, c)
        if not pairs:
            raise NoCoarseningError(f"no two-block merge of {p} stays in class {c.short}")
        ia = np.fromiter((a for a, _ in pairs), dtype=np.intp, count=len(pairs))
        ib = np.fromiter((b for _, b in pairs), dtype=np.intp, count=len(pairs))
        examined += len(pairs)

        cand = None
        if np.linalg.cond(gram) < 1e10:
            inv = np.linalg.inv(gram)
            coef = inv @ xty
            denom = inv[ia, ia] + inv[ib, ib] - 2.0 * inv[ia, ib]
            if np.all(denom > 0):
                cand = rss + (coef[ia] - coef[ib]) ** 2 / denom
        if cand is None:
            labels = p.labels
            cand = np.array([_rss_direct(data, merged_labels(labels, a, b), p.k - 1) for a, b in pairs])

        j = _pick_merge(p, c, cand, ia, ib, d0, tol_scale)
        a, b = int(ia[j]), int(ib[j])
        rss = float(cand[j])

        gram[a, :] += gram[b, :]
        gram[:, a] += gram[:, b]
        gram = np.delete(np.delete(gram, b, axis=0), b, axis=1)
        xty[a] += xty[b]
        xty = np.delete(xty, b)
        p = Partition.from_labels(merged_labels(p.labels, a, b).tolist())
        trace.append((p.k, rss))

    m = SubspaceModel.from_partition(p)
    return SelectionResult(m, fit_subspace(data, m), trace, examined)


def _pick_merge(p, c, cand, ia, ib, d0, tol_scale) -> int:
    """Index of the smallest-residual merge, ties to the smaller merged labels.

    Non-nesting merge walks can dead-end.  Before the last step, merges whose
    result has three pairwise-crossing arcs are skipped (such partitions cannot
    be merged down to one block); if every merge is skipped, the best one that
    still has a further merge is taken."""
    order = np.argsort(cand, kind="stable")
    groups = []
    i = 0
    while i < len(order):
        best = cand[order[i]]
        end = i
        while end < len(order) and cand[order[end]] <= best + TIE_RTOL * (abs(best) + tol_scale):
            end += 1
        groups.append(sorted(order[i:end], key=lambda t: tuple(merged_labels(p.labels, ia[t], ib[t]).tolist())))
        i = end
    ranked = [int(j) for g in groups for j in g]
    if c is not PartitionClass.NONNESTING or p.k - 1 <= d0:
        return ranked[0]
    for j in ranked:
        if not has_three_crossing(merged_labels(p.labels, ia[j], ib[j]).tolist()):
            return j
    for j in ranked:
        if valid_merges(Partition.from_labels(merged_labels(p.labels, ia[j], ib[j]).tolist()), c):
            return j
    raise NoCoarseningError(f"every merge of {p} dead-ends before {d0} blocks in class {c.short}")


def separation_margin(theta, p: Partition) -> float:
    """Smallest |theta_i - theta_j| over coordinates in different blocks."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (p.d,):
        raise DimensionMismatch(f"theta of shape {theta.shape} for d={p.d}")
    if p.k == 1:
        return float("inf")
    # min cross-block gap is attained between neighbours in sorted order
    order = np.argsort(theta, kind="stable")
    vals, labs = theta[order], p.labels[order]
    gaps = np.diff(vals)
    cross = labs[1:] != labs[:-1]
    return float(gaps[cross].min()) if cross.any() else float("inf")
