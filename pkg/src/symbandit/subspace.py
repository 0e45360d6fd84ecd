"""Fixed-point subspace geometry: projections, block-constant least squares,
restricted isometry constants and exploratory designs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyArmSet, EmptyModelList, SpanWarning
from .partitions import Partition


@dataclass(frozen=True, eq=False)
class SubspaceModel:
    """Subspace of vectors constant on each block of ``partition``."""

    partition: Partition
    k: int
    block_index: np.ndarray
    block_sizes: np.ndarray

    @classmethod
    def from_partition(cls, p: Partition) -> "SubspaceModel":
        return cls(p, p.k, p.labels, p.block_sizes())

    @property
    def d(self) -> int:
        return self.partition.d

    def indicator(self) -> np.ndarray:
        """d x k matrix whose columns are the block indicator vectors."""
        s = np.zeros((self.d, self.k))
        s[np.arange(self.d), self.block_index] = 1.0
        return s

    def expand(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs)[..., self.block_index]

    def __eq__(self, other):
        return isinstance(other, SubspaceModel) and self.partition == other.partition

    def __hash__(self):
        return hash(self.partition)

    def __repr__(self):
        return f"SubspaceModel('{self.partition}')"


def as_model(m) -> SubspaceModel:
    if isinstance(m, SubspaceModel):
        return m
    if isinstance(m, Partition):
        return SubspaceModel.from_partition(m)
    return SubspaceModel.from_partition(Partition.parse(m))


@dataclass(frozen=True)
class DesignSample:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float).ravel()
        if X.shape[0] != Y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
        if X.shape[0] < 1:
            raise DimensionMismatch("empty design")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    reduced_coeffs: np.ndarray
    residual_sq: float


def _check_dim(x: np.ndarray, m: SubspaceModel):
    if x.shape[-1] != m.d:
        raise DimensionMismatch(f"vector of length {x.shape[-1]} for a model on d={m.d}")


def project_point(x, m: SubspaceModel) -> np.ndarray:
    """Orthogonal projection onto the fixed-point subspace: block averaging.
    Works row-wise on 2-D input."""
    x = np.asarray(x, dtype=float)
    _check_dim(x, m)
    means = reduced_features(x, m) / m.block_sizes
    return means[..., m.block_index]


def reduced_features(x, m: SubspaceModel) -> np.ndarray:
    """Block sums, so that <x, theta> = <reduced_features(x), c> for theta
    taking value c_b on block b."""
    x = np.asarray(x, dtype=float)
    _check_dim(x, m)
    if x.ndim == 1:
        return np.bincount(m.block_index, weights=x, minlength=m.k)
    return x @ m.indicator()


def fit_subspace(data: DesignSample, m: SubspaceModel) -> FitResult:
    """Least squares restricted to the model subspace (minimum-norm solution
    when the reduced design is rank deficient)."""
    if data.d != m.d:
        raise DimensionMismatch(f"design has d={data.d}, model has d={m.d}")
    Z = data.X @ m.indicator()
    coeffs = np.linalg.lstsq(Z, data.Y, rcond=None)[0]
    resid = data.Y - Z @ coeffs
    return FitResult(m.expand(coeffs), coeffs, float(resid @ resid))


def _orthonormal_basis(cols: np.ndarray) -> np.ndarray:
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    tol = s.max() * max(cols.shape) * np.finfo(float).eps if s.size else 0.0
    return u[:, s > tol]


def rip_constant(A, models: Sequence[SubspaceModel]) -> float:
    """Smallest delta with (1-delta)|t|^2 <= |A t|^2 <= (1+delta)|t|^2 for every t
    in the sum of any two models (a model paired with itself included)."""
    models = [as_model(m) for m in models]
    if not models:
        raise EmptyModelList("need at least one model")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n, d = A.shape
    for m in models:
        if m.d != d:
            raise DimensionMismatch(f"matrix has {d} columns, model has d={m.d}")
    indicators = [m.indicator() for m in models]
    delta = 0.0
    for i, j in combinations_with_replacement(range(len(models)), 2):
        cols = indicators[i] if i == j else np.hstack([indicators[i], indicators[j]])
        B = _orthonormal_basis(cols)
        s = np.linalg.svd(A @ B, compute_uv=False)
        s_min = s.min() if B.shape[1] <= n else 0.0
        delta = max(delta, 1.0 - s_min**2, s.max() ** 2 - 1.0)
    return float(delta)


def _dual_bound(arms: np.ndarray, evals: np.ndarray, evecs: np.ndarray) -> float:
    # Any trace-one PSD Z bounds the optimum by max_x x'Zx; use the bottom
    # eigenvector and the average over the bottom eigenspace.
    lam = evals[0]
    v = evecs[:, 0]
    bound = float(np.max((arms @ v) ** 2))
    scale = max(abs(evals[-1]), 1e-300)
    mult = int(np.sum(evals - lam <= 1e-9 * scale))
    if mult > 1:
        proj = arms @ evecs[:, :mult]
        bound = min(bound, float(np.max(np.sum(proj**2, axis=1))) / mult)
    return bound


def exploratory_distribution(arms, tol: float = 1e-6, max_iters: int = 1000):
    """Frank-Wolfe weights on a finite arm list maximising the minimum eigenvalue
    of sum_x w_x x x^T.  Returns ``(weights, c_min)``."""
    arms = np.atleast_2d(np.asarray(arms, dtype=float))
    if arms.size == 0 or arms.shape[0] == 0:
        raise EmptyArmSet("arm set is empty")
    n, d = arms.shape
    w = np.full(n, 1.0 / n)
    if np.linalg.matrix_rank(arms) < d:
        warnings.warn("arms do not span R^d; minimum eigenvalue is zero", SpanWarning, stacklevel=2)
        return w, 0.0
    best_w, best_val = w.copy(), -np.inf
    for it in range(1, max_iters + 1):
        V = (arms * w[:, None]).T @ arms
        evals, evecs = np.linalg.eigh(V)
        lam = evals[0]
        if lam > best_val:
            best_w, best_val = w.copy(), lam
        if _dual_bound(arms, evals, evecs) - lam <= tol:
            break
        j = int(np.argmax((arms @ evecs[:, 0]) ** 2))
        step = 2.0 / (it + 2)
        w *= 1.0 - step
        w[j] += step
    else:
        V = (arms * w[:, None]).T @ arms
        lam = np.linalg.eigvalsh(V)[0]
        if lam > best_val:
            best_w, best_val = w.copy(), lam
    return best_w, float(best_val)


def sphere_exploration_sampler(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) on the sphere of radius sqrt(d); E[x x^T] = I."""
    shape = (d,) if size is None else (size, d)
    z = rng.standard_normal(shape)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return np.sqrt(d) * z / norms
