"""Symmetric linear bandit instances: arm sets, hidden partitions, parameters and
noisy rewards."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ArgumentError, ConfigError, DimensionMismatch, InfeasibleSeparation, NoCoarseningError
from .partitions import (
    Partition,
    PartitionClass,
    has_three_crossing,
    merge_blocks,
    merge_keeps_class,
    merged_labels,
    valid_merges,
)
from .selection import separation_margin
from .subspace import exploratory_distribution, sphere_exploration_sampler

MAX_REJECTIONS = 10**5


class ArmSetKind(str, Enum):
    SPHERE = "sphere"
    CUBE = "cube"
    FINITE = "finite"


@dataclass(frozen=True, eq=False)
class ArmSet:
    """Sphere of radius sqrt(d), unit-infinity-norm cube, or a finite list."""

    kind: ArmSetKind
    d: int
    points: np.ndarray | None = None
    weights: np.ndarray | None = None  # exploratory design on finite sets
    c_min: float = 1.0

    @classmethod
    def sphere(cls, d: int) -> "ArmSet":
        return cls(ArmSetKind.SPHERE, d)

    @classmethod
    def cube(cls, d: int) -> "ArmSet":
        return cls(ArmSetKind.CUBE, d)

    @classmethod
    def finite(cls, points) -> "ArmSet":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w, c_min = exploratory_distribution(pts)
        return cls(ArmSetKind.FINITE, pts.shape[1], pts, w, c_min)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws from the exploratory distribution (uniform sphere, cube
        vertices, or the Frank-Wolfe design on a finite set)."""
        if self.kind is ArmSetKind.SPHERE:
            return sphere_exploration_sampler(self.d, rng, size)
        if self.kind is ArmSetKind.CUBE:
            return rng.choice(np.array([-1.0, 1.0]), size=(size, self.d))
        idx = rng.choice(len(self.points), size=size, p=self.weights)
        return self.points[idx]

    def argmax_linear(self, theta: np.ndarray) -> np.ndarray:
        """Arm maximising <x, theta>; ties and theta = 0 resolve deterministically."""
        theta = np.asarray(theta, dtype=float)
        if self.kind is ArmSetKind.SPHERE:
            norm = np.linalg.norm(theta)
            if norm == 0.0:
                x = np.zeros(self.d)
                x[0] = np.sqrt(self.d)
                return x
            return np.sqrt(self.d) * theta / norm
        if self.kind is ArmSetKind.CUBE:
            return np.where(theta >= 0, 1.0, -1.0)
        return self.points[int(np.argmax(self.points @ theta))].copy()

    def max_sq_norm(self) -> float:
        if self.kind is ArmSetKind.FINITE:
            return float(np.max(np.sum(self.points**2, axis=1)))
        return float(self.d)


@dataclass(frozen=True)
class EnvConfig:
    d: int
    d0: int
    partition_class: PartitionClass = PartitionClass.NONCROSSING
    sigma: float = 0.1
    arm_set: ArmSetKind = ArmSetKind.SPHERE
    eps0: float | None = None
    theta_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "partition_class", PartitionClass.parse(self.partition_class))
        except ValueError as exc:
            raise ConfigError("class", str(exc)) from None
        try:
            object.__setattr__(self, "arm_set", ArmSetKind(self.arm_set))
        except ValueError:
            raise ConfigError("arm_set", f"unknown arm set {self.arm_set!r}") from None
        if self.d < 1:
            raise ConfigError("d", "must be >= 1")
        if not 1 <= self.d0 <= self.d:
            raise ConfigError("d0", f"must satisfy 1 <= d0 <= d (d0={self.d0}, d={self.d})")
        if self.sigma < 0:
            raise ConfigError("sigma", "must be >= 0")
        if self.eps0 is not None and self.eps0 < 0:
            raise ConfigError("eps0", "must be >= 0")
        if self.theta_scale <= 0:
            raise ConfigError("theta_scale", "must be > 0")


@dataclass(frozen=True, eq=False)
class BanditEnvironment:
    arm_set: ArmSet
    theta_star: np.ndarray
    true_partition: Partition
    sigma: float
    eps0: float | None = None
    config: EnvConfig | None = None
    optimal_arm: np.ndarray = field(init=False)
    optimal_value: float = field(init=False)
    r_max: float = field(init=False)

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        if theta.shape != (self.arm_set.d,):
            raise DimensionMismatch(f"theta of shape {theta.shape} for d={self.arm_set.d}")
        object.__setattr__(self, "theta_star", theta)
        x_opt = self.arm_set.argmax_linear(theta)
        object.__setattr__(self, "optimal_arm", x_opt)
        object.__setattr__(self, "optimal_value", float(x_opt @ theta))
        if self.arm_set.kind is ArmSetKind.FINITE:
            r_max = float(np.max(np.abs(self.arm_set.points @ theta)))
        else:
            r_max = abs(self.optimal_value)  # both sets are symmetric about 0
        object.__setattr__(self, "r_max", r_max)

    @property
    def d(self) -> int:
        return self.arm_set.d

    @property
    def c_min(self) -> float:
        return self.arm_set.c_min

    @property
    def k_x(self) -> float:
        return self.arm_set.max_sq_norm()

    @property
    def theta_norm_bound(self) -> float:
        return float(np.linalg.norm(self.theta_star))

    def mean_reward(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.theta_star

    def regret(self, x) -> np.ndarray:
        return np.maximum(self.optimal_value - self.mean_reward(x), 0.0)

    def pull_many(self, arms: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        arms = np.atleast_2d(arms)
        mean = arms @ self.theta_star
        if self.sigma == 0:
            return mean
        return mean + self.sigma * rng.standard_normal(arms.shape[0])

    def snapshot(self) -> str:
        """Flat key = value text sufficient to rebuild the environment."""
        cfg = self.config
        lines = [
            f"d = {self.d}",
            f"d0 = {cfg.d0 if cfg else self.true_partition.k}",
            f"class = {(cfg.partition_class if cfg else PartitionClass.ALL).value}",
            f"sigma = {self.sigma!r}",
            f"arm_set = {self.arm_set.kind.value}",
            "theta_star = " + ",".join(repr(float(v)) for v in self.theta_star),
            f"partition = {self.true_partition}",
            f"seed = {cfg.seed if cfg else ''}",
        ]
        if self.eps0 is not None:
            lines.append(f"eps0 = {self.eps0!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_snapshot(cls, text: str) -> "BanditEnvironment":
        kv = {}
        for line in text.splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                kv[key.strip()] = value.strip()
        d = int(kv["d"])
        kind = ArmSetKind(kv["arm_set"])
        if kind is ArmSetKind.FINITE:
            raise ArgumentError("finite arm sets are not serialised in snapshots")
        arm_set = ArmSet.sphere(d) if kind is ArmSetKind.SPHERE else ArmSet.cube(d)
        theta = np.array([float(v) for v in kv["theta_star"].split(",")])
        eps0 = float(kv["eps0"]) if "eps0" in kv else None
        seed = int(kv["seed"]) if kv.get("seed") else 0
        cfg = EnvConfig(d, int(kv["d0"]), PartitionClass.parse(kv["class"]), float(kv["sigma"]), kind, eps0, seed=seed)
        return cls(arm_set, theta, Partition.parse(kv["partition"], d), float(kv["sigma"]), eps0, cfg)


def pull(env: BanditEnvironment, x, rng: np.random.Generator) -> float:
    """One noisy reward <x, theta*> + sigma z."""
    x = np.asarray(x, dtype=float)
    mean = float(x @ env.theta_star)
    if env.sigma == 0:
        return mean
    return mean + env.sigma * float(rng.standard_normal())


def random_partition(d: int, d0: int, c: PartitionClass, rng: np.random.Generator) -> Partition:
    """Merge walk from the finest partition: at each step one admissible
    in-class two-block merge is drawn uniformly, until ``d0`` blocks remain.
    Not uniform over the class.

    Unrestricted non-nesting walks get stuck at partitions such as
    1,4|2,5|3,6 that admit no non-nesting merge, and at d >= 40 they nearly
    always do.  For that class a merge is admissible only if its result has no
    three pairwise-crossing arcs, except on the final step; this is the same
    rule the greedy model search follows."""
    c = PartitionClass.parse(c)
    if not 1 <= d0 <= d:
        raise ArgumentError(f"need 1 <= d0 <= d, got d0={d0}, d={d}")
    p = Partition.finest(d)
    while p.k > d0:
        k = p.k

        def admissible(a, b):
            if not merge_keeps_class(p, a, b, c):
                return False
            if c is PartitionClass.NONNESTING and k - 1 > d0:
                return not has_three_crossing(merged_labels(p.labels, a, b).tolist())
            return True

        # rejection from uniform pairs is uniform over the admissible merges
        chosen = None
        for _ in range(100):
            a, b = sorted(rng.choice(k, size=2, replace=False).tolist())
            if admissible(a, b):
                chosen = (a, b)
                break
        if chosen is None:
            pairs = [(a, b) for a, b in valid_merges(p, c) if admissible(a, b)]
            if not pairs:
                raise NoCoarseningError(f"no admissible merge of {p} in class {c.short}")
            chosen = pairs[int(rng.integers(len(pairs)))]
        p = merge_blocks(p, *chosen)
    return p


def random_theta(
    p: Partition,
    eps0: float | None,
    theta_scale: float,
    rng: np.random.Generator,
    normalize: bool = True,
) -> np.ndarray:
    """Block values uniform on [-theta_scale, theta_scale].  With ``eps0`` set,
    values are redrawn until every cross-block gap is at least ``eps0`` and the
    vector is left unscaled; otherwise it is rescaled to unit norm when
    ``normalize`` is true."""
    if eps0:
        if eps0 * (p.k - 1) > 2 * theta_scale:
            raise InfeasibleSeparation(f"{p.k} blocks cannot be {eps0}-separated inside [-{theta_scale}, {theta_scale}]")
        for _ in range(MAX_REJECTIONS):
            values = rng.uniform(-theta_scale, theta_scale, p.k)
            theta = values[p.labels]
            if separation_margin(theta, p) >= eps0:
                return theta
        raise InfeasibleSeparation(f"no {eps0}-separated draw in {MAX_REJECTIONS} attempts")
    theta = rng.uniform(-theta_scale, theta_scale, p.k)[p.labels]
    if normalize:
        norm = np.linalg.norm(theta)
        if norm > 0:
            theta = theta / norm
    return theta


def make_environment(cfg: EnvConfig, rng: np.random.Generator | None = None) -> BanditEnvironment:
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if cfg.arm_set is ArmSetKind.FINITE:
        raise ConfigError("arm_set", "finite arm sets must be built with BanditEnvironment directly")
    p = random_partition(cfg.d, cfg.d0, cfg.partition_class, rng)
    theta = random_theta(p, cfg.eps0, cfg.theta_scale, rng)
    arm_set = ArmSet.sphere(cfg.d) if cfg.arm_set is ArmSetKind.SPHERE else ArmSet.cube(cfg.d)
    return BanditEnvironment(arm_set, theta, p, cfg.sigma, cfg.eps0 or None, cfg)


def lower_bound_instance(d: int, epsilon: float, rng: np.random.Generator, sigma: float = 1.0) -> BanditEnvironment:
    """Cube arm set with theta* drawn uniformly from {-eps, +eps}^d."""
    if epsilon <= 0:
        raise ArgumentError("epsilon must be positive")
    theta = epsilon * rng.choice(np.array([-1.0, 1.0]), size=d)
    p = Partition.from_labels((theta > 0).astype(int).tolist())
    cfg = EnvConfig(d, p.k, PartitionClass.ALL, sigma, ArmSetKind.CUBE)
    return BanditEnvironment(ArmSet.cube(d), theta, p, sigma, None, cfg)
