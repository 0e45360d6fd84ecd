"""Sequential algorithms: explore-models-then-commit, its well-separated variant
with optimistic play on the selected subspace, ambient OFUL, and a Lasso
explore-then-commit baseline."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .environments import ArmSetKind, BanditEnvironment
from .errors import ArgumentError, ConvergenceWarning, InvalidPhase
from .partitions import DEFAULT_ENUMERATION_CAP, Partition, PartitionClass
from .selection import build_pool, select_bruteforce, select_greedy
from .subspace import DesignSample, SubspaceModel


class AlgorithmName(str, Enum):
    EMC = "EMC"
    EMC_WS = "EMC_WS"
    OFUL_FULL = "OFUL_FULL"
    ESTC_LASSO = "ESTC_LASSO"

    @classmethod
    def parse(cls, text) -> "AlgorithmName":
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper().replace("-", "_")
        aliases = {"EMCWS": "EMC_WS", "OFUL": "OFUL_FULL", "ESTC": "ESTC_LASSO", "LASSO": "ESTC_LASSO"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ArgumentError(f"unknown algorithm {text!r}") from None


class Selector(str, Enum):
    BRUTE_FORCE = "BruteForce"
    GREEDY = "Greedy"

    @classmethod
    def parse(cls, text) -> "Selector":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "").replace("-", "")
        if key in ("bruteforce", "brute", "exhaustive"):
            return cls.BRUTE_FORCE
        if key == "greedy":
            return cls.GREEDY
        raise ArgumentError(f"unknown selector {text!r}")


@dataclass(frozen=True)
class OfulParams:
    ridge_lambda: float = 1.0
    delta: float | None = None  # None means 1/T
    theta_norm_bound: float | None = None  # None means taken from the environment


@dataclass(frozen=True)
class AlgorithmConfig:
    name: AlgorithmName = AlgorithmName.EMC
    d0: int = 1
    partition_class: PartitionClass = PartitionClass.NONCROSSING
    selector: Selector = Selector.GREEDY
    t1: int | None = None
    t2: int | None = None
    lasso_lambda: float | None = None
    oful_params: OfulParams = field(default_factory=OfulParams)
    candidate_arms_per_round: int = 256
    eps0: float | None = None  # None means taken from the environment
    safety_c: float = 2.0
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        object.__setattr__(self, "name", AlgorithmName.parse(self.name))
        object.__setattr__(self, "selector", Selector.parse(self.selector))
        object.__setattr__(self, "partition_class", PartitionClass.parse(self.partition_class))
        if self.candidate_arms_per_round < 1:
            raise ArgumentError("candidate_arms_per_round must be >= 1")
        if self.d0 < 1:
            raise ArgumentError("d0 must be >= 1")
        for name in ("t1", "t2"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ArgumentError(f"{name} must be >= 1")
        if self.safety_c <= 0:
            raise ArgumentError("safety_c must be positive")


@dataclass
class Trajectory:
    """Per-round arms, observed rewards and instantaneous regrets (rows are
    rounds 1..T)."""

    arms: np.ndarray
    rewards: np.ndarray
    regrets: np.ndarray
    selected_partition: Partition | None = None
    phase_boundary: int = 0
    theta_hat: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.rewards)

    @property
    def rounds(self):
        for t in range(self.T):
            yield t + 1, self.arms[t], float(self.rewards[t]), float(self.regrets[t])

    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.regrets)


def _check_positive(**kwargs):
    for name, v in kwargs.items():
        if not v > 0:
            raise ArgumentError(f"{name} must be positive, got {v}")


def t1_default(T, d0, d, sigma, c_min, k_x, r_max) -> int:
    """Exploration length balancing exploration cost against commit error:
    R^{-2/3} sigma^{2/3} C^{-1/3} K^{1/3} d0^{1/3} T^{2/3} ln(dT)^{1/3}."""
    _check_positive(T=T, d0=d0, d=d, sigma=sigma, c_min=c_min, k_x=k_x, r_max=r_max)
    if T < 2:
        raise ArgumentError("T must be >= 2 to leave a commit phase")
    value = (
        r_max ** (-2 / 3)
        * sigma ** (2 / 3)
        * c_min ** (-1 / 3)
        * k_x ** (1 / 3)
        * d0 ** (1 / 3)
        * T ** (2 / 3)
        * math.log(d * T) ** (1 / 3)
    )
    return int(min(max(math.ceil(value), 1), T - 1))


def t2_default(T, d0, d, sigma, c_min, k_x, eps0, safety_c=2.0) -> int:
    """Exploration length for exact recovery of an eps0-separated partition:
    c sigma^2 K^2 d0 ln(dT) / (C^2 eps0^2)."""
    _check_positive(T=T, d0=d0, d=d, sigma=sigma, c_min=c_min, k_x=k_x, eps0=eps0, safety_c=safety_c)
    if T < 2:
        raise ArgumentError("T must be >= 2 to leave a commit phase")
    value = safety_c * sigma**2 * k_x**2 * d0 * math.log(d * T) / (c_min**2 * eps0**2)
    return int(min(max(math.ceil(value), 1), T - 1))


def _select(data: DesignSample, cfg: AlgorithmConfig):
    if cfg.selector is Selector.BRUTE_FORCE:
        pool = build_pool(data.d, cfg.d0, cfg.partition_class, cfg.enumeration_cap)
        return select_bruteforce(data, pool)
    return select_greedy(data, cfg.d0, cfg.partition_class)


def _explore(env: BanditEnvironment, n: int, rng: np.random.Generator):
    X = env.arm_set.sample(rng, n)
    Y = env.pull_many(X, rng)
    return X, Y


def _commit(env: BanditEnvironment, x: np.ndarray, n: int, rng: np.random.Generator):
    arms = np.broadcast_to(x, (n, env.d))
    rewards = env.pull_many(arms, rng) if n else np.zeros(0)
    regret = float(env.regret(x))
    return arms, rewards, np.full(n, regret)


def _base_metadata(env, T, **extra):
    meta = {"T": T, "algorithm_stream": "PCG64", "warnings": []}
    meta.update(extra)
    return meta


def _resolve_t1(env: BanditEnvironment, T: int, cfg: AlgorithmConfig) -> int:
    if cfg.t1 is not None:
        t1 = cfg.t1
    else:
        t1 = t1_default(T, cfg.d0, env.d, env.sigma, env.c_min, env.k_x, env.r_max)
    if not 1 <= t1 < T:
        raise InvalidPhase(f"exploration length t1={t1} must satisfy 1 <= t1 < T={T}")
    return t1


def _resolve_t2(env: BanditEnvironment, T: int, cfg: AlgorithmConfig) -> int:
    if cfg.t2 is not None:
        t2 = cfg.t2
    else:
        eps0 = cfg.eps0 if cfg.eps0 is not None else env.eps0
        if not eps0:
            raise ArgumentError("t2 needs eps0 from the config or the environment")
        t2 = t2_default(T, cfg.d0, env.d, env.sigma, env.c_min, env.k_x, eps0, cfg.safety_c)
    if not 1 <= t2 < T:
        raise InvalidPhase(f"exploration length t2={t2} must satisfy 1 <= t2 < T={T}")
    return t2


def run_emc(env: BanditEnvironment, T: int, cfg: AlgorithmConfig, rng: np.random.Generator) -> Trajectory:
    """Explore with the exploratory distribution for t1 rounds, select a
    partition model by residual, then play argmax <theta_hat, x> until T."""
    t1 = _resolve_t1(env, T, cfg)
    X, Y = _explore(env, t1, rng)
    result = _select(DesignSample(X, Y), cfg)
    theta_hat = result.fit.theta_hat
    x_commit = env.arm_set.argmax_linear(theta_hat)
    arms, rewards, regrets = _commit(env, x_commit, T - t1, rng)
    return Trajectory(
        np.vstack([X, arms]),
        np.concatenate([Y, rewards]),
        np.concatenate([env.regret(X), regrets]),
        result.partition,
        t1,
        theta_hat,
        _base_metadata(env, T, t1=t1, candidates_examined=result.candidates_examined),
    )


def sphere_ucb_maximizer(theta_red, v_inv, beta, model: SubspaceModel, radius: float) -> np.ndarray:
    """Exact maximiser of <theta_red, Phi(x)> + beta ||Phi(x)||_{V^-1} over the
    sphere ||x|| = radius, where Phi(x) are the block sums of x.

    Only the components alpha_b = <x, 1_B>/sqrt|B| matter, and the objective is
    g'alpha + beta ||A^{1/2} alpha|| with g = D^{1/2} theta_red and
    A = D^{1/2} V^-1 D^{1/2}.  Writing the norm term as a maximum over the unit
    ball turns the problem into max_{|v|<=1} radius |g + M v| with
    M = beta A^{1/2}, a trust-region problem solved through its secular
    equation in the eigenbasis of M.
    """
    sizes = model.block_sizes.astype(float)
    root = np.sqrt(sizes)
    g = root * np.asarray(theta_red, dtype=float)
    A = root[:, None] * v_inv * root[None, :]
    evals, U = np.linalg.eigh(A)
    m = beta * np.sqrt(np.clip(evals, 0.0, None))
    h = U.T @ g
    v = _max_norm_on_ball(m, h)
    w = h + m * v  # g + M v in the eigenbasis
    nw = np.linalg.norm(w)
    if nw == 0.0:
        alpha = np.zeros(model.k)
        alpha[0] = radius
    else:
        alpha = radius * (U @ w) / nw
    return model.expand(alpha / root)


def _max_norm_on_ball(m: np.ndarray, h: np.ndarray) -> np.ndarray:
    # maximise |h + diag(m) v| over |v| <= 1, m >= 0 sorted ascending
    k = len(m)
    top = m[-1]
    if top <= 0.0:
        return np.zeros(k)
    lam2 = m**2
    mh = m * h
    scale = max(top**2, 1e-300)
    is_top = lam2 >= top**2 * (1.0 - 1e-12)

    def norm_sq(mu):
        return float(np.sum((mh / (mu - lam2)) ** 2))

    # hard case: the top eigen-directions carry no linear term
    if np.all(np.abs(mh[is_top]) <= 1e-14 * (np.abs(mh).max() + 1e-300)):
        rest = ~is_top
        v = np.zeros(k)
        v[rest] = mh[rest] / (top**2 - lam2[rest])
        nv = float(v @ v)
        if nv <= 1.0:
            i = int(np.flatnonzero(is_top)[0])
            v[i] = math.sqrt(1.0 - nv)
            return v
    lo = top**2
    hi = lo + max(float(np.linalg.norm(mh)), 1e-300)
    while norm_sq(hi) > 1.0:
        hi = lo + 2.0 * (hi - lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if norm_sq(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * scale:
            break
    mu = hi
    return mh / (mu - lam2)


def _confidence_radius(sigma, k, t, L, lam, delta, S) -> float:
    return sigma * math.sqrt(k * math.log((1.0 + t * L**2 / lam) / delta)) + math.sqrt(lam) * S


def _oful(
    env: BanditEnvironment,
    n_rounds: int,
    model: SubspaceModel,
    cfg: AlgorithmConfig,
    T: int,
    rng: np.random.Generator,
):
    """Optimistic play with ridge regression on the block-sum features of
    ``model``; starts from the prior V = lambda I."""
    d, k = env.d, model.k
    params = cfg.oful_params
    lam = params.ridge_lambda
    delta = params.delta if params.delta is not None else 1.0 / T
    S = params.theta_norm_bound if params.theta_norm_bound is not None else env.theta_norm_bound
    finest = k == d
    indicator = None if finest else model.indicator()
    kind = env.arm_set.kind
    radius = math.sqrt(d)

    v_inv = np.eye(k) / lam
    b = np.zeros(k)
    L = 0.0
    arms = np.empty((n_rounds, d))
    rewards = np.empty(n_rounds)
    for t in range(n_rounds):
        theta_red = v_inv @ b
        beta = _confidence_radius(env.sigma, k, t, L, lam, delta, S)
        if kind is ArmSetKind.FINITE:
            cand = env.arm_set.points
        else:
            extra = [env.arm_set.argmax_linear(model.expand(theta_red))]
            if kind is ArmSetKind.SPHERE:
                extra.append(sphere_ucb_maximizer(theta_red, v_inv, beta, model, radius))
            cand = np.vstack([env.arm_set.sample(rng, cfg.candidate_arms_per_round), *extra])
        phi = cand if finest else cand @ indicator
        width = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", phi, v_inv, phi), 0.0))
        j = int(np.argmax(phi @ theta_red + beta * width))
        x, f = cand[j], phi[j]
        y = float(x @ env.theta_star)
        if env.sigma:
            y += env.sigma * float(rng.standard_normal())
        arms[t] = x
        rewards[t] = y
        vf = v_inv @ f
        v_inv -= np.outer(vf, vf) / (1.0 + f @ vf)
        b += y * f
        L = max(L, float(np.linalg.norm(f)))
    return arms, rewards, v_inv @ b


def run_emc_ws(env: BanditEnvironment, T: int, cfg: AlgorithmConfig, rng: np.random.Generator) -> Trajectory:
    """Explore for t2 rounds, select a partition model, then run OFUL in the
    reduced coordinates of the selected model for the remaining rounds."""
    t2 = _resolve_t2(env, T, cfg)
    X, Y = _explore(env, t2, rng)
    result = _select(DesignSample(X, Y), cfg)
    arms, rewards, theta_red = _oful(env, T - t2, result.model, cfg, T, rng)
    return Trajectory(
        np.vstack([X, arms]),
        np.concatenate([Y, rewards]),
        np.concatenate([env.regret(X), env.regret(arms)]),
        result.partition,
        t2,
        result.model.expand(theta_red),
        _base_metadata(env, T, t2=t2, candidates_examined=result.candidates_examined),
    )


def run_oful_full(env: BanditEnvironment, T: int, cfg: AlgorithmConfig, rng: np.random.Generator) -> Trajectory:
    """OFUL in the ambient coordinates from the first round."""
    if T < 1:
        raise ArgumentError("T must be >= 1")
    model = SubspaceModel.from_partition(Partition.finest(env.d))
    arms, rewards, theta_hat = _oful(env, T, model, cfg, T, rng)
    return Trajectory(arms, rewards, env.regret(arms), None, 0, theta_hat, _base_metadata(env, T))


def soft_threshold(z, thr):
    return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)


def lasso_cd(U, Y, lam: float, tol: float = 1e-8, max_sweeps: int = 10_000):
    """Cyclic coordinate descent for (1/2n)|Y - U phi|^2 + lam |phi|_1.

    Returns ``(phi, converged, sweeps)``; convergence means the largest
    coordinate change in a sweep fell below ``tol``.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if lam < 0:
        raise ArgumentError("lam must be nonnegative")
    n, p = U.shape
    G = U.T @ U / n
    c = U.T @ Y / n
    diag = np.diag(G).copy()
    phi = np.zeros(p)
    q = np.zeros(p)  # G @ phi
    active = diag > 0
    for sweep in range(1, max_sweeps + 1):
        max_step = 0.0
        for j in range(p):
            if not active[j]:
                continue
            old = phi[j]
            rho = c[j] - q[j] + diag[j] * old
            new = soft_threshold(rho, lam) / diag[j]
            step = new - old
            if step != 0.0:
                phi[j] = new
                q += step * G[:, j]
                max_step = max(max_step, abs(step))
        if max_step < tol:
            return phi, True, sweep
    return phi, False, max_sweeps


def prefix_features(X) -> np.ndarray:
    """u_j = sum_{i <= j} x_i, so <x, theta> = <u, phi> with theta_i = sum_{j >= i} phi_j."""
    return np.cumsum(np.asarray(X, dtype=float), axis=-1)


def phi_to_theta(phi) -> np.ndarray:
    return np.cumsum(np.asarray(phi, dtype=float)[::-1])[::-1]


def theta_to_phi(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.append(theta[:-1] - theta[1:], theta[-1])


def default_lasso_lambda(sigma: float, d: int, t1: int) -> float:
    return 2.0 * sigma * math.sqrt(2.0 * math.log(2 * d) / t1)


def run_estc_lasso(env: BanditEnvironment, T: int, cfg: AlgorithmConfig, rng: np.random.Generator) -> Trajectory:
    """Explore for t1 rounds, fit a Lasso on prefix-sum features (sparse
    differences of consecutive coordinates), then commit greedily."""
    t1 = _resolve_t1(env, T, cfg)
    X, Y = _explore(env, t1, rng)
    lam = cfg.lasso_lambda if cfg.lasso_lambda is not None else default_lasso_lambda(env.sigma, env.d, t1)
    phi, converged, sweeps = lasso_cd(prefix_features(X), Y, lam)
    meta = _base_metadata(env, T, t1=t1, lasso_lambda=lam, lasso_sweeps=sweeps)
    if not converged:
        msg = f"lasso stopped after {sweeps} sweeps without reaching tolerance"
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)
        meta["warnings"].append(f"ConvergenceWarning: {msg}")
    theta_hat = phi_to_theta(phi)
    x_commit = env.arm_set.argmax_linear(theta_hat)
    arms, rewards, regrets = _commit(env, x_commit, T - t1, rng)
    return Trajectory(
        np.vstack([X, arms]),
        np.concatenate([Y, rewards]),
        np.concatenate([env.regret(X), regrets]),
        None,
        t1,
        theta_hat,
        meta,
    )


RUNNERS = {
    AlgorithmName.EMC: run_emc,
    AlgorithmName.EMC_WS: run_emc_ws,
    AlgorithmName.OFUL_FULL: run_oful_full,
    AlgorithmName.ESTC_LASSO: run_estc_lasso,
}


def run_algorithm(env: BanditEnvironment, T: int, cfg: AlgorithmConfig, rng: np.random.Generator) -> Trajectory:
    return RUNNERS[cfg.name](env, T, cfg, rng)
