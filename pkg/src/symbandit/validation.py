"""Monte-Carlo validation suites producing pass/fail reports with the measured
statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import AlgorithmConfig, run_algorithm, t2_default
from .environments import EnvConfig, make_environment, random_partition, random_theta
from .partitions import PartitionClass, count_partitions, enumerate_partitions, narayana, stirling2
from .selection import build_pool, select_bruteforce, select_greedy
from .subspace import DesignSample, SubspaceModel, rip_constant, sphere_exploration_sampler

SUITES = ("counts", "rip", "selection", "estimation_rate", "regret_slope")
# older name accepted by validate
SUITE_ALIASES = {"lemma1": "estimation_rate"}


@dataclass
class Check:
    name: str
    passed: bool
    statistic: float | str
    threshold: str
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.statistic} (need {self.threshold}) {self.detail}".rstrip()


@dataclass
class Report:
    suite: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        return "\n".join([f"suite {self.suite}"] + [c.line() for c in self.checks]) + "\n"


def power_law_exponent(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def counts_suite(max_d: int = 9) -> Report:
    rep = Report("counts")
    bad = []
    for d in range(1, max_d + 1):
        for c in PartitionClass:
            by_k = np.bincount([p.k for p in enumerate_partitions(d, c)], minlength=d + 1)
            for k in range(1, d + 1):
                if by_k[k] != count_partitions(d, k, c):
                    bad.append((d, c.short, k))
    rep.checks.append(Check("enumeration matches closed forms", not bad, f"{len(bad)} mismatches", "0", str(bad[:5])))
    bell = [sum(stirling2(d, k) for k in range(d + 1)) for d in range(1, max_d + 1)]
    catalan = [math.comb(2 * d, d) // (d + 1) for d in range(1, max_d + 1)]
    for c, totals in ((PartitionClass.ALL, bell), (PartitionClass.NONCROSSING, catalan), (PartitionClass.NONNESTING, catalan)):
        got = [sum(1 for _ in enumerate_partitions(d, c)) for d in range(1, max_d + 1)]
        rep.checks.append(Check(f"{c.short} totals", got == totals, str(got), str(totals)))
    spots = (stirling2(4, 2), catalan[3], narayana(4, 2))
    rep.checks.append(Check("S(4,2), C4, N(4,2)", spots == (7, 14, 6), str(spots), "(7, 14, 6)"))
    return rep


def rip_deltas(n: int, d: int, seeds, blocks: int = 3) -> np.ndarray:
    out = []
    for s in seeds:
        rng = np.random.default_rng(s)
        models = [SubspaceModel.from_partition(random_partition(d, blocks, PartitionClass.ALL, rng)) for _ in range(2)]
        A = sphere_exploration_sampler(d, rng, n) / math.sqrt(n)
        out.append(rip_constant(A, models))
    return np.array(out)


def rip_suite(n: int = 200, d: int = 20, n_seeds: int = 100, ns=(50, 100, 200, 400)) -> Report:
    rep = Report("rip")
    deltas = rip_deltas(n, d, range(n_seeds))
    hits = int(np.sum(deltas < 0.5))
    rep.checks.append(Check(f"delta < 1/2 at n={n}, d={d}", hits >= math.ceil(0.95 * n_seeds), f"{hits}/{n_seeds}", ">= 95%"))
    med = [float(np.median(rip_deltas(m, d, range(n_seeds)))) for m in ns]
    mono = all(a > b for a, b in zip(med, med[1:]))
    rep.checks.append(Check("median delta decreasing in n", mono, ", ".join(f"{v:.3f}" for v in med), "strictly decreasing"))
    return rep


def prediction_errors(d=10, d0=3, n=300, sigma=0.1, n_seeds=200, c=PartitionClass.NONCROSSING):
    """Per-seed |X theta_hat - X theta*|^2 of the brute-force selection and the
    pool size."""
    pool = build_pool(d, d0, c)
    errs = []
    for s in range(n_seeds):
        rng = np.random.default_rng(s)
        p = random_partition(d, d0, c, rng)
        theta = random_theta(p, None, 1.0, rng)
        X = sphere_exploration_sampler(d, rng, n)
        Y = X @ theta + sigma * rng.standard_normal(n)
        fit = select_bruteforce(DesignSample(X, Y), pool).fit
        r = X @ (fit.theta_hat - theta)
        errs.append(float(r @ r))
    return np.array(errs), len(pool)


def recovery_hits(d=20, d0=4, eps0=0.5, sigma=0.1, T=10_000, n_seeds=100, safety_c=2.0, c=PartitionClass.NONCROSSING):
    """Number of seeds for which greedy selection after t2 exploratory rounds
    returns the true partition, and the t2 used."""
    t2 = t2_default(T, d0, d, sigma, 1.0, float(d), eps0, safety_c)
    hits = 0
    for s in range(n_seeds):
        rng = np.random.default_rng(s)
        env = make_environment(EnvConfig(d, d0, c, sigma, eps0=eps0, seed=s), rng)
        X = env.arm_set.sample(rng, t2)
        Y = env.pull_many(X, rng)
        hits += select_greedy(DesignSample(X, Y), d0, c).partition == env.true_partition
    return hits, t2


def selection_suite(n_seeds: int = 200, recovery_seeds: int = 100) -> Report:
    rep = Report("selection")
    sigma = 0.1
    errs, M = prediction_errors(sigma=sigma, n_seeds=n_seeds)
    bound = 20 * sigma**2 * math.log(M / 0.05)
    ok = int(np.sum(errs <= bound))
    rep.checks.append(
        Check("prediction error bound", ok >= math.ceil(0.95 * n_seeds), f"{ok}/{n_seeds}", f">= 95% under {bound:.3f}", f"M={M}")
    )
    hits, t2 = recovery_hits(n_seeds=recovery_seeds)
    rep.checks.append(
        Check("true partition recovered", hits >= math.ceil(0.9 * recovery_seeds), f"{hits}/{recovery_seeds}", ">= 90%", f"t2={t2}")
    )
    return rep


def estimation_errors(t1s=(250, 1000, 4000), d=20, d0=4, sigma=0.1, n_seeds=100, c=PartitionClass.NONCROSSING):
    """Median |theta_hat - theta*| after greedy selection per exploration length."""
    med = []
    for t1 in t1s:
        errs = []
        for s in range(n_seeds):
            rng = np.random.default_rng(s)
            env = make_environment(EnvConfig(d, d0, c, sigma, seed=s), rng)
            X = env.arm_set.sample(rng, t1)
            Y = env.pull_many(X, rng)
            fit = select_greedy(DesignSample(X, Y), d0, c).fit
            errs.append(float(np.linalg.norm(fit.theta_hat - env.theta_star)))
        med.append(float(np.median(errs)))
    return np.array(med)


def estimation_rate_suite(n_seeds: int = 100, t1s=(250, 1000, 4000)) -> Report:
    rep = Report("estimation_rate")
    med = estimation_errors(t1s, n_seeds=n_seeds)
    slope = power_law_exponent(t1s, med)
    rep.checks.append(
        Check("estimation error exponent", -0.65 <= slope <= -0.35, f"{slope:.3f}", "[-0.65, -0.35]", f"medians={np.round(med, 5).tolist()}")
    )
    return rep


def emc_final_regrets(Ts=(5000, 10_000, 20_000), d=100, d0=15, sigma=0.1, n_seeds=10, c=PartitionClass.NONCROSSING):
    out = np.empty((n_seeds, len(Ts)))
    cfg = AlgorithmConfig("EMC", d0=d0, partition_class=c)
    for s in range(n_seeds):
        env = make_environment(EnvConfig(d, d0, c, sigma, seed=s))
        for j, T in enumerate(Ts):
            tr = run_algorithm(env, T, cfg, np.random.default_rng([s, T]))
            out[s, j] = tr.regrets.sum()
    return out


def oful_phase_curve(d=20, d0=4, eps0=0.5, sigma=0.1, T=10_000, n_seeds=10, c=PartitionClass.NONCROSSING):
    """Median cumulative OFUL-phase regret at 1/8, 1/4, 1/2 and all of the
    phase, with the phase lengths."""
    cfg = AlgorithmConfig("EMC_WS", d0=d0, partition_class=c, eps0=eps0)
    curves, points = [], None
    for s in range(n_seeds):
        env = make_environment(EnvConfig(d, d0, c, sigma, eps0=eps0, seed=s))
        tr = run_algorithm(env, T, cfg, np.random.default_rng([s, T]))
        cum = np.cumsum(tr.regrets[tr.phase_boundary:])
        n = len(cum)
        points = np.array([n // 8, n // 4, n // 2, n])
        curves.append(cum[points - 1])
    return points, np.median(np.array(curves), axis=0)


def regret_slope_suite(n_seeds: int = 10, oful_seeds: int = 10) -> Report:
    rep = Report("regret_slope")
    Ts = (5000, 10_000, 20_000)
    finals = emc_final_regrets(Ts, n_seeds=n_seeds)
    slope = power_law_exponent(Ts, np.median(finals, axis=0))
    rep.checks.append(Check("EMC regret slope in T", 0.5 <= slope <= 0.85, f"{slope:.3f}", "[0.5, 0.85]"))
    points, med = oful_phase_curve(n_seeds=oful_seeds)
    slope_ws = power_law_exponent(points, med)
    rep.checks.append(Check("EMC-WS slope over the OFUL phase", 0.4 <= slope_ws <= 0.65, f"{slope_ws:.3f}", "[0.4, 0.65]"))
    return rep


def run_suite(name: str, quick: bool = False) -> Report:
    name = SUITE_ALIASES.get(name, name)
    if name == "counts":
        return counts_suite(7 if quick else 9)
    if name == "rip":
        return rip_suite(n_seeds=20 if quick else 100)
    if name == "selection":
        return selection_suite(40 if quick else 200, 20 if quick else 100)
    if name == "estimation_rate":
        return estimation_rate_suite(20 if quick else 100)
    if name == "regret_slope":
        return regret_slope_suite(3 if quick else 10, 3 if quick else 10)
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
