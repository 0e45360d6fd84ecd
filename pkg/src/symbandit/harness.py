"""Experiment configuration, seeded runs, sweeps, CSV output and SVG plots."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .algorithms import AlgorithmConfig, AlgorithmName, OfulParams, Selector, run_algorithm
from .environments import ArmSetKind, EnvConfig, make_environment
from .errors import ArgumentError, ConfigError, SymbanditError
from .partitions import PartitionClass

RNG_SCHEME = "PCG64; SeedSequence(seed).spawn(2) -> (environment, algorithm)"
CSV_HEADER = ["seed", "algorithm", "t", "cumulative_regret"]


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 20
    d0: int = 4
    T: int = 1000
    sigma: float = 0.1
    algorithm: AlgorithmName = AlgorithmName.EMC
    partition_class: PartitionClass = PartitionClass.NONCROSSING
    selector: Selector = Selector.GREEDY
    arm_set: ArmSetKind = ArmSetKind.SPHERE
    eps0: float | None = None
    theta_scale: float = 1.0
    t1: int | None = None
    t2: int | None = None
    lasso_lambda: float | None = None
    safety_c: float = 2.0
    ridge_lambda: float = 1.0
    delta: float | None = None
    candidate_arms_per_round: int = 256
    stride: int | None = None
    seed: int = 0
    seeds: tuple[int, ...] = ()
    parallelism: int = 1
    out: str | None = None

    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.T // 1000)

    def env_config(self, seed: int) -> EnvConfig:
        return EnvConfig(
            self.d, self.d0, self.partition_class, self.sigma, self.arm_set, self.eps0, self.theta_scale, seed
        )

    def algorithm_config(self) -> AlgorithmConfig:
        return AlgorithmConfig(
            name=self.algorithm,
            d0=self.d0,
            partition_class=self.partition_class,
            selector=self.selector,
            t1=self.t1,
            t2=self.t2,
            lasso_lambda=self.lasso_lambda,
            oful_params=OfulParams(self.ridge_lambda, self.delta),
            candidate_arms_per_round=self.candidate_arms_per_round,
            eps0=self.eps0,
            safety_c=self.safety_c,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or f.name in ("out", "parallelism"):
                continue
            if isinstance(v, tuple):
                if not v:
                    continue
                v = ",".join(str(s) for s in v)
            elif hasattr(v, "value"):
                v = v.value
            lines.append(f"{_CANONICAL_KEYS.get(f.name, f.name)} = {v}")
        return "\n".join(lines) + "\n"


_CANONICAL_KEYS = {"partition_class": "class"}
_KEY_ALIASES = {"class": "partition_class", "partition-class": "partition_class", "alg": "algorithm"}
_INT_FIELDS = {"d", "d0", "T", "t1", "t2", "candidate_arms_per_round", "stride", "seed", "parallelism"}
_FLOAT_FIELDS = {"sigma", "eps0", "theta_scale", "lasso_lambda", "safety_c", "ridge_lambda", "delta"}
_OPTIONAL = {"eps0", "t1", "t2", "lasso_lambda", "delta", "stride", "out"}


def _field_name(key: str) -> str:
    key = key.strip()
    key = _KEY_ALIASES.get(key, key)
    key = key.replace("-", "_")
    if key not in {f.name for f in fields(ExperimentConfig)}:
        raise ConfigError(key, "unknown configuration key")
    return key


def _convert(name: str, raw) -> object:
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if name in _OPTIONAL and text.lower() in ("", "none", "null"):
        return None
    try:
        if name in _INT_FIELDS:
            return int(text)
        if name in _FLOAT_FIELDS:
            return float(text)
        if name == "seeds":
            return parse_seeds(text)
        if name == "algorithm":
            return AlgorithmName.parse(text)
        if name == "partition_class":
            return PartitionClass.parse(text)
        if name == "selector":
            return Selector.parse(text)
        if name == "arm_set":
            return ArmSetKind(text.lower())
    except (ValueError, SymbanditError) as exc:
        raise ConfigError(name, f"cannot parse {text!r}: {exc}") from None
    return text


def parse_seeds(text: str) -> tuple[int, ...]:
    """'0,1,5' or '0-9' (inclusive range) or a mix of both."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, value = line.split("=", 1)
        name = _field_name(key)
        values[name] = _convert(name, value)
    return values


def build_config(*layers: dict) -> ExperimentConfig:
    """Merge layers of raw values (later layers win) and validate."""
    merged = {}
    for layer in layers:
        for key, value in layer.items():
            if value is None:
                continue
            name = _field_name(key)
            merged[name] = _convert(name, value)
    cfg = ExperimentConfig(**merged)
    validate_config(cfg)
    return cfg


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    layers = []
    if path is not None:
        try:
            layers.append(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
    layers.append(overrides or {})
    return build_config(*layers)


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.d < 1:
        raise ConfigError("d", "must be >= 1")
    if not 1 <= cfg.d0 <= cfg.d:
        raise ConfigError("d0", f"must satisfy 1 <= d0 <= d (d0={cfg.d0}, d={cfg.d})")
    if cfg.T < 2:
        raise ConfigError("T", "must be >= 2")
    if cfg.sigma < 0:
        raise ConfigError("sigma", "must be >= 0")
    if cfg.eps0 is not None and cfg.eps0 < 0:
        raise ConfigError("eps0", "must be >= 0")
    if cfg.theta_scale <= 0:
        raise ConfigError("theta_scale", "must be > 0")
    for name in ("t1", "t2"):
        v = getattr(cfg, name)
        if v is not None and not 1 <= v < cfg.T:
            raise ConfigError(name, f"must satisfy 1 <= {name} < T")
    if cfg.stride is not None and cfg.stride < 1:
        raise ConfigError("stride", "must be >= 1")
    if cfg.candidate_arms_per_round < 1:
        raise ConfigError("candidate_arms_per_round", "must be >= 1")
    if cfg.parallelism < 1:
        raise ConfigError("parallelism", "must be >= 1")
    if cfg.safety_c <= 0:
        raise ConfigError("safety_c", "must be > 0")
    if cfg.ridge_lambda <= 0:
        raise ConfigError("ridge_lambda", "must be > 0")
    if cfg.delta is not None and not 0 < cfg.delta < 1:
        raise ConfigError("delta", "must lie in (0, 1)")
    if cfg.arm_set is ArmSetKind.FINITE:
        raise ConfigError("arm_set", "only sphere and cube are available from configuration")
    if cfg.algorithm is AlgorithmName.EMC_WS and cfg.t2 is None and not cfg.eps0:
        raise ConfigError("eps0", "EMC_WS needs eps0 > 0 or an explicit t2")
    if cfg.sigma == 0:
        if cfg.algorithm in (AlgorithmName.EMC, AlgorithmName.ESTC_LASSO) and cfg.t1 is None:
            raise ConfigError("t1", "sigma = 0 leaves the default exploration length undefined; set t1")
        if cfg.algorithm is AlgorithmName.EMC_WS and cfg.t2 is None:
            raise ConfigError("t2", "sigma = 0 leaves the default exploration length undefined; set t2")


@dataclass
class ExperimentRecord:
    config: str
    seed: int
    algorithm: str
    selected_partition: str | None
    t: np.ndarray
    cumulative_regret: np.ndarray
    wall_time_ms: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return "error" in self.metadata


def series_points(T: int, stride: int) -> np.ndarray:
    """t_i = min(i * stride, T) for i = 1..ceil(T / stride)."""
    n = math.ceil(T / stride)
    return np.minimum(np.arange(1, n + 1) * stride, T)


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    env_ss, alg_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(env_ss)), np.random.Generator(np.random.PCG64(alg_ss))


def run_experiment(config: ExperimentConfig, seed: int | None = None) -> ExperimentRecord:
    """Build the environment for ``seed`` and run the configured algorithm."""
    validate_config(config)
    seed = config.seed if seed is None else seed
    env_rng, alg_rng = seed_streams(seed)
    start = time.perf_counter()
    env = make_environment(config.env_config(seed), env_rng)
    traj = run_algorithm(env, config.T, config.algorithm_config(), alg_rng)
    elapsed = 1000.0 * (time.perf_counter() - start)
    ts = series_points(config.T, config.effective_stride())
    cum = traj.cumulative_regret()[ts - 1]
    meta = {
        "rng": RNG_SCHEME,
        "phase_boundary": traj.phase_boundary,
        "true_partition": str(env.true_partition),
        "warnings": list(traj.metadata.get("warnings", [])),
    }
    for key in ("t1", "t2", "lasso_lambda"):
        if key in traj.metadata:
            meta[key] = traj.metadata[key]
    selected = str(traj.selected_partition) if traj.selected_partition is not None else None
    return ExperimentRecord(config.to_text(), seed, config.algorithm.value, selected, ts, cum, elapsed, meta)


def _run_safe(args) -> ExperimentRecord:
    config, seed = args
    try:
        return run_experiment(config, seed)
    except Exception as exc:  # failures are recorded, the sweep goes on
        return ExperimentRecord(
            config.to_text(),
            seed,
            config.algorithm.value,
            None,
            np.zeros(0, dtype=int),
            np.zeros(0),
            0.0,
            {"rng": RNG_SCHEME, "error": f"{type(exc).__name__}: {exc}"},
        )


def sweep(config: ExperimentConfig, seeds: Sequence[int], parallelism: int = 1) -> list[ExperimentRecord]:
    """One record per seed in the given order; results do not depend on
    ``parallelism`` because every seed owns its random streams."""
    seeds = list(seeds)
    if not seeds:
        raise ArgumentError("seed list is empty")
    if parallelism < 1:
        raise ArgumentError("parallelism must be >= 1")
    validate_config(config)
    jobs = [(config, s) for s in seeds]
    if parallelism == 1 or len(seeds) == 1:
        return [_run_safe(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(parallelism, len(seeds))) as pool:
        return list(pool.map(_run_safe, jobs))


def emit_csv(records: Iterable[ExperimentRecord], path) -> None:
    records = list(records)
    if not records:
        raise ArgumentError("no records to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            for t, v in zip(rec.t, rec.cumulative_regret):
                writer.writerow([rec.seed, rec.algorithm, int(t), repr(float(v))])


def read_csv(path) -> list[ExperimentRecord]:
    """Rebuild bare records (series only) from a CSV written by emit_csv."""
    series: dict[tuple[int, str], tuple[list, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ArgumentError(f"unexpected CSV header {header}")
        for row in reader:
            key = (int(row[0]), row[1])
            ts, vs = series.setdefault(key, ([], []))
            ts.append(int(row[2]))
            vs.append(float(row[3]))
    return [
        ExperimentRecord("", seed, alg, None, np.array(ts), np.array(vs)) for (seed, alg), (ts, vs) in series.items()
    ]


def _group(records: Iterable[ExperimentRecord]) -> dict[str, list[ExperimentRecord]]:
    groups: dict[str, list[ExperimentRecord]] = {}
    for rec in records:
        if not rec.failed and len(rec.t):
            groups.setdefault(rec.algorithm, []).append(rec)
    return groups


def quantile_bands(recs: list[ExperimentRecord]):
    """Common t grid with the 25/50/75 percentiles of cumulative regret."""
    n = min(len(r.t) for r in recs)
    t = recs[0].t[:n]
    stack = np.vstack([r.cumulative_regret[:n] for r in recs])
    q25, med, q75 = np.percentile(stack, [25, 50, 75], axis=0)
    return t, q25, med, q75


def summarize(records: Iterable[ExperimentRecord]) -> dict[str, dict]:
    records = list(records)
    out = {}
    for alg, recs in _group(records).items():
        finals = np.array([r.cumulative_regret[-1] for r in recs])
        out[alg] = {
            "seeds": len(recs),
            "median_final": float(np.median(finals)),
            "q25_final": float(np.percentile(finals, 25)),
            "q75_final": float(np.percentile(finals, 75)),
        }
    failed = sum(r.failed for r in records)
    if failed:
        out["_failed"] = {"seeds": failed}
    return out


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_svg(records: Iterable[ExperimentRecord], path, width: int = 640, height: int = 400) -> None:
    """Median cumulative regret per algorithm with a shaded interquartile band."""
    groups = _group(records)
    if not groups:
        raise ArgumentError("no successful records to plot")
    left, right, top, bottom = 70, 20, 20, 50
    pw, ph = width - left - right, height - top - bottom
    bands = {alg: quantile_bands(recs) for alg, recs in sorted(groups.items())}
    t_max = max(float(b[0][-1]) for b in bands.values())
    y_max = max(float(b[3].max()) for b in bands.values()) or 1.0

    def sx(t):
        return left + pw * t / t_max

    def sy(v):
        return top + ph * (1.0 - v / y_max)

    def pts(ts, vs):
        return " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(ts, vs))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for i in range(5):
        tv, yv = t_max * i / 4, y_max * i / 4
        out.append(f'<text x="{sx(tv):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{tv:g}</text>')
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.2f}" font-size="11" text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" font-size="13" text-anchor="middle">t</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">cumulative regret</text>'
    )
    for i, (alg, (t, q25, med, q75)) in enumerate(bands.items()):
        color = _PALETTE[i % len(_PALETTE)]
        band = pts(t, q75) + " " + pts(t[::-1], q25[::-1])
        out.append(f'<polygon class="iqr" data-algorithm="{alg}" points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        out.append(f'<polyline class="median" data-algorithm="{alg}" points="{pts(t, med)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{left + 10}" y="{top + 14 + 16 * i}" font-size="12" fill="{color}">{alg}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def config_with(config: ExperimentConfig, **changes) -> ExperimentConfig:
    cfg = replace(config, **changes)
    validate_config(cfg)
    return cfg


def record_to_dict(rec: ExperimentRecord) -> dict:
    d = asdict(rec)
    d["t"] = rec.t.tolist()
    d["cumulative_regret"] = rec.cumulative_regret.tolist()
    return d
