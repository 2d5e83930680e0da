"""Batch experiment runner: seeded execution, persistence, sweeps, audits.

A run is fully determined by its config and seed.  The global 64-bit seed
expands into independent per-component streams (engine, adversary, class
generation) through a counter-based SeedSequence spawn, so adding a
component never perturbs another's stream.

Output files per run directory:
    config.json     the validated config (echoed back)
    transcript.csv  t, p_tilde, bin, p, y, support_lo, support_hi, prob_lo
    contexts.csv    t, x0..x{d-1}
    laws.csv        t, kind, p1, p2 (law parameters, p2 blank when unused)
    phi.csv         t, v1..vN (hedging profile rows; needed by the audit)
    metrics.csv     config_hash, seed, T, N, r, cal, mcal, smcal, mcal_exact

Wall-clock timing goes to stdout only, keeping every persisted file
byte-identical across replays of the same config.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adversaries import build_adversary, sample_label
from .engine import (
    EfficientForecaster,
    GridConfig,
    InefficientForecaster,
    default_bin_count,
)
from .hypotheses import parse_class
from .metrics import Transcript, aggregate, cal, mcal, mcal_is_exact, smcal
from .properties import LabelLaw, Property, marginal_identification, parse_property

AUDIT_SLACK = 1e-9
_CONFIG_KEYS = {
    "engine",
    "property",
    "hypothesis_class",
    "adversary",
    "T",
    "r",
    "N",
    "seed",
    "log_phi",
    "out",
}


def component_streams(seed: int) -> dict[str, np.random.Generator]:
    """Counter-based split of one seed into named component streams."""
    root = np.random.SeedSequence(int(seed))
    engine_seq, adversary_seq, class_seq = root.spawn(3)
    return {
        "engine": np.random.default_rng(engine_seq),
        "adversary": np.random.default_rng(adversary_seq),
        "class": np.random.default_rng(class_seq),
    }


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    engine: str
    property_spec: str
    class_spec: str
    adversary: dict
    T: int
    r: float
    seed: int
    N: int | None = None
    log_phi: bool = True
    out: str | None = None

    @property
    def bin_count(self) -> int:
        return self.N if self.N is not None else default_bin_count(self.T, self.r)

    def to_dict(self) -> dict:
        out = {
            "engine": self.engine,
            "property": self.property_spec,
            "hypothesis_class": self.class_spec,
            "adversary": self.adversary,
            "T": self.T,
            "r": self.r,
            "seed": self.seed,
            "log_phi": self.log_phi,
        }
        if self.N is not None:
            out["N"] = self.N
        if self.out is not None:
            out["out"] = self.out
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"engine", "property", "hypothesis_class", "adversary", "T", "r", "seed"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        engine = raw["engine"]
        if engine not in ("efficient", "inefficient"):
            raise ConfigError(f"engine: expected 'efficient' or 'inefficient', got {engine!r}")
        try:
            T = int(raw["T"])
            r = float(raw["r"])
            seed = int(raw["seed"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"T/r/seed: {exc}") from None
        if T < 1:
            raise ConfigError("T: must be a positive integer")
        if r < 1.0:
            raise ConfigError("r: must be at least 1")
        N = raw.get("N")
        if N is not None:
            N = int(N)
            if not 1 <= N <= T:
                raise ConfigError(f"N: need 1 <= N <= T, got N={N}, T={T}")
        if not isinstance(raw["adversary"], dict):
            raise ConfigError("adversary: must be a mapping with a 'kind'")
        cfg = cls(
            engine=engine,
            property_spec=raw["property"],
            class_spec=raw["hypothesis_class"],
            adversary=raw["adversary"],
            T=T,
            r=r,
            seed=seed,
            N=N,
            log_phi=bool(raw.get("log_phi", True)),
            out=raw.get("out"),
        )
        cfg.build_components()  # fail fast on any bad sub-spec
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        return cls.from_dict(raw)

    def build_components(self):
        """Instantiate (property, class, adversary); raises ConfigError on mismatch."""
        try:
            prop = parse_property(self.property_spec)
        except ValueError as exc:
            raise ConfigError(f"property: {exc}") from None
        streams = component_streams(self.seed)
        class_seed = int(streams["class"].integers(0, 2**63 - 1))
        try:
            cls_obj = parse_class(self.class_spec, default_seed=class_seed)
        except ValueError as exc:
            raise ConfigError(f"hypothesis_class: {exc}") from None
        try:
            adv = build_adversary(self.adversary, prop)
        except ValueError as exc:
            raise ConfigError(f"adversary: {exc}") from None
        if self.engine == "inefficient" and cls_obj.variant != "finite":
            raise ConfigError("engine: the inefficient engine needs a finite hypothesis class")
        return prop, cls_obj, adv


@dataclass
class RunResult:
    config: ExperimentConfig
    transcript: Transcript
    laws: list[LabelLaw]
    phi_rows: np.ndarray
    rho: float
    metrics: dict
    wall_time: float
    engine: object = None


def run(config: ExperimentConfig, out_dir=None, log_gains: bool = False):
    """Execute T protocol rounds and compute the configured metrics."""
    prop, cls_obj, adversary = config.build_components()
    streams = component_streams(config.seed)
    grid = GridConfig(config.bin_count, config.T)
    if config.engine == "efficient":
        engine = EfficientForecaster(grid, prop, cls_obj, streams["engine"], log_gains=log_gains)
    else:
        engine = InefficientForecaster(grid, prop, cls_obj, streams["engine"], log_gains=log_gains)
    adv_rng = streams["adversary"]
    laws: list[LabelLaw] = []
    start = time.perf_counter()
    for _ in range(config.T):
        x = adversary.next_context(adv_rng)
        law = adversary.next_label_law(x)  # fixed before the forecaster samples
        laws.append(law)
        rec = engine.step(x, lambda: sample_label(law, adv_rng))
        adversary.observe(rec.p, rec.y)
    wall = time.perf_counter() - start
    transcript = Transcript.from_records(grid, engine.records)
    agg = aggregate(transcript, prop, cls_obj)
    metrics_row = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "T": config.T,
        "N": grid.N,
        "r": config.r,
        "cal": cal(transcript, prop, config.r),
        "mcal": mcal(agg, config.r),
        "smcal": smcal(agg, config.r),
        "mcal_exact": mcal_is_exact(cls_obj, config.r),
    }
    result = RunResult(
        config=config,
        transcript=transcript,
        laws=laws,
        phi_rows=np.vstack(engine.phi_rows),
        rho=adversary.rho(prop),
        metrics=metrics_row,
        wall_time=wall,
        engine=engine,
    )
    if out_dir is not None:
        persist_run(result, Path(out_dir))
    return result


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float | np.floating):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def persist_run(result: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    tr = result.transcript
    _write_csv(
        out_dir / "transcript.csv",
        ["t", "p_tilde", "bin", "p", "y", "support_lo", "support_hi", "prob_lo"],
        (
            (t + 1, tr.p_tilde[t], tr.bins[t], tr.p[t], tr.y[t], tr.support_lo[t], tr.support_hi[t], tr.prob_lo[t])
            for t in range(len(tr))
        ),
    )
    d = tr.features.shape[1]
    _write_csv(
        out_dir / "contexts.csv",
        ["t"] + [f"x{k}" for k in range(d)],
        ((t + 1, *tr.features[t]) for t in range(len(tr))),
    )
    _write_csv(
        out_dir / "laws.csv",
        ["t", "kind", "p1", "p2"],
        (
            (t + 1, law.kind, law.params[0], law.params[1] if len(law.params) > 1 else "")
            for t, law in enumerate(result.laws)
        ),
    )
    if cfg.log_phi:
        _write_csv(
            out_dir / "phi.csv",
            ["t"] + [f"v{k + 1}" for k in range(tr.grid.N)],
            ((t + 1, *result.phi_rows[t]) for t in range(len(tr))),
        )
    header = list(result.metrics.keys())
    _write_csv(out_dir / "metrics.csv", header, [tuple(result.metrics[k] for k in header)])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


@dataclass
class AuditReport:
    values: np.ndarray
    bound: float
    max_value: float
    passed: bool


def audit_round(
    prop: Property,
    grid: GridConfig,
    law: LabelLaw,
    support_lo: float,
    support_hi: float,
    prob_lo: float,
    phi_row: np.ndarray,
) -> float:
    """Recompute E_{p ~ P_t}[phi_t(p) * marginal residual(p, law)] for one round."""
    # support points sit exactly on the 1/T grid; recover the integer index
    # so bin membership matches the engine's exact arithmetic
    j_lo = round(support_lo * grid.T)
    value = prob_lo * phi_row[grid.bin_of_index(j_lo) - 1] * marginal_identification(prop, support_lo, law)
    if support_hi != support_lo:
        j_hi = round(support_hi * grid.T)
        value += (1.0 - prob_lo) * phi_row[grid.bin_of_index(j_hi) - 1] * marginal_identification(
            prop, support_hi, law
        )
    return float(value)


def audit_result(result: RunResult) -> AuditReport:
    """Audit a freshly executed run (no file round trip)."""
    prop, _, _ = result.config.build_components()
    tr = result.transcript
    values = np.array(
        [
            audit_round(prop, tr.grid, result.laws[t], tr.support_lo[t], tr.support_hi[t], tr.prob_lo[t], result.phi_rows[t])
            for t in range(len(tr))
        ]
    )
    bound = result.rho / tr.grid.T + AUDIT_SLACK
    max_value = float(values.max())
    return AuditReport(values, bound, max_value, max_value <= bound)


def audit_run_dir(run_dir) -> AuditReport:
    """Audit a persisted run from its CSV logs; writes audit.csv beside them."""
    run_dir = Path(run_dir)
    config = ExperimentConfig.from_json(run_dir / "config.json")
    phi_path = run_dir / "phi.csv"
    laws_path = run_dir / "laws.csv"
    if not phi_path.exists() or not laws_path.exists():
        raise FileNotFoundError("audit needs phi.csv and laws.csv; rerun with log_phi enabled")
    prop, _, adversary = config.build_components()
    grid = GridConfig(config.bin_count, config.T)
    _, law_rows = read_csv(laws_path)
    laws = []
    for row in law_rows:
        params = (float(row[2]),) if row[3] == "" else (float(row[2]), float(row[3]))
        laws.append(LabelLaw(row[1], params))
    _, phi_lines = read_csv(phi_path)
    phi_rows = np.array([[float(v) for v in row[1:]] for row in phi_lines])
    _, tr_rows = read_csv(run_dir / "transcript.csv")
    values = np.empty(len(tr_rows))
    for t, row in enumerate(tr_rows):
        support_lo, support_hi, prob_lo = float(row[5]), float(row[6]), float(row[7])
        values[t] = audit_round(prop, grid, laws[t], support_lo, support_hi, prob_lo, phi_rows[t])
    bound = adversary.rho(prop) / grid.T + AUDIT_SLACK
    max_value = float(values.max())
    report = AuditReport(values, bound, max_value, max_value <= bound)
    _write_csv(
        run_dir / "audit.csv",
        ["t", "value", "bound", "ok"],
        ((t + 1, values[t], bound, values[t] <= bound) for t in range(len(values))),
    )
    return report


def fit_power_law(T_values, y_values) -> tuple[float, float, float]:
    """OLS fit of log(y) on log(T): returns (slope, slope stderr, residual).

    The residual is the sum of squared log-scale errors.  Needs at least
    three distinct T values.
    """
    T_values = np.asarray(T_values, dtype=np.float64)
    y_values = np.asarray(y_values, dtype=np.float64)
    if np.unique(T_values).size < 3:
        raise ValueError("need at least three distinct horizons for a fit")
    lx = np.log(T_values)
    ly = np.log(y_values)
    n = lx.size
    sxx = float(((lx - lx.mean()) ** 2).sum())
    slope = float(((lx - lx.mean()) * (ly - ly.mean())).sum()) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (slope * lx + intercept)
    rss = float((resid**2).sum())
    stderr = math.sqrt(rss / max(n - 2, 1) / sxx)
    return slope, stderr, rss


@dataclass
class SweepReport:
    rows: list[dict]
    slope: float
    slope_stderr: float
    residual: float


def sweep(base: ExperimentConfig, T_values, seeds, out_dir=None) -> SweepReport:
    """Run the (T, seed) grid and fit the swap-error growth rate.

    N is recomputed per horizon from the default tuning unless the base
    config pins it explicitly.  The fit regresses log mean-smcal on log T.
    Any cell failure aborts the sweep; completed rows are persisted first.
    """
    T_values = [int(t) for t in T_values]
    seeds = [int(s) for s in seeds]
    if len(set(T_values)) < 3:
        raise ValueError("need at least three distinct horizons")
    rows: list[dict] = []
    out_path = Path(out_dir) if out_dir is not None else None

    def persist_partial() -> None:
        if out_path is None or not rows:
            return
        out_path.mkdir(parents=True, exist_ok=True)
        header = ["T", "N", "seed", "smcal", "mcal", "cal", "wall_time"]
        _write_csv(out_path / "sweep.csv", header, (tuple(r[k] for k in header) for r in rows))

    for T in T_values:
        for seed in seeds:
            cfg = ExperimentConfig(
                engine=base.engine,
                property_spec=base.property_spec,
                class_spec=base.class_spec,
                adversary=base.adversary,
                T=T,
                r=base.r,
                seed=seed,
                N=base.N,
                log_phi=False,
            )
            try:
                res = run(cfg)
            except Exception:
                persist_partial()
                raise
            rows.append(
                {
                    "T": T,
                    "N": res.transcript.grid.N,
                    "seed": seed,
                    "smcal": res.metrics["smcal"],
                    "mcal": res.metrics["mcal"],
                    "cal": res.metrics["cal"],
                    "wall_time": res.wall_time,
                }
            )
    persist_partial()
    means = [float(np.mean([r["smcal"] for r in rows if r["T"] == T])) for T in T_values]
    slope, stderr, rss = fit_power_law(T_values, means)
    if out_path is not None:
        _write_csv(
            out_path / "sweep_fit.csv",
            ["slope", "slope_stderr", "residual"],
            [(slope, stderr, rss)],
        )
    return SweepReport(rows, slope, stderr, rss)


def compute_metrics_for_run_dir(run_dir, r_values, per_bin: bool = False) -> list[dict]:
    """Recompute cal/mcal/smcal for a persisted run at several orders r.

    With ``per_bin`` set, also writes metrics_bins.csv holding one row per
    bin: the round count and the bin's supremum correlation.
    """
    run_dir = Path(run_dir)
    config = ExperimentConfig.from_json(run_dir / "config.json")
    prop, cls_obj, _ = config.build_components()
    grid = GridConfig(config.bin_count, config.T)
    _, tr_rows = read_csv(run_dir / "transcript.csv")
    _, ctx_rows = read_csv(run_dir / "contexts.csv")
    T = len(tr_rows)
    features = np.array([[float(v) for v in row[1:]] for row in ctx_rows])
    transcript = Transcript(
        grid=grid,
        p_tilde=np.array([float(r_[1]) for r_ in tr_rows]),
        bins=np.array([int(r_[2]) for r_ in tr_rows], dtype=np.int64),
        p=np.array([float(r_[3]) for r_ in tr_rows]),
        y=np.array([float(r_[4]) for r_ in tr_rows]),
        features=features,
        support_lo=np.array([float(r_[5]) for r_ in tr_rows]),
        support_hi=np.array([float(r_[6]) for r_ in tr_rows]),
        prob_lo=np.array([float(r_[7]) for r_ in tr_rows]),
    )
    agg = aggregate(transcript, prop, cls_obj)
    out = []
    for r in r_values:
        out.append(
            {
                "config_hash": config.config_hash(),
                "seed": config.seed,
                "T": T,
                "N": grid.N,
                "r": float(r),
                "cal": cal(transcript, prop, r),
                "mcal": mcal(agg, r),
                "smcal": smcal(agg, r),
                "mcal_exact": mcal_is_exact(cls_obj, r),
            }
        )
    header = list(out[0].keys())
    _write_csv(run_dir / "metrics.csv", header, (tuple(row[k] for k in header) for row in out))
    if per_bin:
        from .hypotheses import sup_correlation

        def bin_rows():
            for i in range(grid.N):
                n = int(agg.counts[i])
                row = agg.member_sums[i] if agg.member_sums is not None else agg.moment_vectors[i]
                value, _ = sup_correlation(cls_obj, row)
                yield (i + 1, n, value)

        _write_csv(run_dir / "metrics_bins.csv", ["bin", "n", "sup_correlation"], bin_rows())
    return out
