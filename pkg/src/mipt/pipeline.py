"""Sweep orchestration, persistence and collapse analysis.

A sweep is a grid of ``(L, p, eta)`` points. Every trajectory draws its
circuit and measurement streams from ``derive_seed(seed, L, p_key, eta_key,
index, purpose)``, where ``p_key``/``eta_key`` are the rates in millionths, so
a point's data depends only on the master seed and its own parameters. Work is
split into chunks and fanned out over a process pool; results are reassembled
in trajectory order, so the worker count never changes the output.

Config files are JSON. Keys (defaults in brackets):

``mode``           p-sweep | eta-sweep | L-scaling | collapse
``L``, ``p``       lists of sizes and rates (required)
``eta``            list of strengths [[1.0]]; ``eta-sweep`` needs ``kind: weak``
``alpha``          Renyi order [1.0]
``subsystem``      half | quarter-floor | quarter-ceil | quarter-interp [half]
``trajectories``   per point [300]
``kind``           projective | weak [projective]
``observable``     exact | tomographic [exact]
``shots``          per tomography setting, tomographic only
``tomography``     auto | ssqst | mubqst [auto]
``noise``          {device, eps_1q, eps_2q, eps_ro, readout, entropy_per_error}
``mitigation``     {ro: bool, re: off | linear | trivial}
``seed``           master seed [0]
``depth``          "auto" or a fixed number of steps [auto]
``ci_level``       [0.90, or 0.98 for eta-sweep]
``bootstrap_resamples`` [10000]
``max_L``          memory cap [16]
``p_star``         collapse mode only; default is the variance peak
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, circuits, mitigation, qsim, tomography
from .collapse import CollapseDataset, CollapseFit, DescentSpec, GridSpec, estimate_p_star, fit_exponents, rescale
from .entropy import SUBSYSTEM_RULES, EntropyEstimate, interpolate_quarter, renyi_entropy, subsystem_for
from .rng import derive_seed

MODES = ("p-sweep", "eta-sweep", "L-scaling", "collapse")
OBSERVABLES = ("exact", "tomographic")
RE_SCHEMES = ("off", "linear", "trivial")
WORKERS_ENV = "MIPT_WORKERS"
CSV_COLUMNS = ["L", "p", "eta", "alpha", "mean", "variance", "ci_low", "ci_high", "n"]
EXTRA_COLUMNS = ["ci_level", "seed", "depth", "wall_time", "re_shift"]
CHUNK = 25

_KNOWN_KEYS = {
    "mode", "L", "p", "eta", "alpha", "subsystem", "trajectories", "kind", "observable", "shots",
    "tomography", "noise", "mitigation", "seed", "depth", "ci_level", "bootstrap_resamples", "max_L", "p_star",
    "description",
}
_NOISE_KEYS = {"device", "eps_1q", "eps_2q", "eps_ro", "readout", "entropy_per_error"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _rate_key(x: float) -> int:
    return int(round(x * 1_000_000))


@dataclass
class NoiseConfig:
    device: str | None = None
    eps_1q: float = mitigation.EPS_1Q
    eps_2q: float = mitigation.EPS_2Q
    eps_ro: float = mitigation.EPS_RO_SMALL_DEVICE
    readout: bool = False
    entropy_per_error: float = 0.0


@dataclass
class ExperimentConfig:
    mode: str
    L: list
    p: list
    eta: list = field(default_factory=lambda: [1.0])
    alpha: float = 1.0
    subsystem: str = "half"
    trajectories: int = 300
    kind: str = "projective"
    observable: str = "exact"
    shots: int | None = None
    tomography: str = "auto"
    noise: NoiseConfig | None = None
    ro_mitigation: bool = False
    re_scheme: str = "off"
    seed: int = 0
    depth: str | int = "auto"
    ci_level: float | None = None
    bootstrap_resamples: int = 10_000
    max_L: int = 16
    p_star: float | None = None
    description: str = ""

    def __post_init__(self):
        self.validate()

    @property
    def level(self) -> float:
        if self.ci_level is not None:
            return float(self.ci_level)
        return 0.98 if self.mode == "eta-sweep" else 0.90

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        for name in ("L", "p", "eta"):
            vals = getattr(self, name)
            if not isinstance(vals, (list, tuple)) or not vals:
                raise ConfigError(f"{name} must be a non-empty list")
        self.L = [int(v) for v in self.L]
        self.p = [float(v) for v in self.p]
        self.eta = [float(v) for v in self.eta]
        if min(self.L) < 2:
            raise ConfigError("L values must be at least 2")
        if max(self.L) > self.max_L:
            raise ConfigError(f"L={max(self.L)} exceeds the memory cap max_L={self.max_L}")
        if any(not 0 <= v <= 1 for v in self.p + self.eta):
            raise ConfigError("p and eta values must lie in [0, 1]")
        if self.kind not in circuits.KINDS:
            raise ConfigError(f"kind must be one of {circuits.KINDS}")
        if self.mode == "eta-sweep" and self.kind != "weak":
            raise ConfigError("eta-sweep needs kind 'weak'")
        if self.kind == "projective" and self.eta != [1.0]:
            raise ConfigError("projective runs take eta = [1.0]")
        if self.mode in ("L-scaling", "collapse") and len(set(self.L)) < 2:
            raise ConfigError(f"{self.mode} needs at least two sizes")
        if self.mode == "collapse" and len(self.p) < 4:
            raise ConfigError("collapse needs at least 4 rates")
        if self.subsystem not in SUBSYSTEM_RULES:
            raise ConfigError(f"subsystem must be one of {SUBSYSTEM_RULES}")
        for L in self.L:
            rules = ["quarter-floor", "quarter-ceil"] if self.subsystem == "quarter-interp" else [self.subsystem]
            for rule in rules:
                try:
                    subsystem_for(L, rule)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
        if int(self.trajectories) < 2:
            raise ConfigError("trajectories must be at least 2")
        self.trajectories = int(self.trajectories)
        if self.observable not in OBSERVABLES:
            raise ConfigError(f"observable must be one of {OBSERVABLES}")
        if self.observable == "exact" and self.shots is not None:
            raise ConfigError("the exact observable path takes no shots")
        if self.observable == "tomographic" and (self.shots is None or int(self.shots) < 1):
            raise ConfigError("the tomographic path needs a positive shots value")
        if self.tomography not in ("auto", "ssqst", "mubqst"):
            raise ConfigError("tomography must be auto, ssqst or mubqst")
        if self.re_scheme not in RE_SCHEMES:
            raise ConfigError(f"mitigation.re must be one of {RE_SCHEMES}")
        if self.noise is not None and self.noise.readout and self.observable != "tomographic":
            raise ConfigError("readout noise needs the tomographic observable path")
        if self.ro_mitigation and self.observable != "tomographic":
            raise ConfigError("RO mitigation needs the tomographic observable path")
        if self.depth != "auto" and (not isinstance(self.depth, int) or self.depth < 1):
            raise ConfigError("depth must be 'auto' or a positive integer")
        if not 0 < self.level < 1:
            raise ConfigError("ci_level must lie in (0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("mode", "L", "p"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")
        data = dict(data)
        noise = data.pop("noise", None)
        if noise is not None:
            bad = set(noise) - _NOISE_KEYS
            if bad:
                raise ConfigError(f"unknown noise keys: {sorted(bad)}")
            noise = NoiseConfig(**noise)
        mit = data.pop("mitigation", {}) or {}
        try:
            return cls(noise=noise, ro_mitigation=bool(mit.get("ro", False)), re_scheme=mit.get("re", "off"), **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mitigation"] = {"ro": out.pop("ro_mitigation"), "re": out.pop("re_scheme")}
        if out["noise"] is None:
            out.pop("noise")
        return out

    def points(self) -> list:
        return [(L, p, eta) for L in self.L for p in self.p for eta in self.eta]


@dataclass
class PointRecord:
    L: int
    p: float
    eta: float
    estimate: EntropyEstimate
    samples: list
    wall_time: float
    seed: int
    depth: int
    re_shift: float = 0.0

    def row(self) -> dict:
        e = self.estimate
        return {
            "L": self.L, "p": self.p, "eta": self.eta, "alpha": e.alpha, "mean": e.mean, "variance": e.variance,
            "ci_low": e.ci_low, "ci_high": e.ci_high, "n": e.n_samples, "ci_level": e.ci_level, "seed": self.seed,
            "depth": self.depth, "wall_time": self.wall_time, "re_shift": self.re_shift,
        }


@dataclass
class SweepResult:
    records: list
    config: dict
    version: str = __version__
    metadata: dict = field(default_factory=dict)

    def sorted(self) -> "SweepResult":
        recs = sorted(self.records, key=lambda r: (r.L, r.p, r.eta))
        return SweepResult(recs, self.config, self.version, self.metadata)

    def select(self, L=None, eta=None) -> list:
        return [r for r in self.records if (L is None or r.L == L) and (eta is None or r.eta == eta)]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "metadata": self.metadata,
            "records": [
                {**{k: v for k, v in asdict(r).items() if k != "estimate"}, "estimate": r.estimate.to_dict()}
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepResult":
        recs = []
        for r in data["records"]:
            r = dict(r)
            r["estimate"] = EntropyEstimate(**r["estimate"])
            recs.append(PointRecord(**r))
        return cls(recs, data["config"], data.get("version", ""), data.get("metadata", {}))


# ---------------------------------------------------------------- execution


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be positive")
    return n


def _subsystems(L: int, rule: str) -> list:
    if rule == "quarter-interp":
        return [subsystem_for(L, "quarter-floor"), subsystem_for(L, "quarter-ceil")]
    return [subsystem_for(L, rule)]


@dataclass
class _Task:
    L: int
    p: float
    eta: float
    kind: str
    depth: int
    alpha: float
    rule: str
    seed: int
    start: int
    stop: int
    observable: str
    shots: int | None
    method: str
    readout: mitigation.ReadoutNoiseModel | None
    ro_mitigation: bool
    eps: tuple


def _count_hook(task: _Task, rng):
    if task.readout is None and not task.ro_mitigation:
        return None
    cache = {}

    def hook(counts, subsystem):
        model = task.readout.subset(subsystem) if task.readout is not None else None
        if model is not None:
            counts = mitigation.apply_readout_noise(counts, model, rng)
        if task.ro_mitigation and model is not None:
            key = tuple(subsystem)
            if key not in cache:
                mode = "complete" if len(subsystem) <= mitigation.COMPLETE_MAX_QUBITS else "tensored"
                cache[key] = mitigation.calibration_matrix(model, mode)
            counts = mitigation.mitigate_counts(counts, cache[key])
        return counts

    return hook


def _run_task(task: _Task) -> tuple[list, list]:
    """Entropies and circuit errors for trajectories ``start..stop-1`` of one point."""
    prefix = (task.L, _rate_key(task.p), _rate_key(task.eta))
    subs = _subsystems(task.L, task.rule)
    values, errors = [], []
    for i in range(task.start, task.stop):
        c_seed, m_seed = circuits.trajectory_seeds(task.seed, i, *prefix)
        circuit = circuits.sample_circuit(task.L, task.depth, task.p, task.eta, task.kind, c_seed)
        state = circuits.run_trajectory(circuit, m_seed).final_state
        ents = []
        for sub in subs:
            if task.observable == "exact":
                rho = qsim.reduced_density_matrix(state, sub)
            else:
                rng = np.random.default_rng(derive_seed(task.seed, *prefix, i, 2, len(sub)))
                hook = _count_hook(task, rng)
                rho = tomography.state_tomography(state, sub, task.shots, rng, task.method, hook)
            ents.append(renyi_entropy(rho, task.alpha))
        values.append(interpolate_quarter(ents[0], ents[1], task.L) if len(ents) == 2 else ents[0])
        gc = mitigation.gate_counts(circuit, subs[-1])
        errors.append(mitigation.circuit_error(gc, *task.eps))
    return values, errors


def _floor(x: float) -> float:
    return x if x > 0 else 0.0


def _depth(config: ExperimentConfig, L: int, p: float, eta: float) -> int:
    if config.depth != "auto":
        return int(config.depth)
    return circuits.saturation_depth(L, p, eta, config.kind, config.alpha, seed=config.seed)


def _tasks_for(config: ExperimentConfig, L, p, eta, readout) -> list:
    depth = _depth(config, L, p, eta)
    noise = config.noise or NoiseConfig()
    eps = (noise.eps_1q, noise.eps_2q, noise.eps_ro)
    out = []
    for start in range(0, config.trajectories, CHUNK):
        out.append(
            _Task(L, p, eta, config.kind, depth, config.alpha, config.subsystem, config.seed, start,
                  min(start + CHUNK, config.trajectories), config.observable, config.shots, config.tomography,
                  readout, config.ro_mitigation, eps)
        )
    return out


def _readout_for(config: ExperimentConfig, L: int, p: float, eta: float):
    """Readout model on the device qubits chosen for this point, or None."""
    noise = config.noise
    if noise is None or not noise.readout:
        return None, None
    if noise.device:
        device = mitigation.DeviceModel.load(noise.device)
    else:
        n = 2 * L if config.kind == "weak" else L
        device = mitigation.DeviceModel.line(n, eps_1q=noise.eps_1q, eps_2q=noise.eps_2q, eps_ro=noise.eps_ro)
    depth = _depth(config, L, p, eta)
    sample = []
    for i in range(min(10, config.trajectories)):
        c_seed, _ = circuits.trajectory_seeds(config.seed, i, L, _rate_key(p), _rate_key(eta))
        c = circuits.sample_circuit(L, depth, p, eta, config.kind, c_seed)
        sample.append(mitigation.gate_counts(c, _subsystems(L, config.subsystem)[-1]))
    layout = "chain-with-ancillas" if config.kind == "weak" else "chain"
    chain = mitigation.select_qubits(device, sample, L, layout)
    return device.readout_model(chain[:L]), chain


def _execute(tasks: list, workers: int) -> list:
    if workers == 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


def run_sweep(config: ExperimentConfig, workers: int | None = None, progress=None) -> SweepResult:
    """Run every grid point (plus the ``p = eta = 1`` reference when RE is on)."""
    workers = workers or _worker_count()
    points = config.points()
    ref_points = []
    if config.re_scheme != "off":
        ref_points = [(L, 1.0, 1.0) for L in config.L]
    all_points = list(dict.fromkeys(points + ref_points))
    t0 = time.perf_counter()
    plan, meta, flat = [], {}, []
    for pt in all_points:
        try:
            readout, chain = _readout_for(config, *pt)
        except ValueError as exc:
            raise ConfigError(f"qubit selection failed: {exc}") from exc
        tasks = _tasks_for(config, *pt, readout)
        meta[pt] = (tasks[0].depth, chain)
        plan.append((pt, len(tasks)))
        flat += tasks
    results = _execute(flat, workers)
    raw, errs = {}, {}
    k = 0
    for pt, n in plan:
        vals, es = [], []
        for v, e in results[k:k + n]:
            vals += v
            es += e
        k += n
        raw[pt] = np.asarray(vals)
        errs[pt] = np.asarray(es)
        if progress:
            progress(pt)
    noise = config.noise or NoiseConfig()
    if noise.entropy_per_error:
        # synthetic decoherence, linear in each circuit's estimated error
        raw = {pt: mitigation.inflate_entropy(v, errs[pt], noise.entropy_per_error) for pt, v in raw.items()}
    elapsed = time.perf_counter() - t0
    records = []
    for L, p, eta in points:
        samples = raw[(L, p, eta)]
        est = EntropyEstimate.from_samples(samples, config.alpha, config.level, config.bootstrap_resamples, config.seed)
        shift = 0.0
        if config.re_scheme != "off":
            ref = (L, 1.0, 1.0)
            s_ref = float(raw[ref].mean())
            ratio = float(errs[(L, p, eta)].mean() / errs[ref].mean()) if errs[ref].mean() > 0 else 1.0
            corrected = mitigation.residual_entropy_correct(est.mean, s_ref, ratio, config.re_scheme)
            shift = est.mean - corrected
            est = EntropyEstimate(
                est.alpha, corrected, est.variance, _floor(est.ci_low - shift), _floor(est.ci_high - shift),
                est.ci_level, est.n_samples,
            )
        records.append(
            PointRecord(L, p, eta, est, [float(x) for x in samples], elapsed / max(len(all_points), 1),
                        config.seed, meta[(L, p, eta)][0], shift)
        )
    metadata = {
        "trajectories_per_point": config.trajectories,
        "shots_per_setting": config.shots,
        "defaults_note": "trajectory and shot counts are engineering defaults, not published values",
        "chains": {f"{L},{p},{eta}": meta[(L, p, eta)][1] for L, p, eta in points if meta[(L, p, eta)][1]},
    }
    return SweepResult(records, config.to_dict(), __version__, metadata).sorted()


def variance_peak(result: SweepResult, L: int, axis: str = "p", eta=None) -> float:
    recs = [r for r in result.select(L=L, eta=eta)]
    xs = [getattr(r, axis) for r in recs]
    return estimate_p_star(xs, [r.estimate.variance for r in recs])


# ---------------------------------------------------------------- export / import


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export_csv(result: SweepResult) -> str:
    """Tabular export. ``#`` comment lines carry the config and metadata as JSON;
    per-trajectory samples go in a trailing ``samples`` column (space separated)."""
    buf = io.StringIO()
    buf.write(f"# version: {result.version}\n")
    buf.write(f"# config: {json.dumps(result.config, sort_keys=True)}\n")
    buf.write(f"# metadata: {json.dumps(result.metadata, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS + EXTRA_COLUMNS + ["samples"])
    for r in result.records:
        row = r.row()
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS + EXTRA_COLUMNS] + [" ".join(repr(x) for x in r.samples)])
    return buf.getvalue()


def import_csv(text: str) -> SweepResult:
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = value
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(body)
    if reader.fieldnames is None or reader.fieldnames[: len(CSV_COLUMNS)] != CSV_COLUMNS:
        raise ValueError(f"CSV header must start with {CSV_COLUMNS}")
    recs = []
    for row in reader:
        est = EntropyEstimate(
            float(row["alpha"]), float(row["mean"]), float(row["variance"]), float(row["ci_low"]),
            float(row["ci_high"]), float(row["ci_level"]), int(row["n"]),
        )
        samples = [float(x) for x in row["samples"].split()] if row.get("samples") else []
        recs.append(
            PointRecord(int(row["L"]), float(row["p"]), float(row["eta"]), est, samples, float(row["wall_time"]),
                        int(row["seed"]), int(row["depth"]), float(row["re_shift"]))
        )
    return SweepResult(
        recs, json.loads(header.get("config", "{}")), header.get("version", ""), json.loads(header.get("metadata", "{}"))
    )


def export_result(result: SweepResult, fmt: str, path) -> Path:
    path = Path(path)
    if fmt == "csv":
        text = export_csv(result)
    elif fmt == "json":
        text = json.dumps(result.to_dict(), indent=1) + "\n"
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def load_result(path) -> SweepResult:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    if path.suffix == ".csv":
        return import_csv(text)
    return SweepResult.from_dict(json.loads(text))


# ---------------------------------------------------------------- collapse


def dataset_from_results(results, p_star: float | None = None, sizes=None) -> CollapseDataset:
    """Collapse dataset from sweep results (half-width of the CI as ``s_err``).

    ``p_star=None`` uses the variance peak of the largest size.
    """
    recs = [r for res in results for r in res.records]
    if not recs:
        raise ValueError("no records")
    if sizes is not None:
        recs = [r for r in recs if r.L in set(sizes)]
    if p_star is None:
        largest = max(r.L for r in recs)
        sel = sorted((r for r in recs if r.L == largest), key=lambda r: r.p)
        p_star = estimate_p_star([r.p for r in sel], [r.estimate.variance for r in sel])
    return CollapseDataset(
        [r.L for r in recs], [r.p for r in recs], [r.estimate.mean for r in recs],
        [(r.estimate.ci_high - r.estimate.ci_low) / 2 for r in recs], p_star, recs[0].estimate.alpha,
    )


def analyze_collapse(inputs, p_star=None, epsilon=0.01, sizes=None, grid=None, descent=None, smooth=False,
                     out_dir=None, largest=4) -> tuple[CollapseFit, dict]:
    """Fit exponents from a dataset CSV (``L, p, s_mean, s_err``) or sweep result files.

    Keeps the ``largest`` biggest sizes unless ``sizes`` is given. Writes
    ``collapse_fit.json`` and ``collapse_rescaled.csv`` into ``out_dir`` when set.
    """
    inputs = [Path(x) for x in ([inputs] if isinstance(inputs, (str, Path)) else inputs)]
    if len(inputs) == 1 and inputs[0].suffix == ".csv" and _is_dataset_csv(inputs[0]):
        if p_star is None:
            raise ValueError("a dataset file needs an explicit p_star")
        dataset = CollapseDataset.read_csv(inputs[0], p_star)
    else:
        dataset = dataset_from_results([load_result(x) for x in inputs], p_star)
    if sizes is not None:
        dataset = dataset.restrict(sizes)
    elif largest:
        dataset = dataset.largest(largest)
    fit = fit_exponents(dataset, grid or GridSpec(), descent or DescentSpec(), epsilon, smooth)
    table = rescale(dataset, fit.gamma0, fit.nu0, smooth)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        fit.write_json(out_dir / "collapse_fit.json")
        with open(out_dir / "collapse_rescaled.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "q", "W"])
            for L, (q, wv) in table.items():
                for a, b in zip(q, wv):
                    w.writerow([L, repr(float(a)), repr(float(b))])
    return fit, table


def _is_dataset_csv(path: Path) -> bool:
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#") and line.strip():
                return "s_mean" in line.split(",")
    return False


def write_summary_table(result: SweepResult, path) -> None:
    """Plot-ready table with the fixed CSV column order and no samples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in result.records:
            row = r.row()
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def load_recipe(name: str) -> ExperimentConfig:
    path = Path(__file__).parent / "recipes" / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no recipe named {name!r}")
    return ExperimentConfig.load(path)
