import csv
import json

import numpy as np
import pytest

from mipt import collapse, pipeline
from mipt.pipeline import ConfigError, ExperimentConfig, NoiseConfig


def _small(**kw):
    base = dict(mode="p-sweep", L=[4], p=[0.0, 0.5, 1.0], trajectories=8, depth=6, bootstrap_resamples=500, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def _content(result):
    d = result.to_dict()
    for r in d["records"]:
        r.pop("wall_time")
    return d


@pytest.mark.parametrize(
    "kw",
    [
        dict(mode="sweep"),
        dict(L=[]),
        dict(L=[1]),
        dict(L=[18]),
        dict(p=[1.2]),
        dict(trajectories=1),
        dict(shots=100),
        dict(observable="tomographic"),
        dict(mode="eta-sweep"),
        dict(eta=[0.5]),
        dict(mode="L-scaling"),
        dict(subsystem="third"),
        dict(depth=0),
        dict(ci_level=1.5),
        dict(re_scheme="cubic"),
        dict(ro_mitigation=True),
        dict(noise=NoiseConfig(readout=True)),
        dict(mode="collapse", L=[4, 5], p=[0.1, 0.2]),
    ],
)
def test_invalid_configs_rejected(kw):
    with pytest.raises(ConfigError):
        _small(**kw)


def test_from_dict_and_load(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        ExperimentConfig.from_dict({"mode": "p-sweep", "L": [4], "p": [0.1], "colour": 1})
    with pytest.raises(ConfigError, match="missing"):
        ExperimentConfig.from_dict({"mode": "p-sweep", "L": [4]})
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")
    cfg = ExperimentConfig.from_dict(
        {"mode": "p-sweep", "L": [3], "p": [0.5], "observable": "tomographic", "shots": 10,
         "mitigation": {"ro": True, "re": "linear"}, "noise": {"readout": True, "eps_ro": 0.05}}
    )
    assert cfg.ro_mitigation and cfg.re_scheme == "linear" and cfg.noise.eps_ro == 0.05
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_ci_levels_default_by_mode():
    assert _small().level == 0.90
    assert _small(mode="eta-sweep", kind="weak", eta=[0.5]).level == 0.98


@pytest.mark.parametrize("name", ["fig2ab", "fig2e", "fig3", "fig4"])
def test_recipes_load(name):
    cfg = pipeline.load_recipe(name)
    assert cfg.points()


def test_projective_p1_is_zero():
    res = pipeline.run_sweep(_small(), workers=1)
    rec = res.select(L=4)[-1]
    assert rec.p == 1.0 and rec.estimate.mean == 0.0 and rec.estimate.variance == 0.0
    assert len(res.records) == 3 and all(r.seed == 3 for r in res.records)
    assert [r.p for r in res.records] == [0.0, 0.5, 1.0]


def test_determinism_across_worker_counts(monkeypatch):
    cfg = _small(trajectories=60, L=[3, 4])
    monkeypatch.setenv(pipeline.WORKERS_ENV, "1")
    a = pipeline.run_sweep(cfg)
    monkeypatch.setenv(pipeline.WORKERS_ENV, "3")
    b = pipeline.run_sweep(cfg)
    assert _content(a) == _content(b)
    monkeypatch.setenv(pipeline.WORKERS_ENV, "zero")
    with pytest.raises(ConfigError):
        pipeline.run_sweep(cfg)


def test_seed_changes_samples():
    a = pipeline.run_sweep(_small(seed=1), workers=1)
    b = pipeline.run_sweep(_small(seed=2), workers=1)
    assert a.records[1].samples != b.records[1].samples


def test_point_independent_of_grid():
    a = pipeline.run_sweep(_small(p=[0.5]), workers=1)
    b = pipeline.run_sweep(_small(p=[0.2, 0.5]), workers=1)
    assert a.records[0].samples == b.records[1].samples


def test_export_round_trip(tmp_path):
    res = pipeline.run_sweep(_small(), workers=1)
    for fmt in ("csv", "json"):
        path = pipeline.export_result(res, fmt, tmp_path / f"r.{fmt}")
        assert pipeline.load_result(path).to_dict() == res.to_dict()


def test_csv_column_order(tmp_path):
    res = pipeline.run_sweep(_small(), workers=1)
    text = pipeline.export_csv(res)
    header = next(line for line in text.splitlines() if not line.startswith("#"))
    assert header.split(",")[:9] == ["L", "p", "eta", "alpha", "mean", "variance", "ci_low", "ci_high", "n"]
    pipeline.write_summary_table(res, tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == pipeline.CSV_COLUMNS and len(rows) == 4


def test_empty_result_header_only(tmp_path):
    empty = pipeline.SweepResult([], {})
    path = pipeline.export_result(empty, "csv", tmp_path / "e.csv")
    body = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    assert len(body) == 1 and body[0].startswith("L,p,eta,alpha,mean")
    assert pipeline.load_result(path).records == []


def test_export_errors(tmp_path):
    res = pipeline.SweepResult([], {})
    with pytest.raises(ValueError):
        pipeline.export_result(res, "xml", tmp_path / "r.xml")
    with pytest.raises(OSError, match="cannot write"):
        pipeline.export_result(res, "json", tmp_path / "missing" / "r.json")


def test_exact_and_tomographic_paths_agree():
    cfg = dict(L=[3], p=[0.0, 0.3, 0.6], trajectories=10, depth=6)
    exact = pipeline.run_sweep(_small(**cfg), workers=1)
    tomo = pipeline.run_sweep(_small(observable="tomographic", shots=1_000_000, **cfg), workers=1)
    for a, b in zip(exact.records, tomo.records):
        assert abs(a.estimate.mean - b.estimate.mean) < 0.05


def test_mitigation_off_matches_exact():
    cfg = dict(L=[3], p=[0.2, 0.5], trajectories=40, depth=6)
    exact = pipeline.run_sweep(_small(**cfg), workers=1)
    tomo = pipeline.run_sweep(_small(observable="tomographic", shots=20_000, **cfg), workers=1)
    for a, b in zip(exact.records, tomo.records):
        assert b.estimate.ci_low <= a.estimate.mean <= b.estimate.ci_high
        assert b.re_shift == 0.0


def test_readout_noise_then_mitigation():
    cfg = dict(L=[3], p=[0.3], trajectories=20, depth=6, observable="tomographic", shots=200_000)
    clean = pipeline.run_sweep(_small(**cfg), workers=1).records[0].estimate.mean
    noisy_cfg = _small(noise=NoiseConfig(readout=True, eps_ro=0.05), **cfg)
    noisy = pipeline.run_sweep(noisy_cfg, workers=1)
    fixed = pipeline.run_sweep(_small(noise=NoiseConfig(readout=True, eps_ro=0.05), ro_mitigation=True, **cfg), workers=1)
    assert noisy.records[0].estimate.mean > clean + 0.05
    assert abs(fixed.records[0].estimate.mean - clean) < 0.05
    assert noisy.metadata["chains"]


def test_linear_re_restores_noiseless_curve():
    cfg = dict(L=[4], p=[0.0, 0.2, 0.5, 0.8], trajectories=30, depth=8)
    clean = pipeline.run_sweep(_small(**cfg), workers=1)
    noisy = _small(noise=NoiseConfig(entropy_per_error=20.0), **cfg)
    raw = pipeline.run_sweep(noisy, workers=1)
    noisy.re_scheme = "linear"
    fixed = pipeline.run_sweep(noisy, workers=1)
    for c, r, f in zip(clean.records, raw.records, fixed.records):
        assert r.estimate.mean > c.estimate.mean + 0.5
        assert abs(f.estimate.mean - c.estimate.mean) < 0.1
        assert f.estimate.ci_low <= f.estimate.mean <= f.estimate.ci_high


def test_re_reference_point_corrects_to_zero():
    cfg = _small(L=[4], p=[1.0], noise=NoiseConfig(entropy_per_error=10.0), re_scheme="linear")
    rec = pipeline.run_sweep(cfg, workers=1).records[0]
    assert rec.estimate.mean == 0.0 and rec.re_shift > 0


def test_weak_eta_sweep_small():
    cfg = _small(mode="eta-sweep", kind="weak", L=[3], p=[1.0], eta=[0.0, 0.5, 1.0], trajectories=40)
    res = pipeline.run_sweep(cfg, workers=1)
    means = [r.estimate.mean for r in res.records]
    assert means[0] > means[1] > means[2] == 0.0
    assert res.records[0].estimate.ci_level == 0.98


def test_quarter_interp_uses_both_sizes():
    res = pipeline.run_sweep(_small(L=[6], p=[0.0], subsystem="quarter-interp", alpha=2.0), workers=1)
    assert res.records[0].estimate.mean > 0


def test_analyze_collapse_synthetic(tmp_path):
    ps = np.round(np.arange(0, 1.0001, 0.05), 10)
    collapse.synthetic_dataset([4, 5, 6, 7, 8], ps, 1.9, 2.1, 0.25).write_csv(tmp_path / "d.csv")
    fit, table = pipeline.analyze_collapse([tmp_path / "d.csv"], p_star=0.25, out_dir=tmp_path / "out")
    assert abs(fit.gamma0 - 1.9) <= 0.05 and abs(fit.nu0 - 2.1) <= 0.05
    assert fit.sizes == [5, 6, 7, 8] and sorted(table) == [5, 6, 7, 8]
    assert json.loads((tmp_path / "out" / "collapse_fit.json").read_text())["nu0"] == fit.nu0
    assert (tmp_path / "out" / "collapse_rescaled.csv").read_text().startswith("L,q,W")
    with pytest.raises(ValueError):
        pipeline.analyze_collapse([tmp_path / "d.csv"])


def test_analyze_collapse_one_size_rejected(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("L,p,s_mean,s_err\n" + "".join(f"5,{p},{p},\n" for p in (0.1, 0.2, 0.3, 0.4)))
    with pytest.raises(collapse.CollapseError):
        pipeline.analyze_collapse([path], p_star=0.2)


def test_dataset_from_results_uses_variance_peak():
    res = pipeline.run_sweep(_small(L=[3, 4], p=[0.0, 0.2, 0.4, 0.6, 1.0], trajectories=20), workers=1)
    data = pipeline.dataset_from_results([res])
    assert data.p_star == pipeline.variance_peak(res, 4)
    assert data.sizes == [3, 4]
