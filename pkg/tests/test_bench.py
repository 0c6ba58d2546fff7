import math

import numpy as np
import pytest

from pgzo.bench import (CSV_HEADER, Aggregate, RunConfig, aggregate_traces, emit_csv,
                        emit_svg, preset, read_csv, run_batch, run_single)
from pgzo.core import ConfigError
from pgzo.trace import RunTrace


def small_config(**kw):
    base = dict(function="f2", dim=20, algo="rgf", q=5, budget=250, lhat_scale=1.0,
                seeds=(0, 1, 2))
    base.update(kw)
    return RunConfig(**base)


def test_traces_end_within_one_iteration_of_budget():
    res = run_batch(small_config(seeds=tuple(range(10)), budget=11 * 50, q=11))
    for tr in res.traces:
        assert tr.final_queries <= 11 * 50
        assert 11 * 50 - tr.final_queries < 11


def test_single_seed_ci_degenerates():
    res = run_batch(small_config(seeds=(4,)))
    agg = res.aggregate
    np.testing.assert_array_equal(agg.lo, agg.mean)
    np.testing.assert_array_equal(agg.hi, agg.mean)


def test_aggregation_permutation_invariant():
    res = run_batch(small_config())
    fwd = aggregate_traces(res.traces)
    rev = aggregate_traces(res.traces[::-1])
    np.testing.assert_allclose(fwd.mean, rev.mean, atol=0)
    np.testing.assert_allclose(fwd.hi, rev.hi, atol=0)


def test_invalid_combos_rejected_with_reason():
    with pytest.raises(ConfigError, match="prior"):
        RunConfig(function="f2", dim=10, algo="prgf", q=3, budget=100, lhat=1.0)
    with pytest.raises(ConfigError, match="lhat"):
        RunConfig(function="f2", dim=10, algo="rgf", q=3, budget=100)
    with pytest.raises(ConfigError, match="algo"):
        RunConfig(function="f2", dim=10, algo="sgd", q=3, budget=100, lhat=1.0)
    with pytest.raises(ConfigError, match="no prior"):
        RunConfig(function="f2", dim=10, algo="ars", q=3, budget=100, lhat=1.0,
                  prior="biased")
    with pytest.raises(ConfigError, match="absolute lhat"):
        run_single(RunConfig(function="f3", dim=10, algo="rgf", q=3, budget=100,
                             lhat_scale=1.0), 0)


def test_csv_round_trip_statistics(tmp_path):
    res = run_batch(small_config())
    path = str(tmp_path / "out.csv")
    emit_csv(res.traces, path)
    back = read_csv(path)
    back.sort(key=lambda t: t.seed)
    agg = aggregate_traces(back)
    assert np.allclose(res.aggregate.mean, agg.mean, rtol=0, atol=1e-12)
    assert np.allclose(res.aggregate.hi, agg.hi, rtol=0, atol=1e-12)


def test_csv_empty_traces_header_only(tmp_path):
    path = str(tmp_path / "empty.csv")
    emit_csv([], path)
    content = open(path).read()
    assert content == ",".join(CSV_HEADER) + "\n"


def test_csv_exact_float_round_trip(tmp_path):
    tr = RunTrace(seed=0, f0=1.0, f_star=0.0)
    tr.append(0, 0, 0, 1 / 3)
    tr.append(1, 7, 9, math.pi * 1e-8)
    path = str(tmp_path / "exact.csv")
    emit_csv([tr], path)
    back = read_csv(path)[0]
    assert back.rows[0][3] == 1 / 3
    assert back.rows[1][3] == math.pi * 1e-8


def test_svg_structure_two_series(tmp_path):
    grid = np.arange(0.0, 100.0, 10.0)
    a = Aggregate(grid=grid, mean=-grid / 50, lo=-grid / 50 - 0.1, hi=-grid / 50 + 0.1,
                  label="alpha")
    b = Aggregate(grid=grid, mean=-grid / 25, lo=-grid / 25 - 0.1, hi=-grid / 25 + 0.1,
                  label="beta")
    path = str(tmp_path / "plot.svg")
    emit_svg([a, b], path)
    svg = open(path).read()
    assert svg.count('<polyline class="mean"') == 2
    assert svg.count('<path class="band"') == 2
    assert svg.startswith("<svg")
    assert "alpha" in svg and "beta" in svg


def test_preset_configs_valid():
    names = ("fig1_f1", "fig1_f2", "fig1_f3", "fig2_f1", "fig2_f2", "fig2_f4")
    for name in names:
        cfgs = preset(name)
        assert len(cfgs) >= 5
        labels = [c.label for c in cfgs]
        assert len(set(labels)) == len(labels)
    with pytest.raises(ConfigError):
        preset("fig9_f9")


def test_preset_fig1_f2_settings():
    cfgs = {c.label: c for c in preset("fig1_f2")}
    assert cfgs["RGF"].q == 11 and cfgs["PRGF"].q == 10 and cfgs["PARS"].q == 8
    assert cfgs["ARS"].tau_hat == "true"
    assert cfgs["PRGF"].prior == "biased"
    assert all(c.dim == 256 for c in cfgs.values())


def test_preset_fig2_f2_settings():
    cfgs = {c.label: c for c in preset("fig2_f2")}
    assert "RGF-0.02" in cfgs and cfgs["RGF-0.02"].lhat_scale == 50.0
    assert cfgs["History-PARS"].restart is True
    assert cfgs["History-PARS"].tau_hat == 0.0
    assert all(c.dim == 500 for c in cfgs.values())


def test_preset_rerun_byte_identical(tmp_path):
    cfg = preset("fig1_f2")[0]
    cfg.budget = 11 * 20
    cfg.seeds = (0, 1)
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    emit_csv(run_batch(cfg).traces, p1)
    emit_csv(run_batch(cfg).traces, p2)
    assert open(p1).read() == open(p2).read()


def test_emit_csv_bad_path_raises_oserror():
    res = run_batch(small_config(seeds=(0,)))
    with pytest.raises(OSError, match="no/such/dir"):
        emit_csv(res.traces, "/no/such/dir/out.csv")
