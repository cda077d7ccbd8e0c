import math

import numpy as np
import pytest

from fracctrl.control import project_admissible
from fracctrl.harness import (ConvergenceTable, ExperimentConfig,
                              clear_solve_cache, emit_table, error_l2l2,
                              estimate_order, forward_single_mode_error,
                              read_table_csv, render_table, run_spatial_study,
                              run_temporal_study)
from fracctrl.mesh import build_graded, build_uniform_spatial
from fracctrl.solver import SpaceTimeField


def test_estimate_order_exact():
    assert estimate_order(4e-3, 1e-3, 10, 20) == pytest.approx(2.0, rel=1e-12)


def test_estimate_order_pinned_rows():
    # regression-pinned digit pairs and the orders they must print as
    assert round(estimate_order(2.12e-3, 5.94e-4, 10, 20), 2) == 1.84
    assert round(estimate_order(3.06e-4, 1.54e-4, 2 ** 8, 2 ** 9), 2) == 0.99


def test_estimate_order_degenerate():
    assert math.isnan(estimate_order(0.0, 1e-3, 10, 20))
    with pytest.raises(ValueError):
        estimate_order(1e-3, 1e-4, 10, 10)


def make_field(tg, xg, rng, scale=1.0):
    return SpaceTimeField(tg, xg, scale * rng.standard_normal(
        (tg.num_slabs, xg.num_interior)))


def test_error_same_field_zero(rng):
    tg = build_graded(4, 2.0, 1.0, 1.0)
    xg = build_uniform_spatial(8)
    f = make_field(tg, xg, rng)
    assert error_l2l2(f, f) == 0.0


def test_error_nested_rerepresentation_zero():
    coarse = build_graded(2, 1.0, 1.0, 1.0)
    fine = build_graded(4, 1.0, 1.0, 1.0)
    xg = build_uniform_spatial(4)
    vals = np.arange(4.0 * 3).reshape(4, 3)
    A = SpaceTimeField(coarse, xg, vals)
    B = SpaceTimeField(fine, xg, np.repeat(vals, 2, axis=0))
    assert error_l2l2(A, B) <= 1e-14


def test_error_against_tensor_quadrature(rng):
    ta = build_graded(2, 2.0, 1.0, 1.0)
    tb = build_graded(3, 1.5, 1.2, 1.0)
    xa = build_uniform_spatial(5)
    xb = build_uniform_spatial(7)
    A = make_field(ta, xa, rng)
    B = make_field(tb, xb, rng)
    got = error_l2l2(A, B)
    # independent tensor quadrature: merge slabs by brute sort, Simpson with
    # 1e4 aligned panels in space per merged slab
    ts = sorted(set(ta.nodes.tolist()) | set(tb.nodes.tolist()))
    total = 0.0
    xs = np.union1d(np.linspace(0.0, 1.0, 10001), np.union1d(xa.nodes, xb.nodes))
    mids = 0.5 * (xs[:-1] + xs[1:])
    w = np.diff(xs)
    for lo, hi in zip(ts[:-1], ts[1:]):
        tm = 0.5 * (lo + hi)
        ia = int(np.searchsorted(ta.nodes, tm) - 1)
        ib = int(np.searchsorted(tb.nodes, tm) - 1)
        va = np.concatenate([[0], A.values[ia], [0]])
        vb = np.concatenate([[0], B.values[ib], [0]])

        def dsq(x):
            return (np.interp(x, xa.nodes, va) - np.interp(x, xb.nodes, vb)) ** 2

        seg = float(np.sum(w / 6.0 * (dsq(xs[:-1]) + 4 * dsq(mids) + dsq(xs[1:]))))
        total += (hi - lo) * seg
    assert got == pytest.approx(math.sqrt(total), rel=1e-8)


def test_error_metric_properties(rng):
    tg1 = build_graded(2, 1.0, 1.0, 1.0)
    tg2 = build_graded(3, 2.0, 1.0, 1.0)
    xg = build_uniform_spatial(6)
    fs = [make_field(tg1, xg, rng), make_field(tg2, xg, rng),
          make_field(tg1, xg, rng)]
    assert error_l2l2(fs[0], fs[1]) == pytest.approx(error_l2l2(fs[1], fs[0]), rel=1e-13)
    d01 = error_l2l2(fs[0], fs[1])
    d12 = error_l2l2(fs[1], fs[2])
    d02 = error_l2l2(fs[0], fs[2])
    assert d02 <= d01 + d12 + 1e-12


def test_error_controls_cross_grading(rng):
    # controls with kinks on different grids agree with dense sampling
    tg1 = build_graded(2, 2.0, 1.0, 1.0)
    tg2 = build_graded(2, 1.0, 1.0, 1.0)
    xg = build_uniform_spatial(6)
    Ua = project_admissible(make_field(tg1, xg, rng, 0.3), 1.0, -0.1, 0.1)
    Ub = project_admissible(make_field(tg2, xg, rng, 0.3), 1.0, -0.1, 0.1)
    got = error_l2l2(Ua, Ub)
    ts = sorted(set(tg1.nodes.tolist()) | set(tg2.nodes.tolist()))
    xs = np.linspace(0.0, 1.0, 20001)
    mids = 0.5 * (xs[:-1] + xs[1:])
    w = np.diff(xs)
    total = 0.0
    for lo, hi in zip(ts[:-1], ts[1:]):
        tm = 0.5 * (lo + hi)
        ka = int(np.searchsorted(tg1.nodes, tm))
        kb = int(np.searchsorted(tg2.nodes, tm))
        d = Ua.evaluate(ka, xs) - Ub.evaluate(kb, xs)
        dm = Ua.evaluate(ka, mids) - Ub.evaluate(kb, mids)
        seg = float(np.sum(w / 6.0 * (d[:-1] ** 2 + 4 * dm ** 2 + d[1:] ** 2)))
        total += (hi - lo) * seg
    assert got == pytest.approx(math.sqrt(total), abs=2e-6)


def test_error_rejects_interval_mismatch(rng):
    xg = build_uniform_spatial(4)
    A = make_field(build_graded(2, 1.0, 1.0, 1.0), xg, rng)
    B = make_field(build_graded(2, 1.0, 1.0, 2.0), xg, rng)
    with pytest.raises(ValueError):
        error_l2l2(A, B)


def tiny_temporal_cfg(**over):
    base = dict(kind="temporal-study", alpha=0.7, r=0.0, grading="graded",
                points=(3, 4), reference=5, fixed=8)
    base.update(over)
    return ExperimentConfig(**base)


def test_temporal_study_wiring():
    clear_solve_cache()
    table = run_temporal_study(tiny_temporal_cfg())
    assert len(table.rows) == 2
    p0, eY0, oY0, *_ = table.rows[0]
    p1, eY1, oY1, *_ = table.rows[1]
    assert p0 == 8 and p1 == 16
    assert eY0 > eY1 > 0.0
    assert math.isnan(oY0) and oY0 != oY1
    assert table.metadata["norm"] == "L2(0,T;L2(0,1))"


def test_spatial_study_wiring():
    clear_solve_cache()
    cfg = ExperimentConfig(kind="spatial-study", alpha=0.7, r=0.0,
                           grading="graded", points=(4, 8), reference=16,
                           fixed=4)
    table = run_spatial_study(cfg)
    assert len(table.rows) == 2
    assert table.rows[1][1] < table.rows[0][1]


def test_study_determinism():
    clear_solve_cache()
    t1 = render_table(run_temporal_study(tiny_temporal_cfg()), "csv")
    clear_solve_cache()
    t2 = render_table(run_temporal_study(tiny_temporal_cfg()), "csv")
    assert t1 == t2


def test_reference_self_distance_zero():
    clear_solve_cache()
    cfg = tiny_temporal_cfg()
    run_temporal_study(cfg)
    from fracctrl.harness import _solve_cache
    key = [k for k in _solve_cache if k[-1]][0]
    Ur, Yr, Pr = _solve_cache[key]
    assert error_l2l2(Yr, Yr) == 0.0 and error_l2l2(Ur, Ur) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(kind="mystery", alpha=0.5, r=0.0)
    with pytest.raises(ValueError):
        tiny_temporal_cfg(points=(4, 3))
    with pytest.raises(ValueError):
        tiny_temporal_cfg(points=(3, 5), reference=5)
    with pytest.raises(ValueError):
        run_spatial_study(tiny_temporal_cfg())
    with pytest.raises(ValueError):
        run_temporal_study(ExperimentConfig(kind="spatial-study", alpha=0.5,
                                            r=0.0, points=(4,), reference=8,
                                            fixed=4))
    with pytest.raises(ValueError):
        run_spatial_study(ExperimentConfig(kind="spatial-study", alpha=0.5,
                                           r=0.0, grading="uniform",
                                           points=(4,), reference=8, fixed=4))


def test_emit_empty_table():
    t = ConvergenceTable(rows=[], metadata=dict(alpha=0.5, r=0.0, grading="graded",
                                                sigma1=1.0, sigma2=1.0,
                                                norm="L2(0,T;L2(0,1))"))
    csv_text = render_table(t, "csv")
    assert csv_text == "param,errY,ordY,errP,ordP,errU,ordU\n"


def test_single_row_has_no_orders():
    t = ConvergenceTable(rows=[(10, 1e-3, math.nan, 2e-3, math.nan, 3e-3, math.nan)],
                         metadata=dict(alpha=0.5, r=0.0, grading="graded",
                                       sigma1=2.0, sigma2=1.0, norm="x"))
    text = render_table(t, "text")
    assert "--" in text
    csv_text = render_table(t, "csv")
    assert ",,," not in csv_text.splitlines()[0]
    assert csv_text.splitlines()[1].split(",")[2] == ""


def test_csv_round_trip(tmp_path):
    rows = [(10, 1.234567890123e-3, math.nan, 2e-3, math.nan, 3e-3, math.nan),
            (20, 3.33066907387547e-4, 1.8899999, 5e-4, 2.0, 7e-4, 2.1)]
    t = ConvergenceTable(rows=rows, metadata={})
    path = tmp_path / "table.csv"
    emit_table(t, "csv", path)
    back = read_table_csv(path.read_text())
    for r0, r1 in zip(rows, back.rows):
        assert r0[0] == r1[0]
        for a, b in zip(r0[1:], r1[1:]):
            if math.isnan(a):
                assert math.isnan(b)
            else:
                assert b == pytest.approx(a, rel=1e-15)


def test_render_rejects_unknown_format():
    with pytest.raises(ValueError):
        render_table(ConvergenceTable(rows=[], metadata={}), "yaml")


def test_forward_validation_smoke():
    e = forward_single_mode_error(0.5, 5, 32, flavor="homogeneous")
    assert 0.0 < e < 0.05
    e2 = forward_single_mode_error(0.5, 5, 32, flavor="constant_source")
    assert 0.0 < e2 < 0.05
    with pytest.raises(ValueError):
        forward_single_mode_error(0.5, 5, 32, flavor="mystery")
