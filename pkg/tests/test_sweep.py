import hashlib
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcecavity.lyapunov import solve_steady
from dcecavity.model import ModelParams, build_diffusion, build_drift, occupations
from dcecavity.sweep import (
    CSV_HEADER,
    PRESETS,
    Control,
    SweepRow,
    SweepSpec,
    SweepTable,
    emit_csv,
    emit_plot,
    preset,
    read_csv,
    resolve_params,
    run_preset,
    run_sweep,
)
from dcecavity.svgplot import Series, render_svg

NAMES = (
    "fig3a_weak", "fig3a_strong", "fig4a", "fig4b", "fig5_equal", "fig5_diff",
    "fig6_equal_xm0", "fig6_equal_xm02", "fig6_diff_xm0", "fig6_diff_xm02",
)


def bits(x):
    return None if x is None else struct.pack("<d", x)


def test_preset_names():
    assert tuple(PRESETS) == NAMES


@pytest.mark.parametrize(
    "name,g,G,gamma,partner",
    [
        ("fig3a_weak", 0.05, 0.0, 1e-4, 0.0),
        ("fig3a_strong", 0.25, 0.0, 1e-4, 0.0),
        ("fig4a", 0.05, 0.05, 1e-3, 0.0),
        ("fig4b", 0.005, 0.1, 1e-3, 0.0),
        ("fig5_equal", 0.05, 0.05, 1e-4, 0.0),
        ("fig5_diff", 0.001, 0.25, 1e-4, 0.0),
        ("fig6_equal_xm02", 0.05, 0.05, 1e-4, 0.2),
        ("fig6_diff_xm02", 0.001, 0.05, 1e-4, 0.2),
    ],
)
def test_preset_caption_parameters(name, g, G, gamma, partner):
    spec = PRESETS[name].spec
    assert spec.base.g == g and spec.base.G == G
    assert spec.base.gamma_m == gamma and spec.base.gamma_d == gamma
    assert spec.fixed_partner_xi == partner
    assert spec.start == 0.0 and spec.stop == 0.99 and spec.points == 200


def test_fig3_cooperativities():
    assert PRESETS["fig3a_weak"].spec.base.c0 == pytest.approx(100)
    assert PRESETS["fig3a_strong"].spec.base.c0 == pytest.approx(2500)


def test_spec_validation():
    base = ModelParams()
    with pytest.raises(ValueError):
        SweepSpec(base, "xi_m_rel", 0.5, 0.5, 3)
    with pytest.raises(ValueError):
        SweepSpec(base, "xi_m_rel", 0.0, 1.0, 3)
    with pytest.raises(ValueError):
        SweepSpec(base, "g", 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        SweepSpec(base, "bogus", 0.0, 1.0, 3)


def test_vacuum_two_point_sweep():
    spec = SweepSpec(ModelParams(gamma_m=1e-3, gamma_d=1e-3, G=0.02), Control.G_SMALL, 0.05 - 1e-9, 0.05, 2)
    table = run_sweep(spec, workers=1)
    assert len(table.rows) == 2
    for r in table.rows:
        assert r.stable
        assert r.occupations() == (0.0, 0.0, 0.0)
        assert r.regime == "unmodulated"


def test_rows_ascending_and_match_pointwise_solves():
    table = run_preset("fig3a_weak", points=25, workers=3)
    xs = [r.control_value for r in table.rows]
    assert xs == sorted(xs)
    spec = preset("fig3a_weak", 25).spec
    for r in table.rows[::6]:
        p = resolve_params(spec, r.control_value)
        n = occupations(solve_steady(build_drift(p), build_diffusion(p)).v)
        assert r.occupations() == pytest.approx(n, rel=1e-12, abs=1e-300)


def test_fig3_columns_monotone():
    table = run_preset("fig3a_weak", points=60)
    for col in ("n_photon", "n_phonon_m"):
        y = table.column(col)
        assert np.all(np.diff(y) >= 0), col


def test_fig5_photon_ordering():
    eq = run_preset("fig5_equal", points=40).column("n_photon")
    diff = run_preset("fig5_diff", points=40).column("n_photon")
    assert np.all(diff[1:-1] > eq[1:-1])


def test_unstable_point_recorded_not_raised():
    spec = SweepSpec(ModelParams(gamma_m=1e-4, g=0.05), Control.LAMBDA_M, 0.001, 0.01, 3)
    table = run_sweep(spec)
    assert [r.stable for r in table.rows] == [True, False, False]
    bad = table.rows[-1]
    assert bad.n_photon is None and bad.max_re_eig > 0 and bad.error


def test_eigen_xi_max_stays_stable():
    base = PRESETS["fig6_equal_xm02"].spec
    spec = SweepSpec(base.base, base.control, 0.9, 0.99, 5, fixed_partner_xi=0.2, xi_max_method="eigen")
    assert all(r.stable for r in run_sweep(spec).rows)


def test_worker_count_invariance(tmp_path):
    a = run_preset("fig4b", points=30, workers=1)
    b = run_preset("fig4b", points=30, workers=5)
    emit_csv(a, tmp_path / "a.csv")
    emit_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_stable_rows_physical_and_accurate():
    for name in ("fig4a", "fig5_diff"):
        for r in run_preset(name, points=20).rows:
            assert r.stable
            assert r.residual <= 1e-10


def test_empty_table_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_csv(SweepTable([]), path)
    assert path.read_bytes() == (",".join(CSV_HEADER) + "\n").encode()


def test_three_rows_four_lines(tmp_path):
    table = SweepTable(run_preset("fig4a", points=3).rows)
    path = tmp_path / "t.csv"
    emit_csv(table, path)
    data = path.read_bytes()
    assert b"\r" not in data
    assert len(data.decode("utf-8").splitlines()) == 4


def test_comment_header(tmp_path):
    table = run_preset("fig3a_weak", points=3)
    path = tmp_path / "c.csv"
    emit_csv(table, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# preset: fig3a_weak")
    assert "kappa/gamma_m=1e4" in lines[1]
    assert lines[4] == ",".join(CSV_HEADER)


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(
    rows=st.lists(
        st.tuples(finite, st.one_of(st.none(), finite), finite, st.one_of(st.just(math.nan), finite), st.booleans()),
        max_size=8,
    )
)
def test_csv_round_trip_bit_exact(tmp_path_factory, rows):
    table = SweepTable([
        SweepRow(c, n, n, n, m, None if n is None else abs(m), ratio, "coherent", s)
        for c, n, m, ratio, s in rows
    ])
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    emit_csv(table, path)
    back = read_csv(path)
    assert len(back.rows) == len(table.rows)
    for a, b in zip(table.rows, back.rows):
        for f in ("control_value", "n_photon", "n_phonon_m", "n_phonon_d", "max_re_eig", "residual", "coherent_ratio"):
            assert bits(getattr(a, f)) == bits(getattr(b, f)), f
        assert (a.regime, a.stable) == (b.regime, b.stable)


def test_csv_round_trip_real_sweep(tmp_path):
    table = run_preset("fig6_equal_xm02", points=30)
    path = tmp_path / "r.csv"
    emit_csv(table, path)
    back = read_csv(path)
    assert back.rows == table.rows
    assert back.comments == table.comments


def test_csv_write_error_names_path(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_csv(SweepTable([]), tmp_path / "missing" / "x.csv")


def test_single_series_single_polyline():
    svg = render_svg([Series("only", np.array([0.0, 1.0]), np.array([1e-3, 1.0]))])
    assert svg.count("<polyline") == 1


def test_fig4b_three_labelled_series(tmp_path):
    path = tmp_path / "f.svg"
    emit_plot(run_preset("fig4b", points=10), path)
    svg = path.read_text()
    assert svg.count("<polyline") == 3
    for label in ("Casimir photons", "mechanical-type Casimir phonons", "Bogoliubov-type Casimir phonons"):
        assert f">{label}<" in svg


def test_svg_deterministic(tmp_path):
    table = run_preset("fig5_equal", points=15)
    emit_plot(table, tmp_path / "a.svg")
    emit_plot(run_preset("fig5_equal", points=15, workers=4), tmp_path / "b.svg")
    ha = hashlib.sha256((tmp_path / "a.svg").read_bytes()).hexdigest()
    hb = hashlib.sha256((tmp_path / "b.svg").read_bytes()).hexdigest()
    assert ha == hb


def test_vacuum_rows_clamped_for_display():
    svg = render_svg([Series("v", np.array([0.0, 1.0]), np.array([0.0, 1e-3]))])
    assert "1e-12" in svg
    assert not any(math.isinf(float(v)) for v in svg.split('points="')[1].split('"')[0].replace(",", " ").split())


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        render_svg([])
    with pytest.raises(ValueError, match="empty"):
        render_svg([Series("e", np.array([]), np.array([]))])
