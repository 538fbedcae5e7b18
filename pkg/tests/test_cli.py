import csv
import dataclasses
import json
import subprocess
import sys

import numpy as np
import pytest

from dcecavity.cli import main
from dcecavity.spectral import regime_report
from dcecavity.model import ModelParams
from test_calibration import rb87


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def kappa_cfg(tmp_path, **model):
    return write(tmp_path, {"units": "kappa", "model": model})


def test_steady_vacuum(tmp_path, capsys):
    cfg = kappa_cfg(tmp_path, gamma_m=1e-4, gamma_d=1e-4, g=0.05, G=0.1)
    assert main(["steady", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["stable"] is True
    assert out["occupations"] == {"photon": 0.0, "phonon_m": 0.0, "phonon_d": 0.0}
    assert out["regime_report"]["regime"] == "unmodulated"
    assert out["collective_mode"]["occupation"] == pytest.approx(1 / 3)


def test_steady_beyond_bound_exits_2(tmp_path, capsys):
    cfg = kappa_cfg(tmp_path, gamma_m=1e-4, g=0.05, lambda_m=0.0051)
    assert main(["steady", "--config", cfg]) == 2
    out = json.loads(capsys.readouterr().out)
    assert out["stable"] is False and out["max_re_eig"] > 0


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"units": "kappa", "model": {"gamma_m": -1}}, "gamma_m"),
        ({"units": "kappa", "model": {"gama_m": 1}}, "gama_m"),
        ({"units": "furlongs", "model": {}}, "units"),
        ({"units": "kappa"}, "model"),
        ({"units": "kappa", "model": {}, "physical": {}}, "exactly one"),
    ],
)
def test_malformed_config(tmp_path, capsys, doc, field):
    assert main(["steady", "--config", write(tmp_path, doc)]) == 1
    assert field in capsys.readouterr().err


def test_unparsable_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["steady", "--config", str(path)]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["steady", "--config", str(tmp_path / "nope.json")]) == 1


def test_usage_error():
    assert main(["frobnicate"]) == 1


def test_sweep_preset_writes_csv_with_caption(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["sweep", "--preset", "fig3a_weak", "--points", "5"]) == 0
    text = (tmp_path / "fig3a_weak.csv").read_text()
    assert "kappa/gamma_m=1e4" in text
    assert "C0=100" in text


def test_sweep_preset_with_svg(tmp_path):
    out, svg = tmp_path / "o.csv", tmp_path / "out.svg"
    assert main(["sweep", "--preset", "fig4a", "--points", "8", "--out", str(out), "--svg", str(svg)]) == 0
    assert out.exists() and svg.exists()
    assert svg.read_text().count("<polyline") == 3


def test_sweep_unknown_preset(capsys):
    assert main(["sweep", "--preset", "fig9"]) == 1
    err = capsys.readouterr().err
    assert "fig3a_weak" in err and "fig6_diff_xm02" in err


def test_sweep_from_config_with_unstable_rows(tmp_path):
    cfg = write(
        tmp_path,
        {"units": "kappa", "model": {"gamma_m": 1e-4, "g": 0.05},
         "sweep": {"control": "lambda_m", "from": 0.001, "to": 0.01, "points": 4}},
    )
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    rows = list(csv.DictReader(l for l in out.read_text().splitlines() if not l.startswith("#")))
    assert [r["stable"] for r in rows] == ["true", "true", "false", "false"]
    assert rows[-1]["n_photon"] == ""


def test_sweep_bad_control(tmp_path, capsys):
    cfg = write(tmp_path, {"units": "kappa", "model": {}, "sweep": {"control": "q", "from": 0, "to": 1, "points": 3}})
    assert main(["sweep", "--config", cfg]) == 1
    assert "sweep.control" in capsys.readouterr().err


def read_spectrum(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


def test_spectrum_uncoupled_is_zero(tmp_path):
    out = tmp_path / "sp.csv"
    cfg = kappa_cfg(tmp_path, gamma_m=1e-3, gamma_d=1e-3)
    assert main(["spectrum", "--config", cfg, "--band=-1:1:5", "--out", str(out)]) == 0
    header, data = read_spectrum(out)
    assert header[0] == "omega"
    sigma_cols = [i for i, h in enumerate(header) if "sigma" in h]
    assert np.all(data[:, sigma_cols] == 0)


def test_spectrum_symmetry_and_zero_frequency(tmp_path):
    p = ModelParams(gamma_m=1e-4, gamma_d=1e-4, g=0.05, G=0.1).with_xi(0.3, 0.2)
    cfg = kappa_cfg(tmp_path, **{k: v for k, v in dataclasses.asdict(p).items() if v})
    out = tmp_path / "sp.csv"
    assert main(["spectrum", "--config", cfg, "--band=-0.5:0.5:11", "--out", str(out)]) == 0
    header, data = read_spectrum(out)
    col = {h: i for i, h in enumerate(header)}
    w = data[:, col["omega"]]
    np.testing.assert_allclose(w, -w[::-1], atol=1e-15)
    # i*Sigma(-w) = conj(i*Sigma(w))  <=>  Re Sigma odd, Im Sigma even
    for k in ("sigma_a", "sigma_b", "sigma_d"):
        re, im = data[:, col[f"re_{k}"]], data[:, col[f"im_{k}"]]
        np.testing.assert_allclose(re, -re[::-1], rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(im, im[::-1], rtol=1e-10)
    zero = data[5]
    assert zero[col["omega"]] == 0.0
    kappa_opt = regime_report(p).kappa_opt
    assert -2 * zero[col["im_sigma_a"]] == pytest.approx(kappa_opt, rel=1e-12)


def test_spectrum_bad_band(tmp_path, capsys):
    cfg = kappa_cfg(tmp_path)
    assert main(["spectrum", "--config", cfg, "--band", "1:0:3"]) == 1
    assert "--band" in capsys.readouterr().err


def test_stability(tmp_path, capsys):
    cfg = kappa_cfg(tmp_path, gamma_m=1e-4, g=0.05)
    assert main(["stability", "--config", cfg, "--channel", "mechanical"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lambda_predicted"] == pytest.approx(0.00505)
    assert out["relative_gap"] < 0.05


def test_stability_not_found_exits_2(tmp_path):
    cfg = kappa_cfg(tmp_path, gamma_m=1e-4, lambda_m=1e-4)
    assert main(["stability", "--config", cfg, "--channel", "atomic"]) == 2


def test_calibrate(tmp_path, capsys):
    cfg = write(tmp_path, {"units": "si", "physical": dataclasses.asdict(rb87())})
    assert main(["calibrate", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["model"]["kappa"] == 1.0
    assert out["derived"]["omega_sw"] > 0


def test_calibrate_requires_si(tmp_path, capsys):
    assert main(["calibrate", "--config", kappa_cfg(tmp_path)]) == 1


def test_si_config_drives_steady(tmp_path, capsys):
    cfg = write(tmp_path, {"units": "si", "physical": dataclasses.asdict(rb87())})
    assert main(["steady", "--config", cfg]) == 0


def test_deterministic_stdout(tmp_path, capsys):
    cfg = kappa_cfg(tmp_path, gamma_m=1e-4, gamma_d=1e-4, g=0.05, G=0.1, lambda_d=2e-4)
    main(["steady", "--config", cfg])
    first = capsys.readouterr().out
    main(["steady", "--config", cfg])
    assert capsys.readouterr().out == first


def test_module_entry_point(tmp_path):
    cfg = kappa_cfg(tmp_path)
    res = subprocess.run([sys.executable, "-m", "dcecavity", "steady", "--config", cfg], capture_output=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["stable"] is True
