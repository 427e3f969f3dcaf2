import csv
import json

import pytest

from fdlink.cli import FIELDS, SweepSpec, main, preset, run_sweep
from fdlink.errors import InvalidRange, UnknownPreset


def tiny_spec(tmp_path, **kw):
    base = dict(
        metric="wsr",
        policies=["serial_max"],
        snr_db=[10.0],
        eta=[0.05],
        sizes=[(2, 2)],
        w=0.7,
        trials=200,
        seed=5,
        out=str(tmp_path / "out.csv"),
    )
    base.update(kw)
    return SweepSpec(**base)


@pytest.mark.parametrize("name", ["fig2", "fig3", "fig4", "fig5", "fig6", "table1", "pnot"])
def test_presets_build_and_validate(name):
    spec = preset(name)
    spec.out = "unused.csv"
    spec.validate()
    assert spec.trials == 20000
    assert spec.seed == 12345


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset("fig9")


def test_spec_validation_errors(tmp_path):
    with pytest.raises(InvalidRange):
        tiny_spec(tmp_path, metric="ber").validate()
    with pytest.raises(InvalidRange):
        tiny_spec(tmp_path, snr_db=[]).validate()
    with pytest.raises(InvalidRange):
        tiny_spec(tmp_path, trials=0).validate()
    with pytest.raises(InvalidRange):
        tiny_spec(tmp_path, fmt="parquet").validate()


def test_sweep_csv_layout_and_content(tmp_path):
    spec = tiny_spec(tmp_path, snr_db=[0.0, 10.0], policies=["max_wsr", "serial_max"])
    rows = run_sweep(spec)
    assert len(rows) == 4
    with open(spec.out, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = list(reader)
    assert header == FIELDS
    assert len(data) == 4
    by_name = dict(zip(header, data[0]))
    assert by_name["policy"] == "max_wsr"
    assert by_name["analytic_value"] == ""  # closed forms cover serial_max only
    serial = dict(zip(header, data[1]))
    assert serial["policy"] == "serial_max"
    assert float(serial["analytic_value"]) > 0
    assert float(serial["ceiling_or_floor"]) > 0
    assert int(serial["comparisons"]) == 5


def test_sweep_reruns_are_byte_identical(tmp_path):
    spec_a = tiny_spec(tmp_path, out=str(tmp_path / "a.csv"))
    spec_b = tiny_spec(tmp_path, out=str(tmp_path / "b.csv"))
    run_sweep(spec_a)
    run_sweep(spec_b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_json_and_sidecar(tmp_path):
    spec = tiny_spec(tmp_path, out=str(tmp_path / "out.json"), fmt="json")
    run_sweep(spec)
    records = json.loads((tmp_path / "out.json").read_text())
    assert len(records) == 1
    assert records[0]["policy"] == "serial_max"
    meta = json.loads((tmp_path / "out.json.meta.json").read_text())
    assert meta["tool"] == "fdlink"
    assert meta["spec"]["seed"] == 5
    assert meta["spec"]["sizes"] == [[2, 2]]


def test_table1_comparisons(tmp_path):
    spec = preset("table1")
    spec.out = str(tmp_path / "t.csv")
    rows = run_sweep(spec)
    by_key = {(r.policy, r.n_a): r.comparisons for r in rows}
    for n in range(2, 9):
        assert by_key[("exhaustive", n)] == n * n * (n - 1) * (n - 1) // 2
        assert by_key[("serial_max", n)] == 2 * n * n - 2 * n + 1


def test_pnot_rows_carry_bound(tmp_path):
    spec = preset("pnot", trials=2000)
    spec.out = str(tmp_path / "p.csv")
    rows = run_sweep(spec)
    assert len(rows) == 4
    for r in rows:
        assert 0.0 <= r.mc_value <= r.analytic_value


def test_cdf_metric_rows(tmp_path):
    spec = tiny_spec(tmp_path, metric="cdf", trials=2000)
    rows = run_sweep(spec)
    assert {r.policy for r in rows} == {"gamma_ab", "gamma_ba"}
    for r in rows:
        assert 0.0 <= r.mc_value <= 1.0
        assert 0.0 <= r.analytic_value <= 1.0


def test_main_happy_path(tmp_path, capsys):
    out = tmp_path / "cli.csv"
    rc = main([
        "--metric", "wsr", "--policy", "serial_max", "--snr-db", "0:10:5",
        "--na", "2", "--nb", "2", "--eta", "0.05", "--trials", "100",
        "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    assert "wrote 3 rows" in capsys.readouterr().out
    with open(out, newline="") as fh:
        assert len(list(csv.reader(fh))) == 4  # header + 3 snr points


def test_main_config_file_defaults(tmp_path):
    cfg_file = tmp_path / "sys.cfg"
    cfg_file.write_text("n_a = 2\nn_b = 3\nsnr_db = 10\neta = 0.1\nw = 0.6\n")
    out = tmp_path / "cfg.csv"
    rc = main([
        "--metric", "wsr", "--config", str(cfg_file), "--trials", "50",
        "--seed", "1", "--out", str(out),
    ])
    assert rc == 0
    with open(out, newline="") as fh:
        reader = csv.DictReader(fh)
        row = next(reader)
    assert (row["n_a"], row["n_b"], row["w"]) == ("2", "3", "0.6")
    assert float(row["eta"]) == 0.1


def test_main_validation_exit_code(tmp_path, capsys):
    rc = main(["--metric", "wsr", "--trials", "0", "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    assert "validation error" in capsys.readouterr().err

    rc = main(["--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_main_numerical_failure_exit_code(tmp_path, capsys):
    # closed forms refuse n_a*n_b > 36 only for serial_max analytic columns;
    # an unwritable output path is the reliable io/numerical failure path
    rc = main([
        "--metric", "wsr", "--policy", "serial_max", "--trials", "10",
        "--out", str(tmp_path / "no_such_dir" / "x.csv"),
    ])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err
