import csv
import io
import json
import math

import pytest

from hgspdc import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def header(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# ") and "=" in ln)


def test_parse_length():
    assert cli.parse_length("351nm") == pytest.approx(351e-9)
    assert cli.parse_length("0.1mm") == pytest.approx(1e-4)
    assert cli.parse_length("10um") == pytest.approx(1e-5)
    for bad in ("351", "1 furlong", "-1mm", "0mm"):
        with pytest.raises(Exception):
            cli.parse_length(bad)


def test_parse_angle():
    assert cli.parse_angle("30deg") == pytest.approx(math.pi / 6)
    assert cli.parse_angle("0.5rad") == 0.5
    assert cli.parse_angle("1") == 1.0


def test_bare_number_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["coeffs", "--w0p", "0.1"])
    assert exc.value.code == 2


def test_coeffs_default_hg00(capsys):
    code, out, _ = run(capsys, "coeffs", "--max-order", "4")
    assert code == 0
    h = header(out)
    assert h["calibration_constant"] == "2.000000e+00"
    assert h["lambda_p_m"] == "3.510000e-07" and h["w0p_m"] == "1.000000e-04" and h["length_m"] == "1.000000e-03"
    rows = table(out)
    keys = [tuple(int(r[c]) for c in "jkut") for r in rows]
    assert keys == sorted(keys)
    assert keys[0] == (0, 0, 0, 0)
    assert all(float(r["amplitude_re"]) != 0 for r in rows)


def test_coeffs_hg11_no_order_zero(capsys):
    _, out, _ = run(capsys, "coeffs", "--pump", "1", "1", "--max-order", "4")
    keys = [tuple(int(r[c]) for c in "jkut") for r in table(out)]
    assert (0, 0, 0, 0) not in keys
    assert min(sum(k) for k in keys) == 2


def test_coeffs_table_one_rows(capsys):
    _, out, _ = run(capsys, "coeffs", "--pump", "0", "2", "--max-order", "2")
    rows = {tuple(int(r[c]) for c in "jkut"): float(r["amplitude_re"]) for r in table(out)}
    assert rows[(0, 0, 0, 2)] == pytest.approx(0.042169, rel=2e-4)
    assert rows[(0, 1, 0, 1)] == pytest.approx(0.059636, rel=2e-4)
    assert rows[(0, 2, 0, 0)] == pytest.approx(0.042169, rel=2e-4)


def test_include_zeros(capsys):
    _, out, _ = run(capsys, "coeffs", "--max-order", "2", "--include-zeros")
    rows = table(out)
    assert len(rows) == math.comb(6, 4)
    assert any(float(r["probability"]) == 0 for r in rows)


def test_pump_superpose(capsys):
    s = 1 / math.sqrt(2)
    code, out, _ = run(capsys, "coeffs", "--pump-superpose", f"0,2,{s},0;2,0,0,{s}", "--max-order", "2")
    assert code == 0
    rows = {tuple(int(r[c]) for c in "jkut"): r for r in table(out)}
    assert float(rows[(1, 0, 1, 0)]["amplitude_im"]) == pytest.approx(0.059636 * s, rel=2e-4)


def test_text_format_is_json(capsys):
    _, out, _ = run(capsys, "coeffs", "--max-order", "2", "--format", "text")
    rec = json.loads(out)
    assert rec["calibration_constant"] == 2.0
    assert rec["config"]["max_order"] == 2
    assert rec["coefficients"][0]["j"] == 0


def test_cmd_table1(capsys):
    code, out, _ = run(capsys, "table1")
    assert code == 0
    rows = table(out)
    assert len(rows) == 6
    for r in rows:
        ref = 0.059636 if r["jk"] in ("01", "10") else 0.042169
        assert float(r["exact"]) == pytest.approx(ref, rel=2e-4)
        assert float(r["thin"]) == pytest.approx(ref, rel=2e-4)


def test_cmd_figure2(capsys):
    code, out, _ = run(capsys, "figure2")
    assert code == 0
    rows = table(out)
    assert len(rows) == 3 * 13 * 2
    exact = {(r["w0p"], int(r["order"])): float(r["cumulative_probability"]) for r in rows if r["method"] == "exact"}
    for order in range(2, 13):
        assert exact[("1.000000e-03", order)] < exact[("1.000000e-04", order)] < exact[("5.000000e-05", order)]


def test_cmd_figure2_single_row(capsys):
    _, out, _ = run(capsys, "figure2", "--widths", "0.1mm", "--max-order", "0", "--methods", "exact")
    assert len(table(out)) == 1


def test_cmd_figure2_thin_departs_at_high_order(capsys):
    _, out, _ = run(capsys, "figure2", "--widths", "0.05mm", "--max-order", "12")
    rows = table(out)
    val = {(r["method"], int(r["order"])): float(r["cumulative_probability"]) for r in rows}
    gap = [abs(val[("thin", o)] - val[("exact", o)]) for o in range(0, 13, 2)]
    assert gap[-1] > gap[0]


def test_density_and_entangle_check(capsys):
    code, out, _ = run(capsys, "density", "--pump", "1", "1", "--max-order", "2")
    assert code == 0
    rows = table(out)
    total = sum(float(r["value"]) for r in rows if r["row"] == r["col"])
    assert total == pytest.approx(1.0, abs=1e-6)
    code, out, _ = run(capsys, "entangle-check", "--max-order", "4")
    assert code == 0
    (r,) = table(out)
    assert r["entangled"] == "True" and r["witness"] == "00-01" and r["parity_blocks"] == "True"
    assert float(r["purity"]) < 1


def test_superposed_pump_skips_parity_check(capsys):
    code, out, _ = run(capsys, "entangle-check", "--pump-superpose", "0,2,0.6,0;2,0,0.8,0")
    assert code == 0
    (r,) = table(out)
    assert r["parity_blocks"] == "None" and r["entangled"] == "True"


def test_both_pump_flags_rejected(capsys):
    code, _, err = run(capsys, "coeffs", "--pump", "0", "0", "--pump-superpose", "0,2,1,0")
    assert code == 2 and "not both" in err


def test_bell(capsys):
    code, out, _ = run(capsys, "bell", "psi+", "hg00")
    assert code == 0
    assert "dove(45°) on signal" in out
    rows = table(out)
    assert len(rows) == 4
    amp = {(r["signal_mode"], r["idler_mode"]): float(r["re"]) for r in rows}
    assert amp[("HG01", "HG10")] == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_nonmax(capsys):
    code, out, _ = run(capsys, "nonmax", "--theta", "30deg", "--phi", "90deg")
    assert code == 0
    rows = {(r["signal_mode"], r["idler_mode"]): (float(r["re"]), float(r["im"])) for r in table(out)}
    assert rows[("HG01", "HG01")][0] == pytest.approx(math.sqrt(3) / 2, abs=1e-6)
    assert rows[("HG10", "HG10")][1] == pytest.approx(0.5, abs=1e-6)


def test_oracle_compare(capsys):
    code, out, _ = run(capsys, "oracle-compare", "--pump", "0", "0", "--max-order", "2")
    assert code == 0
    rows = table(out)
    assert rows and all(float(r["rel_diff"]) < 1e-4 for r in rows)
    assert list(rows[0]) == ["j", "k", "u", "t", "closed_form", "quadrature", "est_error", "rel_diff"]


def test_oracle_compare_self_check_exit_4(capsys):
    code, out, err = run(capsys, "oracle-compare", "--max-order", "2", "--tolerance", "1e-20")
    assert code == 4
    assert "self-check failed" in err
    assert table(out)  # the data is still written


def test_numeric_range_exit_3(capsys):
    code, _, err = run(capsys, "mode-grid", "--mode", "400", "0")
    assert code == 3 and "numeric failure" in err


def test_config_error_exit_2(capsys):
    code, _, _ = run(capsys, "coeffs", "--max-order", "41")
    assert code == 2


def test_mode_grid(capsys):
    code, out, _ = run(capsys, "mode-grid", "--mode", "1", "0", "--points", "5")
    assert code == 0
    assert len(table(out)) == 25
    code, out, _ = run(capsys, "mode-grid", "--mode", "1", "0", "--points", "5", "--spectrum")
    assert code == 0 and len(table(out)) == 25


@pytest.mark.parametrize(
    "argv",
    [
        ("coeffs", "--max-order", "6", "--pump", "1", "1"),
        ("table1",),
        ("figure2", "--max-order", "8"),
        ("density", "--max-order", "4"),
        ("bell", "phi-", "hg11"),
        ("nonmax", "--theta", "60deg", "--phi", "180deg"),
        ("oracle-compare", "--max-order", "2", "--route", "2d"),
    ],
)
def test_byte_identical_and_headed(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert first.startswith("# hgspdc ")
    assert "# calibration_constant=2.000000e+00" in first


def test_out_file(tmp_path, capsys):
    path = tmp_path / "c.csv"
    code, out, _ = run(capsys, "coeffs", "--max-order", "2", "--out", str(path))
    assert code == 0 and out == ""
    _, direct, _ = run(capsys, "coeffs", "--max-order", "2")
    assert path.read_text(encoding="utf-8") == direct


def test_threads_do_not_change_output(capsys, monkeypatch):
    monkeypatch.setenv("HGSPDC_THREADS", "1")
    _, a, _ = run(capsys, "coeffs", "--max-order", "10")
    monkeypatch.setenv("HGSPDC_THREADS", "3")
    _, b, _ = run(capsys, "coeffs", "--max-order", "10")
    assert a == b
