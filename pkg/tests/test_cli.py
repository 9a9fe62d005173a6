import json
import math

import numpy as np
import pytest

from conftest import FIXTURES
from phaseamp.cli import (
    RunConfig,
    ScanRecord,
    cmd_benchmark,
    cmd_find_peak,
    cmd_scan_alpha,
    cmd_solve,
    format_table,
    main,
    parse_alpha_grid,
    parse_grid,
    read_scan_csv,
)
from phaseamp.errors import ConfigurationError
from phaseamp.oracle import read_table


def _rows(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_solve_free_spot_check():
    cols, rows = cmd_solve(RunConfig("free", grid=(0.5, 3.0, 6)))
    assert cols == ["r", "S", "C", "Y", "Phi"]
    r, s, c, y, phi = np.array(rows).T
    a = math.sqrt(2 / math.pi)
    np.testing.assert_allclose(s, a * np.sin(r), atol=1e-12)
    np.testing.assert_allclose(c, a * np.cos(r), atol=1e-12)
    np.testing.assert_allclose(y, 2 / math.pi, rtol=1e-12)


def test_solve_marks_inner_region_nan():
    _, rows = cmd_solve(RunConfig("coulomb", l=2, r_min=0.01, grid=(0.001, 10, 11)))
    first = rows[0]
    assert math.isfinite(first[1]) and math.isnan(first[2]) and math.isnan(first[4])
    assert all(math.isfinite(v) for v in rows[-1])


def test_main_solve_csv(capsys):
    assert main(["solve", "--potential", "coulomb", "--l", "2", "--grid", "1:5:5"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# phase-amp v")
    lines = _rows(out)
    assert lines[0] == "r,S,C,Y,Phi" and len(lines) == 6


def test_main_configuration_error(capsys):
    code = main(["solve", "--potential", "free", "--r-min", "10"])
    assert code == 2
    assert "r_pi" in capsys.readouterr().err


def test_main_bad_grid(capsys):
    assert main(["solve", "--grid", "1:0:5"]) == 2


def test_benchmark_free():
    cols, rows = cmd_benchmark(RunConfig("free", grid=(0.001, 300, 257)), l_max=1)
    maxima = [r for r in rows if r[0] == "max"]
    assert len(maxima) == 2
    for row in maxima:
        assert row[3] <= -11 and row[4] <= -11


def test_benchmark_with_fixtures():
    refs = {l: read_table(FIXTURES / f"coulomb_l{l}.txt") for l in (0, 1)}
    _, rows = cmd_benchmark(RunConfig("coulomb"), l_max=1, references=refs)
    for row in (r for r in rows if r[0] == "max"):
        assert row[3] <= -11 and row[4] <= -11


def test_benchmark_needs_reference_for_screened():
    with pytest.raises(ConfigurationError):
        cmd_benchmark(RunConfig("scp", alpha=1.0))
    with pytest.raises(ConfigurationError):
        cmd_benchmark(RunConfig("coulomb", r_min=0.01))


def test_scan_records_and_roundtrip():
    records = cmd_scan_alpha("SCP", [1.0, 0.1], audit_points=65)
    assert [r.alpha for r in records] == [0.1, 1.0]
    assert all(r.converged for r in records)
    assert records[0].psi0 == pytest.approx(2.00081215469896, rel=1e-8)
    assert records[1].density == records[1].psi0 ** 2
    text = format_table(list(ScanRecord.__dataclass_fields__), [list(vars(r).values()) for r in records])
    assert read_scan_csv(text) == records


def test_scan_json_and_output_file(tmp_path, capsys):
    out = tmp_path / "scan.json"
    code = main(["scan-alpha", "--potential", "hulthen", "--alpha-grid", "1:2:2",
                 "--format", "json", "--output", str(out)])
    assert code == 0 and capsys.readouterr().out == ""
    data = json.loads(out.read_text())
    assert [d["alpha"] for d in data] == [1.0, 2.0]
    assert all(d["converged"] is True for d in data)


def test_json_null_for_nan():
    data = json.loads(format_table(["a"], [[math.nan]], "json"))
    assert data == [{"a": None}]


def test_scan_rejects_unscreened():
    with pytest.raises(ConfigurationError):
        cmd_scan_alpha("coulomb", [1.0])
    with pytest.raises(ConfigurationError):
        cmd_scan_alpha("scp", [0.0, 1.0])


def test_find_peak_edge():
    with pytest.raises(ConfigurationError, match="edge"):
        cmd_find_peak("scp", (2.0, 4.0), tol=1e-3)


def test_parse_grid():
    assert parse_grid("0.001:300:1025") == (0.001, 300.0, 1025)
    for bad in ("1:2", "a:2:3", "2:1:5", "0:1:1"):
        with pytest.raises(ConfigurationError):
            parse_grid(bad)


def test_parse_alpha_grid():
    g = parse_alpha_grid("0.01:100:5:log")
    np.testing.assert_allclose(g, [0.01, 0.1, 1, 10, 100])
    np.testing.assert_allclose(parse_alpha_grid("1:3:3"), [1, 2, 3])
    with pytest.raises(ConfigurationError):
        parse_alpha_grid("0:1:3:log")
    with pytest.raises(ConfigurationError):
        parse_alpha_grid("1:2:3:lin")


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig("yukawa")
    with pytest.raises(ConfigurationError):
        RunConfig(k=0.0)
    with pytest.raises(ConfigurationError):
        RunConfig(l=-1)
    with pytest.raises(ConfigurationError):
        RunConfig(method="rk4")
