import csv
import io
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from airyspec.cli import Grid, UsageError, fmt, main, selftest_checks
from airyspec.spectrum import full_spectrum


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_spectrum_rows_and_params(capsys):
    code, out, _ = run(capsys, "spectrum", "--c", "20", "--n", "50", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["rows"]) == 51
    assert doc["params"]["N"] == 175
    code, out, _ = run(capsys, "spectrum", "--c", "-20", "--n", "100", "--format", "json")
    assert json.loads(out)["params"]["N"] == 230


def test_spectrum_csv_round_trip(capsys):
    code, out, _ = run(capsys, "spectrum", "--c", "0", "--n", "1")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["j", "chi", "lambda_sign", "log_abs_lambda", "lambda", "psi0"]
    assert len(rows) == 2
    spec = full_spectrum(0.0, 1)
    chi = [float(r[1]) for r in rows]
    assert chi == spec.chi.tolist()
    assert chi[0] < chi[1]
    assert [float(r[4]) for r in rows] == spec.lam.tolist()


def test_number_formatting_round_trips():
    rng = np.random.default_rng(9)
    for x in np.concatenate([rng.standard_normal(50) * 10.0 ** rng.integers(-300, 300, 50), [5e-324, -0.0]]):
        assert float(fmt(x)) == x
    assert fmt(3) == "3" and fmt(True) == "1"


def test_eigfun_sign_pattern(capsys):
    code, out, _ = run(capsys, "eigfun", "--c", "10", "--j", "0,3", "--grid", "0:10:20001")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["x", "psi_0", "psi_3"]
    vals = np.array(rows, dtype=float)
    x, p0, p3 = vals.T
    assert np.all(p0[x < 1] > 0)
    assert np.count_nonzero(np.diff(np.sign(p3)) != 0) == 3
    assert np.trapezoid(p3**2, x) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize(
    "cmd,k,s,expected",
    [("cdf", 1, "0", 9.69373e-1), ("pdf", 3, "-4", 1.25051e-1), ("cdf", 1, "50", 1.0)],
)
def test_distribution_commands(capsys, cmd, k, s, expected):
    code, out, _ = run(capsys, cmd, "--beta", "2", "--k", str(k), "--s", s)
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["s", "k", "value", "log_value", "est_abs_err"]
    assert float(f"{float(rows[0][2]):.5e}") == expected


def test_distribution_grid_with_negative_bounds(capsys):
    code, out, _ = run(capsys, "cdf", "--k", "1,2", "--grid", "-3:-1:3", "--threads", "2")
    assert code == 0
    _, rows = read_csv(out)
    assert [(float(r[0]), int(r[1])) for r in rows] == [(-3, 1), (-3, 2), (-2, 1), (-2, 2), (-1, 1), (-1, 2)]


def test_beam_json(capsys):
    code, out, _ = run(
        capsys, "beam", "--kind", "finite", "--alpha", "0.202", "--grid", "-20:10:301", "--xi-grid", "0:2:3", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert len(doc["rows"]) == 3 * 301
    assert len(doc["initial_profile"]) == 301
    assert doc["params"]["s_grid"] == {"min": -20.0, "max": 10.0, "count": 301}
    first = np.array([r["intensity"] for r in doc["rows"][:301]])
    assert np.allclose(first, np.array(doc["initial_profile"]) ** 2, rtol=1e-10, atol=1e-16)


def test_beam_eigen_and_infinite(capsys):
    code, out, _ = run(capsys, "beam", "--kind", "eigen", "--c", "-1", "--grid", "-10:5:151", "--xi-grid", "0:1:2")
    assert code == 0
    _, rows = read_csv(out)
    assert len(rows) == 2 * 151
    code, out, _ = run(capsys, "beam", "--kind", "infinite", "--grid", "-10:10:801", "--xi-grid", "0:4:3")
    assert code == 0
    vals = np.array(read_csv(out)[1], dtype=float).reshape(3, 801, 3)
    s = vals[0, :, 1]
    for i, xi in enumerate((0.0, 2.0, 4.0)):
        peak = s[np.argmax(vals[i, :, 2])]
        assert abs(peak - (-1.0188 + xi * xi / 4)) <= 0.025 + 1e-9


def test_table_one(capsys):
    code, out, _ = run(capsys, "table", "--which", "1")
    assert code == 0
    _, rows = read_csv(out)
    assert len(rows) == 12
    assert {(float(r[0]), int(r[1])): int(r[2]) for r in rows}[(20.0, 50)] == 175


def test_selftest_golden_only_is_fast(capsys):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "selftest", "--golden-only")
    assert time.perf_counter() - t0 < 5.0
    assert code == 0
    assert out.strip().endswith("7/7 checks passed")


def test_selftest_full_and_perturbed():
    checks = selftest_checks()
    assert all(ok for _, ok, _ in checks)
    bad = {name for name, ok, _ in selftest_checks(perturb=True) if not ok}
    assert "derivative_inner c=0.5" in bad


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "spectrum", "--c", "0")[0] == 1
    assert run(capsys, "cdf", "--beta", "3", "--s", "0")[0] == 1
    assert run(capsys, "cdf", "--grid", "1:0:5")[0] == 1
    assert run(capsys, "cdf", "--k", "0", "--s", "0")[0] == 1
    assert run(capsys, "beam", "--kind", "finite")[0] == 1
    assert run(capsys, "eigfun", "--c", "1", "--grid", "-1:1:3")[0] == 1
    code, _, err = run(capsys, "beam", "--kind", "infinite", "--grid", "-60:30:64", "--xi-grid", "0:1:2")
    assert code == 2 and "Nyquist" in err
    assert run(capsys, "spectrum", "--c", "0", "--n", "1", "--out", str(tmp_path / "missing" / "x.csv"))[0] == 2
    target = tmp_path / "spec.csv"
    assert run(capsys, "spectrum", "--c", "0", "--n", "1", "--out", str(target))[0] == 0
    assert target.read_text().startswith("j,chi")


def test_grid_parsing():
    assert Grid.parse("-8:6:141") == Grid(-8.0, 6.0, 141)
    for bad in ("1:2", "a:2:3", "0:1:1", "2:1:5"):
        with pytest.raises(UsageError):
            Grid.parse(bad)


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "airyspec", "spectrum", "--c", "0", "--n", "0"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("j,chi")
