import math

import numpy as np
import pytest

import core.verification
import main
from core.cycles import ContinuationResult, per_n_w
from core.exceptions import ContinuationError
from core.lyapunov import LyapEstimate
from core.verification import CheckResult


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for name in ("DYNLAB_SEED", "DYNLAB_WORKERS", "DYNLAB_OUT", "DYNLAB_FAMILY"):
        monkeypatch.delenv(name, raising=False)


def _read_report(path):
    with open(path) as fi:
        return dict(line.rstrip("\n").split("=", 1) for line in fi)


def test_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main.main(["--version"])
    assert excinfo.value.code == 0
    assert main.__version__ in capsys.readouterr().out


def test_lyap_formula(out_prefix):
    assert main.main(["lyap", "--param", "-1", "--out", out_prefix]) == main.EXIT_OK
    lines = open(f"{out_prefix}.lyap.csv").read().splitlines()
    assert lines[0] == "method,value,error,flagged"
    method, value, _, flagged = lines[1].split(",")
    assert method == "formula" and flagged == "0"
    assert float(value) == pytest.approx(math.log(2.0), abs=1e-9)
    echo = _read_report(f"{out_prefix}.config.txt")
    assert echo["param"] == "-1"
    assert echo["subcommand"] == "lyap"


def test_lyap_all_methods_agree(out_prefix):
    argv = ["lyap", "--param", "-1", "--method", "all", "--seed", "4", "--out", out_prefix,
            "--set", "samples=5000", "--set", "n_max=8"]
    assert main.main(argv) == main.EXIT_OK
    methods = [line.split(",")[0] for line in open(f"{out_prefix}.lyap.csv").read().splitlines()[1:]]
    assert methods == ["formula", "cycles", "birkhoff"]
    samples = open(f"{out_prefix}.samples.csv").read().splitlines()
    assert samples[0] == "re,im"
    assert len(samples) == 5001


def test_lyap_cycles_writes_the_cycle_table(out_prefix):
    argv = ["lyap", "--param", "-1", "--method", "cycles", "--n", "2", "--set", "n_max=6", "--out", out_prefix]
    assert main.main(argv) == main.EXIT_OK
    lines = open(f"{out_prefix}.cycles.csv").read().splitlines()
    assert lines[0] == "n,re_z,im_z,re_w,im_w,class"
    periods = [int(line.split(",")[0]) for line in lines[1:]]
    assert periods == [1, 1, 2]
    n, re_z, im_z, re_w, im_w, label = lines[3].split(",")
    assert float(re_z) == pytest.approx(-1.0, abs=1e-9)
    assert abs(complex(float(re_w), float(im_w))) <= 1e-9
    assert label == "attracting"


def test_lyap_threads_the_root_tolerance(out_prefix, monkeypatch):
    seen = {}
    solve = main.periodic_cycles

    def fake_estimate(m, method, **kwargs):
        seen["estimate"] = kwargs["root_tol"]
        return LyapEstimate(math.log(2.0), method, 0.0)

    def recording_cycles(m, n, **kwargs):
        seen["cycles"] = kwargs["root_tol"]
        return solve(m, n, **kwargs)
    monkeypatch.setattr("main.estimate", fake_estimate)
    monkeypatch.setattr("main.periodic_cycles", recording_cycles)
    argv = ["lyap", "--param", "-1", "--method", "cycles", "--n", "1", "--set", "root_tol=1e-6", "--out", out_prefix]
    assert main.main(argv) == main.EXIT_OK
    assert seen == {"estimate": 1e-6, "cycles": 1e-6}


@pytest.mark.parametrize("argv", [
    ["lyap", "--family", "polyca:1"],
    ["lyap", "--family", "quadratic", "--param", "1,2"],
    ["lyap", "--param", "one"],
    ["lyap", "--method", "pesin"],
    ["scan", "--grid", "0,0,1"],
    ["scan", "--grid", "0,0,1,16", "--field", "lnr:3:2"],
    ["lyap", "--set", "colour=red"],
    ["lyap", "--seed", "-3"],
    ["density", "--in", "missing.csv"],
])
def test_invalid_input_exits_with_two(argv, out_prefix):
    assert main.main(argv + ["--out", out_prefix]) == main.EXIT_INVALID_INPUT


def test_numeric_failure_exits_with_three(out_prefix, monkeypatch):
    def failing(n, w, **kwargs):
        raise ContinuationError("every continuation failed", [0, 1, 2])
    monkeypatch.setattr("main.per_n_w", failing)
    assert main.main(["centers", "--n", "3", "--out", out_prefix]) == main.EXIT_NUMERIC


def test_scan_output_is_independent_of_worker_count(tmp_path):
    outputs = []
    for workers in ("1", "2"):
        prefix = str(tmp_path / f"w{workers}" / "scan")
        argv = ["scan", "--grid", "-0.5,0,2,96", "--workers", workers, "--out", prefix]
        assert main.main(argv) == main.EXIT_OK
        outputs.append((open(f"{prefix}.csv", "rb").read(), open(f"{prefix}.pgm", "rb").read()))
    assert outputs[0] == outputs[1]


def test_scan_writes_image_and_sidecar(out_prefix):
    argv = ["scan", "--grid", "-0.5,0,2,32", "--field", "mandelbrot", "--out", out_prefix]
    assert main.main(argv) == main.EXIT_OK
    assert open(f"{out_prefix}.pgm", "rb").read().startswith(b"P5\n32 32\n65535\n")
    assert _read_report(f"{out_prefix}.pgm.txt") == {"min": "0.0", "max": "1.0"}


def test_density_of_quadratic_lyapunov_field(out_prefix):
    argv = ["density", "--grid", "-0.5,0,2,64", "--out", out_prefix]
    assert main.main(argv) == main.EXIT_OK
    report = _read_report(f"{out_prefix}.mass.txt")
    assert 2.0 * float(report["total_mass"]) == pytest.approx(1.0, abs=0.05)
    assert "mass_fraction_far_from_boundary" in report


def test_centers(out_prefix):
    assert main.main(["centers", "--n", "3", "--w", "0", "--out", out_prefix]) == main.EXIT_OK
    lines = open(f"{out_prefix}.centers.csv").read().splitlines()
    assert lines[0] == "re_c,im_c,re_z,im_z,residual"
    rows = np.array([line.split(",") for line in lines[1:]], dtype=float)
    assert rows.shape == (3, 5)
    assert np.min(np.abs(rows[:, 0] + 1.7548776662466927)) <= 1e-9
    assert np.all(rows[:, 4] <= 1e-8)
    cycles = open(f"{out_prefix}.cycles.csv").read().splitlines()
    assert cycles[0] == "n,re_z,im_z,re_w,im_w,class"
    assert len(cycles) == 4
    assert all(line.endswith(",attracting") for line in cycles[1:])


def test_centers_residual_is_recomputed_from_the_exported_cycle(out_prefix, monkeypatch):
    def shifted(n, w, **kwargs):
        result = per_n_w(n, w, **kwargs)
        return ContinuationResult(result.parameters, result.failures, result.residuals, result.points + 0.1)
    monkeypatch.setattr("main.per_n_w", shifted)
    assert main.main(["centers", "--n", "3", "--w", "0", "--out", out_prefix]) == main.EXIT_OK
    rows = np.loadtxt(f"{out_prefix}.centers.csv", delimiter=",", skiprows=1)
    assert np.all(rows[:, 4] > 1e-3)


def test_centers_reject_other_families(out_prefix):
    assert main.main(["centers", "--family", "mod2", "--out", out_prefix]) == main.EXIT_INVALID_INPUT


def test_verify_fails_on_a_perturbed_resultant(out_prefix, monkeypatch):
    monkeypatch.setattr("core.polyalg._anchor_sign", lambda d: -1.0)
    monkeypatch.setattr("core.verification.VerificationSuite.checks",
                        lambda self: [("resultant_anchor", self.check_resultant_anchor)])
    assert main.main(["verify", "--out", out_prefix]) == main.EXIT_VERIFICATION
    assert _read_report(f"{out_prefix}.verify.txt") == {"resultant_anchor": "fail"}


def test_verify_threads_the_solver_tolerances(out_prefix, monkeypatch):
    seen = {"division": set(), "root": set()}
    divide, centers = core.verification.dynatomic, core.verification.per_n_centers

    def recording_dynatomic(m, n, **kwargs):
        seen["division"].add(kwargs["tol"])
        return divide(m, n, **kwargs)

    def recording_centers(n, root_tol):
        seen["root"].add(root_tol)
        return centers(n, root_tol)
    monkeypatch.setattr("core.verification.dynatomic", recording_dynatomic)
    monkeypatch.setattr("core.verification.per_n_centers", recording_centers)
    monkeypatch.setattr("core.verification.VerificationSuite.checks",
                        lambda self: [("counting_laws", self.check_counting_laws)])
    argv = ["verify", "--set", "division_tol=1e-7", "--set", "root_tol=1e-6", "--out", out_prefix]
    assert main.main(argv) == main.EXIT_OK
    assert seen == {"division": {1e-7}, "root": {1e-6}}


def test_verify_reports_flagged_counts(out_prefix, monkeypatch):
    monkeypatch.setattr("core.verification.VerificationSuite.checks",
                        lambda self: [("stub", lambda: CheckResult("stub", True, "ok", flagged=3))])
    assert main.main(["verify", "--out", out_prefix]) == main.EXIT_OK
    assert _read_report(f"{out_prefix}.verify.txt") == {"stub": "pass", "stub.flagged": "3"}


def test_environment_sets_defaults(out_prefix, monkeypatch):
    monkeypatch.setenv("DYNLAB_SEED", "17")
    assert main.main(["lyap", "--out", out_prefix]) == main.EXIT_OK
    assert _read_report(f"{out_prefix}.config.txt")["seed"] == "17"


@pytest.mark.slow
def test_quick_verification_suite(out_prefix):
    assert main.main(["verify", "--suite", "quick", "--workers", "2", "--out", out_prefix]) == main.EXIT_OK
