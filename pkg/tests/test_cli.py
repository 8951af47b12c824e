import json

from dirac_zero_lab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# clifford-check
# ---------------------------------------------------------------------------


def test_clifford_check_passes(capsys):
    code, out, _ = run_cli(capsys, "clifford-check")
    assert code == 0
    assert out.count("(") >= 9  # nine anticommutator pairs listed
    assert "max deviation: 0.0" in out


def test_clifford_check_json(capsys):
    code, out, _ = run_cli(capsys, "clifford-check", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["max_deviation"] == 0.0
    assert len(payload["pairs"]) == 9


# ---------------------------------------------------------------------------
# verify-freeop
# ---------------------------------------------------------------------------


def test_verify_freeop_default_grid_passes(capsys, tmp_path):
    out_dir = tmp_path / "run"
    code, out, _ = run_cli(capsys, "verify-freeop", "--seed", "7", "--out", str(out_dir))
    assert code == 0
    assert "[ok] symbol-product" in out
    assert "[ok] ah0-identity" in out
    assert "[ok] pairing-identity" in out
    assert "[ok] spectral-vs-quadrature" in out
    # provenance: the resolved config sits beside the outputs
    cfg = (out_dir / "run-config.cfg").read_text()
    assert "seed = 7" in cfg
    assert (out_dir / "verify-freeop.json").exists()


def test_verify_freeop_impossible_tolerance_fails(capsys):
    code, out, _ = run_cli(capsys, "verify-freeop", "--N", "16", "--L", "8", "--tol-ah0", "1e-30")
    assert code == 1
    assert "failed checks: ah0-identity" in out


def test_verify_freeop_missing_config_file(capsys):
    code, _, err = run_cli(capsys, "verify-freeop", "--config", "/nonexistent/path.cfg")
    assert code == 2
    assert "cannot read config" in err


def test_config_file_round_trip(capsys, tmp_path):
    cfg = tmp_path / "lab.cfg"
    cfg.write_text("L = 8\nN = 16\nseed = 9\ntol.ah0 = 1e-9  # slightly loose\n")
    code, out, _ = run_cli(capsys, "verify-freeop", "--config", str(cfg))
    assert code == 0


# ---------------------------------------------------------------------------
# nw-sweep
# ---------------------------------------------------------------------------


def test_nw_sweep_bounded_agrees(capsys, tmp_path):
    out_dir = tmp_path / "nw"
    code, out, _ = run_cli(
        capsys, "nw-sweep", "--a", "1", "--b", "1/2", "--out", str(out_dir)
    )
    assert code == 0
    assert "agreement=agree" in out
    assert (out_dir / "nw-sweep.csv").read_text().startswith("a,b,d,p,scale")


def test_nw_sweep_unbounded_agrees(capsys):
    code, out, _ = run_cli(capsys, "nw-sweep", "--a", "2", "--b", "1")
    assert code == 0
    assert "criterion=unbounded" in out
    assert "growth=growing" in out


def test_nw_sweep_rejects_nonpositive_exponent_sum(capsys):
    code, _, err = run_cli(capsys, "nw-sweep", "--a", "1", "--b", "-2")
    assert code == 2
    assert "a + b" in err


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


def test_bootstrap_trace_table(capsys):
    code, out, _ = run_cli(capsys, "bootstrap", "--rho", "8/5")
    assert code == 0
    assert "n0 = 3" in out
    assert "-9/10" in out


def test_bootstrap_boundary_flag_surfaced(capsys):
    code, out, _ = run_cli(capsys, "bootstrap", "--rho", "2")
    assert code == 0
    assert "boundary_flag = True" in out


def test_bootstrap_json_exact_pairs(capsys):
    code, out, _ = run_cli(capsys, "bootstrap", "--rho", "8/5", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["steps"][1]["exponent"] == [-9, 10]
    assert payload["boundary_flag"] is False


def test_bootstrap_rejects_long_range(capsys):
    code, _, err = run_cli(capsys, "bootstrap", "--rho", "1")
    assert code == 2
    assert "exceed 1" in err


# ---------------------------------------------------------------------------
# zero-mode
# ---------------------------------------------------------------------------


def test_zero_mode_zero_potential(capsys, tmp_path):
    out_dir = tmp_path / "zm"
    code, out, _ = run_cli(
        capsys, "zero-mode", "--potential", "zero", "--L", "8", "--N", "16", "--out", str(out_dir)
    )
    assert code == 0
    assert "zero modes at tolerance 0.1: 0" in out
    assert (out_dir / "eigenreport.json").exists()
    assert (out_dir / "run-config.cfg").exists()


def test_zero_mode_small_scalar_decay(capsys, tmp_path):
    out_dir = tmp_path / "zm-scalar"
    code, out, _ = run_cli(
        capsys,
        "zero-mode", "--potential", "scalar-decay", "--amp", "0.1", "--rho", "2",
        "--L", "8", "--N", "16", "--out", str(out_dir),
    )
    assert code == 0
    assert "zero modes at tolerance 0.1: 0" in out


def test_zero_mode_em_potential(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys,
        "zero-mode", "--potential", "em", "--amp", "0", "--a-scale", "0.4",
        "--L", "8", "--N", "16", "--out", str(tmp_path / "em"),
    )
    assert code == 0


def test_zero_mode_potential_from_file(capsys, tmp_path):
    from dirac_zero_lab.field import make_grid
    from dirac_zero_lab.potential import from_em, save_potential

    g = make_grid(8.0, 16)
    q = 0.05 * (1.0 + g.radius2) ** (-1.0)
    path = tmp_path / "pot.dzl1"
    save_potential(from_em(q, None, g), path)
    code, out, _ = run_cli(
        capsys,
        "zero-mode", "--potential", f"file:{path}", "--L", "8", "--N", "16",
        "--out", str(tmp_path / "file-run"),
    )
    assert code == 0
    assert "zero modes at tolerance 0.1: 0" in out


def test_zero_mode_loss_yau_end_to_end(capsys, tmp_path):
    # the flagship run: detect the magnetic zero mode and classify it
    out_dir = tmp_path / "ly"
    code, out, _ = run_cli(
        capsys, "zero-mode", "--potential", "loss-yau", "--k", "4", "--out", str(out_dir)
    )
    assert code == 0
    assert "kind=zero_mode" in out
    payload = json.loads((out_dir / "eigenreport.json").read_text())
    assert any(abs(complex(re, im) - 1.0) <= 0.1 for re, im in payload["eigenvalues"])
    assert payload["eigenfield_files"]
    assert (out_dir / "decay-fit-0.csv").exists()


def test_zero_mode_unknown_potential(capsys):
    code, _, err = run_cli(capsys, "zero-mode", "--potential", "whatever")
    assert code == 2
    assert "unknown potential" in err


def test_zero_mode_exit_three_on_resonance_candidate(capsys, tmp_path, monkeypatch):
    # wiring check for the theorem-violating exit code: fabricate a detected
    # state and a classifier that calls it a resonance candidate
    from dirac_zero_lab import cli, resonance
    from dirac_zero_lab.field import make_grid
    from dirac_zero_lab.potential import loss_yau

    g = make_grid(8.0, 16)
    mode = loss_yau(g).zero_mode

    def fake_spectrum(Q, k=6, seed=0, **kwargs):
        return resonance.EigenReport(
            eigenvalues=[1.0 + 0.0j],
            eigenfields=[mode],
            residuals=[0.0],
            iterations=1,
            converged=True,
        )

    def fake_classify(f, Q, **kwargs):
        return resonance.ThresholdClassification(
            kind="resonance_candidate", sigma=1.0, sigma_stderr=0.1, mu_check={}, residual=0.01
        )

    monkeypatch.setattr(cli.resonance, "birman_schwinger_spectrum", fake_spectrum)
    monkeypatch.setattr(cli.resonance, "residual", lambda f, Q: 0.01)
    monkeypatch.setattr(cli.resonance, "classify_threshold_state", fake_classify)
    code, out, _ = run_cli(
        capsys,
        "zero-mode", "--potential", "loss-yau", "--L", "8", "--N", "16",
        "--out", str(tmp_path / "rc"),
    )
    assert code == 3


def test_cli_outputs_are_bit_for_bit_reproducible(capsys, tmp_path):
    args = ["nw-sweep", "--a", "1", "--b", "1/2", "--scales", "4,8,16", "--L", "8", "--N", "16"]
    code1, _, _ = run_cli(capsys, *args, "--out", str(tmp_path / "one"))
    code2, _, _ = run_cli(capsys, *args, "--out", str(tmp_path / "two"))
    assert code1 == code2
    assert (tmp_path / "one" / "nw-sweep.csv").read_bytes() == (
        tmp_path / "two" / "nw-sweep.csv"
    ).read_bytes()
    # configs agree apart from the output path itself
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("out =")]
    assert strip(tmp_path / "one" / "run-config.cfg") == strip(tmp_path / "two" / "run-config.cfg")


def test_zero_mode_output_root_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DZL_OUTPUT_ROOT", str(tmp_path))
    code, out, _ = run_cli(capsys, "zero-mode", "--potential", "zero", "--L", "8", "--N", "16")
    assert code == 0
    assert (tmp_path / "zero-mode" / "eigenreport.json").exists()


# ---------------------------------------------------------------------------
# acceptance driver
# ---------------------------------------------------------------------------


def test_acceptance_only_bootstrap(capsys, tmp_path):
    out_dir = tmp_path / "acc"
    code, out, _ = run_cli(
        capsys, "acceptance", "--only", "bootstrap", "--out", str(out_dir)
    )
    assert code == 0
    assert "[PASS] criterion 7" in out
    payload = json.loads((out_dir / "acceptance.json").read_text())
    assert payload["criterion_7"]["passed"] is True


def test_acceptance_only_clifford_by_number(capsys):
    code, out, _ = run_cli(capsys, "acceptance", "--only", "1")
    assert code == 0
    assert "[PASS] criterion 1" in out


def test_acceptance_unknown_selector(capsys):
    code, _, err = run_cli(capsys, "acceptance", "--only", "nonsense")
    assert code == 2


def test_usage_error_exit_code(capsys):
    assert main(["no-such-command"]) == 2
