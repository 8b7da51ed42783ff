"""CLI dispatch, exit codes, oracle utilities, and end-to-end replay."""

from __future__ import annotations

import json
import math

import pytest

from conftest import FFT_FILLS, fft_template_dict, fill_template_dict, la_template_dict
from ds2sc import oracles
from ds2sc.cli import EXIT_ENVIRONMENT, EXIT_OK, EXIT_USAGE, EXIT_VERIFIED_FAILURE, dispatch

SUBCOMMANDS = [
    ["run"],
    ["replay"],
    ["parse"],
    ["codegen"],
    ["tbgen"],
    ["debug"],
    ["simulate"],
    ["verify"],
    ["oracle", "fft"],
    ["oracle", "rapp"],
    ["oracle", "la"],
    ["fit-pa"],
]


@pytest.mark.parametrize("cmd", SUBCOMMANDS, ids=lambda c: "-".join(c))
def test_every_subcommand_help_exits_zero(cmd, capsys):
    assert dispatch(cmd + ["--help"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "--" in out or "usage" in out  # flag table printed


def test_unknown_flag_is_usage_error(capsys):
    assert dispatch(["oracle", "fft", "--bogus"]) == EXIT_USAGE


def test_unknown_subcommand_is_usage_error():
    assert dispatch(["frobnicate"]) == EXIT_USAGE


def test_oracle_fft_ramp_dc_row(capsys):
    assert dispatch(["oracle", "fft", "--n", "8", "--ramp"]) == EXIT_OK
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "index,re,im"
    idx, re_, im_ = lines[1].split(",")
    assert float(re_) == pytest.approx(36.0, abs=1e-12)
    assert float(im_) == pytest.approx(0.0, abs=1e-12)


def test_oracle_rapp_curve_format(tmp_path, capsys):
    out_file = tmp_path / "curve.csv"
    code = dispatch(
        ["oracle", "rapp", "--g", "20", "--psat", "43", "--s", "2", "--out", str(out_file)]
    )
    assert code == EXIT_OK
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "pin_dbm,pout_dbm"
    pin, pout = (float(v) for v in lines[1].split(","))
    assert pout == pytest.approx(oracles.rapp_pout_dbm(pin, oracles.RappParams(20, 43, 2)))


def test_fit_pa_on_synthetic_curve(tmp_path, capsys):
    p = oracles.RappParams(g_db=20.0, psat_dbm=43.0, s=2.0)
    lines = ["pin_dbm,pout_dbm"]
    for pin in (0.0, 8.0, 14.0, 18.0, 21.0, 23.0, 26.0, 30.0):
        lines.append(f"{pin},{oracles.rapp_pout_dbm(pin, p):.12g}")
    points = tmp_path / "curve.csv"
    points.write_text("\n".join(lines) + "\n")
    assert dispatch(["fit-pa", "--points", str(points), "--g", "20", "--psat", "43"]) == EXIT_OK
    out = capsys.readouterr().out
    fitted = float(out.split("fitted s:")[1].split()[0])
    assert 1.98 <= fitted <= 2.02
    assert "max curve error" in out


def test_fit_pa_missing_file_is_environment_error(tmp_path, capsys):
    code = dispatch(["fit-pa", "--points", str(tmp_path / "none.csv"), "--g", "20", "--psat", "43"])
    assert code == EXIT_ENVIRONMENT


# --------------------------------------------------------- simulate


GOOD_MAIN = r"""
#include "chiplet_core.h"
#include <cstdio>
int sc_main(int, char**) {
    std::FILE* csv = std::fopen("results.csv", "w");
    std::fprintf(csv, "time_ns,value\n0,1.0\n1,2.0\n");
    std::fclose(csv);
    std::FILE* rep = std::fopen("report.txt", "w");
    std::fprintf(rep, "VERIFICATION RESULT: PASS\nCHECK smoke: PASS\n");
    std::fclose(rep);
    return 0;
}
int main(int argc, char** argv) { return sc_main(argc, argv); }
"""


def write_pair(tmp_path, main_src=GOOD_MAIN):
    header = tmp_path / "chiplet_core.h"
    header.write_text("#pragma once\nstruct Core {};\n")
    main = tmp_path / "main.cpp"
    main.write_text(main_src)
    return header, main


def test_simulate_outputs_signal_json(tmp_path, capsys):
    header, main = write_pair(tmp_path)
    code = dispatch(
        ["simulate", "--source", str(header), "--source", str(main), "--out-dir", str(tmp_path / "o")]
    )
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["signal"] == "pass"
    assert payload["report"].endswith("report.txt")


def test_simulate_compile_error_exit_one(tmp_path, capsys):
    header, main = write_pair(tmp_path, GOOD_MAIN.replace("return 0;", "return 0"))
    code = dispatch(
        ["simulate", "--source", str(header), "--source", str(main), "--out-dir", str(tmp_path / "o")]
    )
    assert code == EXIT_VERIFIED_FAILURE
    payload = json.loads(capsys.readouterr().out)
    assert payload["signal"] == "syntax_fail"
    assert "main.cpp" in payload["stderr_tail"]


# ------------------------------------------------------------ verify


def write_la_run(tmp_path):
    params = oracles.LaParams(gain=10.0, v_out_max=0.4, v_out_min=-0.4, quiescent=0.0)
    disabled = oracles.LaParams(
        gain=10.0, v_out_max=0.4, v_out_min=-0.4, quiescent=0.0, enabled=False
    )
    lines = ["time_ns,vin,vout,enable"]
    for t in range(3000):
        if t < 1000:
            amp, p, en = 0.01, params, 1
        elif t < 2000:
            amp, p, en = 0.2, params, 1
        else:
            amp, p, en = 0.2, disabled, 0
        vin = amp * math.sin(2 * math.pi * (t % 100) / 100.0)
        lines.append(f"{t},{vin:.12g},{oracles.la_transfer(vin, p):.12g},{en}")
    csv = tmp_path / "results.csv"
    csv.write_text("\n".join(lines) + "\n")
    report = tmp_path / "report.txt"
    report.write_text("VERIFICATION RESULT: PASS\nCHECK all: PASS\n")
    spec = tmp_path / "spec_ir.json"
    filled = fill_template_dict(
        la_template_dict(),
        {
            "gain": 10.0,
            "v_out_max": 0.4,
            "v_out_min": -0.4,
            "quiescent": 0.0,
            "enable_logic": "enable gates output",
            "transfer_function": "clamp",
        },
    )
    spec.write_text(json.dumps(filled, indent=2))
    return csv, report, spec


def test_verify_with_oracle_cross_check(tmp_path, capsys):
    csv, report, spec = write_la_run(tmp_path)
    code = dispatch(
        [
            "verify",
            "--csv",
            str(csv),
            "--report",
            str(report),
            "--spec",
            str(spec),
            "--strict-oracle",
            "--out-dir",
            str(tmp_path / "out"),
        ]
    )
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "report verdict: pass" in out
    assert "cross-check la_three_phase/window_amplitude: PASS" in out
    summary = json.loads((tmp_path / "out" / "cross_check_la_three_phase.json").read_text())
    assert summary["passed"] is True


def test_verify_fail_report_exit_one(tmp_path):
    csv, report, spec = write_la_run(tmp_path)
    report.write_text("VERIFICATION RESULT: FAIL\nCHECK all: FAIL - off by 2\n")
    code = dispatch(["verify", "--csv", str(csv), "--report", str(report), "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_VERIFIED_FAILURE


def test_verify_strict_oracle_overrides_pass_report(tmp_path):
    csv, report, spec = write_la_run(tmp_path)
    # stuck-at-clamp output in the disabled window: report still says PASS
    lines = csv.read_text().splitlines()
    doctored = []
    for line in lines:
        if not line.startswith("time_ns") and int(float(line.split(",")[0])) >= 2000:
            t, vin, vout, en = line.split(",")
            doctored.append(f"{t},{vin},0.4,{en}")
        else:
            doctored.append(line)
    csv.write_text("\n".join(doctored) + "\n")
    common = ["--csv", str(csv), "--report", str(report), "--spec", str(spec)]
    assert dispatch(["verify", *common, "--out-dir", str(tmp_path / "a")]) == EXIT_OK
    assert (
        dispatch(["verify", *common, "--strict-oracle", "--out-dir", str(tmp_path / "b")])
        == EXIT_VERIFIED_FAILURE
    )


def test_verify_plot_emission(tmp_path):
    csv, report, spec = write_la_run(tmp_path)
    out = tmp_path / "plots"
    code = dispatch(
        [
            "verify",
            "--csv",
            str(csv),
            "--report",
            str(report),
            "--spec",
            str(spec),
            "--plot",
            "la_waveforms",
            "--out-dir",
            str(out),
        ]
    )
    assert code == EXIT_OK
    waveforms = (out / "la_waveforms.csv").read_text().splitlines()
    assert waveforms[0] == "time_ns,vin,vout,enable"
    assert len(waveforms) == 1 + 3000


def test_verify_missing_csv_is_environment_error(tmp_path):
    report = tmp_path / "report.txt"
    report.write_text("VERIFICATION RESULT: PASS\n")
    code = dispatch(
        ["verify", "--csv", str(tmp_path / "no.csv"), "--report", str(report), "--out-dir", str(tmp_path)]
    )
    assert code == EXIT_ENVIRONMENT


# ----------------------------------------------------- end-to-end run


HEADER_OK = "#pragma once\nstruct TransformCore { int points = 8; };\n"
MAIN_OK = (
    '#include "chiplet_core.h"\n'
    "// logs to results.csv, reports to report.txt\n"
    "int sc_main(int, char**) { return 0; }\n"
    "int main(int c, char** v) { return sc_main(c, v); }\n"
)


def block(name, content):
    return f"```cpp\n// === FILE: {name} ===\n{content}\n```\n"


def e2e_inputs(tmp_path):
    ds = tmp_path / "datasheet.md"
    ds.write_text("# Overview\nAn 8-point transform engine.\n")
    tpl = tmp_path / "template.json"
    tpl.write_text(json.dumps(fft_template_dict(), indent=2))
    responses = [
        json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS)),
        block("chiplet_core.h", HEADER_OK),
        block("main.cpp", MAIN_OK),
    ]
    transcript = tmp_path / "transcript.jsonl"
    transcript.write_text(
        "\n".join(json.dumps({"digest": "", "response": {"text": t}}) for t in responses) + "\n"
    )
    stub = tmp_path / "stub_behavior.json"
    stub.write_text(
        json.dumps(
            {
                "attempts": [
                    {
                        "compile": {"status": "ok"},
                        "run": {
                            "status": "ok",
                            "report": "VERIFICATION RESULT: PASS\n",
                            "csv": "time_ns,v\n0,1\n",
                        },
                    }
                ]
            }
        )
    )
    return ds, tpl, transcript, stub


def test_run_scripted_transcript_with_stub(tmp_path, capsys):
    ds, tpl, transcript, stub = e2e_inputs(tmp_path)
    out_dir = tmp_path / "out"
    code = dispatch(
        [
            "run",
            "--datasheet",
            str(ds),
            "--template",
            str(tpl),
            "--transcript",
            str(transcript),
            "--transcript-mode",
            "scripted",
            "--toolchain",
            "stub",
            "--stub-behavior",
            str(stub),
            "--out-dir",
            str(out_dir),
        ]
    )
    assert code == EXIT_OK
    assert (out_dir / "run.json").exists()
    manifest = json.loads((out_dir / "run.json").read_text())
    assert manifest["verdict"] == "verified"
    assert (out_dir / "chiplet_core.h").exists()
    assert (out_dir / "main.cpp").exists()


def test_run_replay_mode_performs_zero_network_operations(tmp_path, monkeypatch):
    # replay/scripted gateways are built on a backend that raises on any
    # live call; additionally poison the HTTP layer to prove nothing leaks
    import ds2sc.gateway as gw_mod

    def poisoned(*a, **k):
        raise AssertionError("network touched during replay")

    monkeypatch.setattr(gw_mod.HttpBackend, "complete", poisoned)
    ds, tpl, transcript, stub = e2e_inputs(tmp_path)
    code = dispatch(
        [
            "run",
            "--datasheet",
            str(ds),
            "--template",
            str(tpl),
            "--transcript",
            str(transcript),
            "--transcript-mode",
            "scripted",
            "--toolchain",
            "stub",
            "--stub-behavior",
            str(stub),
            "--out-dir",
            str(tmp_path / "out"),
        ]
    )
    assert code == EXIT_OK


def test_run_budget_exhausted_exit_one(tmp_path):
    ds, tpl, transcript, stub = e2e_inputs(tmp_path)
    fail_stub = tmp_path / "fail_stub.json"
    fail_stub.write_text(
        json.dumps(
            {
                "attempts": [
                    {
                        "compile": {"status": "ok"},
                        "run": {
                            "status": "ok",
                            "report": "VERIFICATION RESULT: FAIL\nCHECK x: FAIL\n",
                            "csv": "time_ns,v\n0,1\n",
                        },
                    }
                ]
            }
        )
    )
    responses = [
        json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS)),
        block("chiplet_core.h", HEADER_OK),
        block("main.cpp", MAIN_OK),
        block("chiplet_core.h", HEADER_OK + "// f1\n"),
        block("chiplet_core.h", HEADER_OK + "// f2\n"),
        block("chiplet_core.h", HEADER_OK + "// f3\n"),
    ]
    transcript.write_text(
        "\n".join(json.dumps({"digest": "", "response": {"text": t}}) for t in responses) + "\n"
    )
    code = dispatch(
        [
            "run",
            "--datasheet",
            str(ds),
            "--template",
            str(tpl),
            "--transcript",
            str(transcript),
            "--transcript-mode",
            "scripted",
            "--toolchain",
            "stub",
            "--stub-behavior",
            str(fail_stub),
            "--out-dir",
            str(tmp_path / "out"),
        ]
    )
    assert code == EXIT_VERIFIED_FAILURE


# ------------------------------------------------- single-stage commands


def scripted(tmp_path, texts, name="stage-transcript.jsonl"):
    path = tmp_path / name
    path.write_text(
        "\n".join(json.dumps({"digest": "", "response": {"text": t}}) for t in texts) + "\n"
    )
    return path


def test_parse_subcommand_writes_spec_ir(tmp_path):
    ds = tmp_path / "ds.md"
    ds.write_text("# Overview\nAn 8-point transform engine.\n")
    tpl = tmp_path / "tpl.json"
    tpl.write_text(json.dumps(fft_template_dict()))
    transcript = scripted(tmp_path, [json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS))])
    code = dispatch(
        [
            "parse",
            "--datasheet",
            str(ds),
            "--template",
            str(tpl),
            "--transcript",
            str(transcript),
            "--transcript-mode",
            "scripted",
            "--out-dir",
            str(tmp_path / "out"),
        ]
    )
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "out" / "spec_ir.json").read_text())
    assert doc["interface_params"]["bus_width_bits"] == 32


def test_codegen_and_tbgen_subcommands(tmp_path):
    spec = tmp_path / "spec_ir.json"
    spec.write_text(json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS)))
    transcript = scripted(tmp_path, [block("chiplet_core.h", HEADER_OK)])
    code = dispatch(
        [
            "codegen",
            "--spec",
            str(spec),
            "--transcript",
            str(transcript),
            "--transcript-mode",
            "scripted",
            "--out-dir",
            str(tmp_path / "gen"),
        ]
    )
    assert code == EXIT_OK
    header = tmp_path / "gen" / "chiplet_core.h"
    assert header.exists()

    transcript2 = scripted(tmp_path, [block("main.cpp", MAIN_OK)], name="tb.jsonl")
    code = dispatch(
        [
            "tbgen",
            "--spec",
            str(spec),
            "--header",
            str(header),
            "--transcript",
            str(transcript2),
            "--transcript-mode",
            "scripted",
            "--out-dir",
            str(tmp_path / "gen"),
        ]
    )
    assert code == EXIT_OK
    assert (tmp_path / "gen" / "main.cpp").exists()


def test_debug_subcommand_syntax_variant(tmp_path):
    src_h = tmp_path / "chiplet_core.h"
    src_h.write_text(HEADER_OK)
    src_m = tmp_path / "main.cpp"
    src_m.write_text(MAIN_OK)
    err = tmp_path / "err.log"
    err.write_text("main.cpp:3:1: error: expected ';'")
    transcript = scripted(tmp_path, [block("main.cpp", MAIN_OK + "// fixed\n")])
    code = dispatch(
        [
            "debug",
            "--variant",
            "syntax",
            "--source",
            str(src_h),
            "--source",
            str(src_m),
            "--error-log",
            str(err),
            "--transcript",
            str(transcript),
            "--transcript-mode",
            "scripted",
            "--out-dir",
            str(tmp_path / "fixed"),
        ]
    )
    assert code == EXIT_OK
    assert "// fixed" in (tmp_path / "fixed" / "main.cpp").read_text()


def test_record_then_replay_through_cli(tmp_path, monkeypatch):
    # a stand-in provider answers the record run; the replay run then
    # reproduces it with the HTTP layer poisoned
    import ds2sc.gateway as gw_mod

    responses = iter(
        [
            json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS)),
            block("chiplet_core.h", HEADER_OK),
            block("main.cpp", MAIN_OK),
        ]
    )

    def fake_complete(self, request):
        return gw_mod.LlmResponse(text=next(responses), provider_id="fake", elapsed_ms=5)

    monkeypatch.setattr(gw_mod.HttpBackend, "complete", fake_complete)
    ds, tpl, _, stub = e2e_inputs(tmp_path)
    transcript = tmp_path / "recorded.jsonl"
    common = [
        "--datasheet",
        str(ds),
        "--template",
        str(tpl),
        "--transcript",
        str(transcript),
        "--toolchain",
        "stub",
        "--stub-behavior",
        str(stub),
    ]
    code = dispatch(
        ["run", *common, "--transcript-mode", "record", "--out-dir", str(tmp_path / "rec")]
    )
    assert code == EXIT_OK
    assert transcript.exists() and transcript.read_text().count('"digest"') == 3

    def poisoned(self, request):
        raise AssertionError("network touched during replay")

    monkeypatch.setattr(gw_mod.HttpBackend, "complete", poisoned)
    code = dispatch(["replay", *common, "--out-dir", str(tmp_path / "rep")])
    assert code == EXIT_OK
    rec = json.loads((tmp_path / "rec" / "run.json").read_text())
    rep = json.loads((tmp_path / "rep" / "run.json").read_text())
    assert rec["verdict"] == rep["verdict"] == "verified"
    assert rec["transcript_digests"] == rep["transcript_digests"]
