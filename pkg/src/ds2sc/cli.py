"""Command-line surface: pipeline runs, single stages, oracle utilities.

Exit codes: 0 success/verified, 1 verified-failure (budget exhausted or a
FAIL verdict), 2 usage error, 3 environment error. All outputs land under
``--out-dir`` (default ``./ds2sc-out/<timestamp>``).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import agents, ingest, oracles, pipeline, spec_ir, toolchain, verdicts
from .agents import AgentConfig, DebugContext, default_agent_configs
from .artifacts import GeneratedArtifact
from .gateway import Gateway, GatewayError, ProviderConfig
from .toolchain import PipelineSignal, ToolchainConfig, ToolchainEnvironmentError

EXIT_OK = 0
EXIT_VERIFIED_FAILURE = 1
EXIT_USAGE = 2
EXIT_ENVIRONMENT = 3


class CliEnvironmentError(RuntimeError):
    pass


def _default_out_dir() -> str:
    return str(Path("ds2sc-out") / time.strftime("%Y%m%d-%H%M%S"))


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise CliEnvironmentError(f"cannot read config file: {e}") from e


def _setting(args, config: dict, name: str, default):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _add_gateway_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--transcript", help="transcript JSONL file")
    p.add_argument(
        "--transcript-mode",
        choices=["record", "replay", "scripted"],
        help="how to use the transcript (record needs live provider settings)",
    )
    p.add_argument("--base-url", help="chat-completion endpoint URL")
    p.add_argument("--model", help="model name sent to the provider")
    p.add_argument("--api-key-env", help="environment variable holding the API key")


def _add_toolchain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--toolchain", choices=["real", "stub"], help="toolchain mode")
    p.add_argument("--compiler", help="compiler command (real mode)")
    p.add_argument("--include", action="append", default=None, help="include path (repeatable)")
    p.add_argument("--lib-path", action="append", default=None, help="library path (repeatable)")
    p.add_argument("--lib", action="append", default=None, help="library to link (repeatable)")
    p.add_argument("--extra-flag", action="append", default=None, help="extra compiler flag")
    p.add_argument("--stub-behavior", help="stub directive JSON file (stub mode)")
    p.add_argument("--sim-timeout", type=int, help="simulation wall-clock budget in seconds")


def _gateway_from_args(args, config: dict) -> Gateway:
    mode = _setting(args, config, "transcript-mode", None)
    transcript = _setting(args, config, "transcript", None)
    if transcript and mode in ("replay", "scripted"):
        return Gateway.from_transcript(transcript, mode)
    provider = _provider_from_args(args, config)
    if transcript and mode == "record":
        from .gateway import Transcript

        return Gateway.live(provider, transcript=Transcript(transcript, "record"))
    return Gateway.live(provider)


def _provider_from_args(args, config: dict) -> ProviderConfig:
    return ProviderConfig(
        base_url=_setting(args, config, "base-url", ""),
        model=_setting(args, config, "model", ""),
        api_key_env=_setting(args, config, "api-key-env", "DS2SC_API_KEY"),
    )


def _toolchain_from_args(args, config: dict) -> ToolchainConfig:
    return ToolchainConfig(
        compiler_cmd=_setting(args, config, "compiler", "g++"),
        include_paths=tuple(_setting(args, config, "include", None) or ()),
        library_paths=tuple(_setting(args, config, "lib-path", None) or ()),
        link_libraries=tuple(_setting(args, config, "lib", None) or ()),
        extra_flags=tuple(_setting(args, config, "extra-flag", None) or ()),
        sim_timeout_s=_setting(args, config, "sim-timeout", toolchain.DEFAULT_SIM_TIMEOUT_S),
        mode=_setting(args, config, "toolchain", "real"),
        stub_behavior=_setting(args, config, "stub-behavior", None),
    )


def _pipeline_config(args, config: dict) -> pipeline.PipelineConfig:
    agent_configs = default_agent_configs()
    overrides = config.get("temperatures", {})
    for kind, temp in overrides.items():
        agent_configs[kind] = AgentConfig(kind=kind, temperature=float(temp))
    return pipeline.PipelineConfig(
        max_syntax_iters=_setting(args, config, "max-syntax-iters", 5),
        max_functional_iters=_setting(args, config, "max-functional-iters", 3),
        agent_configs=agent_configs,
        toolchain=_toolchain_from_args(args, config),
        provider=_provider_from_args(args, config),
    )


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliEnvironmentError(str(e)) from e


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    target.write_text(text, encoding="utf-8")
    return target


# ---------------------------------------------------------------- subcommands


def _cmd_run(args) -> int:
    config = _load_config_file(args.config)
    cfg = _pipeline_config(args, config)
    result = pipeline.run_pipeline(
        args.datasheet,
        args.template,
        cfg,
        out_dir=args.out_dir,
        transcript_path=_setting(args, config, "transcript", None),
        transcript_mode=_setting(args, config, "transcript-mode", None),
    )
    print(f"verdict: {result.verdict}")
    if result.detail:
        print(result.detail)
    print(f"run manifest: {result.run_json_path}")
    if result.verdict == "verified":
        return EXIT_OK
    if result.verdict == "environment_failure":
        return EXIT_ENVIRONMENT
    return EXIT_VERIFIED_FAILURE


def _cmd_replay(args) -> int:
    args.transcript_mode = "replay"
    return _cmd_run(args)


def _cmd_parse(args) -> int:
    config = _load_config_file(args.config)
    tpl = spec_ir.parse_template(_read(args.template))
    fmt = "plain_text" if args.datasheet.endswith(".txt") else "markdown"
    ds = ingest.ingest_text(_read(args.datasheet), fmt)
    ds = ingest.denoise(ds, tpl.domain.value)
    gw = _gateway_from_args(args, config)
    doc = agents.run_spec_parsing(
        ds, tpl, gw, AgentConfig.default("spec_parsing"), char_budget=args.char_budget
    )
    out = _write(Path(args.out_dir), "spec_ir.json", spec_ir.serialize(doc))
    print(f"spec IR written: {out}")
    return EXIT_OK


def _cmd_codegen(args) -> int:
    config = _load_config_file(args.config)
    doc = _load_document(args.spec)
    gw = _gateway_from_args(args, config)
    artifact = agents.run_code_generation(doc, gw, AgentConfig.default("code_gen"))
    out = _write(Path(args.out_dir), artifact.file_name, artifact.content)
    print(f"model header written: {out}")
    return EXIT_OK


def _cmd_tbgen(args) -> int:
    config = _load_config_file(args.config)
    doc = _load_document(args.spec)
    header = GeneratedArtifact(
        file_name=Path(args.header).name, content=_read(args.header), origin="fixture"
    )
    gw = _gateway_from_args(args, config)
    artifact = agents.run_testbench_generation(doc, header, gw, AgentConfig.default("tb_gen"))
    out = _write(Path(args.out_dir), artifact.file_name, artifact.content)
    print(f"testbench written: {out}")
    return EXIT_OK


def _cmd_debug(args) -> int:
    config = _load_config_file(args.config)
    sources = tuple(
        GeneratedArtifact(file_name=Path(p).name, content=_read(p), origin="fixture")
        for p in args.source
    )
    if args.variant == "syntax":
        ctx = DebugContext(variant="syntax", sources=sources, error_log=_read(args.error_log))
    else:
        ctx = DebugContext(
            variant="functional",
            sources=sources,
            csv_text=_read(args.csv),
            report_text=_read(args.report),
            spec_ir=_load_document(args.spec),
        )
    gw = _gateway_from_args(args, config)
    fixed = agents.run_debugging(ctx, gw, AgentConfig.default("debug"))
    out_dir = Path(args.out_dir)
    for artifact in fixed:
        _write(out_dir, artifact.file_name, artifact.content)
        print(f"repaired: {out_dir / artifact.file_name}")
    return EXIT_OK


def _load_document(path: str) -> spec_ir.SpecIrDocument:
    root = json.loads(_read(path))
    domain = root.get("domain", "digital")
    return spec_ir.SpecIrDocument(template_id="", domain=spec_ir.Domain(domain), root=root)


def _cmd_simulate(args) -> int:
    config = _load_config_file(args.config)
    cfg = _toolchain_from_args(args, config)
    artifacts = []
    for p in args.source:
        artifacts.append(
            GeneratedArtifact(file_name=Path(p).name, content=_read(p), origin="fixture")
        )
    ws = toolchain.materialize_workspace(artifacts, run_root=Path(args.out_dir), attempt=0)
    compile_oc = toolchain.compile_workspace(ws, cfg)
    run_oc = None
    report = None
    if compile_oc.status == "ok":
        run_oc = toolchain.simulate(ws, cfg)
        if ws.report_path and ws.report_path.exists():
            try:
                report = verdicts.parse_report(ws.report_path.read_text(encoding="utf-8"))
            except verdicts.VerdictError:
                report = None
    signal = toolchain.classify(compile_oc, run_oc, report)
    outcome = {
        "signal": signal.value,
        "compile_status": compile_oc.status,
        "run_status": run_oc.status if run_oc else None,
        "csv": str(ws.csv_path) if ws.csv_path else None,
        "report": str(ws.report_path) if ws.report_path else None,
        "workspace": str(ws.root),
        "stderr_tail": compile_oc.stderr[-2000:] if compile_oc.status != "ok" else "",
    }
    print(json.dumps(outcome, indent=2))
    if args.plot and ws.csv_path:
        _emit_plot(args.plot, ws.csv_path, None, Path(args.out_dir))
    return EXIT_OK if signal is PipelineSignal.ok else EXIT_VERIFIED_FAILURE


def _cmd_verify(args) -> int:
    report = verdicts.parse_report(_read(args.report))
    log = verdicts.parse_csv_log(_read(args.csv))
    print(f"report verdict: {report.verdict}")
    oracle_ok = True
    out_dir = Path(args.out_dir)
    scenario = None
    if args.spec:
        doc = _load_document(args.spec)
        scenarios = spec_ir.test_scenarios(doc)
        wanted = [s for s in scenarios if args.scenario in (None, s.name)]
        if not wanted:
            raise CliEnvironmentError(f"scenario {args.scenario!r} not found in spec")
        for scenario in wanted:
            results = verdicts.cross_check(log, scenario)
            _write(out_dir, f"cross_check_{scenario.name}.json", verdicts.summary_json(scenario, results))
            for r in results:
                status = "PASS" if r.passed else "FAIL"
                print(
                    f"cross-check {scenario.name}/{r.name}: {status} "
                    f"(measured {r.measured:.6g}, expected {r.expected:.6g}, tol {r.tolerance:g})"
                )
            oracle_ok = oracle_ok and all(r.passed for r in results)
    if args.plot:
        _emit_plot(args.plot, Path(args.csv), scenario, out_dir)
    if args.strict_oracle:
        return EXIT_OK if (report.verdict == "pass" and oracle_ok) else EXIT_VERIFIED_FAILURE
    return EXIT_OK if report.verdict == "pass" else EXIT_VERIFIED_FAILURE


def emit_plot_data(csv_path: Path, figure: str, out_dir: Path, scenario=None) -> Path:
    """Write figure-ready CSV data extracted from simulation outputs.

    la_waveforms: time/input/output/enable series. pa_curve: per-point
    reference vs simulated output power and the absolute error, which
    needs the scenario's amplifier parameters.
    """
    if not Path(csv_path).exists():
        raise CliEnvironmentError(f"simulation CSV missing: {csv_path}")
    log = verdicts.parse_csv_log(Path(csv_path).read_text(encoding="utf-8"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if figure == "la_waveforms":
        for col in ("vin", "vout", "enable"):
            if col not in log.columns:
                raise CliEnvironmentError(f"column {col!r} missing from {csv_path}")
        t = log.timestamps
        vin = log.column("vin")
        vout = log.column("vout")
        en = log.column("enable")
        lines = ["time_ns,vin,vout,enable"]
        lines += [f"{a:.9g},{b:.9g},{c:.9g},{d:.9g}" for a, b, c, d in zip(t, vin, vout, en)]
        target = out_dir / "la_waveforms.csv"
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return target
    if figure == "pa_curve":
        if scenario is None:
            raise CliEnvironmentError("pa_curve needs --spec/--scenario for amplifier parameters")
        params = scenario.stimulus.get("params", {})
        rp = oracles.RappParams(
            g_db=float(params["g_db"]),
            psat_dbm=float(params["psat_dbm"]),
            s=float(params["s"]),
        )
        pins = log.column("pin_dbm")
        pouts = log.column("pout_dbm")
        lines = ["pin_dbm,pout_ref_dbm,pout_sim_dbm,abs_error_db"]
        for pin, pout in zip(pins, pouts):
            ref = oracles.rapp_pout_dbm(pin, rp)
            lines.append(f"{pin:.9g},{ref:.9g},{pout:.9g},{abs(pout - ref):.9g}")
        target = out_dir / "pa_curve.csv"
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return target
    raise CliEnvironmentError(f"unknown figure {figure!r}")


def _emit_plot(figure: str, csv_path: Path, scenario, out_dir: Path) -> None:
    target = emit_plot_data(csv_path, figure, out_dir, scenario=scenario)
    print(f"plot data written: {target}")


def _cmd_oracle(args) -> int:
    out_lines: list[str]
    if args.kind == "fft":
        n = args.n
        if args.ramp:
            x = [complex(i + 1, 0) for i in range(n)]
        else:
            x = [complex(1, 0)] + [0j] * (n - 1)
        spectrum = oracles.dft(x)
        out_lines = ["index,re,im"]
        out_lines += [f"{i},{z.real:.17g},{z.imag:.17g}" for i, z in enumerate(spectrum)]
    elif args.kind == "rapp":
        rp = oracles.RappParams(g_db=args.g, psat_dbm=args.psat, s=args.s)
        out_lines = ["pin_dbm,pout_dbm"]
        pin = args.start
        while pin <= args.stop + 1e-12:
            out_lines.append(f"{pin:.9g},{oracles.rapp_pout_dbm(pin, rp):.9g}")
            pin += args.step
    else:  # la
        p = oracles.LaParams(
            gain=args.gain, v_out_max=args.vmax, v_out_min=args.vmin, quiescent=args.quiescent
        )
        out_lines = ["vin,vout"]
        vin = args.start
        while vin <= args.stop + 1e-12:
            out_lines.append(f"{vin:.9g},{oracles.la_transfer(vin, p):.9g}")
            vin += args.step
    text = "\n".join(out_lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"written: {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_fit_pa(args) -> int:
    text = _read(args.points)
    points = []
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        pin, pout = (float(v) for v in line.split(",")[:2])
        points.append(oracles.CurvePoint(pin, pout))
    s = oracles.fit_smoothness(points, args.g, args.psat)
    rp = oracles.RappParams(g_db=args.g, psat_dbm=args.psat, s=s)
    fitted = [oracles.CurvePoint(pt.pin_dbm, oracles.rapp_pout_dbm(pt.pin_dbm, rp)) for pt in points]
    err = oracles.curve_max_error_db(points, fitted)
    print(f"fitted s: {s:.6f}")
    print(f"max curve error: {err:.6f} dB")
    return EXIT_OK


# ---------------------------------------------------------------- dispatcher


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ds2sc",
        description="Datasheet-to-SystemC modeling pipeline and its oracle utilities",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out-dir", default=_default_out_dir(), help="output directory")
        p.add_argument("--config", help="JSON config file (flags take precedence)")

    p = sub.add_parser("run", help="full pipeline: datasheet + template -> verified model")
    p.add_argument("--datasheet", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--max-syntax-iters", type=int)
    p.add_argument("--max-functional-iters", type=int)
    common(p)
    _add_gateway_flags(p)
    _add_toolchain_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("replay", help="re-run a recorded pipeline from its transcript")
    p.add_argument("--datasheet", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--transcript", required=True)
    p.add_argument("--max-syntax-iters", type=int)
    p.add_argument("--max-functional-iters", type=int)
    common(p)
    p.add_argument("--base-url")
    p.add_argument("--model")
    p.add_argument("--api-key-env")
    _add_toolchain_flags(p)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("parse", help="run only the spec-parsing stage")
    p.add_argument("--datasheet", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--char-budget", type=int, default=None)
    common(p)
    _add_gateway_flags(p)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("codegen", help="generate the model header from a spec IR document")
    p.add_argument("--spec", required=True)
    common(p)
    _add_gateway_flags(p)
    p.set_defaults(func=_cmd_codegen)

    p = sub.add_parser("tbgen", help="generate the testbench from spec IR + header")
    p.add_argument("--spec", required=True)
    p.add_argument("--header", required=True)
    common(p)
    _add_gateway_flags(p)
    p.set_defaults(func=_cmd_tbgen)

    p = sub.add_parser("debug", help="run one debugging-agent repair")
    p.add_argument("--variant", choices=["syntax", "functional"], required=True)
    p.add_argument("--source", action="append", required=True, help="source file (repeatable)")
    p.add_argument("--error-log", help="compiler stderr file (syntax variant)")
    p.add_argument("--csv", help="simulation CSV (functional variant)")
    p.add_argument("--report", help="verification report (functional variant)")
    p.add_argument("--spec", help="spec IR document (functional variant)")
    common(p)
    _add_gateway_flags(p)
    p.set_defaults(func=_cmd_debug)

    p = sub.add_parser("simulate", help="compile, run, and classify a model/testbench pair")
    p.add_argument("--source", action="append", required=True, help="source file (repeatable)")
    p.add_argument("--plot", choices=["la_waveforms", "pa_curve"])
    common(p)
    _add_toolchain_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="parse outputs and cross-check against the oracles")
    p.add_argument("--csv", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--spec", help="spec IR document with test scenarios")
    p.add_argument("--scenario", help="scenario name (default: all in the spec)")
    p.add_argument("--strict-oracle", action="store_true", help="oracle cross-check overrides the report")
    p.add_argument("--plot", choices=["la_waveforms", "pa_curve"])
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("oracle", help="emit oracle reference data as CSV")
    osub = p.add_subparsers(dest="kind", required=True)
    pf = osub.add_parser("fft", help="spectrum of a reference input")
    pf.add_argument("--n", type=int, default=8)
    pf.add_argument("--ramp", action="store_true", help="use the ramp input 1..N (default: impulse)")
    pf.add_argument("--out")
    pf.set_defaults(func=_cmd_oracle)
    pr = osub.add_parser("rapp", help="amplifier AM-AM curve")
    pr.add_argument("--g", type=float, required=True)
    pr.add_argument("--psat", type=float, required=True)
    pr.add_argument("--s", type=float, required=True)
    pr.add_argument("--start", type=float, default=-30.0)
    pr.add_argument("--stop", type=float, default=35.0)
    pr.add_argument("--step", type=float, default=0.5)
    pr.add_argument("--out")
    pr.set_defaults(func=_cmd_oracle)
    pl = osub.add_parser("la", help="limiting-amplifier transfer curve")
    pl.add_argument("--gain", type=float, required=True)
    pl.add_argument("--vmax", type=float, required=True)
    pl.add_argument("--vmin", type=float, required=True)
    pl.add_argument("--quiescent", type=float, default=0.0)
    pl.add_argument("--start", type=float, default=-0.5)
    pl.add_argument("--stop", type=float, default=0.5)
    pl.add_argument("--step", type=float, default=0.01)
    pl.add_argument("--out")
    pl.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("fit-pa", help="fit the smoothness factor to curve points")
    p.add_argument("--points", required=True, help="CSV of pin_dbm,pout_dbm with header")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--psat", type=float, required=True)
    p.set_defaults(func=_cmd_fit_pa)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (CliEnvironmentError, ToolchainEnvironmentError, GatewayError, OSError) as e:
        print(f"environment error: {e}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except (spec_ir.SpecIrError, verdicts.VerdictError, agents.AgentError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFIED_FAILURE
    except Exception as e:  # mapped, never uncaught
        print(f"unexpected error: {e}", file=sys.stderr)
        return EXIT_ENVIRONMENT


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
