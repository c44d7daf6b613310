#!/usr/bin/env python3
"""
Sequential Metrology CLI
Analyze parametrized channels, sweep the exact QFI over N, synthesize the
interleaving control and write the worked scenarios as channel files
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .analysis import analyze, choose_input_state, run_control
from .channel_io import (
    ChannelFile,
    dump_json,
    dumps_json,
    load_channel_file,
    load_matrix_file,
    write_channel_file,
)
from .channels import DensityMatrix, ParamChannel
from .conditions import check_corollary1, check_corollary2, check_theorem2_conditions
from .config import reload_settings, tol
from .console import banner, configure_logging, line, status
from .errors import ConditionsNotMet, MalformedInput, MetrologyError, SanityCheckFailed
from .numerics import require_unitary
from .qfi import sequence_qfi_sweep
from .scenarios import ScenarioName, ScenarioSpec

logger = logging.getLogger(__name__)

SCENARIO_NAMES = [name.value for name in ScenarioName]
DEPHASING_SLOPES = {"const": 0.0, "linear": 1.0}


# --- channel sources ---------------------------------------------------------

def _parse_params(pairs: Optional[List[str]]) -> Dict[str, float]:
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise MalformedInput(f"parameter '{pair}' must look like KEY=VALUE")
        try:
            params[key.strip()] = float(value)
        except ValueError as exc:
            raise MalformedInput(f"parameter '{key}' is not a number: {value!r}") from exc
    return params


def _scenario_from_args(args) -> ScenarioSpec:
    params = _parse_params(getattr(args, "param", None))
    if getattr(args, "t", None) is not None:
        params["t"] = args.t
    name = ScenarioName(args.scenario)
    if name is ScenarioName.DEPHASING:
        if getattr(args, "p", None) is not None:
            params["p"] = args.p
        if getattr(args, "phi", None) is not None:
            params["phi"] = args.phi
        if getattr(args, "p_of_theta", None):
            params["p_slope"] = DEPHASING_SLOPES[args.p_of_theta]
        if getattr(args, "phi_of_theta", None):
            params["phi_slope"] = DEPHASING_SLOPES[args.phi_of_theta]
    return ScenarioSpec(name, params, getattr(args, "theta0", None))


def _load_source(args) -> Tuple[ChannelFile, Optional[ScenarioSpec]]:
    """Channel from a file or a named scenario"""
    if args.file and args.scenario:
        raise MalformedInput("give either a channel file or --scenario, not both")
    if args.file:
        return load_channel_file(args.file), None
    if args.scenario:
        spec = _scenario_from_args(args)
        pc = spec.build()
        return ChannelFile(pc, pc.kraus_at_theta0(), pc.kraus_dots()), spec
    raise MalformedInput("a channel file or --scenario is required")


def _resolve_r0(text: str):
    if text == "auto":
        return "auto"
    if text.lstrip("-").isdigit():
        return int(text)
    return load_matrix_file(text)


# --- subcommands -------------------------------------------------------------

def cmd_analyze(args) -> int:
    source, _ = _load_source(args)
    report = analyze(source.channel, source.rho0, source.kraus, source.kraus_dots)
    if args.json:
        text = dumps_json(report.to_dict())
        if args.out:
            Path(args.out).write_text(text)
            status(f"Report saved to: {args.out}", "saved")
        else:
            sys.stdout.write(text)
        return 0

    banner(f"Channel analysis: {source.channel.name}")
    line(report.render())
    for warning in report.warnings:
        logger.debug("report warning: %s", warning)
    status("Analysis completed successfully!")
    return 0


def _sweep_input_state(pc: ParamChannel, source: ChannelFile, spec: Optional[ScenarioSpec], alpha) -> DensityMatrix:
    if alpha is not None:
        if spec is None:
            raise MalformedInput("--alpha needs --scenario")
        return spec.input_state(alpha)
    if source.rho0 is not None:
        return source.rho0
    choice, notes = choose_input_state(pc, None, (check_corollary1(pc), check_corollary2(pc)))
    for note in notes:
        status(note, "warn")
    return choice.rho0


def cmd_sweep(args) -> int:
    cap = tol("cli", "n_max_cap")
    if args.n_min < 1 or args.n_max < args.n_min:
        raise MalformedInput(f"invalid range --n-min {args.n_min} --n-max {args.n_max}")
    if args.n_max > cap:
        raise MalformedInput(f"--n-max {args.n_max} exceeds the cap of {cap}")

    source, spec = _load_source(args)
    pc = source.channel
    control = None
    if args.control == "auto":
        solution = run_control(pc, source.kraus, check_theorem2_conditions(pc)).solution
        if not solution.succeeded:
            raise SanityCheckFailed(f"no unitary control exists (residual {solution.sanity_residual:.3e})")
        control = solution.u_c
        status("Control synthesized", "control")
    elif args.control != "none":
        control = require_unitary(load_matrix_file(args.control))

    regulated = pc if control is None else pc.with_control(control)
    rho0 = _sweep_input_state(regulated, source, spec, args.alpha)
    frame = sequence_qfi_sweep(pc, rho0, control, args.n_min, args.n_max)
    csv = frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")
    if args.out:
        Path(args.out).write_text(csv)
        status(f"Sweep saved to: {args.out}", "saved")
    else:
        sys.stdout.write(csv)
    return 0


def cmd_synthesize(args) -> int:
    source, _ = _load_source(args)
    pc = source.channel
    check = check_theorem2_conditions(pc)
    if not check.condition_i_holds:
        reason = "; ".join(check.diagnostics) or "condition (i) does not hold"
        raise ConditionsNotMet(reason)

    control = run_control(pc, source.kraus, check, _resolve_r0(args.r0))
    data = control.solution.to_dict()
    data["verified"] = control.verified
    if args.out:
        dump_json(data, Path(args.out))
        status(f"Control saved to: {args.out}", "saved")
    else:
        sys.stdout.write(dumps_json(data))

    if not control.solution.succeeded:
        raise SanityCheckFailed(
            f"no unitary control exists for this R₀ (residual {control.solution.sanity_residual:.3e})"
        )
    status(f"Control verified: {control.verified}", "control")
    return 0


def cmd_scenario(args) -> int:
    spec = _scenario_from_args(args)
    pc = spec.build()
    rho0 = spec.input_state(args.alpha) if args.alpha is not None else None
    path = write_channel_file(args.out, pc, rho0)
    status(f"Scenario {spec.name.value} (θ₀ = {spec.theta0:g}) saved to: {path}", "saved")
    return 0


# --- parser ------------------------------------------------------------------

def _add_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", nargs="?", help="Channel file (JSON)")
    parser.add_argument("--scenario", choices=SCENARIO_NAMES, help="Use a built-in scenario instead of a file")
    parser.add_argument("--theta0", type=float, help="Operating point for --scenario")
    parser.add_argument("--param", action="append", metavar="KEY=VALUE", help="Scenario parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqmetrology", description="Ancilla-free sequential quantum metrology")
    parser.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--config", help="Alternative tolerance YAML file")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze_p = sub.add_parser("analyze", help="Spectrum, Heisenberg-limit checks and asymptotic QFI")
    _add_source(analyze_p)
    analyze_p.add_argument("--json", action="store_true", help="Machine-readable report")
    analyze_p.add_argument("--out", help="Write the JSON report to this file")
    analyze_p.set_defaults(handler=cmd_analyze)

    sweep_p = sub.add_parser("sweep", help="Exact QFI for every N as CSV")
    _add_source(sweep_p)
    sweep_p.add_argument("--n-min", type=int, default=1, help="First N")
    sweep_p.add_argument("--n-max", type=int, default=100, help="Last N")
    sweep_p.add_argument("--alpha", type=float, help="Scenario input-state parameter")
    sweep_p.add_argument("--control", default="none", help="none, auto, or a JSON file with a unitary")
    sweep_p.add_argument("--out", help="CSV output file (stdout if omitted)")
    sweep_p.set_defaults(handler=cmd_sweep)

    synth_p = sub.add_parser("synthesize", help="Unitary control for the regulated channel")
    _add_source(synth_p)
    synth_p.add_argument("--r0", default="auto", help="auto, a candidate index, or a JSON matrix file")
    synth_p.add_argument("--out", help="JSON output file (stdout if omitted)")
    synth_p.set_defaults(handler=cmd_synthesize)

    scen_p = sub.add_parser("scenario", help="Write a built-in scenario as a channel file")
    scen_p.add_argument("scenario", choices=SCENARIO_NAMES, help="Scenario name")
    scen_p.add_argument("--theta0", type=float, help="Operating point")
    scen_p.add_argument("--p", type=float, help="Dephasing probability offset")
    scen_p.add_argument("--phi", type=float, help="Dephasing phase offset")
    scen_p.add_argument("--p-of-theta", choices=sorted(DEPHASING_SLOPES), help="Dephasing p(θ) form")
    scen_p.add_argument("--phi-of-theta", choices=sorted(DEPHASING_SLOPES), help="Dephasing φ(θ) form")
    scen_p.add_argument("--t", type=float, help="Heisenberg evolution time")
    scen_p.add_argument("--param", action="append", metavar="KEY=VALUE", help="Other parameter (repeatable)")
    scen_p.add_argument("--alpha", type=float, help="Embed the scenario input state as rho0")
    scen_p.add_argument("--out", required=True, help="Channel file to write")
    scen_p.set_defaults(handler=cmd_scenario)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function with command line interface"""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    previous = os.environ.get("SEQMET_CONFIG")
    try:
        if args.config:
            os.environ["SEQMET_CONFIG"] = args.config
            reload_settings()
        return args.handler(args)
    except MetrologyError as exc:
        status(f"Error: {exc}", "fail")
        return exc.exit_code
    except (OSError, KeyError) as exc:
        status(f"Error: {exc}", "fail")
        return MalformedInput.exit_code
    except np.linalg.LinAlgError as exc:
        status(f"Error: numerical failure: {exc}", "fail")
        return 4
    finally:
        if args.config:
            if previous is None:
                os.environ.pop("SEQMET_CONFIG", None)
            else:
                os.environ["SEQMET_CONFIG"] = previous
            reload_settings()


if __name__ == "__main__":
    sys.exit(main())
