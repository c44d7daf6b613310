#!/usr/bin/env python3
"""
Channel Analysis
Runs the peripheral spectrum, condition checkers, HNKS diagnostic, asymptotic
QFI and (when condition (i) holds) control synthesis for one channel
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .channels import DensityMatrix, KrausChannel, ParamChannel
from .conditions import (
    HlStatus,
    HlVerdict,
    HnksResult,
    Theorem2Check,
    check_corollary1,
    check_corollary2,
    check_theorem2_conditions,
    hnks_check,
    mix_with_margin,
    witness_direction,
)
from .console import table
from .control_synth import ControlSolution, synthesize_control, verify_control
from .errors import ConditionsNotMet, DegeneratePurity, DegenerateUnresolved, DimensionMismatch, MalformedInput
from .numerics import as_square
from .qfi import AsymptoticQfiReport, asymptotic_lower_bound, asymptotic_qfi
from .spectral import PeripheralSpectrum, expand_state, peripheral_spectrum

logger = logging.getLogger(__name__)

R0Choice = Union[str, int, np.ndarray]


@dataclass(frozen=True)
class InputChoice:
    rho0: DensityMatrix
    source: str


def choose_input_state(
    pc: ParamChannel,
    rho0: Optional[DensityMatrix] = None,
    verdicts: Sequence[HlVerdict] = (),
) -> Tuple[InputChoice, List[str]]:
    """Supplied state, else the first checker witness, else I/d"""
    if rho0 is not None:
        if rho0.dim != pc.dim:
            raise DimensionMismatch(f"input state dimension {rho0.dim} does not match channel dimension {pc.dim}")
        return InputChoice(rho0, "supplied"), []
    for name, verdict in zip(("corollary1", "corollary2"), verdicts):
        if verdict.status is HlStatus.ACHIEVABLE:
            return InputChoice(verdict.witness.rho0, name), []
    return (
        InputChoice(DensityMatrix.maximally_mixed(pc.dim), "maximally-mixed"),
        ["no witness input state; using I/d"],
    )


def select_r0(check: Theorem2Check, choice: R0Choice = "auto") -> Tuple[Optional[int], np.ndarray]:
    """
    R₀ from the signal candidates ('auto' = first, or an index) or a custom matrix

    Raises:
        MalformedInput: index out of range or no candidates
    """
    if isinstance(choice, np.ndarray):
        return None, as_square(choice, "r0")
    if not check.r0_candidates:
        raise MalformedInput("the signal operator offers no R₀ candidates")
    index = 0 if choice == "auto" else int(choice)
    if not 0 <= index < len(check.r0_candidates):
        raise MalformedInput(f"R₀ index {index} out of range (0..{len(check.r0_candidates) - 1})")
    return index, check.r0_candidates[index]


@dataclass(frozen=True)
class ControlReport:
    candidate: Optional[int]
    r0: np.ndarray
    solution: ControlSolution
    verified: bool
    regulated: Optional[AsymptoticQfiReport] = None

    def to_dict(self) -> Dict:
        out = self.solution.to_dict()
        out["candidate"] = self.candidate
        out["verified"] = self.verified
        out["regulated_asymptotic"] = None if self.regulated is None else self.regulated.to_dict()
        return out


def run_control(
    pc: ParamChannel,
    kraus: Optional[KrausChannel],
    check: Theorem2Check,
    r0_choice: R0Choice = "auto",
) -> ControlReport:
    """
    Synthesize U_c for R₀ and verify it end to end

    Raises:
        ConditionsNotMet: condition (i) fails or no Kraus form at θ₀
    """
    if not check.condition_i_holds:
        raise ConditionsNotMet("; ".join(check.diagnostics) or "condition (i) does not hold")
    if kraus is None:
        raise ConditionsNotMet("control synthesis needs the Kraus operators at θ₀")
    index, r0 = select_r0(check, r0_choice)
    if r0.shape[0] != pc.dim:
        raise DimensionMismatch(f"R₀ has dimension {r0.shape[0]}, channel dimension is {pc.dim}")
    solution = synthesize_control(kraus, r0)
    if not solution.succeeded:
        return ControlReport(index, r0, solution, verified=False)

    verified = verify_control(pc, solution.u_c, r0)
    regulated = None
    try:
        rho0, _ = mix_with_margin(np.eye(pc.dim) / pc.dim, witness_direction(r0))
        regulated = asymptotic_qfi(pc.with_control(solution.u_c), rho0)
    except (DegenerateUnresolved, DegeneratePurity, ValueError) as exc:
        logger.warning("regulated asymptotic report unavailable: %s", exc)
    return ControlReport(index, r0, solution, verified, regulated)


@dataclass(frozen=True)
class AnalysisReport:
    spectrum: PeripheralSpectrum
    corollary1: HlVerdict
    corollary2: HlVerdict
    theorem2: Theorem2Check
    hnks: Optional[HnksResult]
    input_choice: InputChoice
    asymptotic: Optional[AsymptoticQfiReport]
    lower_bounds: Tuple[float, ...] = ()
    control: Optional[ControlReport] = None
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def spectrum_frame(self) -> pd.DataFrame:
        return self.spectrum.table()

    def asymptotic_frame(self) -> pd.DataFrame:
        report = self.asymptotic
        if report is None:
            return pd.DataFrame(columns=["residue", "n2", "n1", "lower_bound_n2"])
        n1 = report.n1_by_residue or (None,) * len(report.n2_by_residue)
        return pd.DataFrame(
            {
                "residue": list(range(len(report.n2_by_residue))),
                "n2": list(report.n2_by_residue),
                "n1": list(n1),
                "lower_bound_n2": list(self.lower_bounds),
            }
        )

    def to_dict(self) -> Dict:
        spectrum = [
            {
                "lambda": [e.lam.real, e.lam.imag],
                "abs_lambda": abs(e.lam),
                "lambda_dot": None if e.lam_dot is None else [e.lam_dot.real, e.lam_dot.imag],
                "fixed_point": e.is_fixed_point,
            }
            for e in self.spectrum.entries
        ]
        return {
            "peripheral": spectrum,
            "corollary1": self.corollary1.to_dict(),
            "corollary2": self.corollary2.to_dict(),
            "theorem2": self.theorem2.to_dict(),
            "hnks": None if self.hnks is None else self.hnks.to_dict(),
            "input_state": self.input_choice.source,
            "asymptotic": None if self.asymptotic is None else self.asymptotic.to_dict(),
            "lower_bounds": list(self.lower_bounds),
            "control": None if self.control is None else self.control.to_dict(),
            "warnings": list(self.warnings),
        }

    def render(self) -> str:
        out = ["📊 Peripheral spectrum", table(self.spectrum_frame()), ""]
        out.append("🔍 Heisenberg-limit checks")
        for label, verdict in (("Corollary 1", self.corollary1), ("Corollary 2", self.corollary2)):
            mark = "✅" if verdict.status is HlStatus.ACHIEVABLE else "⚠️ "
            out.append(f"   • {label}: {mark} {verdict.status.value}")
            out.extend(f"     - {d}" for d in verdict.diagnostics)
        t2 = self.theorem2
        out.append(
            f"   • Condition (i): unital={t2.unital} nonvanishing={t2.signal_nonvanishing} "
            f"normal={t2.signal_normal} candidates={len(t2.r0_candidates)}"
        )
        if self.hnks is not None:
            out.append(f"   • HNKS: {self.hnks.status.value}")
        out.append("")
        out.append(f"📈 Asymptotic associated QFI (input: {self.input_choice.source})")
        if self.asymptotic is not None:
            out.append(table(self.asymptotic_frame()))
            out.append(f"   • Heisenberg limit: {'✅ yes' if self.asymptotic.achieves_hl else '❌ no'}")
        else:
            out.append("   • unavailable")
        if self.control is not None:
            sol = self.control.solution
            out.append("")
            out.append("🔧 Control synthesis")
            out.append(f"   • succeeded={sol.succeeded} residual={sol.sanity_residual:.3e} verified={self.control.verified}")
        if self.warnings:
            out.append("")
            out.extend(f"⚠️  {w}" for w in self.warnings)
        return "\n".join(out)


def analyze(
    pc: ParamChannel,
    rho0: Optional[DensityMatrix] = None,
    kraus: Optional[KrausChannel] = None,
    kraus_dots: Optional[Sequence[np.ndarray]] = None,
    with_control: bool = True,
) -> AnalysisReport:
    """
    Full report for one channel family

    Raises:
        DegenerateUnresolved: the peripheral spectrum cannot be resolved
    """
    spectrum = peripheral_spectrum(pc)
    warnings: List[str] = list(spectrum.warnings)
    kraus = kraus if kraus is not None else pc.kraus_at_theta0()
    if kraus_dots is None and kraus is not None:
        kraus_dots = pc.kraus_dots()

    cor1 = check_corollary1(pc, rho0)
    cor2 = check_corollary2(pc)
    t2 = check_theorem2_conditions(pc)
    hnks = hnks_check(kraus, kraus_dots) if kraus is not None and kraus_dots is not None else None

    choice, notes = choose_input_state(pc, rho0, (cor1, cor2))
    warnings.extend(notes)
    asymptotic = None
    bounds: Tuple[float, ...] = ()
    try:
        asymptotic = asymptotic_qfi(pc, choice.rho0, spectrum=spectrum)
        expansion = expand_state(spectrum, choice.rho0)
        bounds = tuple(
            asymptotic_lower_bound(asymptotic, spectrum, expansion, r) for r in range(len(asymptotic.n2_by_residue))
        )
        warnings.extend(w for w in asymptotic.warnings if w not in warnings)
    except (DegenerateUnresolved, DegeneratePurity) as exc:
        warnings.append(f"asymptotic QFI unavailable: {exc}")

    control = None
    if with_control and t2.condition_i_holds:
        if kraus is None:
            warnings.append("condition (i) holds but no Kraus operators were supplied for control synthesis")
        else:
            control = run_control(pc, kraus, t2)
    return AnalysisReport(spectrum, cor1, cor2, t2, hnks, choice, asymptotic, bounds, control, tuple(warnings))
