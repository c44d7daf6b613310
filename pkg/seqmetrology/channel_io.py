#!/usr/bin/env python3
"""
Channel Files
JSON codec for parametrized channels: Kraus list, transition matrix or sampled
family, plus optional derivative, Kraus and input-state sidecars
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .channels import (
    DensityMatrix,
    DerivativeMode,
    KrausChannel,
    ParamChannel,
    TransitionMatrix,
    derivative,
    difference_stencil,
    kraus_dots_shape_check,
    kraus_to_transition,
    validate_cptp,
)
from .errors import DomainViolation, MalformedInput, MetrologyError

logger = logging.getLogger(__name__)

REPRESENTATIONS = ("kraus_ops", "transition", "samples")


def encode_complex(z: complex) -> List[float]:
    return [float(np.real(z)), float(np.imag(z))]


def encode_matrix(m: np.ndarray) -> List[List[List[float]]]:
    """Row-major nested [re, im] pairs"""
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def _decode_number(x: Any) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise MalformedInput(f"expected a number or [re, im] pair, got {x!r}")


def decode_matrix(data: Any, name: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise MalformedInput(f"{name} must be a non-empty list of rows")
    width = len(data[0])
    if any(len(row) != width for row in data):
        raise MalformedInput(f"{name} has ragged rows")
    return np.array([[_decode_number(x) for x in row] for row in data], dtype=np.complex128)


def to_jsonable(obj: Any) -> Any:
    """Enums to values, numpy scalars to Python, complex to [re, im]"""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return encode_matrix(obj) if np.iscomplexobj(obj) and obj.ndim == 2 else to_jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


def dump_json(data: Any, path: Path) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline"""
    with open(path, "w") as file:
        file.write(dumps_json(data))


def load_json(path: Path) -> Any:
    try:
        with open(path, "r") as file:
            return json.load(file)
    except FileNotFoundError as exc:
        raise MalformedInput(f"file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON in {path}: {exc}") from exc


@dataclass(frozen=True)
class ChannelFile:
    """A loaded channel file"""
    channel: ParamChannel
    kraus: Optional[KrausChannel] = None
    kraus_dots: Optional[List[np.ndarray]] = None
    rho0: Optional[DensityMatrix] = None


def _transition(dim: int, data: Any, name: str) -> TransitionMatrix:
    return validate_cptp(TransitionMatrix(dim, decode_matrix(data, name)))


def _static_family(
    t: TransitionMatrix,
    theta0: float,
    tdot: Optional[np.ndarray],
    name: str,
    kraus: Optional[KrausChannel] = None,
    kraus_dots: Optional[List[np.ndarray]] = None,
) -> ParamChannel:
    """θ-independent family unless an explicit derivative is supplied"""
    zero = np.zeros_like(t.t)
    return ParamChannel(
        family=lambda theta: t,
        theta0=theta0,
        derivative_mode=DerivativeMode.analytic(lambda: zero if tdot is None else tdot),
        kraus_family=(lambda theta: kraus) if kraus is not None else None,
        kraus_derivative=(lambda: kraus_dots) if kraus_dots is not None else None,
        name=name,
    )


def parse_channel_file(data: Any, name: str = "channel") -> ChannelFile:
    """
    Build a ChannelFile from decoded JSON

    Raises:
        MalformedInput: missing/extra representation, bad shapes or numbers
        NotCPTP: a transition matrix fails trace preservation or Choi positivity
    """
    if not isinstance(data, dict):
        raise MalformedInput("channel file must be a JSON object")
    present = [key for key in REPRESENTATIONS if key in data]
    if len(present) != 1:
        raise MalformedInput(f"exactly one of {REPRESENTATIONS} is required, found {present}")
    try:
        dim = int(data["dim"])
        theta0 = float(data.get("theta0", 0.0))
        step = data.get("fd_step")
        step = None if step is None else float(step)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad or missing header field: {exc}") from exc
    if dim < 1:
        raise MalformedInput(f"dim must be positive, got {dim}")

    tdot = decode_matrix(data["tdot"], "tdot") if "tdot" in data else None
    if tdot is not None and tdot.shape != (dim * dim, dim * dim):
        raise MalformedInput(f"tdot has shape {tdot.shape}, expected {(dim * dim, dim * dim)}")

    kraus = None
    if "kraus_ops" in data or "kraus" in data:
        ops = data.get("kraus_ops", data.get("kraus"))
        if not isinstance(ops, list) or not ops:
            raise MalformedInput("Kraus operators must be a non-empty list of matrices")
        kraus = KrausChannel(tuple(decode_matrix(k, "Kraus operator") for k in ops))
        if kraus.dim != dim:
            raise MalformedInput(f"Kraus operators have dimension {kraus.dim}, header says {dim}")
    kraus_dots = None
    if "kraus_dots" in data:
        if kraus is None:
            raise MalformedInput("kraus_dots given without Kraus operators")
        kraus_dots = kraus_dots_shape_check(kraus, [decode_matrix(k, "Kraus derivative") for k in data["kraus_dots"]])

    if "kraus_ops" in data:
        pc = _static_family(validate_cptp(kraus_to_transition(kraus)), theta0, tdot, name, kraus, kraus_dots)
    elif "transition" in data:
        t = _transition(dim, data["transition"], "transition")
        pc = _static_family(t, theta0, tdot, name, kraus, kraus_dots)
    else:
        samples = data["samples"]
        if not isinstance(samples, list) or not samples:
            raise MalformedInput("samples must be a non-empty list")
        family = {}
        for entry in samples:
            if not isinstance(entry, dict) or "theta" not in entry or "transition" not in entry:
                raise MalformedInput("each sample needs 'theta' and 'transition'")
            family[float(entry["theta"])] = _transition(dim, entry["transition"], f"sample θ={entry['theta']}")
        try:
            pc = ParamChannel.from_samples(family, theta0, tdot, kraus, kraus_dots, name=name, step=step)
        except DomainViolation as exc:
            raise MalformedInput(f"sampled family unusable: {exc}") from exc

    if kraus is not None and "kraus_ops" not in data:
        mismatch = np.linalg.norm(kraus_to_transition(kraus).t - pc.at(theta0).t)
        if mismatch > 1e-8:
            raise MalformedInput(f"Kraus sidecar disagrees with the transition matrix at θ₀ ({mismatch:.3e})")
    rho0 = None
    if "rho0" in data:
        try:
            rho0 = DensityMatrix(decode_matrix(data["rho0"], "rho0"))
        except MetrologyError as exc:
            raise MalformedInput(f"rho0: {exc}") from exc
        if rho0.dim != dim:
            raise MalformedInput(f"rho0 has dimension {rho0.dim}, header says {dim}")
    return ChannelFile(pc, kraus, kraus_dots, rho0)


def load_channel_file(path) -> ChannelFile:
    path = Path(path)
    loaded = parse_channel_file(load_json(path), name=path.stem)
    logger.debug("loaded %s (dim %d, θ₀ = %g)", path, loaded.channel.dim, loaded.channel.theta0)
    return loaded


def channel_to_dict(pc: ParamChannel, rho0: Optional[DensityMatrix] = None) -> Dict:
    """
    Sampled-family form of pc at θ₀ and its difference stencil

    The analytic derivative and the Kraus data at θ₀ travel as sidecars.
    """
    thetas: Sequence[float] = sorted({pc.theta0, *difference_stencil(pc)})
    low, high = difference_stencil(pc)
    data: Dict[str, Any] = {
        "dim": pc.dim,
        "theta0": pc.theta0,
        "fd_step": (high - low) / 2 if low < pc.theta0 < high else high - low,
        "samples": [{"theta": th, "transition": encode_matrix(pc.at(th).t)} for th in thetas],
        "tdot": encode_matrix(derivative(pc)),
    }
    kraus = pc.kraus_at_theta0()
    if kraus is not None:
        data["kraus"] = [encode_matrix(k) for k in kraus.kraus_ops]
        dots = pc.kraus_dots()
        if dots is not None:
            data["kraus_dots"] = [encode_matrix(k) for k in dots]
    if rho0 is not None:
        data["rho0"] = encode_matrix(rho0.rho)
    return data


def write_channel_file(path, pc: ParamChannel, rho0: Optional[DensityMatrix] = None) -> Path:
    path = Path(path)
    dump_json(channel_to_dict(pc, rho0), path)
    return path


def load_matrix_file(path) -> np.ndarray:
    """A bare matrix or an object with an 'r0' matrix"""
    data = load_json(Path(path))
    if isinstance(data, dict):
        if "r0" not in data:
            raise MalformedInput("matrix file object needs an 'r0' entry")
        data = data["r0"]
    return decode_matrix(data, "r0")
