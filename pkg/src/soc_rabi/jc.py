"""Closed-form Jaynes-Cummings limit (no Dresselhaus coupling).

Only the zero- and one-excitation sectors are used:

    E0     = -Ea/2                                   |0;g>
    E1(+-) = Eb/2 +- sqrt(Delta^2 + |lambda1|^2)/2
    |1->   = cos(theta/2)|0;e> - i sin(theta/2)|1;g>,  tan(theta) = |lambda1|/Delta

The ground state switches from |0;g> to |1-> at |lambda1| = 2 sqrt(Ea Eb).
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .basis import E, G, StateVector, check_truncation, index
from .errors import InputError
from .units import MappedParams

DEGENERACY_RTOL = 1e-12


class GroundBranch(str, enum.Enum):
    SEPARABLE = "separable"
    DRESSED = "dressed"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class JcSpectrum:
    E0: float
    E1_plus: float
    E1_minus: float
    theta: float
    Delta: float
    lambda1_crossing: float

    @property
    def gap(self) -> float:
        return self.E1_minus - self.E0

    def to_dict(self):
        return {
            "E0": self.E0,
            "E1_plus": self.E1_plus,
            "E1_minus": self.E1_minus,
            "theta": self.theta,
            "Delta": self.Delta,
            "lambda1_crossing": self.lambda1_crossing,
            "gap": self.gap,
        }


def _require_jc(params):
    if params.lambda2 != 0:
        raise InputError("JC formulas need lambda2 = 0; use the polaron or exact routes")


def crossing_coupling(Ea, Eb) -> float:
    return 2.0 * math.sqrt(Ea * Eb)


def jc_spectrum(params: MappedParams) -> JcSpectrum:
    _require_jc(params)
    Ea, Eb = params.Ea, params.Eb
    Delta = Eb - Ea
    g = abs(params.lambda1)
    root = math.hypot(Delta, g)
    # theta in [0, pi]: the minus root always pairs with cos(theta/2)|0;e>
    theta = math.atan2(g, Delta)
    return JcSpectrum(
        E0=-Ea / 2.0,
        E1_plus=Eb / 2.0 + root / 2.0,
        E1_minus=Eb / 2.0 - root / 2.0,
        theta=theta,
        Delta=Delta,
        lambda1_crossing=crossing_coupling(Ea, Eb),
    )


def jc_ground_branch(params: MappedParams, rtol=DEGENERACY_RTOL) -> GroundBranch:
    spec = jc_spectrum(params)
    scale = params.Ea + params.Eb
    if abs(spec.gap) <= rtol * scale:
        return GroundBranch.DEGENERATE
    return GroundBranch.SEPARABLE if spec.gap > 0 else GroundBranch.DRESSED


def jc_dressed_state(params: MappedParams, branch: str, truncation: int) -> StateVector:
    """Dressed one-excitation state ``|1+>`` or ``|1->`` embedded in the truncated basis.

    Parameters
    ----------
    branch : {"+", "-"}
    truncation : int
        Fock levels kept; at least 2.
    """
    N = check_truncation(truncation)
    theta = jc_spectrum(params).theta
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    v = np.zeros(2 * N, dtype=complex)
    if branch == "-":
        v[index(0, E)] = c
        v[index(1, G)] = -1j * s
    elif branch == "+":
        v[index(1, G)] = -c
        v[index(0, E)] = 1j * s
    else:
        raise InputError(f"branch must be '+' or '-', got {branch!r}")
    return StateVector(v, N)


def jc_ground_state(params: MappedParams, truncation: int) -> StateVector:
    """|0;g> below the crossing, |1-> above (and at) it."""
    N = check_truncation(truncation)
    if jc_ground_branch(params) is GroundBranch.SEPARABLE:
        v = np.zeros(2 * N, dtype=complex)
        v[index(0, G)] = 1.0
        return StateVector(v, N)
    return jc_dressed_state(params, "-", N)
