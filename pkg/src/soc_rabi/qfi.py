"""Quantum Fisher information of pure ground states with respect to B.

For a pure family |psi(B)>,

    F_B = 4 (<d psi|d psi> - |<psi|d psi>|^2).

Derivatives are central differences. Eigensolvers hand back states with
arbitrary global phases, so each neighbour is rotated until its overlap
with the centre state is real and positive before differencing.
"""

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import oracle, polaron
from .errors import BranchCrossed, InputError, NumericalError
from .units import EnergyAnchor, FieldPoint, MaterialSpec, SocStrengths, map_parameters

NEGATIVE_TOL = 1e-8
MIN_OVERLAP = 0.5
DEFAULT_REL_STEP = 1e-6
ORACLE_DEGENERACY_RTOL = 1e-10


class QfiMethod(str, enum.Enum):
    ANALYTIC_G1 = "AnalyticG1"
    OVERLAP_FD = "OverlapFD"
    FIDELITY_SUSCEPTIBILITY = "FidelitySusceptibility"


class Source(str, enum.Enum):
    APPROX = "approx"
    ORACLE = "oracle"


@dataclass(frozen=True)
class QfiResult:
    value: float
    method: QfiMethod
    step: float
    gauge_overlap: float
    branch: Optional[str] = None
    source: Optional[str] = None

    def to_dict(self):
        return {
            "F_B": self.value,
            "method": self.method.value,
            "step": self.step,
            "gauge_overlap": self.gauge_overlap,
            "branch": self.branch,
            "source": self.source,
        }


def default_step(B):
    return DEFAULT_REL_STEP * B


def _check_value(value):
    if value < -NEGATIVE_TOL:
        raise NumericalError(f"negative QFI {value!r}: states are not normalized or noise dominates")
    return value


def _stencil(state_at, B, step):
    if not step > 0:
        raise InputError(f"step must be positive, got {step!r}")
    if not B - step > 0:
        raise InputError(f"step {step!r} reaches B <= 0 from B={B!r}")
    centre = state_at(B)
    plus, minus = state_at(B + step), state_at(B - step)
    if not (centre.truncation == plus.truncation == minus.truncation):
        raise InputError(
            "states at B-step, B, B+step have different truncations "
            f"({minus.truncation}, {centre.truncation}, {plus.truncation})"
        )
    psi = centre.amplitudes
    fixed = []
    overlaps = []
    for nb in (plus, minus):
        o = np.vdot(psi, nb.amplitudes)
        if abs(o) < MIN_OVERLAP:
            raise InputError(f"|<psi(B)|psi(B+-step)>| = {abs(o):.3g} < {MIN_OVERLAP}; reduce step")
        overlaps.append(abs(o))
        fixed.append(nb.amplitudes * (np.conj(o) / abs(o)))
    return psi, fixed[0], fixed[1], min(overlaps)


def qfi_overlap_fd(state_at: Callable, B: float, step: float) -> QfiResult:
    """Central-difference QFI of a state family.

    Parameters
    ----------
    state_at : callable
        Maps a field value (tesla) to a normalized ``StateVector``.
    B, step : float
        Centre field and finite-difference step, both in tesla.
    """
    psi, plus, minus, ov = _stencil(state_at, B, step)
    d = (plus - minus) / (2.0 * step)
    value = 4.0 * (np.vdot(d, d).real - abs(np.vdot(psi, d)) ** 2)
    return QfiResult(float(_check_value(value)), QfiMethod.OVERLAP_FD, step, float(ov))


def qfi_fidelity_susceptibility(state_at: Callable, B: float, step: float) -> QfiResult:
    """F ~ 8 (1 - |<psi(B)|psi(B+step)>|) / step^2, averaged over both sides.

    ``1 - |overlap|`` is evaluated as half the squared distance between
    the gauge-fixed states, which avoids cancellation for small steps.
    """
    psi, plus, minus, ov = _stencil(state_at, B, step)
    d2 = np.vdot(plus - psi, plus - psi).real + np.vdot(minus - psi, minus - psi).real
    value = 2.0 * d2 / step**2
    return QfiResult(float(_check_value(value)), QfiMethod.FIDELITY_SUSCEPTIBILITY, step, float(ov))


def _central(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def xi_of_field(material, soc, anchor=None, tol=polaron.DEFAULT_TOL):
    def xi_at(B):
        params = map_parameters(material, FieldPoint(B), soc, anchor)
        return polaron.solve_xi(params, tol).xi

    return xi_at


def qfi_analytic_g1(
    material: MaterialSpec,
    soc: SocStrengths,
    B: float,
    step: Optional[float] = None,
    anchor: Optional[EnergyAnchor] = None,
    refine: bool = False,
) -> QfiResult:
    """4 |d xi / dB|^2, valid while the approximate ground state is |G1>.

    ``refine`` combines steps h and h/2 by Richardson extrapolation.
    """
    step = default_step(B) if step is None else step
    if not (step > 0 and B - step > 0):
        raise InputError(f"invalid step {step!r} at B={B!r}")
    params = map_parameters(material, FieldPoint(B), soc, anchor)
    _, _, spec = polaron.solve_point(params)
    if spec.ground_branch is not polaron.Branch.G1:
        raise InputError(
            f"analytic G1 formula needs a positive approximate gap; branch is {spec.ground_branch.value}"
        )
    xi_at = xi_of_field(material, soc, anchor)
    dxi = _central(xi_at, B, step)
    if refine:
        dxi = (4.0 * _central(xi_at, B, step / 2.0) - dxi) / 3.0
    value = 4.0 * abs(dxi) ** 2
    return QfiResult(float(value), QfiMethod.ANALYTIC_G1, step, 1.0, branch="G1", source="approx")


# -- state-family providers ----------------------------------------------------


class ApproxFamily:
    """Polaron ground states |G1> or |G2> as a function of B.

    ``branch`` pins the state formula for every point of a stencil; when
    unset, the sign of the approximate gap picks it per point. Solutions
    are cached per field value.
    """

    def __init__(self, material, soc, anchor=None, truncation=None, branch=None):
        self.material, self.soc, self.anchor = material, soc, anchor
        self.truncation = truncation
        self.branch = branch
        self._solved = {}

    def solve(self, B):
        if B not in self._solved:
            params = map_parameters(self.material, FieldPoint(B), self.soc, self.anchor)
            self._solved[B] = (params,) + polaron.solve_point(params)
        return self._solved[B]

    def branch_at(self, B):
        return self.solve(B)[3].ground_branch

    def __call__(self, B):
        params, xi, tp, spec = self.solve(B)
        branch = self.branch or spec.ground_branch
        if branch is polaron.Branch.G2:
            return polaron.ground_state_g2(params, xi, spec, self.truncation)
        return polaron.ground_state_g1(params, xi, self.truncation)


class OracleFamily:
    """Exact ground states at a fixed truncation, cached per field value."""

    def __init__(self, material, soc, truncation, anchor=None):
        self.material, self.soc, self.anchor = material, soc, anchor
        self.truncation = truncation
        self._solved = {}

    def solve(self, B):
        if B not in self._solved:
            params = map_parameters(self.material, FieldPoint(B), self.soc, self.anchor)
            self._solved[B] = oracle.exact_spectrum(params, self.truncation, k=2)
        return self._solved[B]

    def branch_at(self, B):
        spec = self.solve(B)
        scale = abs(spec.energies[0]) + abs(spec.energies[1])
        if spec.energies[1] - spec.energies[0] <= ORACLE_DEGENERACY_RTOL * scale:
            return polaron.Branch.DEGENERATE
        # odd parity is the |0;g>-like branch, even the dressed one
        return {-1: polaron.Branch.G1, 1: polaron.Branch.G2}.get(
            spec.states[0].parity, polaron.Branch.DEGENERATE
        )

    def __call__(self, B):
        return self.solve(B).states[0]


def _shared_branch(family, B, step):
    values = [family.branch_at(b) for b in (B - step, B, B + step)]
    if polaron.Branch.DEGENERATE in values or len(set(values)) > 1:
        raise BranchCrossed(
            f"ground branch changes across [{B - step!r}, {B + step!r}] T: "
            + ", ".join(v.value for v in values),
            branches=[v.value for v in values],
        )
    return values[1]


def approx_stencil_family(material, soc, B, step, anchor=None, truncation=None) -> ApproxFamily:
    """Approximate family pinned to the branch shared by B - step, B, B + step.

    The truncation, unless given, covers the largest |xi| on the stencil.
    """
    family = ApproxFamily(material, soc, anchor)
    family.branch = _shared_branch(family, B, step)
    family.truncation = truncation or polaron.required_truncation(
        max(abs(family.solve(b)[1].xi) for b in (B - step, B, B + step))
    )
    return family


def qfi_ground(
    material: MaterialSpec,
    soc: SocStrengths,
    B: float,
    step: Optional[float] = None,
    source="approx",
    anchor: Optional[EnergyAnchor] = None,
    truncation: Optional[int] = None,
    oracle_tol: float = 1.0,
) -> QfiResult:
    """QFI of the ground state, from the approximate or the exact family.

    With ``truncation=None`` the approximate family sizes its basis from
    the coherent-state tail and the oracle runs ``converge_truncation`` at
    the centre field.

    Raises
    ------
    BranchCrossed
        If the three stencil points do not share a ground branch.
    """
    source = Source(source)
    step = default_step(B) if step is None else step
    if not (step > 0 and B - step > 0):
        raise InputError(f"invalid step {step!r} at B={B!r}")
    if source is Source.APPROX:
        family = approx_stencil_family(material, soc, B, step, anchor, truncation)
        branch = family.branch
    else:
        if truncation is None:
            params = map_parameters(material, FieldPoint(B), soc, anchor)
            conv = oracle.converge_truncation(params, tol=oracle_tol)
            if not conv.converged:
                raise NumericalError("oracle truncation did not converge")
            truncation = conv.truncation
        family = OracleFamily(material, soc, truncation, anchor)
        branch = _shared_branch(family, B, step)
    result = qfi_overlap_fd(family, B, step)
    return QfiResult(
        result.value, result.method, result.step, result.gauge_overlap, branch.value, source.value
    )
