"""Polaron-type unitary transformation of the anisotropic Rabi model.

``S = (xi b+ - xi* b) sx`` displaces the boson by ``+-xi`` depending on the
sx eigenvalue. Choosing ``xi`` from the self-consistency condition

    (1/eta) * ((l1 + l2)/4 - Eb xi) = Ea xi + (l1 - l2)/4 - xi Ec~,

    eta = exp(-2|xi|^2),  Ec~ = i Im[xi* (l1 - l2)],

removes the counter-rotating terms at leading order. What remains is a
JC-like Hamiltonian with renormalized parameters and a closed-form spectrum.
The dropped remainder is of order |xi|^2; the exact oracle measures its effect.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .basis import (
    E,
    G,
    SIGMA_X,
    StateVector,
    annihilation,
    check_truncation,
    index,
)
from .errors import InputError, NonConvergence, TruncationTooSmall
from .units import MappedParams

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
TAIL_BOUND = 1e-12
DEGENERACY_RTOL = 1e-12
MAX_EXPONENT = 700.0  # exp() overflow guard for 1/eta


class Branch(str, enum.Enum):
    G1 = "G1"
    G2 = "G2"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class XiSolution:
    xi: complex
    residual: float
    iterations: int
    converged: bool
    method: str = "newton"

    @property
    def regime_ok(self) -> bool:
        """False when |xi| >= 1, where dropping the remainder is not justified."""
        return abs(self.xi) < 1.0

    def to_dict(self):
        return {
            "xi": [self.xi.real, self.xi.imag],
            "abs_xi": abs(self.xi),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "regime_ok": self.regime_ok,
            "method": self.method,
        }


@dataclass(frozen=True)
class TransformedParams:
    eta: float
    Ea_tilde: float
    Eb_tilde: float
    Ec_tilde: complex
    g_tilde: complex
    E_shift: float
    Delta_tilde: float

    def to_dict(self):
        return {
            "eta": self.eta,
            "Ea_tilde": self.Ea_tilde,
            "Eb_tilde": self.Eb_tilde,
            "Ec_tilde": [self.Ec_tilde.real, self.Ec_tilde.imag],
            "g_tilde": [self.g_tilde.real, self.g_tilde.imag],
            "E_shift": self.E_shift,
            "Delta_tilde": self.Delta_tilde,
        }


@dataclass(frozen=True)
class ApproxSpectrum:
    E0d: float
    E1d_plus: float
    E1d_minus: float
    gap: float
    theta_d: float
    phi: float
    ground_branch: Branch

    def to_dict(self):
        return {
            "E0d": self.E0d,
            "E1d_plus": self.E1d_plus,
            "E1d_minus": self.E1d_minus,
            "gap": self.gap,
            "theta_d": self.theta_d,
            "phi": self.phi,
            "ground_branch": self.ground_branch.value,
        }


# -- self-consistency condition ------------------------------------------------


def condition_mismatch(params: MappedParams, xi: complex) -> complex:
    """LHS minus RHS of the xi condition, in rad/s."""
    l1, l2 = params.lambda1, params.lambda2
    if not 2.0 * abs(xi) ** 2 < MAX_EXPONENT:
        return complex(math.inf, math.inf)
    inv_eta = math.exp(2.0 * abs(xi) ** 2)
    Ec = 1j * (np.conj(xi) * (l1 - l2)).imag
    lhs = ((l1 + l2) / 4.0 - params.Eb * xi) * inv_eta
    rhs = params.Ea * xi + (l1 - l2) / 4.0 - xi * Ec
    return complex(lhs - rhs)


def condition_residual(params: MappedParams, xi: complex) -> float:
    """|mismatch| / (Ea + Eb), dimensionless."""
    return abs(condition_mismatch(params, xi)) / (params.Ea + params.Eb)


def _jacobian(params, xi):
    """2x2 real Jacobian of (Re f, Im f) with respect to (Re xi, Im xi)."""
    l1, l2 = params.lambda1, params.lambda2
    v = l1 - l2
    x, y = xi.real, xi.imag
    if not 2.0 * (x * x + y * y) < MAX_EXPONENT:
        return np.full((2, 2), np.nan)
    inv_eta = math.exp(2.0 * (x * x + y * y))
    bracket = (l1 + l2) / 4.0 - params.Eb * xi
    im_part = x * v.imag - y * v.real  # Im[xi* v]
    dfdx = 4 * x * inv_eta * bracket - inv_eta * params.Eb - params.Ea + 1j * im_part + 1j * xi * v.imag
    dfdy = (
        4 * y * inv_eta * bracket
        - 1j * inv_eta * params.Eb
        - 1j * params.Ea
        - im_part
        - 1j * xi * v.real
    )
    return np.array([[dfdx.real, dfdy.real], [dfdx.imag, dfdy.imag]])


def _fixed_point_update(params, xi):
    # the condition is linear in xi once eta and Ec~ are frozen
    l1, l2 = params.lambda1, params.lambda2
    if not 2.0 * abs(xi) ** 2 < MAX_EXPONENT:
        return None
    inv_eta = math.exp(2.0 * abs(xi) ** 2)
    Ec = 1j * (np.conj(xi) * (l1 - l2)).imag
    return complex((inv_eta * (l1 + l2) / 4.0 - (l1 - l2) / 4.0) / (inv_eta * params.Eb + params.Ea - Ec))


def linearized_xi(params: MappedParams) -> complex:
    return complex(params.lambda2 / (2.0 * (params.Ea + params.Eb)))


def solve_xi(
    params: MappedParams, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, xi0=None
) -> XiSolution:
    """Solve the xi condition by damped Newton in (Re xi, Im xi).

    Starts from the linearized root ``lambda2 / (2 (Ea + Eb))`` unless
    ``xi0`` is given, and falls back to fixed-point steps when the Jacobian
    is near singular or a Newton step fails to reduce the residual.

    Raises
    ------
    NonConvergence
        After ``max_iter`` iterations; ``exc.solution`` holds the best iterate.
    """
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol!r}")
    xi = linearized_xi(params) if xi0 is None else complex(xi0)
    res = condition_residual(params, xi)
    best = (res, xi)
    used_fallback = False
    it = 0
    while res > tol and it < max_iter:
        it += 1
        f = condition_mismatch(params, xi)
        J = _jacobian(params, xi)
        step = None
        if np.all(np.isfinite(J)) and abs(np.linalg.det(J)) > 1e-14 * np.max(np.abs(J)) ** 2:
            dx = np.linalg.solve(J, -np.array([f.real, f.imag]))
            step = complex(dx[0], dx[1])
        new_xi, new_res = None, math.inf
        if step is not None:
            t = 1.0
            for _ in range(30):
                trial = xi + t * step
                trial_res = condition_residual(params, trial)
                if trial_res < res:
                    new_xi, new_res = trial, trial_res
                    break
                t *= 0.5
        if new_xi is None:
            used_fallback = True
            new_xi = _fixed_point_update(params, xi)
            if new_xi is None:
                break
            new_res = condition_residual(params, new_xi)
        xi, res = new_xi, new_res
        if res < best[0]:
            best = (res, xi)
        if not math.isfinite(res):
            break
    res, xi = best
    method = "newton+fixed-point" if used_fallback else "newton"
    sol = XiSolution(xi=xi, residual=res, iterations=it, converged=res <= tol, method=method)
    if not sol.converged:
        raise NonConvergence(
            f"xi condition not solved: residual {res:.3e} > {tol:.1e} after {it} iterations",
            solution=sol,
        )
    return sol


# -- transformed Hamiltonian ----------------------------------------------------


def transformed_params(params: MappedParams, xi: XiSolution) -> TransformedParams:
    if not xi.converged:
        raise InputError("transformed_params needs a converged xi")
    z = xi.xi
    l1, l2 = params.lambda1, params.lambda2
    eta = math.exp(-2.0 * abs(z) ** 2)
    w = np.conj(z) * (l1 - l2)
    Eb_tilde = float(w.real)
    Ec_tilde = complex(0.0, float(w.imag))
    Ea_tilde = params.Ea * eta - Eb_tilde
    g_tilde = complex((l1 + l2) / 2.0 - 2.0 * params.Eb * z)
    E_shift = params.Eb * abs(z) ** 2 - float(((l1 + l2) * z).real) / 2.0
    Delta_tilde = (params.Eb + Eb_tilde - Ea_tilde) / 2.0
    return TransformedParams(
        eta=eta,
        Ea_tilde=Ea_tilde,
        Eb_tilde=Eb_tilde,
        Ec_tilde=Ec_tilde,
        g_tilde=g_tilde,
        E_shift=E_shift,
        Delta_tilde=Delta_tilde,
    )


def approx_spectrum(params: MappedParams, tp: TransformedParams) -> ApproxSpectrum:
    E0d = -tp.Ea_tilde / 2.0 + tp.E_shift
    centre = tp.E_shift + (params.Eb + tp.Eb_tilde) / 2.0
    root = math.hypot(abs(tp.g_tilde), tp.Delta_tilde)
    E1p, E1m = centre + root, centre - root
    gap = E1m - E0d
    theta_d = math.atan2(abs(tp.g_tilde), tp.Delta_tilde)
    phi = math.atan2(tp.g_tilde.imag, tp.g_tilde.real)
    if abs(gap) <= DEGENERACY_RTOL * (params.Ea + params.Eb):
        branch = Branch.DEGENERATE
    else:
        branch = Branch.G1 if gap > 0 else Branch.G2
    return ApproxSpectrum(
        E0d=E0d, E1d_plus=E1p, E1d_minus=E1m, gap=gap, theta_d=theta_d, phi=phi, ground_branch=branch
    )


def solve_point(params: MappedParams, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """xi, transformed parameters and approximate spectrum in one call."""
    xi = solve_xi(params, tol, max_iter)
    tp = transformed_params(params, xi)
    return xi, tp, approx_spectrum(params, tp)


# -- ground states ----------------------------------------------------------------


def coherent_tail(xi_abs: float, N: int) -> float:
    """|xi|^N / sqrt(N!), the first amplitude dropped by truncation at N."""
    if xi_abs == 0:
        return 0.0
    return math.exp(N * math.log(xi_abs) - 0.5 * math.lgamma(N + 1))


def required_truncation(xi_abs: float, bound: float = TAIL_BOUND, minimum: int = 4) -> int:
    """Smallest N >= minimum with coherent_tail(xi_abs, N) < bound.

    Two extra levels are added so that a displaced |1> also fits.
    """
    N = minimum
    while coherent_tail(xi_abs, N) >= bound:
        N += 1
    return N + 2


def _check_tail(xi_abs, N):
    if coherent_tail(xi_abs, N) >= TAIL_BOUND:
        raise TruncationTooSmall(
            f"N={N} too small for |xi|={xi_abs:.3g}: tail {coherent_tail(xi_abs, N):.2e} "
            f">= {TAIL_BOUND:.0e}; need N >= {required_truncation(xi_abs)}"
        )


def polaron_generator(xi: complex, N: int) -> np.ndarray:
    """Truncated S = (xi b+ - xi* b) sx (anti-Hermitian)."""
    b = annihilation(N)
    boson = xi * b.conj().T - np.conj(xi) * b
    return np.kron(boson, SIGMA_X)


def apply_inverse_polaron(xi: complex, vector, N: int) -> np.ndarray:
    """exp(-S) @ vector with the truncated generator."""
    return expm(-polaron_generator(xi, N)) @ np.asarray(vector, dtype=complex)


def coherent_amplitudes(alpha: complex, N: int) -> np.ndarray:
    n = np.arange(N)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    with np.errstate(divide="ignore"):
        if alpha == 0:
            out = np.zeros(N, dtype=complex)
            out[0] = 1.0
            return out
        mag = np.exp(-abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * log_fact)
    return mag * np.exp(1j * n * np.angle(alpha))


def g1_closed_form(xi: complex, N: int) -> np.ndarray:
    """(|-xi;+> - |xi;->)/sqrt(2) from coherent-state coefficients."""
    plus = np.array([1.0, 1.0]) / math.sqrt(2)  # (g, e) components of |+>
    minus = np.array([-1.0, 1.0]) / math.sqrt(2)
    v = np.kron(coherent_amplitudes(-xi, N), plus) - np.kron(coherent_amplitudes(xi, N), minus)
    return v / math.sqrt(2)


def _bare(N, pairs):
    v = np.zeros(2 * N, dtype=complex)
    for (n, s), a in pairs:
        v[index(n, s)] = a
    return v


def _xi_of(xi):
    return xi.xi if isinstance(xi, XiSolution) else complex(xi)


def ground_state_g1(params: MappedParams, xi, truncation=None) -> StateVector:
    """exp(-S)|0;g>, the ground state while the approximate gap is positive."""
    z = _xi_of(xi)
    N = required_truncation(abs(z)) if truncation is None else check_truncation(truncation)
    _check_tail(abs(z), N)
    v = apply_inverse_polaron(z, _bare(N, [((0, G), 1.0)]), N)
    return StateVector(v, N)


def ground_state_g2(params: MappedParams, xi, spec: ApproxSpectrum, truncation=None) -> StateVector:
    """exp(-S)[cos(theta_d/2)|0;e> - sin(theta_d/2) e^{i phi} |1;g>]."""
    z = _xi_of(xi)
    N = required_truncation(abs(z)) if truncation is None else check_truncation(truncation)
    _check_tail(abs(z), N)
    c, s = math.cos(spec.theta_d / 2), math.sin(spec.theta_d / 2)
    bare = _bare(N, [((0, E), c), ((1, G), -s * np.exp(1j * spec.phi))])
    return StateVector(apply_inverse_polaron(z, bare, N), N)


def approx_ground_state(params: MappedParams, truncation=None, tol=DEFAULT_TOL):
    """Ground state picked by the sign of the approximate gap.

    Returns ``(state, branch)``; at exact degeneracy the G1 state is returned
    with ``Branch.DEGENERATE``.
    """
    xi, tp, spec = solve_point(params, tol)
    if spec.ground_branch is Branch.G2:
        return ground_state_g2(params, xi, spec, truncation), spec.ground_branch
    return ground_state_g1(params, xi, truncation), spec.ground_branch
