"""Exact diagonalization of the untransformed Hamiltonian in a truncated Fock space.

This is the ground truth every approximation is checked against. The
matrix is dense; ``2N`` stays in the hundreds for all couplings of interest.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import E, G, StateVector, check_truncation, index, parity_diagonal, parity_label
from .errors import EigensolverError, InputError
from .units import MappedParams

log = logging.getLogger(__name__)

N_MAX = 4096
# eigenvalues closer than this (relative to the energy scale) are treated as degenerate
CLUSTER_RTOL = 1e-10


def build_hamiltonian(params: MappedParams, N: int) -> np.ndarray:
    """Dense ``2N x 2N`` Hamiltonian.

    Couplings are placed in the strict lower triangle and mirrored, so the
    result is exactly Hermitian.
    """
    N = check_truncation(N)
    dim = 2 * N
    lower = np.zeros((dim, dim), dtype=complex)
    half1 = params.lambda1 / 2.0
    half2 = params.lambda2 / 2.0
    for n in range(N):
        # (lambda1/2) b+ s- : |n;e> -> sqrt(n+1) |n+1;g>
        if n + 1 < N:
            lower[index(n + 1, G), index(n, E)] = math.sqrt(n + 1) * half1
        # (lambda2/2) b s- : |n;e> -> sqrt(n) |n-1;g>, stored through its conjugate
        if n >= 1:
            lower[index(n, E), index(n - 1, G)] = math.sqrt(n) * np.conj(half2)
    n_diag = np.repeat(np.arange(N, dtype=float), 2)
    sz = np.tile([-1.0, 1.0], N)
    H = lower + lower.conj().T
    H[np.diag_indices(dim)] = params.Eb * n_diag + 0.5 * params.Ea * sz
    return H


def hermiticity_defect(M) -> float:
    return float(np.max(np.abs(M - M.conj().T)))


@dataclass
class SpectrumExact:
    energies: np.ndarray
    states: list
    truncation: int
    converged: bool = True
    history: list = field(default_factory=list)

    @property
    def parities(self):
        return [s.parity for s in self.states]

    def lowest_with_parity(self, parity):
        for energy, state in zip(self.energies, self.states):
            if state.parity == parity:
                return float(energy), state
        raise LookupError(f"no state of parity {parity} among the {len(self.states)} kept")

    def signed_gap(self) -> float:
        """Lowest even-parity energy minus lowest odd-parity energy.

        Positive when the ground state is on the |0;g>-like (odd) branch,
        negative once the dressed (even) branch has dropped below it.
        """
        e_even, _ = self.lowest_with_parity(1)
        e_odd, _ = self.lowest_with_parity(-1)
        return e_even - e_odd

    def to_dict(self):
        return {
            "truncation": self.truncation,
            "converged": self.converged,
            "energies": [float(e) for e in self.energies],
            "parities": self.parities,
            "amplitudes": [
                [[float(a.real), float(a.imag)] for a in s.amplitudes] for s in self.states
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _resolve_degenerate(energies, vectors, scale):
    """Rotate degenerate clusters onto parity eigenvectors, parity +1 first."""
    P = parity_diagonal(vectors.shape[0] // 2)
    order_e, order_v = [], []
    i, k = 0, len(energies)
    while i < k:
        j = i + 1
        while j < k and energies[j] - energies[i] <= CLUSTER_RTOL * scale:
            j += 1
        block = vectors[:, i:j]
        if j - i > 1:
            p_small = block.conj().T @ (P[:, None] * block)
            p_vals, p_vecs = np.linalg.eigh(p_small)
            block = block @ p_vecs
            order = np.argsort(-np.round(p_vals, 6), kind="stable")
            block = block[:, order]
        for col in range(block.shape[1]):
            order_e.append(energies[i + col])
            order_v.append(block[:, col])
        i = j
    return np.array(order_e), order_v


def _fix_phase(v):
    # largest component real positive, so dumps are reproducible
    m = np.argmax(np.abs(v))
    return v * (abs(v[m]) / v[m])


def exact_spectrum(params: MappedParams, N: int, k: int = 2) -> SpectrumExact:
    """The ``k`` lowest eigenpairs at truncation ``N``."""
    N = check_truncation(N)
    if not 1 <= k <= 2 * N:
        raise InputError(f"k must lie in [1, {2 * N}], got {k!r}")
    H = build_hamiltonian(params, N)
    try:
        w, v = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigh failed at N={N}: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise EigensolverError(f"non-finite eigenvalues at N={N}")
    # grab one extra so a degenerate pair straddling k is kept whole
    keep = min(2 * N, k + 1)
    scale = params.Ea + params.Eb + abs(params.lambda1) + abs(params.lambda2)
    energies, vectors = _resolve_degenerate(w[:keep], v[:, :keep], scale)
    states = [StateVector(_fix_phase(vec), N) for vec in vectors[:k]]
    return SpectrumExact(energies=energies[:k], states=states, truncation=N)


def converge_truncation(
    params: MappedParams, N0: int = 8, tol: float = 1.0, k: int = 2, n_max: int = N_MAX
) -> SpectrumExact:
    """Double ``N`` until each of the two lowest energies moves by less than ``tol`` (rad/s).

    Returns the spectrum at the final ``N`` with ``converged`` set; gives up
    with ``converged=False`` once ``N`` would exceed ``n_max``.
    """
    N = check_truncation(N0)
    n_track = max(2, k)
    prev = exact_spectrum(params, N, min(n_track, 2 * N))
    history = [(N, [float(e) for e in prev.energies[:2]])]
    while 2 * N <= n_max:
        N *= 2
        cur = exact_spectrum(params, N, n_track)
        history.append((N, [float(e) for e in cur.energies[:2]]))
        if np.all(np.abs(cur.energies[:2] - prev.energies[:2]) < tol):
            cur.history = history
            return cur
        prev = cur
    log.warning("truncation did not converge below N=%d", n_max)
    prev.converged = False
    prev.history = history
    return prev


def state_parity(state: StateVector) -> int:
    return parity_label(state.amplitudes)
