"""Truncated Fock x spin basis shared by every state constructor.

Ordering is Fock-major, spin-minor: index ``2*n + s`` with ``s = 0`` for
``g`` (spin down, sz = -1) and ``s = 1`` for ``e`` (sz = +1).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

G, E = 0, 1
PARITY_TOL = 1e-8
NORM_TOL = 1e-10


def index(n: int, spin: int) -> int:
    return 2 * n + spin


def check_truncation(N):
    if int(N) != N or N < 2:
        raise InputError(f"truncation N must be an integer >= 2, got {N!r}")
    return int(N)


def annihilation(N):
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), k=1)


def number(N):
    return np.diag(np.arange(N, dtype=float))


SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.diag([-1.0, 1.0])  # rows ordered (g, e)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e|


def boson_op(op_N):
    return np.kron(op_N, np.eye(2))


def spin_op(op_2, N):
    return np.kron(np.eye(N), op_2)


def parity_diagonal(N):
    """Diagonal of sz * (-1)^(b+b) in the basis ordering."""
    n = np.repeat(np.arange(N), 2)
    sz = np.tile([-1.0, 1.0], N)
    return sz * (-1.0) ** n


def parity_expectation(amplitudes):
    amplitudes = np.asarray(amplitudes)
    N = amplitudes.size // 2
    return float(np.real(np.vdot(amplitudes, parity_diagonal(N) * amplitudes)))


def parity_label(amplitudes, tol=PARITY_TOL):
    p = parity_expectation(amplitudes)
    if p > 1 - tol:
        return 1
    if p < -1 + tol:
        return -1
    return 0  # mixed


def basis_vector(N, n, spin):
    v = np.zeros(2 * N, dtype=complex)
    v[index(n, spin)] = 1.0
    return v


@dataclass
class StateVector:
    """Normalized amplitudes over the truncated basis.

    ``parity`` is +1, -1 or 0 (mixed); it is derived from the amplitudes
    when not given.
    """

    amplitudes: np.ndarray
    truncation: int
    parity: int = field(default=None)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 * self.truncation,):
            raise InputError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match "
                f"truncation {self.truncation}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (norm = {norm!r})")
        if self.parity is None:
            self.parity = parity_label(self.amplitudes)

    @classmethod
    def normalized(cls, amplitudes, truncation):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        return cls(amplitudes / np.linalg.norm(amplitudes), truncation)

    def overlap(self, other: "StateVector") -> complex:
        if other.truncation != self.truncation:
            raise InputError("states have different truncations")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expectation(self, op) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))

    def amplitude(self, n, spin) -> complex:
        return complex(self.amplitudes[index(n, spin)])

    def to_dict(self):
        return {
            "truncation": self.truncation,
            "parity": self.parity,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }
