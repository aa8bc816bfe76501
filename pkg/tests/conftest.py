import pytest

from soc_rabi.units import PAPER_ANCHOR, MappedParams, MaterialSpec, params_at

PAPER_EA = 1.35e9
PAPER_EB = 1.70e9


@pytest.fixture
def material():
    return MaterialSpec()


@pytest.fixture
def anchored():
    """Mapped parameters at 0.01 T with the quoted (Ea, Eb)."""

    def make(alpha=0.0, beta=0.0, B=0.01):
        return params_at(B, alpha, beta, anchor=PAPER_ANCHOR)

    return make


@pytest.fixture
def jc_params():
    def make(Ea=PAPER_EA, Eb=PAPER_EB, rashba=0.0):
        return MappedParams.from_magnitudes(Ea, Eb, rashba=rashba)

    return make
