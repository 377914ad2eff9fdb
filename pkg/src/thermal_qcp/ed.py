"""Exact diagonalization of small periodic rings.

Dense Hamiltonians of the XXZ and XY chains are diagonalized in full and
the Gibbs state is reduced to a pair of sites. The results serve as an
independent reference for the infinite-chain modules.

Site 0 is the most significant bit of the computational basis index.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .errors import DomainError, SymmetryViolationError
from .xstate import make_xstate
from .xxz import XXZParams
from .xy import XYParams

MAX_SITES = 12
#: Largest tolerated element outside the X pattern of a reduced state.
LEAKAGE_TOL = 1e-10

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_ISY = np.array([[0.0, 1.0], [-1.0, 0.0]])  # i * sigma_y, real
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class RingSpec:
    """A periodic ring of spins.

    Parameters
    ----------
    length : int
        Number of sites, between 2 and ``MAX_SITES``.
    model : XXZParams or XYParams
        Hamiltonian parameters. Their inverse temperature is not used
        here; thermal functions take ``beta`` separately.
    """

    length: int
    model: Union[XXZParams, XYParams]

    def __post_init__(self):
        if int(self.length) != self.length or not 2 <= self.length <= MAX_SITES:
            raise DomainError(f"ring length must be an integer in [2, {MAX_SITES}], got {self.length}")
        if not isinstance(self.model, (XXZParams, XYParams)):
            raise DomainError("model must be XXZParams or XYParams")


def _site_op(op, i, n):
    return sparse.kron(
        sparse.kron(sparse.identity(2**i), sparse.csr_matrix(op)),
        sparse.identity(2 ** (n - i - 1)),
        format="csr",
    )


def _bond(op_a, op_b, i, j, n):
    return _site_op(op_a, i, n) @ _site_op(op_b, j, n)


def build_hamiltonian(spec):
    """Dense real Hamiltonian of the ring.

    Parameters
    ----------
    spec : RingSpec

    Returns
    -------
    ndarray, shape (2**L, 2**L)
        Real symmetric matrix.
    """
    n = spec.length
    m = spec.model
    dim = 2**n
    ham = sparse.csr_matrix((dim, dim))
    for i in range(n):
        j = (i + 1) % n
        xx = _bond(_SX, _SX, i, j, n)
        yy = -_bond(_ISY, _ISY, i, j, n)
        zz = _bond(_SZ, _SZ, i, j, n)
        if isinstance(m, XXZParams):
            ham += m.j * (xx + yy + m.delta * zz)
            ham -= 0.5 * m.h * _site_op(_SZ, i, n)
        else:
            ham -= 0.5 * m.lam * ((1 + m.gamma) * xx + (1 - m.gamma) * yy)
            ham -= _site_op(_SZ, i, n)
    return ham.toarray()


@dataclass(frozen=True)
class Spectrum:
    """Full eigendecomposition of a ring Hamiltonian."""

    spec: RingSpec
    energies: np.ndarray
    vectors: np.ndarray


def diagonalize(spec):
    """Return the full spectrum of the ring."""
    e, v = np.linalg.eigh(build_hamiltonian(spec))
    return Spectrum(spec, e, v)


def _weights(spectrum, beta):
    logw = -beta * spectrum.energies
    return np.exp(logw - logsumexp(logw))


def free_energy_per_site(spectrum, beta):
    """``-ln Z / (beta L)``."""
    return float(-logsumexp(-beta * spectrum.energies) / (beta * spectrum.spec.length))


def energy_per_site(spectrum, beta):
    """Thermal expectation of the Hamiltonian divided by the ring length."""
    return float(_weights(spectrum, beta) @ spectrum.energies / spectrum.spec.length)


def reduced_pair_matrix(spectrum, beta, sites):
    """Gibbs state traced down to two sites.

    Parameters
    ----------
    spectrum : Spectrum
    beta : float
    sites : tuple of int
        Two distinct site indices.

    Returns
    -------
    ndarray, shape (4, 4)
        Ordered as ``|s_i s_j>`` with ``s = 0`` for spin up.
    """
    n = spectrum.spec.length
    i, j = (int(s) % n for s in sites)
    if i == j:
        raise DomainError("pair sites must differ")
    w = _weights(spectrum, beta)
    keep = w > 1e-300
    vec = spectrum.vectors[:, keep].reshape((2,) * n + (-1,))
    vec = np.moveaxis(vec, (i, j), (0, 1)).reshape(4, -1, keep.sum())
    return np.einsum("arn,brn,n->ab", vec, vec, w[keep])


_X_PATTERN = np.array(
    [[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]], dtype=bool
)


def thermal_pair_state(spectrum_or_spec, beta, sites=(0, 1)):
    """Reduced Gibbs state of two sites as an X state.

    Parameters
    ----------
    spectrum_or_spec : Spectrum or RingSpec
    beta : float
        Inverse temperature.
    sites : tuple of int

    Returns
    -------
    XState

    Raises
    ------
    SymmetryViolationError
        If elements outside the X pattern, an imbalance of the two middle
        populations, or an asymmetric coherence exceed 1e-10.
    """
    spectrum = spectrum_or_spec
    if isinstance(spectrum, RingSpec):
        spectrum = diagonalize(spectrum)
    rho = reduced_pair_matrix(spectrum, beta, sites)
    leak = max(
        np.abs(rho[~_X_PATTERN]).max(),
        abs(rho[1, 1] - rho[2, 2]),
        abs(rho[1, 2] - rho[2, 1]),
        abs(rho[0, 3] - rho[3, 0]),
    )
    if leak > LEAKAGE_TOL:
        raise SymmetryViolationError(f"reduced state leaves the X form by {leak:.2e}")
    return make_xstate(
        rho[0, 0], 0.5 * (rho[1, 1] + rho[2, 2]), rho[3, 3],
        0.5 * (rho[1, 2] + rho[2, 1]), 0.5 * (rho[0, 3] + rho[3, 0]),
        tol=LEAKAGE_TOL,
    )


def pair_correlators(state):
    """Magnetization and the three two-point correlators of a pair state.

    Returns
    -------
    dict
        Keys ``sz``, ``sxsx``, ``sysy``, ``szsz``.
    """
    return {
        "sz": state.rho11 - state.rho44,
        "sxsx": 2 * (state.rho23 + state.rho14),
        "sysy": 2 * (state.rho23 - state.rho14),
        "szsz": state.rho11 + state.rho44 - 2 * state.rho22,
    }


def xy_formula_convention_state(length, p, k):
    """Ring state in the convention of the infinite-chain XY formulas.

    The closed-form XY integrals describe the ring Hamiltonian at inverse
    temperature ``beta / 2`` with all spins flipped. This returns the ring
    state mapped into that convention, for direct comparison with
    :func:`thermal_qcp.xy.pair_state`.

    Parameters
    ----------
    length : int
    p : XYParams
    k : int
        Pair separation.

    Returns
    -------
    XState
    """
    spectrum = diagonalize(RingSpec(length, p))
    return thermal_pair_state(spectrum, p.beta / 2, (0, k)).flipped()
