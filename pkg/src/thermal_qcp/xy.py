"""Thermal observables of the infinite XY chain in a transverse field.

The chain is solved by free fermions. Single-site magnetization and the
fermionic two-point function ``G_k`` are one-dimensional integrals over
the Brillouin half-zone; in-plane spin correlators are Toeplitz
determinants of ``G_k`` values.

The field-free Hamiltonian term carries weight ``lam`` relative to the
transverse field, and ``gamma`` sets the anisotropy between the x and y
couplings (``gamma = 1`` is the transverse Ising chain, ``gamma = 0`` the
XX chain).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec

from .errors import DomainError, QuadratureError
from .xstate import XState

#: Absolute accuracy requested from every quadrature.
QUAD_TOL = 1e-10
#: Inverse temperature used to represent the ground state.
BETA_GROUND = 1e8
# forced panel boundaries resolving the gapless point at phi = pi
_BREAKPOINTS = tuple(np.pi - d for d in (1e-2, 1e-4, 1e-6))


@dataclass(frozen=True)
class XYParams:
    """Parameters of the thermal XY chain.

    Parameters
    ----------
    lam : float
        Coupling relative to the transverse field, ``>= 0``.
    gamma : float
        Anisotropy in ``[-1, 1]``.
    beta : float
        Inverse temperature, finite and positive. Use ``BETA_GROUND`` for
        ground-state values.
    """

    lam: float
    gamma: float
    beta: float

    def __post_init__(self):
        for name in ("lam", "gamma", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not np.isfinite(self.lam) or self.lam < 0:
            raise DomainError(f"lam must be finite and >= 0, got {self.lam}")
        if not -1.0 <= self.gamma <= 1.0:
            raise DomainError(f"gamma must lie in [-1, 1], got {self.gamma}")
        if not np.isfinite(self.beta) or self.beta <= 0 or self.beta > BETA_GROUND:
            raise DomainError(f"beta must lie in (0, {BETA_GROUND:g}], got {self.beta}")


@dataclass(frozen=True)
class PairObservables:
    """Magnetization and correlators of two spins `k` sites apart."""

    sz: float
    sxsx: float
    sysy: float
    szsz: float
    k: int


def dispersion(phi, p):
    """Quasiparticle energy at momentum `phi`.

    Parameters
    ----------
    phi : float or array_like
        Momentum in ``[0, pi]``.
    p : XYParams

    Returns
    -------
    float or ndarray
        Non-negative excitation energy.
    """
    phi = np.asarray(phi, dtype=float)
    w = 0.5 * np.hypot(p.gamma * p.lam * np.sin(phi), 1.0 + p.lam * np.cos(phi))
    return float(w) if w.ndim == 0 else w


def _thermal_weight(phi, p):
    # tanh(beta w) / (2 pi w), continuous through w = 0
    w = dispersion(phi, p)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(w > 0, np.tanh(p.beta * w) / np.where(w > 0, w, 1.0), p.beta)
    return r / (2.0 * np.pi)


@lru_cache(maxsize=4096)
def _g_table(lam, gamma, beta, kmax):
    p = XYParams(lam, gamma, beta)
    ks = np.arange(-kmax, kmax + 1)

    def integrand(phi):
        wt = _thermal_weight(phi, p)
        even = (1.0 + lam * np.cos(phi)) * np.cos(ks * phi)
        odd = gamma * lam * np.sin(ks * phi) * np.sin(phi)
        return wt * (even - odd)

    val, err = quad_vec(
        integrand, 0.0, np.pi, epsabs=QUAD_TOL, epsrel=0.0, points=_BREAKPOINTS, limit=20000
    )
    if not np.all(np.isfinite(val)) or err > QUAD_TOL:
        raise QuadratureError(
            f"G_k quadrature reached error {err:.2e} > {QUAD_TOL:.0e}",
            error_estimate=err,
            params=p,
        )
    val.setflags(write=False)
    return val


def g_values(p, kmax):
    """Return ``G_k`` for ``k = -kmax .. kmax`` as a read-only array.

    Results are cached per parameter point, so repeated determinant
    evaluations share one quadrature.
    """
    kmax = int(kmax)
    if kmax < 0:
        raise DomainError("kmax must be non-negative")
    stored = max(kmax, 4)
    table = _g_table(p.lam, p.gamma, p.beta, stored)
    return table[stored - kmax : stored + kmax + 1]


def g_function(k, p):
    """Fermionic two-point function ``G_k``.

    Parameters
    ----------
    k : int
        Separation, negative values allowed.
    p : XYParams

    Returns
    -------
    float
    """
    k = int(k)
    table = g_values(p, abs(k))
    return float(table[k + abs(k)])


def transverse_magnetization(p):
    """Thermal expectation of the transverse spin component.

    Equal to ``-G_0``.

    Parameters
    ----------
    p : XYParams

    Returns
    -------
    float
        Value in ``[-1, 1]``.
    """
    return -g_function(0, p)


def _det(m):
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if n <= 4:
        # cofactor expansion along the first row
        return sum(
            (-1) ** j * m[0, j] * _det(np.delete(m[1:], j, axis=1)) for j in range(n)
        )
    return np.linalg.det(m)


def _toeplitz_det(p, k, offset):
    g = g_values(p, k + 1)
    center = k + 1
    i, j = np.indices((k, k))
    return float(_det(g[center + i - j + offset]))


def correlator_xx(k, p):
    """In-plane x correlator of spins `k` sites apart."""
    _check_separation(k)
    return _toeplitz_det(p, k, -1)


def correlator_yy(k, p):
    """In-plane y correlator of spins `k` sites apart."""
    _check_separation(k)
    return _toeplitz_det(p, k, +1)


def correlator_zz(k, p):
    """Transverse correlator of spins `k` sites apart."""
    _check_separation(k)
    g = g_values(p, k)
    mz = -g[k]
    return float(mz * mz - g[2 * k] * g[0])


def _check_separation(k):
    if int(k) != k or k < 1:
        raise DomainError(f"separation must be a positive integer, got {k!r}")


def pair_observables(k, p):
    """All one- and two-point functions of a pair `k` sites apart."""
    _check_separation(k)
    return PairObservables(
        sz=transverse_magnetization(p),
        sxsx=correlator_xx(k, p),
        sysy=correlator_yy(k, p),
        szsz=correlator_zz(k, p),
        k=int(k),
    )


def pair_state(k, p):
    """Reduced density matrix of two spins `k` sites apart.

    Parameters
    ----------
    k : int
        Separation, ``>= 1``.
    p : XYParams

    Returns
    -------
    XState

    Raises
    ------
    NumericalInconsistencyError
        If the assembled matrix violates positivity by more than 1e-9.
    """
    obs = pair_observables(k, p)
    return XState.from_correlators(obs.sz, obs.szsz, obs.sxsx, obs.sysy, tol=1e-9)
