"""Quantum correlations of two-qubit X states.

An X state has nonzero entries only on the diagonal and anti-diagonal of
its density matrix in the computational basis ``|00>, |01>, |10>, |11>``.
Here the two middle populations are equal and both coherences are real,
which is the form produced by the translation-invariant spin chains in
this package.

All entropies are in bits.
"""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericalInconsistencyError

#: Tolerance on trace and eigenvalue positivity of a stored state.
STATE_TOL = 1e-12
#: Two conditional entropies closer than this count as a tie.
BRANCH_TIE_TOL = 1e-12
#: Below this magnitude the product of coherences is treated as zero.
ZERO_COHERENCE_PRODUCT = 1e-15
#: Negative discord above this value is roundoff and is clamped to zero.
DISCORD_CLAMP = 1e-10
#: Brute force beating every closed-form branch by more than this marks
#: the optimal measurement as oblique.
OBLIQUE_MARGIN = 1e-9


class Branch(str, Enum):
    """Measurement direction on qubit B that minimizes the conditional entropy.

    ``Z``, ``Y`` and ``X`` are projective measurements along the
    corresponding Pauli axis. ``OBLIQUE`` is reported when a numerical
    search finds a direction strictly better than all three axes.
    """

    Z = "Z"
    Y = "Y"
    X = "X"
    OBLIQUE = "OBLIQUE"


@dataclass(frozen=True)
class XState:
    """Two-qubit X-form density matrix with equal middle populations.

    Parameters
    ----------
    rho11, rho22, rho44 : float
        Populations of ``|00>``, ``|01>`` (equal to that of ``|10>``) and
        ``|11>``.
    rho23 : float
        Real coherence between ``|01>`` and ``|10>``.
    rho14 : float
        Real coherence between ``|00>`` and ``|11>``.

    Raises
    ------
    DomainError
        If the matrix is not a valid density matrix.
    """

    rho11: float
    rho22: float
    rho44: float
    rho23: float
    rho14: float

    def __post_init__(self):
        vals = (self.rho11, self.rho22, self.rho44, self.rho23, self.rho14)
        if not all(np.isfinite(v) for v in vals):
            raise DomainError(f"non-finite X-state element in {vals}")
        for name in ("rho11", "rho22", "rho44", "rho23", "rho14"):
            object.__setattr__(self, name, float(getattr(self, name)))
        trace = self.rho11 + 2.0 * self.rho22 + self.rho44
        if abs(trace - 1.0) > STATE_TOL:
            raise DomainError(f"trace is {trace!r}, expected 1")
        lam = xstate_eigenvalues(self)
        if lam.min() < -STATE_TOL:
            raise DomainError(f"X state is not positive, eigenvalues {lam}")

    def matrix(self):
        """Return the dense 4x4 density matrix."""
        r = self
        return np.array(
            [
                [r.rho11, 0.0, 0.0, r.rho14],
                [0.0, r.rho22, r.rho23, 0.0],
                [0.0, r.rho23, r.rho22, 0.0],
                [r.rho14, 0.0, 0.0, r.rho44],
            ]
        )

    def flipped(self):
        """Return the state after a global spin flip on both qubits."""
        return XState(self.rho44, self.rho22, self.rho11, self.rho23, self.rho14)

    @classmethod
    def from_correlators(cls, sz, szsz, sxsx, sysy, tol=1e-9):
        """Assemble the state of a spin pair from its one- and two-point functions.

        Parameters
        ----------
        sz : float
            Single-site magnetization, the same on both sites.
        szsz, sxsx, sysy : float
            Two-point correlators along each axis.
        tol : float
            Largest tolerated positivity violation before raising.
        """
        return make_xstate(
            (1.0 + 2.0 * sz + szsz) / 4.0,
            (1.0 - szsz) / 4.0,
            (1.0 - 2.0 * sz + szsz) / 4.0,
            (sxsx + sysy) / 4.0,
            (sxsx - sysy) / 4.0,
            tol=tol,
        )


def make_xstate(rho11, rho22, rho44, rho23, rho14, tol=1e-9):
    """Build an :class:`XState` from slightly inexact elements.

    Elements computed numerically can violate positivity at roundoff
    level. Violations up to `tol` are projected away; larger ones raise.

    Parameters
    ----------
    rho11, rho22, rho44, rho23, rho14 : float
        Matrix elements as in :class:`XState`.
    tol : float
        Largest tolerated violation.

    Returns
    -------
    XState

    Raises
    ------
    NumericalInconsistencyError
        If the elements are further than `tol` from a valid state.
    """
    vals = np.array([rho11, rho22, rho44, rho23, rho14], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalInconsistencyError(f"non-finite X-state elements {vals}")
    r11, r22, r44, r23, r14 = vals
    trace = r11 + 2 * r22 + r44
    lam = _eigenvalues(r11, r22, r44, r23, r14)
    worst = max(-lam.min(), -min(r11, r22, r44), abs(trace - 1.0))
    if worst > tol:
        raise NumericalInconsistencyError(
            f"X state violates positivity or normalization by {worst:.3e} "
            f"(tolerance {tol:.1e}); elements {vals}"
        )
    r11, r22, r44 = max(r11, 0.0), max(r22, 0.0), max(r44, 0.0)
    trace = r11 + 2 * r22 + r44
    r11, r22, r44, r23, r14 = (v / trace for v in (r11, r22, r44, r23, r14))
    r23 = float(np.clip(r23, -r22, r22))
    bound = np.sqrt(r11 * r44)
    r14 = float(np.clip(r14, -bound, bound))
    r44 = 1.0 - r11 - 2 * r22
    return XState(r11, r22, r44, r23, r14)


def binary_entropy_f(theta):
    """Entropy of a qubit whose Bloch vector has length `theta`.

    Parameters
    ----------
    theta : float or array_like
        Bloch vector length in ``[0, 1]``.

    Returns
    -------
    float or ndarray
        ``-p log2 p - q log2 q`` with ``p, q = (1 -+ theta) / 2``.

    Raises
    ------
    DomainError
        If any `theta` is outside ``[0, 1]``.
    """
    t = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError(f"Bloch length must lie in [0, 1], got {theta!r}")
    out = _shannon_bits((1.0 - t) / 2.0) + _shannon_bits((1.0 + t) / 2.0)
    return float(out) if out.ndim == 0 else out


def _shannon_bits(p):
    """Return ``-p log2 p`` elementwise with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > 0.0, p, 1.0)
    return np.where(p > 0.0, -p * np.log2(safe), 0.0)


def _f_unchecked(t):
    # binary_entropy_f without validation, for roundoff-level overshoot
    t = np.clip(t, 0.0, 1.0)
    return _shannon_bits((1.0 - t) / 2.0) + _shannon_bits((1.0 + t) / 2.0)


def _eigenvalues(r11, r22, r44, r23, r14):
    root = np.sqrt((r11 - r44) ** 2 + 4.0 * r14**2)
    return np.array(
        [
            (r11 + r44 + root) / 2.0,
            (r11 + r44 - root) / 2.0,
            r22 + abs(r23),
            r22 - abs(r23),
        ]
    )


def xstate_eigenvalues(s):
    """Eigenvalues of an X state from their closed forms.

    Parameters
    ----------
    s : XState

    Returns
    -------
    ndarray, shape (4,)
        The outer-block pair followed by the inner-block pair.
    """
    return _eigenvalues(s.rho11, s.rho22, s.rho44, s.rho23, s.rho14)


class ClosedForm(NamedTuple):
    """Result of the analytic conditional-entropy minimization."""

    value: float
    branch: Branch
    needs_numerical: bool


def _axis_entropies(s):
    b1 = s.rho11 + s.rho22
    b2 = s.rho44 + s.rho22
    t1 = abs(s.rho22 - s.rho11) / b1 if b1 > 0 else 0.0
    t2 = abs(s.rho22 - s.rho44) / b2 if b2 > 0 else 0.0
    t_y = np.sqrt(4 * (s.rho14 - s.rho23) ** 2 + (s.rho11 - s.rho44) ** 2)
    t_x = np.sqrt(4 * (s.rho14 + s.rho23) ** 2 + (s.rho11 - s.rho44) ** 2)
    return (
        float(b1 * _f_unchecked(t1) + b2 * _f_unchecked(t2)),
        float(_f_unchecked(t_y)),
        float(_f_unchecked(t_x)),
    )


def conditional_entropy_closed(s):
    """Conditional entropy minimized over the three Pauli-axis measurements.

    Parameters
    ----------
    s : XState

    Returns
    -------
    ClosedForm
        The minimum, the axis attaining it, and whether the state lies in
        the regime ``rho14 * rho23 == 0`` where the true minimum may be at
        an oblique direction and must be confirmed numerically.

    Notes
    -----
    Ties within ``BRANCH_TIE_TOL`` resolve in the order Z, Y, X.
    """
    values = _axis_entropies(s)
    best = min(values)
    branch = next(
        b for b, v in zip((Branch.Z, Branch.Y, Branch.X), values)
        if v <= best + BRANCH_TIE_TOL
    )
    needs = abs(s.rho14 * s.rho23) <= ZERO_COHERENCE_PRODUCT
    return ClosedForm(best, branch, needs)


def measured_conditional_entropy(s, theta, phi):
    """Conditional entropy of A after measuring B along a Bloch direction.

    Parameters
    ----------
    s : XState
    theta, phi : float or array_like
        Polar and azimuthal angles of the projective measurement on B.

    Returns
    -------
    float or ndarray
        ``sum_b p_b S(rho_A|b)`` in bits, broadcast over the angles.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    nx = np.sin(theta) * np.cos(phi)
    ny = np.sin(theta) * np.sin(phi)
    nz = np.cos(theta)
    a3 = s.rho11 - s.rho44
    txx = 2.0 * (s.rho23 + s.rho14)
    tyy = 2.0 * (s.rho23 - s.rho14)
    tzz = s.rho11 + s.rho44 - 2.0 * s.rho22
    total = np.zeros(theta.shape)
    for sign in (1.0, -1.0):
        p = (1.0 + sign * a3 * nz) / 2.0
        length = np.sqrt((sign * txx * nx) ** 2 + (sign * tyy * ny) ** 2 + (a3 + sign * tzz * nz) ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            bloch = np.where(p > 1e-300, length / (2.0 * p), 0.0)
        total += p * _f_unchecked(bloch)
    return total if total.ndim else float(total)


def _local_minima(values, count):
    # values indexed [theta, phi]; phi is periodic, theta is not
    padded = np.pad(values, ((1, 1), (0, 0)), constant_values=np.inf)
    is_min = np.ones(values.shape, dtype=bool)
    for dt in (-1, 0, 1):
        for dp in (-1, 0, 1):
            if dt == 0 and dp == 0:
                continue
            shifted = np.roll(padded, dp, axis=1)[1 + dt : 1 + dt + values.shape[0]]
            is_min &= values <= shifted
    idx = np.flatnonzero(is_min)
    if idx.size == 0:
        idx = np.array([np.argmin(values)])
    order = idx[np.argsort(values.ravel()[idx], kind="stable")][:count]
    return [np.unravel_index(i, values.shape) for i in order]


def brute_force_search(s, resolution=256, rounds=3, zoom=10, candidates=8):
    """Grid search for the measurement minimizing the conditional entropy.

    A ``resolution x resolution`` grid over ``theta in [0, pi]`` and
    ``phi in [0, 2 pi)`` is scanned. Each of the best `candidates` local
    minima is then refined `rounds` times on a grid `zoom` times finer
    spanning one coarse cell either side.

    Returns
    -------
    value : float
        Smallest conditional entropy found.
    theta, phi : float
        Angles attaining it.
    """
    if resolution < 4:
        raise DomainError("brute-force resolution must be at least 4")
    thetas = np.linspace(0.0, np.pi, resolution)
    phis = 2.0 * np.pi * np.arange(resolution) / resolution
    grid = measured_conditional_entropy(s, thetas[:, None], phis[None, :])
    best = (np.inf, 0.0, 0.0)
    for it, ip in _local_minima(grid, candidates):
        th, ph = thetas[it], phis[ip]
        step_t, step_p = thetas[1] - thetas[0], phis[1] - phis[0]
        val = grid[it, ip]
        for _ in range(rounds):
            offs = np.arange(-zoom, zoom + 1) / zoom
            tt = np.clip(th + step_t * offs, 0.0, np.pi)
            pp = ph + step_p * offs
            local = measured_conditional_entropy(s, tt[:, None], pp[None, :])
            i, j = np.unravel_index(np.argmin(local), local.shape)
            if local[i, j] <= val:
                val, th, ph = local[i, j], tt[i], pp[j]
            step_t /= zoom
            step_p /= zoom
        if val < best[0]:
            best = (float(val), float(th), float(ph % (2 * np.pi)))
    return best


def brute_force_conditional_entropy(s, resolution=256):
    """Conditional entropy minimized numerically over all projective measurements.

    Parameters
    ----------
    s : XState
    resolution : int
        Points per angle of the initial grid.

    Returns
    -------
    float
        An upper bound on the true minimum that converges to it as the
        resolution grows.
    """
    if not isinstance(s, XState):
        raise DomainError("brute force requires a validated XState")
    return brute_force_search(s, resolution)[0]


def _conditional_entropy(s):
    closed = conditional_entropy_closed(s)
    if not closed.needs_numerical:
        return closed.value, closed.branch, False
    value = brute_force_conditional_entropy(s)
    if value < closed.value - OBLIQUE_MARGIN:
        return value, Branch.OBLIQUE, True
    return min(value, closed.value), closed.branch, True


def _discord_from(s, cond):
    b1 = s.rho11 + s.rho22
    b2 = s.rho44 + s.rho22
    marginal = float(_shannon_bits(b1) + _shannon_bits(b2))
    joint = float(np.sum(_shannon_bits(np.clip(xstate_eigenvalues(s), 0.0, None))))
    d = marginal - joint + cond
    if d < -DISCORD_CLAMP:
        raise NumericalInconsistencyError(f"negative discord {d:.3e} for {s}")
    return max(d, 0.0)


def quantum_discord(s):
    """Quantum discord of an X state with measurement on qubit B.

    The closed-form minimum is used unless a coherence vanishes, in which
    case the numerical minimum is taken.

    Parameters
    ----------
    s : XState

    Returns
    -------
    float
        Discord in bits, ``>= 0``.
    """
    return _discord_from(s, _conditional_entropy(s)[0])


def concurrence(s):
    """Wootters concurrence of an X state.

    Parameters
    ----------
    s : XState

    Returns
    -------
    float
        Concurrence in ``[0, 1]``.
    """
    outer = abs(s.rho14) - s.rho22
    inner = abs(s.rho23) - np.sqrt(max(s.rho11 * s.rho44, 0.0))
    return float(min(2.0 * max(0.0, outer, inner), 1.0))


def eof_from_concurrence(c):
    """Entanglement of formation of two qubits with concurrence `c`."""
    if not 0.0 <= c <= 1.0:
        raise DomainError(f"concurrence must lie in [0, 1], got {c!r}")
    g = (1.0 + np.sqrt(max(1.0 - c * c, 0.0))) / 2.0
    return float(_shannon_bits(g) + _shannon_bits(1.0 - g))


def eof(s):
    """Entanglement of formation of an X state in bits."""
    return eof_from_concurrence(concurrence(s))


@dataclass(frozen=True)
class CorrelationReport:
    """All correlation measures of one X state.

    Attributes
    ----------
    discord, eof, concurrence, conditional_entropy : float
        Measures in bits (concurrence is dimensionless).
    minimizer_branch : Branch
        Measurement attaining the conditional-entropy minimum.
    numerical : bool
        True when the minimum came from the brute-force search.
    """

    discord: float
    eof: float
    concurrence: float
    conditional_entropy: float
    minimizer_branch: Branch
    numerical: bool


def correlation_report(s):
    """Compute discord, EoF, concurrence and the optimal measurement branch."""
    cond, branch, numerical = _conditional_entropy(s)
    c = concurrence(s)
    return CorrelationReport(
        discord=_discord_from(s, cond),
        eof=eof_from_concurrence(c),
        concurrence=c,
        conditional_entropy=cond,
        minimizer_branch=branch,
        numerical=numerical,
    )
