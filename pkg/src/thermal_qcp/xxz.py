"""Thermodynamics of the infinite spin-1/2 XXZ chain in a longitudinal field.

The Hamiltonian per bond is ``J (sx sx + sy sy + delta sz sz)`` with Pauli
matrices, plus ``-(h/2) sz`` per site. The free energy per site follows
from two auxiliary functions ``b`` and ``bbar`` that solve a pair of
non-linear integral equations (NLIE). The equations are iterated to a
fixed point on a uniform grid with all convolutions done by FFT.

Two parametrizations are used:

* ``delta <= 1`` (gapless): ``delta = cos(gamma)``, functions live on the
  real line, which is truncated. Internally the variable is rescaled by
  ``gamma`` so that the driving term is ``sech(pi u)``.
* ``delta > 1`` (gapped): ``delta = cosh(gamma)``, functions are
  ``pi``-periodic on ``[-pi/2, pi/2)``.

In both cases kernels shifted by an imaginary amount are applied in
Fourier space, where the shift is an exponential factor.

Pair correlators and thermodynamic quantities come from finite
differences of the free energy with respect to ``h``, ``delta`` and
``beta``.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .errors import ConvergenceError, DomainError, NumericalInconsistencyError
from .xstate import XState

GAMMA_FLOOR = 1e-6
_LOG_MARGIN = 35.0
_MAX_POINTS = 2**17
#: Largest tolerated finite-difference noise on first derivatives.
DERIVATIVE_NOISE_LIMIT = 1e-5


@dataclass(frozen=True)
class XXZParams:
    """Parameters of the thermal XXZ chain.

    Parameters
    ----------
    delta : float
        Anisotropy, ``> 0``.
    h : float
        Longitudinal field, ``>= 0``.
    beta : float
        Inverse temperature, ``> 0``.
    j : float
        Exchange coupling, ``> 0`` (antiferromagnetic).
    """

    delta: float
    h: float
    beta: float
    j: float = 1.0

    def __post_init__(self):
        for name in ("delta", "h", "beta", "j"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise DomainError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if self.delta <= 0:
            raise DomainError(f"delta must be > 0, got {self.delta}")
        if self.h < 0:
            raise DomainError(f"h must be >= 0, got {self.h}")
        if self.beta <= 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if self.j <= 0:
            raise DomainError(f"j must be > 0, got {self.j}")

    @property
    def gapless(self):
        """True in the ``delta <= 1`` regime."""
        return self.delta <= 1.0

    @property
    def gamma(self):
        """Anisotropy angle (gapless) or rapidity (gapped)."""
        if self.gapless:
            return max(float(np.arccos(self.delta)), GAMMA_FLOOR)
        return max(float(np.arccosh(self.delta)), GAMMA_FLOOR)


@dataclass(frozen=True)
class NLIEConfig:
    """Numerical settings of the NLIE solver.

    Attributes
    ----------
    tol : float
        Convergence threshold on the max-norm of the update.
    max_iter : int
        Iteration cap.
    damping : float
        Weight of the new iterate in the under-relaxed update.
    n_gapped : int
        Minimum number of grid points on the periodic domain.
    n_gapless : int
        Grid points used on the truncated line before any enlargement.
    max_extent : float
        Cap on the half-width of the truncated line in rescaled units.
    shift_factor : float
        Fraction of the analyticity strip used by shifted kernels.
    """

    tol: float = 1e-12
    max_iter: int = 5000
    damping: float = 0.5
    n_gapped: int = 1024
    n_gapless: int = 4096
    max_extent: float = 120.0
    shift_factor: float = 1.0 - 1e-6

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")
        if self.tol <= 0 or self.max_iter < 1:
            raise DomainError("tol must be positive and max_iter >= 1")
        if self.n_gapped < 16 or self.n_gapless < 16:
            raise DomainError("grids need at least 16 points")


@dataclass(frozen=True)
class ContourGrid:
    """Uniform sampling of the NLIE domain.

    Attributes
    ----------
    gapless : bool
        Regime the grid belongs to.
    n : int
        Number of points.
    extent : float
        Half-width of the domain (``pi/2`` for the gapped regime, the
        rescaled cutoff otherwise).
    """

    gapless: bool
    n: int
    extent: float

    @property
    def spacing(self):
        return 2.0 * self.extent / self.n

    @property
    def points(self):
        """Sample points in the internal variable."""
        return -self.extent + self.spacing * np.arange(self.n)


@dataclass(frozen=True)
class NLIESolution:
    """Converged auxiliary functions and the resulting free energy.

    Attributes
    ----------
    params : XXZParams
    grid : ContourGrid
    ln_b, ln_bbar : ndarray of complex
        Logarithms of the auxiliary functions on the grid.
    free_energy : float
        Free energy per site.
    iterations : int
    residual : float
        Max-norm of the final update.
    """

    params: XXZParams
    grid: ContourGrid
    ln_b: np.ndarray
    ln_bbar: np.ndarray
    free_energy: float
    iterations: int
    residual: float


def _pow2(n):
    return 1 << int(np.ceil(np.log2(max(n, 2))))


def _log1pexp(z):
    """``log(1 + exp(z))`` without overflow, on the principal branch."""
    pos = z.real > 0
    out = np.empty_like(z)
    out[pos] = z[pos] + np.log1p(np.exp(-z[pos]))
    out[~pos] = np.log1p(np.exp(z[~pos]))
    return out


def _sech(x):
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


# ground-state energy


def _e0_gapped(gamma):
    k_max = int(np.ceil(np.log(1e16) / gamma)) + 1
    u = np.exp(-gamma * np.arange(1, k_max + 1))
    return np.cosh(gamma) - 2.0 * np.sinh(gamma) * (1.0 + 4.0 * np.sum(u * u / (1.0 + u * u)))


def _e0_gapless(gamma):
    a = np.pi / gamma

    def integrand(k):
        if k == 0.0:
            return (a - 1.0) / (2.0 * a)
        return (
            np.exp(-k) * (-np.expm1(-(a - 1.0) * k))
            / ((-np.expm1(-a * k)) * (1.0 + np.exp(-k)))
        )

    # integrand decays like exp(-k); beyond 40 it is below 1e-16. It
    # varies on the scale 1/a near zero, so that piece is done separately.
    edge = min(50.0 / a, 20.0)
    head, _ = quad(integrand, 0.0, edge, epsabs=1e-14, epsrel=1e-13, limit=500)
    tail, _ = quad(integrand, edge, 40.0, epsabs=1e-14, epsrel=1e-13, limit=500)
    val = head + tail
    return np.cos(gamma) - 4.0 * np.sin(gamma) / gamma * val


def ground_state_energy(p):
    """Ground-state energy per site at zero field.

    Parameters
    ----------
    p : XXZParams
        Only ``delta`` and ``j`` are used.

    Returns
    -------
    float
    """
    if p.gapless:
        return p.j * float(_e0_gapless(p.gamma))
    return p.j * float(_e0_gapped(p.gamma))


# kernels and driving terms


def _gapless_multipliers(gamma, q, shift):
    """Fourier multipliers of the kernel and its two shifted versions."""
    a = np.abs(q)
    big_a = (np.pi / 2 - gamma) * a / gamma
    big_b = (np.pi - gamma) * a / (2 * gamma)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ratio = (-np.expm1(-2 * big_a)) / (-np.expm1(-2 * big_b))
        base = ratio / (1.0 + np.exp(-a))
        kern = np.exp(-a) * base
        plus = np.exp(-a - shift * q) * base
        minus = np.exp(-a + shift * q) * base
    at0 = (np.pi / 2 - gamma) / (np.pi - gamma)
    return tuple(np.where(a == 0, at0, m) for m in (kern, plus, minus))


def _gapped_multipliers(gamma, k, shift):
    u2 = np.exp(-2 * gamma * np.abs(k))
    kern = u2 / (1 + u2)
    # e^{-gamma|k|} / (2 cosh gamma k) times e^{+-2 k gamma shift}
    s = np.exp(-2 * gamma * np.abs(k) * (1 - shift))
    plus = np.where(k < 0, s / (1 + u2), u2 * u2 / (s * (1 + u2)))
    minus = np.where(k > 0, s / (1 + u2), u2 * u2 / (s * (1 + u2)))
    return kern, plus, minus


def kernel(x, p):
    """NLIE kernel as a function of the original spectral variable.

    The convolution it enters is ``int K(x - y) f(y) dy`` with the plain
    measure, over the real line (``delta <= 1``) or one period
    ``[-pi/2, pi/2)`` (``delta > 1``).

    Parameters
    ----------
    x : float
    p : XXZParams

    Returns
    -------
    float
    """
    g = p.gamma
    if p.gapless:
        def integrand(k):
            kern, _, _ = _gapless_multipliers(g, np.array([g * k]), 0.0)
            return kern[0] * np.cos(k * x)

        val, _ = quad(integrand, 0.0, np.inf, epsabs=1e-13, limit=1000)
        return float(val / np.pi)
    k_max = int(np.ceil(np.log(1e17) / (2 * g))) + 1
    k = np.arange(1, k_max + 1)
    u2 = np.exp(-2 * g * k)
    coef = u2 / (1 + u2)
    return float((0.5 + 2.0 * np.sum(coef * np.cos(2 * k * x))) / np.pi)


def driving_terms(x, p):
    """Driving terms of the two NLIE at spectral parameter `x`.

    Returns
    -------
    d_plus, d_minus : float or ndarray
        They differ only by the sign of the field contribution.
    """
    x = np.asarray(x, dtype=float)
    g = p.gamma
    if p.gapless:
        bulk = -2 * np.pi * p.beta * p.j * np.sin(g) / g * _sech(np.pi * x / g)
        field = p.beta * p.h * np.pi / (2 * (np.pi - g))
    else:
        k_max = int(np.ceil(np.log(1e17) / g)) + 1
        k = np.arange(1, k_max + 1)
        coef = _sech(g * k)
        series = 1.0 + 2.0 * np.sum(coef * np.cos(2 * np.multiply.outer(x, k)), axis=-1)
        bulk = -2 * p.beta * p.j * np.sinh(g) * series
        field = p.beta * p.h / 2
    return bulk + field, bulk - field


def _gapped_driving_coeffs(p, k):
    return -2 * p.beta * p.j * np.sinh(p.gamma) * _sech(p.gamma * k)


def _gapless_amplitude(p):
    g = p.gamma
    return 2 * np.pi * p.beta * p.j * np.sin(g) / g, p.beta * p.h * np.pi / (2 * (np.pi - g))


def contour_grid(p, cfg=NLIEConfig()):
    """Choose the discretization of the NLIE domain for a parameter point.

    The truncated line is wide enough for the driving term to fall below
    ``exp(-35)`` relative to one and for the kernel tails to decay. The
    spacing resolves the steepest region of the driving term where it is
    of order one.
    """
    g = p.gamma
    if p.gapless:
        amp, field = _gapless_amplitude(p)
        drive_extent = (np.log(2 * amp + 1.0) + _LOG_MARGIN) / np.pi + 2.0
        decay = min(np.pi, 2 * np.pi * g / (np.pi - g))
        extent = min(max(drive_extent, 12.0 / decay), max(cfg.max_extent, drive_extent))
        spacing = 2 * drive_extent / cfg.n_gapless
        # steepest slope of amp*sech(pi u) where it meets the field term
        slope = np.pi * min(field, amp / 2) if field > 0 else np.pi
        spacing = min(spacing, 0.5 / slope)
        n = _pow2(2 * extent / spacing)
        return ContourGrid(True, int(min(n, _MAX_POINTS)), float(extent))
    x = -np.pi / 2 + np.pi * np.arange(cfg.n_gapped) / cfg.n_gapped
    dp, dm = driving_terms(x, p)
    slope = 0.0
    for d in (dp, dm):
        grad = np.abs(np.gradient(d, x))
        near = np.abs(d) < 40
        if np.any(near):
            slope = max(slope, float(grad[near].max()))
    n = max(cfg.n_gapped, _pow2(80.0 / g), _pow2(2 * np.pi * slope))
    return ContourGrid(False, int(min(n, _MAX_POINTS)), np.pi / 2)


class _Operator:
    """Precomputed transforms for one parameter point on one grid."""

    def __init__(self, p, grid, cfg):
        self.grid = grid
        g = p.gamma
        n = grid.n
        if grid.gapless:
            if not p.gapless:
                raise DomainError("grid regime does not match parameters")
            du = grid.spacing
            q = 2 * np.pi * np.fft.fftfreq(n, du)
            self.kern, self.kern_plus, self.kern_minus = _gapless_multipliers(g, q, cfg.shift_factor)
            amp, field = _gapless_amplitude(p)
            u = grid.points
            bulk = -amp * _sech(np.pi * u)
            self.weight = 0.5 * _sech(np.pi * u) * du
            self.e0 = ground_state_energy(p)
        else:
            if p.gapless:
                raise DomainError("grid regime does not match parameters")
            k = np.fft.fftfreq(n, 1.0 / n)
            self._phase = np.exp(2j * k * grid.points[0])
            self.kern, self.kern_plus, self.kern_minus = _gapped_multipliers(g, k, 1.0)
            bulk = self._synth(_gapped_driving_coeffs(p, k)).real
            field = p.beta * p.h / 2
            self.v_coef = _sech(g * k) / 2
            self.e0 = ground_state_energy(p)
        self.d_plus = (bulk + field).astype(complex)
        self.d_minus = (bulk - field).astype(complex)
        self.beta = p.beta

    # gapped: Fourier coefficients of e^{2ikx} <-> samples
    def _synth(self, c):
        return np.fft.ifft(c * self._phase) * self.grid.n

    def _analyse(self, f):
        return np.fft.fft(f) / self.grid.n / self._phase

    def update(self, ln_b, ln_bbar):
        big = _log1pexp(ln_b)
        big_bar = _log1pexp(ln_bbar)
        if self.grid.gapless:
            fb, fbb = np.fft.fft(big), np.fft.fft(big_bar)
            new_b = self.d_plus + np.fft.ifft(self.kern * fb - self.kern_plus * fbb)
            new_bbar = self.d_minus + np.fft.ifft(self.kern * fbb - self.kern_minus * fb)
        else:
            cb, cbb = self._analyse(big), self._analyse(big_bar)
            new_b = self.d_plus + self._synth(self.kern * cb - self.kern_plus * cbb)
            new_bbar = self.d_minus + self._synth(self.kern * cbb - self.kern_minus * cb)
        return new_b, new_bbar

    def free_energy(self, ln_b, ln_bbar):
        total = _log1pexp(ln_b) + _log1pexp(ln_bbar)
        if self.grid.gapless:
            corr = np.sum(self.weight * total).real
        else:
            corr = np.sum(self.v_coef * self._analyse(total)).real
        return float(self.e0 - corr / self.beta)


def solve_nlie(p, cfg=NLIEConfig(), grid=None, initial=None):
    """Solve the NLIE for one parameter point by damped fixed-point iteration.

    Parameters
    ----------
    p : XXZParams
    cfg : NLIEConfig
    grid : ContourGrid, optional
        Discretization to use; chosen by :func:`contour_grid` if omitted.
    initial : tuple of ndarray, optional
        Starting ``(ln_b, ln_bbar)`` on `grid`. Defaults to the driving
        terms.

    Returns
    -------
    NLIESolution

    Raises
    ------
    ConvergenceError
        If the update does not fall below ``cfg.tol`` within
        ``cfg.max_iter`` iterations or non-finite values appear.
    """
    if grid is None:
        grid = contour_grid(p, cfg)
    op = _Operator(p, grid, cfg)
    if initial is None:
        ln_b, ln_bbar = op.d_plus.copy(), op.d_minus.copy()
    else:
        ln_b = np.array(initial[0], dtype=complex)
        ln_bbar = np.array(initial[1], dtype=complex)
        if ln_b.shape != (grid.n,) or ln_bbar.shape != (grid.n,):
            raise DomainError("initial guess does not match the grid")
    w = cfg.damping
    history = []
    for it in range(1, cfg.max_iter + 1):
        new_b, new_bbar = op.update(ln_b, ln_bbar)
        res = float(max(np.abs(new_b - ln_b).max(), np.abs(new_bbar - ln_bbar).max()))
        history.append(res)
        if not np.isfinite(res):
            raise ConvergenceError(
                f"non-finite iterate at {p}; reduce beta*J or enlarge the domain",
                history[-50:],
            )
        ln_b = w * new_b + (1 - w) * ln_b
        ln_bbar = w * new_bbar + (1 - w) * ln_bbar
        if res < cfg.tol:
            break
    else:
        raise ConvergenceError(
            f"NLIE not converged after {cfg.max_iter} iterations at {p}, "
            f"last update {history[-1]:.3e}",
            history[-50:],
        )
    return NLIESolution(
        params=p,
        grid=grid,
        ln_b=ln_b,
        ln_bbar=ln_bbar,
        free_energy=op.free_energy(ln_b, ln_bbar),
        iterations=it,
        residual=res,
    )


def free_energy(p, cfg=NLIEConfig()):
    """Free energy per site of the infinite chain."""
    return solve_nlie(p, cfg).free_energy


# observables from finite differences


@dataclass(frozen=True)
class XXZObservables:
    """Nearest-neighbor correlators and thermodynamics at one point.

    ``specific_heat`` and ``susceptibility`` are None when second
    derivatives were not requested.
    """

    sz: float
    szsz: float
    sxsx: float
    free_energy: float
    internal_energy: float
    entropy: float
    specific_heat: Optional[float] = None
    susceptibility: Optional[float] = None


STEP_H = 1e-4
STEP_DELTA = 1e-4
STEP_BETA_REL = 1e-4
STEP_BETA_ABS = 1e-6
# second derivatives use wider steps so solver noise stays below 1e-5
STEP2_H = 1e-3
STEP2_BETA_REL = 1e-3


class _Stencil:
    """Free energies around a center point on a shared grid."""

    def __init__(self, p, cfg):
        self.p = p
        self.cfg = cfg
        self.center = solve_nlie(p, cfg)
        self.grid = self.center.grid
        self._memo = {(p.delta, p.h, p.beta): self.center}

    def solution(self, **shift):
        q = replace(self.p, **{k: getattr(self.p, k) + v for k, v in shift.items()})
        key = (q.delta, q.h, q.beta)
        if key not in self._memo:
            warm = (self.center.ln_b, self.center.ln_bbar)
            self._memo[key] = solve_nlie(q, self.cfg, grid=self.grid, initial=warm)
        return self._memo[key]

    def f(self, **shift):
        return self.solution(**shift).free_energy

    def max_residual(self):
        return max(s.residual for s in self._memo.values())


def _first_derivative(fun, step, one_sided=0):
    if one_sided == 0:
        return (fun(step) - fun(-step)) / (2 * step)
    s = one_sided * step
    return (-3 * fun(0.0) + 4 * fun(s) - fun(2 * s)) / (2 * s)


def _second_derivative(fun, step):
    return (
        -fun(2 * step) + 16 * fun(step) - 30 * fun(0.0) + 16 * fun(-step) - fun(-2 * step)
    ) / (12 * step * step)


def observables(p, cfg=NLIEConfig(), second_order=True):
    """Correlators and thermodynamic functions from free-energy derivatives.

    Parameters
    ----------
    p : XXZParams
    cfg : NLIEConfig
    second_order : bool
        Also compute specific heat and susceptibility (needs eight more
        NLIE solutions).

    Returns
    -------
    XXZObservables

    Raises
    ------
    NumericalInconsistencyError
        If the estimated noise of a first derivative exceeds 1e-5.
    """
    st = _Stencil(p, cfg)
    f0 = st.center.free_energy
    beta = p.beta

    # f depends on h through beta * h, and beta * f is what gets differentiated
    # in beta; keep both steps resolvable when beta is small
    dh = STEP_H * max(1.0, 1.0 / beta)
    db = max(STEP_BETA_REL * beta, min(STEP_BETA_ABS, 0.25 * beta))
    if p.h == 0:
        dfdh = 0.0  # f is even in h
    else:
        dfdh = _first_derivative(lambda s: st.f(h=s), dh, one_sided=1 if p.h < dh else 0)
    sz = -2.0 * dfdh

    u = _first_derivative(lambda s: (beta + s) * st.f(beta=s), db)

    dd = STEP_DELTA
    if p.delta == 1.0:
        szsz = sxsx = (u + 0.5 * p.h * sz) / (3 * p.j)
        dfdd = szsz * p.j
    else:
        near_one = abs(p.delta - 1.0) < 2 * STEP_DELTA
        side = 0 if not near_one else (1 if p.delta > 1 else -1)
        if p.delta - 2 * STEP_DELTA <= 0:
            side = 1
        if side == 0:
            # widen with 1/beta, but keep the stencil inside one regime
            dd = STEP_DELTA * max(1.0, 1.0 / beta)
            dd = max(STEP_DELTA, min(dd, 0.25 * abs(p.delta - 1.0), 0.25 * p.delta))
        else:
            dd = STEP_DELTA
        dfdd = _first_derivative(lambda s: st.f(delta=s), dd, one_sided=side)
        szsz = dfdd / p.j
        sxsx = (u - p.delta * dfdd + 0.5 * p.h * sz) / (2 * p.j)

    noise = st.max_residual() * max(1.0 / (beta * dh), 1.0 / (beta * dd), 1.0 / db)
    if noise > DERIVATIVE_NOISE_LIMIT:
        raise NumericalInconsistencyError(
            f"derivative noise estimate {noise:.2e} exceeds {DERIVATIVE_NOISE_LIMIT:.0e}; "
            "tighten the NLIE tolerance"
        )

    heat = chi = None
    if second_order:
        db2 = STEP2_BETA_REL * beta
        heat = -beta * beta * _second_derivative(lambda s: (beta + s) * st.f(beta=s), db2)
        h2 = STEP2_H
        if p.h < 2 * h2:
            # f is even in h, so mirror the stencil through zero
            def fh(s):
                return st.f(h=abs(p.h + s) - p.h)
        else:
            def fh(s):
                return st.f(h=s)
        chi = -2.0 * _second_derivative(fh, h2)

    return XXZObservables(
        sz=float(sz),
        szsz=float(szsz),
        sxsx=float(sxsx),
        free_energy=f0,
        internal_energy=float(u),
        entropy=float(beta * (u - f0)),
        specific_heat=None if heat is None else float(heat),
        susceptibility=None if chi is None else float(chi),
    )


def pair_state(p, cfg=NLIEConfig(), obs=None):
    """Reduced density matrix of two neighboring spins.

    Parameters
    ----------
    p : XXZParams
    cfg : NLIEConfig
    obs : XXZObservables, optional
        Precomputed observables at `p`.

    Returns
    -------
    XState

    Raises
    ------
    NumericalInconsistencyError
        If positivity is violated by more than 1e-6.
    """
    if obs is None:
        obs = observables(p, cfg, second_order=False)
    return XState.from_correlators(obs.sz, obs.szsz, obs.sxsx, obs.sxsx, tol=1e-6)


# zero-temperature critical points


def critical_point_first_order(h, j=1.0):
    """Anisotropy of the first-order transition into the saturated phase."""
    if h < 0:
        raise DomainError("h must be >= 0")
    return h / (4.0 * j) - 1.0


def _gap_field(eta, j):
    n_max = int(np.ceil(np.log(2e15) / eta)) + 1
    n = np.arange(1, n_max + 1)
    series = 1.0 + 2.0 * np.sum((-1.0) ** n * _sech(n * eta))
    return 4.0 * j * np.sinh(eta) * series


def critical_point_infinite_order(h, j=1.0):
    """Anisotropy at which the field closes the spin gap of the gapped phase.

    Parameters
    ----------
    h : float
        Field, ``>= 0``.
    j : float
        Coupling.

    Returns
    -------
    float
        ``cosh(eta)`` with ``eta`` the root of the gap equation. Returns 1
        at zero field.

    Raises
    ------
    DomainError
        If `h` is too large for the bracket ``eta in (0, 20]``.
    """
    if h < 0:
        raise DomainError("h must be >= 0")
    if h == 0:
        return 1.0
    lo, hi = 1e-2, 20.0
    if not _gap_field(lo, j) < h < _gap_field(hi, j):
        raise DomainError(f"field {h} outside the bisection bracket")
    eta = bisect(lambda e: _gap_field(e, j) - h, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    return float(np.cosh(eta))
