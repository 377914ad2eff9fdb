"""Critical-point estimation from parameter sweeps at finite temperature.

A model is any callable mapping a tuning-parameter value to a
:class:`ModelPoint`. Three backends are provided: the infinite XXZ chain,
the infinite XY chain and exact diagonalization of a finite ring.

Estimators work on finished :class:`SweepCurve` objects:

* a change of the optimal measurement branch of the discord,
* the dominant local extremum of the first or second derivative,
* the T -> 0 trend of such estimates across temperatures.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Tuple, Union

import numpy as np

from . import ed
from . import xxz as xxz_mod
from . import xy as xy_mod
from .errors import DomainError, ModelPointError, ThermalQCPError
from .xstate import Branch, XState, correlation_report

MIN_SWEEP_POINTS = 50
#: Derivative variation below this is treated as a flat curve.
FLAT_FLOOR = 1e-10


class Quantity(str, Enum):
    """Quantities that can be swept."""

    TQD = "TQD"
    EOF = "EoF"
    SXX = "Sxx"
    SZZ = "Szz"
    SZ = "Sz"
    ENTROPY = "Entropy"
    SPECIFIC_HEAT = "SpecificHeat"
    SUSCEPTIBILITY = "Susceptibility"


class Method(str, Enum):
    """How a critical point was located."""

    FIRST_DERIV_EXTREMUM = "FirstDerivExtremum"
    SECOND_DERIV_EXTREMUM = "SecondDerivExtremum"
    BRANCH_SWITCH = "BranchSwitch"
    MAX_VALUE = "MaxValue"


@dataclass(frozen=True)
class ModelPoint:
    """Pair state and extra scalar observables at one parameter point."""

    state: XState
    values: Mapping[Quantity, float] = field(default_factory=dict)


def _state_values(state):
    c = ed.pair_correlators(state)
    return {Quantity.SZ: c["sz"], Quantity.SXX: c["sxsx"], Quantity.SZZ: c["szsz"]}


@dataclass(frozen=True)
class XXZModel:
    """Nearest-neighbor pair of the infinite XXZ chain as a function of one parameter.

    Parameters
    ----------
    axis : {'delta', 'h', 'beta'}
        Parameter replaced by the tuning value.
    delta, h, beta, j : float
        Fixed parameters. The one named by `axis` is ignored.
    cfg : NLIEConfig
    thermal : bool
        Also compute specific heat and susceptibility.
    """

    axis: str = "delta"
    delta: float = 1.0
    h: float = 0.0
    beta: float = 1.0
    j: float = 1.0
    cfg: xxz_mod.NLIEConfig = xxz_mod.NLIEConfig()
    thermal: bool = False

    def __post_init__(self):
        if self.axis not in ("delta", "h", "beta"):
            raise DomainError(f"unknown XXZ axis {self.axis!r}")

    def params(self, t):
        base = dict(delta=self.delta, h=self.h, beta=self.beta, j=self.j)
        base[self.axis] = t
        return xxz_mod.XXZParams(**base)

    @property
    def fixed(self):
        d = dict(model="xxz", delta=self.delta, h=self.h, beta=self.beta, j=self.j)
        d.pop(self.axis)
        return d

    def with_beta(self, beta):
        return replace(self, beta=float(beta))

    def __call__(self, t):
        p = self.params(t)
        obs = xxz_mod.observables(p, self.cfg, second_order=self.thermal)
        state = xxz_mod.pair_state(p, self.cfg, obs)
        values = _state_values(state)
        values[Quantity.ENTROPY] = obs.entropy
        if self.thermal:
            values[Quantity.SPECIFIC_HEAT] = obs.specific_heat
            values[Quantity.SUSCEPTIBILITY] = obs.susceptibility
        return ModelPoint(state, values)


@dataclass(frozen=True)
class XYModel:
    """Pair of spins `k` sites apart in the infinite XY chain.

    Parameters
    ----------
    axis : {'lam', 'gamma', 'beta'}
    lam, gamma, beta : float
    k : int
    """

    axis: str = "lam"
    lam: float = 1.0
    gamma: float = 1.0
    beta: float = 1.0
    k: int = 1

    def __post_init__(self):
        if self.axis not in ("lam", "gamma", "beta"):
            raise DomainError(f"unknown XY axis {self.axis!r}")

    def params(self, t):
        base = dict(lam=self.lam, gamma=self.gamma, beta=self.beta)
        base[self.axis] = t
        return xy_mod.XYParams(**base)

    @property
    def fixed(self):
        d = dict(model="xy", lam=self.lam, gamma=self.gamma, beta=self.beta, k=self.k)
        d.pop(self.axis)
        return d

    def with_beta(self, beta):
        return replace(self, beta=float(beta))

    def __call__(self, t):
        state = xy_mod.pair_state(self.k, self.params(t))
        return ModelPoint(state, _state_values(state))


@dataclass(frozen=True)
class RingModel:
    """Exact-diagonalization backend with the same interface.

    XY rings are reported in the convention of the infinite-chain
    formulas (see :func:`thermal_qcp.ed.xy_formula_convention_state`).

    Parameters
    ----------
    length : int
    base : XXZParams or XYParams
        Fixed parameters, including inverse temperature.
    axis : str
        Field of `base` replaced by the tuning value.
    k : int
    """

    length: int
    base: Union[xxz_mod.XXZParams, xy_mod.XYParams]
    axis: str
    k: int = 1

    def params(self, t):
        return replace(self.base, **{self.axis: t})

    @property
    def fixed(self):
        d = dict(vars(self.base))
        d.pop(self.axis)
        d["model"] = "ring"
        d["length"] = self.length
        return d

    def with_beta(self, beta):
        return replace(self, base=replace(self.base, beta=float(beta)))

    def __call__(self, t):
        p = self.params(t)
        if isinstance(p, xy_mod.XYParams):
            state = ed.xy_formula_convention_state(self.length, p, self.k)
        else:
            state = ed.thermal_pair_state(ed.RingSpec(self.length, p), p.beta, (0, self.k))
        return ModelPoint(state, _state_values(state))


@dataclass(frozen=True)
class SweepCurve:
    """One quantity sampled on a tuning grid at fixed temperature.

    Attributes
    ----------
    tuning : ndarray
        Strictly increasing grid.
    values : ndarray
        Finite samples.
    quantity : Quantity
    fixed : dict
        Frozen parameters, including ``beta``.
    branch : tuple of Branch, optional
        Optimal measurement per point (discord curves only).
    derivative : int
        Order of differentiation already applied.
    """

    tuning: np.ndarray
    values: np.ndarray
    quantity: Quantity
    fixed: Mapping
    branch: Optional[Tuple[Branch, ...]] = None
    derivative: int = 0

    def __post_init__(self):
        t = np.asarray(self.tuning, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise DomainError("tuning and values must be 1-D of equal length")
        if np.any(np.diff(t) <= 0):
            raise DomainError("tuning grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise DomainError("curve values must be finite")
        if self.branch is not None and len(self.branch) != len(t):
            raise DomainError("branch sequence length mismatch")
        object.__setattr__(self, "tuning", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "quantity", Quantity(self.quantity))

    @property
    def beta(self):
        return self.fixed.get("beta", np.nan)


@dataclass(frozen=True)
class CPEstimate:
    """Estimated critical point.

    Attributes
    ----------
    location : float
    method : Method
    uncertainty : float
        Half the grid step unless refined.
    beta : float
        Inverse temperature of the sweep, ``inf`` for extrapolations.
    ambiguous : bool
        Another extremum of comparable size exists in the window.
    """

    location: float
    method: Method
    uncertainty: float
    beta: float
    ambiguous: bool = False

    @property
    def kT(self):
        return 0.0 if np.isinf(self.beta) else 1.0 / self.beta


def _evaluate(model, t):
    try:
        return model(float(t))
    except ThermalQCPError as exc:
        raise ModelPointError(f"model evaluation failed at tuning={t!r}: {exc}", point=t) from exc


def evaluate_points(model, grid, workers=1):
    """Evaluate a model on a grid, optionally in worker processes.

    Results keep the grid order.
    """
    grid = [float(t) for t in grid]
    if workers <= 1 or len(grid) < 2:
        return [_evaluate(model, t) for t in grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate, [model] * len(grid), grid))


def curves_from_points(grid, points, quantities, fixed):
    """Assemble sweep curves from evaluated model points."""
    quantities = [Quantity(q) for q in quantities]
    need_report = any(q in (Quantity.TQD, Quantity.EOF) for q in quantities)
    reports = [correlation_report(p.state) for p in points] if need_report else None
    out = []
    for q in quantities:
        branch = None
        if q is Quantity.TQD:
            vals = [r.discord for r in reports]
            branch = tuple(r.minimizer_branch for r in reports)
        elif q is Quantity.EOF:
            vals = [r.eof for r in reports]
        else:
            try:
                vals = [p.values[q] for p in points]
            except KeyError:
                raise DomainError(f"model does not provide {q.value}") from None
        out.append(SweepCurve(np.asarray(grid, float), np.asarray(vals, float), q, dict(fixed), branch))
    return out


def sweep(model, grid, quantities, workers=1, min_points=MIN_SWEEP_POINTS):
    """Sample quantities over a tuning grid from shared model evaluations.

    Parameters
    ----------
    model : callable
        Maps a tuning value to a :class:`ModelPoint` and has a ``fixed``
        mapping of the frozen parameters.
    grid : array_like
        Strictly increasing tuning values.
    quantities : sequence of Quantity
    workers : int
        Number of worker processes.
    min_points : int
        Smallest accepted grid size.

    Returns
    -------
    list of SweepCurve
        One curve per quantity, in the requested order.

    Raises
    ------
    ModelPointError
        If any model evaluation fails; the failing tuning value is attached.
    """
    grid = np.asarray(grid, dtype=float)
    if len(quantities) == 0:
        raise DomainError("no quantities requested")
    if grid.size < min_points:
        raise DomainError(f"sweep needs at least {min_points} points, got {grid.size}")
    points = evaluate_points(model, grid, workers)
    return curves_from_points(grid, points, quantities, model.fixed)


def _grid_step(t):
    steps = np.diff(t)
    step = steps.mean()
    if np.max(np.abs(steps - step)) > 1e-6 * abs(step):
        raise DomainError("derivatives need a uniform grid")
    return step


def numerical_derivative(curve, order=1):
    """Finite-difference derivative of a curve on a uniform grid.

    Parameters
    ----------
    curve : SweepCurve
    order : {1, 2}
        Central differences in the interior and one-sided differences at
        the two ends.

    Returns
    -------
    SweepCurve
        Same grid, with ``derivative`` increased by `order`.
    """
    t, v = curve.tuning, curve.values
    if t.size < 5:
        raise DomainError("derivative needs at least 5 grid points")
    h = _grid_step(t)
    if order == 1:
        d = np.gradient(v, h, edge_order=1)
    elif order == 2:
        d = np.empty_like(v)
        d[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
        d[0] = (v[0] - 2 * v[1] + v[2]) / h**2
        d[-1] = (v[-1] - 2 * v[-2] + v[-3]) / h**2
    else:
        raise DomainError(f"derivative order must be 1 or 2, got {order}")
    return SweepCurve(t, d, curve.quantity, curve.fixed, None, curve.derivative + order)


def detect_branch_switch(curve):
    """Locate changes of the optimal measurement along a discord curve.

    Returns
    -------
    list of CPEstimate
        One estimate per adjacent pair with different branches, at the
        midpoint, in grid order.
    """
    if curve.branch is None:
        raise DomainError("curve carries no branch sequence")
    t = curve.tuning
    out = []
    for i in range(len(t) - 1):
        if curve.branch[i] != curve.branch[i + 1]:
            out.append(
                CPEstimate(
                    location=float(0.5 * (t[i] + t[i + 1])),
                    method=Method.BRANCH_SWITCH,
                    uncertainty=float(0.5 * (t[i + 1] - t[i])),
                    beta=curve.beta,
                )
            )
    return out


def _interior_extrema(d):
    i = np.arange(1, len(d) - 1)
    left, mid, right = d[i - 1], d[i], d[i + 1]
    is_max = (mid > left) & (mid >= right)
    is_min = (mid < left) & (mid <= right)
    return i[is_max | is_min]


def estimate_cp(curve, order=1, window=None, ambiguity_ratio=0.9):
    """Critical point from the dominant extremum of a derivative.

    Parameters
    ----------
    curve : SweepCurve
        Undifferentiated curve on a uniform grid.
    order : {1, 2}
        Derivative whose extremum marks the transition: first for
        transitions with a divergent first derivative at T = 0, second for
        smoother ones.
    window : tuple of float, optional
        Search interval ``(lo, hi)``; the whole grid if omitted.
    ambiguity_ratio : float
        Another extremum at least this fraction of the dominant one, and
        more than two grid steps away, flags the estimate as ambiguous.

    Returns
    -------
    CPEstimate or None
        None when the window holds no interior local extremum.
    """
    deriv = numerical_derivative(curve, order)
    t, d = deriv.tuning, deriv.values
    lo, hi = (-np.inf, np.inf) if window is None else window
    idx = _interior_extrema(d)
    idx = idx[(t[idx] >= lo) & (t[idx] <= hi)]
    inside = (t >= lo) & (t <= hi)
    if idx.size == 0 or np.ptp(d[inside]) <= FLAT_FLOOR:
        return None
    mags = np.abs(d[idx])
    best = idx[np.argmax(mags)]
    h = _grid_step(t)
    rivals = idx[(mags >= ambiguity_ratio * mags.max()) & (np.abs(t[idx] - t[best]) > 2 * h)]
    method = Method.FIRST_DERIV_EXTREMUM if order == 1 else Method.SECOND_DERIV_EXTREMUM
    return CPEstimate(float(t[best]), method, float(0.5 * h), float(curve.beta), bool(rivals.size))


def refine_cp(model, quantity, estimate, step, order=1, zoom=10, span=3, workers=1):
    """Re-estimate a critical point on a finer grid around a first estimate.

    The model is resampled on ``location +- span * step`` with spacing
    ``step / zoom`` and the dominant extremum is searched again.

    Returns
    -------
    CPEstimate or None
    """
    fine = step / zoom
    n = int(round(2 * span * zoom)) + 1
    grid = estimate.location - span * step + fine * np.arange(n)
    curve = sweep(model, grid, [quantity], workers=workers, min_points=5)[0]
    win = (estimate.location - (span - 1) * step, estimate.location + (span - 1) * step)
    return estimate_cp(curve, order, window=win)


def max_value_location(curve, window=None):
    """Location of the largest value of a curve inside a window."""
    lo, hi = (-np.inf, np.inf) if window is None else window
    inside = np.flatnonzero((curve.tuning >= lo) & (curve.tuning <= hi))
    if inside.size == 0:
        return None
    i = inside[np.argmax(curve.values[inside])]
    h = _grid_step(curve.tuning)
    return CPEstimate(float(curve.tuning[i]), Method.MAX_VALUE, 0.5 * h, curve.beta)


@dataclass(frozen=True)
class CPRow:
    """One entry of a critical-point-versus-temperature table."""

    kT: float
    quantity: Quantity
    estimate: Optional[CPEstimate]


@dataclass(frozen=True)
class CPTable:
    """Finite-temperature estimates and their zero-temperature extrapolations."""

    rows: Tuple[CPRow, ...]
    extrapolation: Mapping[Quantity, Optional[CPEstimate]]


def cp_vs_temperature(model, quantities, betas, grid, order=1, window=None, workers=1):
    """Track critical-point estimates across temperatures.

    Parameters
    ----------
    model : callable with ``with_beta``
    quantities : sequence of Quantity
    betas : sequence of float
    grid : array_like
        Tuning grid shared by all temperatures.
    order : {1, 2}
    window : tuple of float, optional

    Returns
    -------
    CPTable
        Rows ordered by increasing ``kT`` then quantity name. Each quantity
        with estimates at two or more temperatures gets a linear
        extrapolation to ``kT = 0`` through its two coldest estimates.
    """
    quantities = [Quantity(q) for q in quantities]
    betas = sorted((float(b) for b in betas), reverse=True)
    rows = []
    for beta in betas:
        curves = sweep(model.with_beta(beta), grid, quantities, workers=workers)
        for curve in sorted(curves, key=lambda c: c.quantity.value):
            rows.append(CPRow(1.0 / beta, curve.quantity, estimate_cp(curve, order, window)))
    extrap = {}
    for q in quantities:
        found = [r for r in rows if r.quantity is q and r.estimate is not None]
        if len(found) < 2:
            extrap[q] = None
            continue
        (t1, e1), (t2, e2) = [(r.kT, r.estimate) for r in found[:2]]
        slope = (e2.location - e1.location) / (t2 - t1)
        extrap[q] = CPEstimate(
            location=e1.location - slope * t1,
            method=e1.method,
            uncertainty=e1.uncertainty + e2.uncertainty,
            beta=np.inf,
        )
    return CPTable(tuple(rows), extrap)


@dataclass(frozen=True)
class RegrowthReport:
    """Temperature dependence of discord and entanglement at fixed tuning.

    Attributes
    ----------
    kT : ndarray
    tqd, eof : ndarray
    tqd_regrowth, eof_regrowth : tuple of float
        Temperatures at which the quantity starts to grow again, either
        after a decrease or from the coldest point of the scan.
    eof_death_kT : float or None
        Lowest temperature from which EoF is exactly zero up to the end of
        the scan, provided it is nonzero somewhere below.
    tqd_at_death : float or None
    """

    kT: np.ndarray
    tqd: np.ndarray
    eof: np.ndarray
    tqd_regrowth: Tuple[float, ...]
    eof_regrowth: Tuple[float, ...]
    eof_death_kT: Optional[float]
    tqd_at_death: Optional[float]


def _regrowth_onsets(kt, v, tol):
    # a rise counts when the last non-flat step before it was a fall, or
    # when it is the first non-flat step (minimum at the coldest point)
    out = []
    previous = 0
    for i in range(len(v) - 1):
        step = v[i + 1] - v[i]
        if abs(step) <= tol:
            continue
        if step > 0 and previous <= 0:
            out.append(float(kt[i]))
        previous = 1 if step > 0 else -1
    return tuple(out)


def regrowth_scan(model, tuning, kT_grid, workers=1, tol=1e-7):
    """Scan discord and EoF against temperature at a fixed tuning value.

    Parameters
    ----------
    model : callable with ``with_beta``
    tuning : float
        Fixed value of the model's tuning parameter.
    kT_grid : array_like
        At least 50 strictly increasing temperatures.
    tol : float
        Changes between neighbors smaller than this count as flat.

    Returns
    -------
    RegrowthReport
    """
    kt = np.asarray(kT_grid, dtype=float)
    if kt.size < MIN_SWEEP_POINTS or np.any(np.diff(kt) <= 0) or kt[0] <= 0:
        raise DomainError("need at least 50 increasing positive temperatures")
    models = [model.with_beta(1.0 / t) for t in kt]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_evaluate, models, [tuning] * kt.size))
    else:
        points = [_evaluate(m, tuning) for m in models]
    reports = [correlation_report(p.state) for p in points]
    tqd = np.array([r.discord for r in reports])
    eof = np.array([r.eof for r in reports])
    death = tqd_death = None
    zero = eof == 0.0
    if zero[-1] and not zero.all():
        first = kt.size - np.argmin(zero[::-1])  # start of the trailing run of zeros
        death, tqd_death = float(kt[first]), float(tqd[first])
    return RegrowthReport(
        kt, tqd, eof, _regrowth_onsets(kt, tqd, tol), _regrowth_onsets(kt, eof, tol), death, tqd_death
    )
