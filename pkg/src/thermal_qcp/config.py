"""Run configuration read from INI-style files.

Example::

    [model]
    name = xxz
    h = 12
    j = 1

    [sweep]
    axis = delta
    start = 1.5
    stop = 2.5
    step = 0.005
    kT = 0.1, 0.5
    quantities = TQD, EoF

    [solver]
    tol = 1e-12

    [cp]
    order = 1
    window = 1.5, 2.5

    [output]
    format = csv

Numbers are parsed with :func:`float`, which ignores the locale, so only
a decimal point is accepted.
"""

import configparser
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .cp import Quantity, RingModel, XXZModel, XYModel
from .errors import DomainError
from .xxz import NLIEConfig, XXZParams
from .xy import XYParams

FORMATS = ("csv", "jsonl")
_XXZ_KEYS = ("delta", "h", "j")
_XY_KEYS = ("lam", "gamma", "k")
_SOLVER_KEYS = {
    "tol": float,
    "max_iter": int,
    "damping": float,
    "n_gapped": int,
    "n_gapless": int,
    "max_extent": float,
    "shift_factor": float,
}


class ConfigError(DomainError):
    """The configuration file is malformed or inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI subcommand needs.

    Attributes
    ----------
    model : str
        ``xxz`` or ``xy``.
    params : dict
        Fixed model parameters.
    axis : str or None
        Swept parameter.
    grid : ndarray or None
        Tuning values.
    kts : tuple of float
        Temperatures ``kT``.
    quantities : tuple of Quantity
    solver : NLIEConfig
    cp : dict
        Options of the ``cp`` subcommand.
    oracle : dict
        Options of the ``oracle`` subcommand.
    state : tuple of float or None
        X-state elements for the ``discord`` subcommand.
    out : str or None
    fmt : str
    """

    model: str = "xxz"
    params: Dict[str, float] = field(default_factory=dict)
    axis: Optional[str] = None
    grid: Optional[np.ndarray] = None
    kts: Tuple[float, ...] = ()
    quantities: Tuple[Quantity, ...] = ()
    solver: NLIEConfig = NLIEConfig()
    cp: Dict[str, object] = field(default_factory=dict)
    oracle: Dict[str, object] = field(default_factory=dict)
    state: Optional[Tuple[float, ...]] = None
    out: Optional[str] = None
    fmt: str = "csv"

    def sweep_model(self, beta):
        """Model backend for the sweep axis at inverse temperature `beta`."""
        if self.axis is None:
            raise ConfigError("no sweep axis configured")
        if self.model == "xxz":
            kw = {k: v for k, v in self.params.items() if k in _XXZ_KEYS}
            return XXZModel(axis=self.axis, beta=beta, cfg=self.solver, thermal=self._thermal(), **kw)
        kw = {k: v for k, v in self.params.items() if k in _XY_KEYS}
        if "k" in kw:
            kw["k"] = int(kw["k"])
        return XYModel(axis=self.axis, beta=beta, **kw)

    def _thermal(self):
        return any(q in (Quantity.SPECIFIC_HEAT, Quantity.SUSCEPTIBILITY) for q in self.quantities)

    def point_params(self, beta):
        """Parameter object at the fixed point used by the oracle."""
        if self.model == "xxz":
            kw = {k: v for k, v in self.params.items() if k in _XXZ_KEYS}
            return XXZParams(beta=beta, **kw)
        return XYParams(self.params.get("lam", 1.0), self.params.get("gamma", 1.0), beta)

    def ring_model(self, length, beta):
        return RingModel(length, self.point_params(beta), self.axis)


def parse_floats(text):
    """Parse a comma separated list of floats."""
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    try:
        return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"bad number in {text!r}: {exc}") from None


def make_grid(start, stop, step):
    """Uniform grid from `start` to `stop` inclusive.

    Values are rounded to 12 decimals so they print exactly as typed.
    """
    if step <= 0 or stop < start:
        raise ConfigError("grid needs step > 0 and stop >= start")
    n = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(n), 12)


def _temperatures(sec):
    if "kT" in sec and "beta" in sec:
        raise ConfigError("give either kT or beta, not both")
    if "kT" in sec:
        kts = parse_floats(sec["kT"])
    elif "beta" in sec:
        kts = tuple(1.0 / b for b in parse_floats(sec["beta"]))
    else:
        return ()
    if any(not np.isfinite(t) or t <= 0 for t in kts):
        raise ConfigError("temperatures must be positive")
    return tuple(sorted(kts))


def _quantities(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return tuple(Quantity(n) for n in names)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, text=None):
    """Read a :class:`RunConfig` from a file or a string."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep key case, e.g. kT
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None

    cfg = {}
    model = parser.get("model", "name", fallback="xxz").strip().lower()
    if model not in ("xxz", "xy"):
        raise ConfigError(f"unknown model {model!r}")
    cfg["model"] = model
    allowed = _XXZ_KEYS if model == "xxz" else _XY_KEYS
    params = {}
    if parser.has_section("model"):
        for key, val in parser["model"].items():
            if key == "name":
                continue
            if key not in allowed:
                raise ConfigError(f"unknown {model} parameter {key!r}")
            params[key] = parse_floats(val)[0]
    cfg["params"] = params

    if parser.has_section("sweep"):
        sec = parser["sweep"]
        cfg["axis"] = sec.get("axis", "delta" if model == "xxz" else "lam").strip()
        if cfg["axis"] not in (("delta", "h") if model == "xxz" else ("lam", "gamma")):
            raise ConfigError(f"cannot sweep {cfg['axis']!r} for model {model}")
        if "start" in sec:
            cfg["grid"] = make_grid(*(parse_floats(sec[k])[0] for k in ("start", "stop", "step")))
        cfg["kts"] = _temperatures(sec)
        cfg["quantities"] = _quantities(sec.get("quantities", ""))

    if parser.has_section("solver"):
        kw = {}
        for key, val in parser["solver"].items():
            if key not in _SOLVER_KEYS:
                raise ConfigError(f"unknown solver option {key!r}")
            kw[key] = _SOLVER_KEYS[key](float(val)) if _SOLVER_KEYS[key] is int else float(val)
        cfg["solver"] = NLIEConfig(**kw)

    if parser.has_section("cp"):
        sec = parser["cp"]
        opts = {"mode": sec.get("mode", "sweep").strip(), "order": int(sec.get("order", "1"))}
        if "window" in sec:
            win = parse_floats(sec["window"])
            if len(win) != 2 or win[0] >= win[1]:
                raise ConfigError("window needs two increasing numbers")
            opts["window"] = win
        if "quantities" in sec:
            opts["quantities"] = _quantities(sec["quantities"])
        if "fields" in sec:
            opts["fields"] = parse_floats(sec["fields"])
        if opts["mode"] not in ("sweep", "table"):
            raise ConfigError(f"unknown cp mode {opts['mode']!r}")
        cfg["cp"] = opts

    if parser.has_section("oracle"):
        sec = parser["oracle"]
        opts = {
            "length": int(sec.get("length", "10")),
            "bound": float(sec.get("bound", "1e-2")),
            "kts": _temperatures(sec),
        }
        cfg["oracle"] = opts

    if parser.has_section("state"):
        sec = parser["state"]
        try:
            cfg["state"] = tuple(float(sec[k]) for k in ("rho11", "rho22", "rho44", "rho23", "rho14"))
        except KeyError as exc:
            raise ConfigError(f"state section lacks {exc}") from None

    if parser.has_section("output"):
        sec = parser["output"]
        cfg["out"] = sec.get("path") or None
        cfg["fmt"] = sec.get("format", "csv").strip()
        if cfg["fmt"] not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
    return RunConfig(**cfg)


def with_overrides(cfg, out=None, fmt=None, tol=None):
    """Apply command-line overrides to a configuration."""
    changes = {}
    if out is not None:
        changes["out"] = out
    if fmt is not None:
        if fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        changes["fmt"] = fmt
    if tol is not None:
        changes["solver"] = replace(cfg.solver, tol=float(tol))
    return replace(cfg, **changes)
