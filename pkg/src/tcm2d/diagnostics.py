"""Energy diagnostics: Sobolev norms, stability functionals, decay fitting.

Two functional families are evaluated on states.  The Lyapunov pair (A, B)
tracks stability at a Sobolev order m: A combines the mth-order norms of all
three fields with a small cross term -eta * int Lambda^{m-1} v . Lambda^{m-1}
grad theta (plus its order-1 twin) that manufactures temperature damping; B is
the matching dissipation functional weighted by the uniform constant lam.
The decay pair (X, Y) additionally carries the (m-1)-order norms and the
kappa-weighted cross term; X^2 is nonincreasing in time on well-resolved
small-data runs and the discrete trajectory is checked against that shadow.

The B functional exists in two variants that differ in the theta slot
(||grad theta||_{H^{m-1}} versus ||Lambda^m theta||) and in the u slot
(nonhomogeneous versus homogeneous gradient norm); both are computed and
labeled, never conflated.

Decay exponents are least-squares slopes of log(norm) against log(1 + t),
compared against the theoretical rate table of :func:`theory_exponent`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .model import ITH, IU, IV, ModelParams, TcmState, _budget
from .spectral import SpectralField, SpectralGrid, to_phys


class DiagnosticsError(RuntimeError):
    """An energy-functional consistency check failed."""


class DecayFitError(ValueError):
    """The requested decay fit is ill-posed (window, sample count, signs)."""


FIELD_SLICES = {"u": IU, "v": IV, "theta": slice(ITH, ITH + 1)}


def _hom_norm_sq(state: TcmState, comp: slice, gamma: float) -> float:
    """Squared homogeneous norm ||Lambda^gamma . ||^2 of one field (components summed)."""
    g = state.grid
    mult = g.kmag ** (2.0 * gamma) if gamma > 0 else np.ones(g.shape_spec)
    mult[0, 0] = 0.0
    w = g.box_length**2 * g.parseval_weight
    return float(np.sum(w * mult * np.abs(state.coeffs[comp]) ** 2))


def field_norm(state: TcmState, fieldname: str, gamma: float) -> float:
    """||Lambda^gamma field||_{L^2} over k != 0, components summed in quadrature."""
    return math.sqrt(_hom_norm_sq(state, FIELD_SLICES[fieldname], gamma))


def _hs_norm_sq(state: TcmState, comp: slice, s: float) -> float:
    """Nonhomogeneous ||.||_{H^s}^2 = L^2 part plus homogeneous part."""
    g = state.grid
    w = g.box_length**2 * g.parseval_weight
    l2 = float(np.sum(w * np.abs(state.coeffs[comp]) ** 2))
    return l2 + _hom_norm_sq(state, comp, s)


def cross_term(v: tuple[SpectralField, SpectralField], theta: SpectralField, order: float) -> float:
    """int Lambda^{order-1} v . Lambda^{order-1} grad theta, by Parseval."""
    return _cross_term_coeffs(
        v[0].coeffs, v[1].coeffs, theta.coeffs, theta.grid, order
    )


def _cross_term_coeffs(
    vx: np.ndarray, vy: np.ndarray, th: np.ndarray, g: SpectralGrid, order: float
) -> float:
    if order < 1:
        raise DiagnosticsError(f"cross-term order must be >= 1, got {order}")
    mult = g.kmag ** (2.0 * (order - 1.0)) if order > 1 else np.ones(g.shape_spec)
    mult[0, 0] = 0.0
    pair = (vx * np.conj(1j * g.kx * th) + vy * np.conj(1j * g.ky * th)).real
    return float(g.box_length**2 * np.sum(g.parseval_weight * mult * pair))


def state_cross_term(state: TcmState, order: float) -> float:
    return _cross_term_coeffs(
        state.coeffs[2], state.coeffs[3], state.coeffs[ITH], state.grid, order
    )


def functional_A(state: TcmState, params: ModelParams, m: float | None = None) -> float:
    """Lyapunov stability functional at order m (default: the base index s).

    sqrt of ||Lambda^m u||^2 + ||Lambda^{delta1} u||^2 + ||v||_{H^m}^2
    + ||theta||_{H^m}^2 minus eta times the order-m and order-1 cross terms.
    The radicand is checked against the (3/4)-equivalence band before rooting.
    """
    m = params.s if m is None else m
    ssum = cross_free_sum_A(state, params, m)
    rad = ssum - params.eta * (state_cross_term(state, m) + state_cross_term(state, 1.0))
    if rad < 0.75 * ssum - 1e-12 * max(ssum, 1.0):
        raise DiagnosticsError(
            f"A-functional radicand {rad:.6g} fell below 3/4 of the norm sum {ssum:.6g}; eta bound violated"
        )
    return math.sqrt(max(rad, 0.0))


def cross_free_sum_A(state: TcmState, params: ModelParams, m: float | None = None) -> float:
    """The squared-norm sum entering A without its cross terms."""
    m = params.s if m is None else m
    return (
        _hom_norm_sq(state, IU, m)
        + _hom_norm_sq(state, IU, float(params.delta1))
        + _hs_norm_sq(state, IV, m)
        + _hs_norm_sq(state, FIELD_SLICES["theta"], m)
    )


def functional_B(
    state: TcmState,
    params: ModelParams,
    m: float | None = None,
    theta_slot: str = "lambda_m",
) -> float:
    """Dissipation functional at order m, weighted by lam.

    theta_slot = "lambda_m":  lam * sqrt(||grad u||_{Hdot^m}^2 + ||v||_{H^m}^2
                                         + ||Lambda^m theta||^2)
    theta_slot = "grad_hm1":  lam * sqrt(||grad u||_{H^m}^2 + ||v||_{H^m}^2
                                         + ||grad theta||_{H^{m-1}}^2)

    The two variants differ in the theta slot and in whether the u gradient
    norm carries its low-order part; they are never conflated.
    """
    m = params.s if m is None else m
    v_sq = _hs_norm_sq(state, IV, m)
    if theta_slot == "lambda_m":
        rad = _hom_norm_sq(state, IU, m + 1.0) + v_sq + _hom_norm_sq(state, FIELD_SLICES["theta"], m)
    elif theta_slot == "grad_hm1":
        grad_u_sq = _hom_norm_sq(state, IU, 1.0) + _hom_norm_sq(state, IU, m + 1.0)
        grad_th_sq = _hom_norm_sq(state, FIELD_SLICES["theta"], 1.0) + _hom_norm_sq(
            state, FIELD_SLICES["theta"], m
        )
        rad = grad_u_sq + v_sq + grad_th_sq
    else:
        raise DiagnosticsError(f"theta_slot must be 'lambda_m' or 'grad_hm1', got {theta_slot!r}")
    return params.lam * math.sqrt(rad)


def functional_X(state: TcmState, params: ModelParams, m: float | None = None) -> float:
    """Decay Lyapunov functional: order-m and order-(m-1) norms with the kappa cross term."""
    m = params.s if m is None else m
    if not m > 1:
        raise DiagnosticsError(f"X-functional order must be > 1, got {m}")
    ssum = cross_free_sum_X(state, params, m)
    rad = ssum - params.kappa * state_cross_term(state, m)
    if rad < 0:
        raise DiagnosticsError(
            f"X-functional radicand {rad:.6g} negative at order {m}; kappa bound violated"
        )
    return math.sqrt(rad)


def cross_free_sum_X(state: TcmState, params: ModelParams, m: float | None = None) -> float:
    m = params.s if m is None else m
    return sum(
        _hom_norm_sq(state, comp, order)
        for comp in (IU, IV, FIELD_SLICES["theta"])
        for order in (m, m - 1.0)
    )


def functional_Y(state: TcmState, params: ModelParams, m: float | None = None) -> float:
    """Dissipation counterpart of X."""
    m = params.s if m is None else m
    rad = (
        _hom_norm_sq(state, IU, m + 1.0)
        + _hom_norm_sq(state, IU, m)
        + params.alpha * _hom_norm_sq(state, IU, m - 1.0)
        + _hom_norm_sq(state, IV, m)
        + _hom_norm_sq(state, IV, m - 1.0)
        + _hom_norm_sq(state, FIELD_SLICES["theta"], m)
    )
    return math.sqrt(rad)


def smallness_norm(state: TcmState, params: ModelParams) -> float:
    """The norm sum the small-data hypotheses bound by epsilon.

    Undamped: ||u||_{H^s} + ||v||_{H^s} + ||theta||_{H^s}.
    Damped:   ||u||_{Hdot^s cap Hdot^1} + ||v||_{H^s} + ||theta||_{H^s}.
    """
    s = params.s
    v_part = math.sqrt(_hs_norm_sq(state, IV, s))
    th_part = math.sqrt(_hs_norm_sq(state, FIELD_SLICES["theta"], s))
    if params.delta1 == 0:
        u_part = math.sqrt(_hs_norm_sq(state, IU, s))
    else:
        u_part = math.sqrt(_hom_norm_sq(state, IU, s) + _hom_norm_sq(state, IU, 1.0))
    return u_part + v_part + th_part


def theory_exponent(fieldname: str, gamma: float, damped: bool) -> float:
    """Theoretical decay exponent of log||Lambda^gamma field|| vs log(1+t).

    Undamped: u -> -gamma/2, v -> -(gamma+1)/2, theta -> -gamma/2.
    Damped:   u -> -(gamma+4)/2, v and theta unchanged.
    """
    if gamma < 0:
        raise DiagnosticsError(f"gamma must be >= 0, got {gamma}")
    if fieldname == "u":
        return -(gamma + 4.0) / 2.0 if damped else -gamma / 2.0
    if fieldname == "v":
        return -(gamma + 1.0) / 2.0
    if fieldname == "theta":
        return -gamma / 2.0
    raise DiagnosticsError(f"unknown field {fieldname!r}")


@dataclass(frozen=True)
class DecayFit:
    """Fitted decay exponent of one norm time series over a window."""

    field: str
    gamma: float
    window: tuple[float, float]
    exponent: float
    r_squared: float
    theory_exponent: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "gamma": self.gamma,
            "window": list(self.window),
            "exponent": self.exponent,
            "r_squared": self.r_squared,
            "theory_exponent": self.theory_exponent,
            "n_samples": self.n_samples,
        }


def decay_fit(
    series: Sequence[tuple[float, float]],
    window: tuple[float, float],
    fieldname: str = "",
    gamma: float = 0.0,
    theory: float = 0.0,
) -> DecayFit:
    """Least-squares slope of log(value) against log(1 + t) over the window."""
    t0, t1 = window
    if not t0 < t1:
        raise DecayFitError(f"window must satisfy t0 < t1, got {window}")
    pts = [(t, v) for t, v in series if t0 <= t <= t1]
    if len(pts) < 8:
        raise DecayFitError(f"need >= 8 samples in the window, got {len(pts)}")
    if any(v <= 0 for _, v in pts):
        raise DecayFitError("nonpositive values in the fit window")
    x = np.log1p([t for t, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return DecayFit(fieldname, gamma, (t0, t1), float(slope), min(r2, 1.0), theory, len(pts))


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Which norms and functional orders a run records."""

    norms: tuple[tuple[str, float], ...] = (
        ("u", 0.0),
        ("u", 1.0),
        ("v", 0.0),
        ("v", 1.0),
        ("theta", 0.0),
        ("theta", 1.0),
    )
    functional_orders: tuple[float, ...] = ()

    def orders(self, params: ModelParams) -> tuple[float, ...]:
        return self.functional_orders if self.functional_orders else (params.s,)


@dataclass
class DiagnosticsRecord:
    """One per-sample bundle of norms, functionals, cross terms, and budget data."""

    time: float
    norms: dict[tuple[str, float], float]
    A_m: float
    B_m: float
    B_m_gradtheta: float
    X_m: float
    Y_m: float
    cross_s: float
    cross_1: float
    budget_residual: float
    smallness: float
    energy: float
    dissipation: float
    diss_integral: float
    band_A: float          # cross-free sum / A^2
    band_X: float          # cross-free sum / X^2
    dt: float
    linf: dict[str, float]
    extra_orders: dict[float, tuple[float, float, float, float]] = field(default_factory=dict)


def compute_record(
    state: TcmState,
    params: ModelParams,
    config: DiagnosticsConfig,
    dt: float,
    diss_integral: float,
) -> DiagnosticsRecord:
    orders = config.orders(params)
    m0 = orders[0]
    residual, diss = _budget(state, params)
    a = functional_A(state, params, m0)
    x = functional_X(state, params, m0)
    sum_a = cross_free_sum_A(state, params, m0)
    sum_x = cross_free_sum_X(state, params, m0)
    vals = to_phys(state.coeffs, state.grid)
    linf = {
        "u": float(np.max(np.sqrt(vals[0] ** 2 + vals[1] ** 2))),
        "v": float(np.max(np.sqrt(vals[2] ** 2 + vals[3] ** 2))),
        "theta": float(np.max(np.abs(vals[ITH]))),
    }
    g = state.grid
    w = g.box_length**2 * g.parseval_weight
    energy = 0.5 * float(np.sum(w * np.abs(state.coeffs) ** 2))
    extra = {}
    for m in orders[1:]:
        extra[m] = (
            functional_A(state, params, m),
            functional_B(state, params, m),
            functional_X(state, params, m),
            functional_Y(state, params, m),
        )
    return DiagnosticsRecord(
        time=state.time,
        norms={(f, gm): field_norm(state, f, gm) for f, gm in config.norms},
        A_m=a,
        B_m=functional_B(state, params, m0, theta_slot="lambda_m"),
        B_m_gradtheta=functional_B(state, params, m0, theta_slot="grad_hm1"),
        X_m=x,
        Y_m=functional_Y(state, params, m0),
        cross_s=state_cross_term(state, m0),
        cross_1=state_cross_term(state, 1.0),
        budget_residual=residual,
        smallness=smallness_norm(state, params),
        energy=energy,
        dissipation=diss,
        diss_integral=diss_integral,
        band_A=sum_a / a**2 if a > 0 else 1.0,
        band_X=sum_x / x**2 if x > 0 else 1.0,
        dt=dt,
        linf=linf,
        extra_orders=extra,
    )


def norm_column(fieldname: str, gamma: float) -> str:
    return f"{fieldname}_gamma_{gamma:g}"


def csv_columns(config: DiagnosticsConfig, orders: Sequence[float]) -> list[str]:
    """Stable column order: the documented core block, then trailing extras."""
    cols = ["t"]
    cols += [norm_column(f, gm) for f, gm in config.norms]
    cols += ["A_m", "B_m", "X_m", "Y_m", "cross_s", "cross_1", "budget_residual"]
    cols += [
        "B_m_gradtheta",
        "smallness",
        "energy",
        "dissipation",
        "diss_integral",
        "band_A",
        "band_X",
        "dt",
        "linf_u",
        "linf_v",
        "linf_theta",
    ]
    for m in orders[1:]:
        cols += [f"A_m_{m:g}", f"B_m_{m:g}", f"X_m_{m:g}", f"Y_m_{m:g}"]
    return cols


def record_row(rec: DiagnosticsRecord, config: DiagnosticsConfig) -> list[float]:
    row = [rec.time]
    row += [rec.norms[key] for key in config.norms]
    row += [rec.A_m, rec.B_m, rec.X_m, rec.Y_m, rec.cross_s, rec.cross_1, rec.budget_residual]
    row += [
        rec.B_m_gradtheta,
        rec.smallness,
        rec.energy,
        rec.dissipation,
        rec.diss_integral,
        rec.band_A,
        rec.band_X,
        rec.dt,
        rec.linf["u"],
        rec.linf["v"],
        rec.linf["theta"],
    ]
    for m in sorted(rec.extra_orders):
        row += list(rec.extra_orders[m])
    return row


class CsvWriter:
    """One diagnostics row per sample; floats use shortest round-trip repr."""

    def __init__(self, fh: IO[str], config: DiagnosticsConfig, orders: Sequence[float]):
        self._fh = fh
        self._config = config
        fh.write(",".join(csv_columns(config, orders)) + "\n")

    def write(self, rec: DiagnosticsRecord) -> None:
        self._fh.write(",".join(repr(float(v)) for v in record_row(rec, self._config)) + "\n")


class JsonlWriter:
    """One JSON object per sample."""

    def __init__(self, fh: IO[str], config: DiagnosticsConfig):
        self._fh = fh
        self._config = config

    def write(self, rec: DiagnosticsRecord) -> None:
        obj = {
            "t": rec.time,
            "norms": {norm_column(f, gm): rec.norms[(f, gm)] for f, gm in self._config.norms},
            "A_m": rec.A_m,
            "B_m": rec.B_m,
            "B_m_gradtheta": rec.B_m_gradtheta,
            "X_m": rec.X_m,
            "Y_m": rec.Y_m,
            "cross_s": rec.cross_s,
            "cross_1": rec.cross_1,
            "budget_residual": rec.budget_residual,
            "smallness": rec.smallness,
            "energy": rec.energy,
            "dissipation": rec.dissipation,
            "diss_integral": rec.diss_integral,
            "band_A": rec.band_A,
            "band_X": rec.band_X,
            "dt": rec.dt,
            "linf": rec.linf,
            "extra_orders": {f"{m:g}": list(v) for m, v in sorted(rec.extra_orders.items())},
        }
        self._fh.write(json.dumps(obj) + "\n")
