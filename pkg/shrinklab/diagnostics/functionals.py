"""functionals.py - Gaussian area, energy, Dirichlet quotient and run-level checks.

Everything here is a pure function of a ``GeometrySnapshot`` or of a recorded
time series:

    Omega(M) = int e^{-|x|^2/4} dmu          Gaussian area
    E        = int S^2 dmu~                  energy (dmu~ = weighted measure)
    dE/dt    = -int S^4 + 2 int S G          G = L S + (kappa^2 + 1/2) S
    N        = E' / E                        Dirichlet quotient

Design decisions:
    - N is undefined (``None``) when E is at or below a floor, never a
      division by quadrature noise.
    - The dN/dt lower bound is assembled from sup-norms term by term; its
      constant C is total / (|S| + |S_s| + |S_ss|) and the bound is -total.
    - Series checks return a ``CheckResult`` with ``passed`` set to None when
      the series has no data the check applies to.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from sklearn.linear_model import LinearRegression

from ..errors import FitDegenerate, InsufficientData, InvalidArgument
from ..geometry import GeometrySnapshot, l_operator, weighted_integral

logger = logging.getLogger(__name__)

ENERGY_FLOOR = 1e-14

SERIES_COLUMNS: tuple[str, ...] = (
    "t",
    "omega",
    "energy",
    "N",
    "sup_S",
    "sup_dS",
    "sup_d2S",
    "q",
    "v_c0",
    "v_c1",
    "v_c2",
)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of the run diagnostics.

    ``quotient`` is None when the energy is below the floor. Graph norms are
    NaN until the shrinker module fills them in.
    """

    t: float
    omega: float
    energy: float
    quotient: float | None
    sup_S: float
    sup_dS: float
    sup_d2S: float
    ndot_bound: float
    q: float = math.nan
    v_c0: float = math.nan
    v_c1: float = math.nan
    v_c2: float = math.nan
    v_c2_alpha: float = math.nan
    energy_rate: float = 0.0
    sup_kappa: float = 0.0
    ndot_constant: float = 0.0

    def to_series_row(self) -> dict[str, float | None]:
        """The series.csv columns, in order."""
        return {
            "t": self.t,
            "omega": self.omega,
            "energy": self.energy,
            "N": self.quotient,
            "sup_S": self.sup_S,
            "sup_dS": self.sup_dS,
            "sup_d2S": self.sup_d2S,
            "q": self.q,
            "v_c0": self.v_c0,
            "v_c1": self.v_c1,
            "v_c2": self.v_c2,
        }


@dataclass(frozen=True)
class NdotBound:
    """Lower bound on dN/dt assembled from sup-norms.

    Attributes:
        value: The bound -C (|S| + |S_s| + |S_ss|).
        constant: The assembled constant C.
        norm_sum: |S| + |S_s| + |S_ss| (sup-norms).
        ingredients: Sup-norms of every geometric factor used.
        terms: Contribution of each group of terms to the total.
    """

    value: float
    constant: float
    norm_sum: float
    ingredients: dict[str, float] = field(default_factory=dict)
    terms: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one run-level check; ``passed`` is None when not applicable."""

    passed: bool | None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, **self.details}


@dataclass(frozen=True)
class LojasiewiczFit:
    """Fit of log |S|_{L^2} = theta log Q + log c."""

    theta: float
    coefficient: float
    residual: float
    n_samples: int
    n_dropped: int = 0


@dataclass(frozen=True)
class EnergyPinching:
    """Two-sided exponential envelope of the energy after burn-in."""

    K: float
    K_prime: float | None
    upper_rate_ok: bool | None
    envelope_ok: bool | None
    max_quotient: float | None = None

    @property
    def passed(self) -> bool | None:
        if self.upper_rate_ok is None or self.envelope_ok is None:
            return None
        return bool(self.upper_rate_ok and self.envelope_ok and np.isfinite(self.K_prime))


# ---------------------------------------------------------------------------
# Functionals of one snapshot
# ---------------------------------------------------------------------------
def gaussian_area(snap: GeometrySnapshot) -> float:
    """Omega = int e^{-|x|^2/4} dmu."""
    return weighted_integral(1.0, snap, weighted=True)


def energy(snap: GeometrySnapshot) -> float:
    """E = int S^2 e^{-|x|^2/4} dmu."""
    return weighted_integral(snap.S**2, snap, weighted=True)


def defect_evolution(snap: GeometrySnapshot) -> np.ndarray:
    """G = L S + (kappa^2 + 1/2) S, the time derivative of S under the normal flow."""
    return l_operator(snap.S, snap) + (snap.kappa**2 + 0.5) * snap.S


def energy_rate(snap: GeometrySnapshot) -> float:
    """dE/dt = -int S^4 dmu~ + 2 int S G dmu~ along the normal rescaled flow."""
    S = snap.S
    G = defect_evolution(snap)
    return -weighted_integral(S**4, snap, True) + 2.0 * weighted_integral(S * G, snap, True)


def energy_rate_integrated(snap: GeometrySnapshot) -> float:
    """The same rate after integrating by parts: -int S^4 - 2 int S_s^2 + 2 int (kappa^2 + 1/2) S^2."""
    S = snap.S
    return (
        -weighted_integral(S**4, snap, True)
        - 2.0 * weighted_integral(snap.dS**2, snap, True)
        + 2.0 * weighted_integral((snap.kappa**2 + 0.5) * S**2, snap, True)
    )


def dirichlet_quotient(energy: float, energy_rate: float, floor: float = ENERGY_FLOOR) -> float | None:
    """N = E' / E, or None when ``energy <= floor``."""
    if energy <= floor:
        return None
    return energy_rate / energy


def defect_sup_norms(snap: GeometrySnapshot) -> tuple[float, float, float]:
    """Sup-norms of S, S_s and S_ss."""
    return _sup(snap.S), _sup(snap.dS), _sup(snap.d2S)


def ndot_bound(snap: GeometrySnapshot) -> NdotBound:
    """Assemble the lower bound dN/dt >= -C (|S| + |S_s| + |S_ss|).

    Every term of the quotient-rate expression except the nonnegative
    Cauchy-Schwarz term is of the form (1/E) int S^2 X dmu~ or is brought to
    that form by one integration by parts, so it is bounded below by -sup|X|.
    Groups of terms:

        defect_cubic        2 (|S LS| + |kappa^2 + 1/2| |S|^2)
        curvature_hessian   2 (4 |kappa| |S_ss| + |kappa_s| |S_s| + 2 |kappa^3| |S|)
        gradient_pairing    2 (|kappa_s| |S_s| + |kappa| |S_ss| + |x|/2 |kappa| |S_s|)
        position_drift      2 (|x|/2 |kappa| |S_s| + |S_s|^2)

    Args:
        snap: Snapshot on the normal rescaled flow.

    Returns:
        The bound, its constant and the sup-norms it was assembled from.
    """
    S = snap.S
    LS = l_operator(S, snap)
    sup_S, sup_dS, sup_d2S = defect_sup_norms(snap)
    sup_k = _sup(snap.kappa)
    sup_dk = _sup(snap.dkappa)
    sup_x = float(np.max(np.linalg.norm(snap.x, axis=1)))

    ingredients = {
        "S": sup_S,
        "dS": sup_dS,
        "d2S": sup_d2S,
        "S_LS": _sup(S * LS),
        "kappa": sup_k,
        "dkappa": sup_dk,
        "kappa_cubed": _sup(snap.kappa**3),
        "kappa_squared_plus_half": _sup(snap.kappa**2 + 0.5),
        "x": sup_x,
    }
    terms = {
        "defect_cubic": 2.0 * (ingredients["S_LS"] + ingredients["kappa_squared_plus_half"] * sup_S**2),
        "curvature_hessian": 2.0
        * (4.0 * sup_k * sup_d2S + sup_dk * sup_dS + 2.0 * ingredients["kappa_cubed"] * sup_S),
        "gradient_pairing": 2.0 * (sup_dk * sup_dS + sup_k * sup_d2S + 0.5 * sup_x * sup_k * sup_dS),
        "position_drift": 2.0 * (0.5 * sup_x * sup_k * sup_dS + sup_dS**2),
    }
    total = float(sum(terms.values()))
    norm_sum = sup_S + sup_dS + sup_d2S
    constant = total / norm_sum if norm_sum > 0.0 else 0.0
    return NdotBound(
        value=-constant * norm_sum,
        constant=constant,
        norm_sum=norm_sum,
        ingredients=ingredients,
        terms=terms,
    )


def measure(
    t: float,
    snap: GeometrySnapshot,
    q: float = math.nan,
    graph_norms: dict[str, float] | None = None,
    energy_floor: float = ENERGY_FLOOR,
) -> DiagnosticsRecord:
    """Build the ``DiagnosticsRecord`` of one sample.

    Args:
        t: Rescaled time of the sample.
        snap: Snapshot of the (rescaled) curve.
        q: Omega(M_t) - Omega(Sigma), if known.
        graph_norms: ``c0``, ``c1``, ``c2``, ``c2_alpha`` of the normal graph.
        energy_floor: Relative floor; N is reported only when
            E > energy_floor * Omega.
    """
    omega = gaussian_area(snap)
    e = energy(snap)
    rate = energy_rate(snap)
    sup_S, sup_dS, sup_d2S = defect_sup_norms(snap)
    bound = ndot_bound(snap)
    norms = graph_norms or {}
    return DiagnosticsRecord(
        t=float(t),
        omega=omega,
        energy=e,
        quotient=dirichlet_quotient(e, rate, floor=energy_floor * omega),
        sup_S=sup_S,
        sup_dS=sup_dS,
        sup_d2S=sup_d2S,
        ndot_bound=bound.value,
        q=float(q),
        v_c0=norms.get("c0", math.nan),
        v_c1=norms.get("c1", math.nan),
        v_c2=norms.get("c2", math.nan),
        v_c2_alpha=norms.get("c2_alpha", math.nan),
        energy_rate=rate,
        sup_kappa=_sup(snap.kappa),
        ndot_constant=bound.constant,
    )


# ---------------------------------------------------------------------------
# Series checks
# ---------------------------------------------------------------------------
def monotonicity_residual(t: Sequence[float], omega: Sequence[float], energy: Sequence[float]) -> np.ndarray:
    """Per-interval residual |Omega_{i+1} - Omega_i + int E dt| (trapezoid).

    Raises:
        InvalidArgument: Fewer than three samples, mismatched lengths, or
            times that are not strictly increasing.
    """
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    e = np.asarray(energy, dtype=float)
    if not (len(t) == len(omega) == len(e)):
        raise InvalidArgument(
            f"series lengths differ: t={len(t)}, omega={len(omega)}, energy={len(e)}"
        )
    if len(t) < 3:
        raise InvalidArgument(f"monotonicity_residual needs >= 3 samples, got {len(t)}")
    steps = np.diff(t)
    if np.any(steps <= 0.0):
        raise InvalidArgument("sample times must be strictly increasing")
    return np.abs(np.diff(omega) + 0.5 * (e[1:] + e[:-1]) * steps)


def ndot_from_series(t: Sequence[float], quotient: Sequence[float | None]) -> np.ndarray:
    """dN/dt by differencing N (NaN where N is undefined)."""
    t = np.asarray(t, dtype=float)
    n = np.array([math.nan if v is None else v for v in quotient], dtype=float)
    if len(t) < 2:
        return np.full(len(t), math.nan)
    return np.gradient(n, t)


def ndot_lower_bound_check(
    t: Sequence[float],
    quotient: Sequence[float | None],
    bounds: Sequence[float],
    slack: float = 0.05,
) -> CheckResult:
    """Finite-difference dN/dt >= (1 + slack) * bound at every sample where both exist."""
    ndot = ndot_from_series(t, quotient)
    bounds = np.asarray(bounds, dtype=float)
    mask = np.isfinite(ndot) & np.isfinite(bounds)
    if not mask.any():
        return CheckResult(None, {"reason": "no samples with defined quotient", "samples": 0})
    margin = ndot[mask] - (1.0 + slack) * bounds[mask]
    return CheckResult(
        bool(np.all(margin >= 0.0)),
        {"samples": int(mask.sum()), "worst_margin": float(margin.min())},
    )


def energy_pinching(
    t: Sequence[float],
    energies: Sequence[float],
    quotient: Sequence[float | None],
    sup_kappa: Sequence[float],
    burn_in: float,
    slack: float = 0.02,
) -> EnergyPinching:
    """Check -K' <= d/dt log E <= K and the matching envelopes of E after burn-in.

    K = max over the run of 2 (|kappa|^2 + 1/2); K' = -min N over samples with
    t >= burn_in and N defined.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(energies, dtype=float)
    n = np.array([math.nan if v is None else v for v in quotient], dtype=float)
    K = float(np.max(2.0 * (np.asarray(sup_kappa, dtype=float) ** 2 + 0.5)))
    mask = (t >= burn_in) & np.isfinite(n)
    if not mask.any():
        return EnergyPinching(K, None, None, None)

    K_prime = float(-np.min(n[mask]))
    upper_ok = bool(np.all(n[mask] <= K * (1.0 + slack)))
    ts, es = t[mask], e[mask]
    elapsed = ts - ts[0]
    lower = es[0] * np.exp(-K_prime * elapsed)
    upper = es[0] * np.exp(K * elapsed)
    envelope_ok = bool(np.all(es * (1.0 + slack) >= lower) and np.all(es <= upper * (1.0 + slack)))
    return EnergyPinching(K, K_prime, upper_ok, envelope_ok, float(np.max(n[mask])))


def decay_lower_bound_check(
    t: Sequence[float],
    q: Sequence[float],
    energies: Sequence[float],
    K_prime: float | None,
    burn_in: float,
    slack: float = 0.10,
) -> CheckResult:
    """Q(t) >= (1 - slack) (E(T0) / K') e^{-K' (t - T0)} for t >= T0."""
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    e = np.asarray(energies, dtype=float)
    mask = (t >= burn_in) & np.isfinite(q)
    if K_prime is None or not K_prime > 0.0 or not mask.any():
        return CheckResult(None, {"reason": "K' not positive or no samples after burn-in"})
    ts = t[mask]
    bound = e[mask][0] / K_prime * np.exp(-K_prime * (ts - ts[0]))
    ratio = q[mask] / np.where(bound > 0.0, bound, math.inf)
    return CheckResult(
        bool(np.all(q[mask] >= (1.0 - slack) * bound)),
        {"min_ratio": float(np.min(ratio)), "T0": float(ts[0])},
    )


def integrability_tail(
    t: Sequence[float],
    sup_norms: dict[str, Sequence[float]],
    tail_start: float,
    fraction: float = 1e-3,
) -> CheckResult:
    """Share of int |grad^l S|_inf dt contributed after ``tail_start``, per order l."""
    t = np.asarray(t, dtype=float)
    if len(t) < 2 or t[-1] <= tail_start:
        return CheckResult(None, {"reason": f"run ends before t={tail_start}"})
    shares: dict[str, float] = {}
    for name, values in sup_norms.items():
        cumulative = cumulative_trapezoid(np.asarray(values, dtype=float), t, initial=0.0)
        total = float(cumulative[-1])
        before = float(np.interp(tail_start, t, cumulative))
        shares[name] = (total - before) / total if total > 0.0 else 0.0
    return CheckResult(
        bool(all(share < fraction for share in shares.values())),
        {"tail_share": shares, "tail_start": tail_start},
    )


def lojasiewicz_probe(q: Sequence[float], s_norm: Sequence[float]) -> LojasiewiczFit:
    """Fit the exponent theta of |S|_{L^2(weighted)} ~ Q^theta.

    Samples with Q <= 0 (or a vanishing norm) are dropped with a warning.

    Raises:
        InsufficientData: Fewer than two usable samples.
        FitDegenerate: All usable samples share one value of Q.
    """
    q = np.asarray(q, dtype=float)
    s = np.asarray(s_norm, dtype=float)
    keep = np.isfinite(q) & np.isfinite(s) & (q > 0.0) & (s > 0.0)
    dropped = int(len(q) - keep.sum())
    if dropped:
        logger.warning("lojasiewicz_probe: dropped %d samples with Q <= 0 or zero norm", dropped)
    if keep.sum() < 2:
        raise InsufficientData(f"lojasiewicz_probe needs >= 2 samples with Q > 0, got {int(keep.sum())}")
    log_q = np.log(q[keep])
    log_s = np.log(s[keep])
    if np.ptp(log_q) <= 1e-12 * max(1.0, float(np.max(np.abs(log_q)))):
        raise FitDegenerate("Q is constant over the probe window")

    model = LinearRegression().fit(log_q.reshape(-1, 1), log_s)
    residual = float(np.sqrt(np.mean((model.predict(log_q.reshape(-1, 1)) - log_s) ** 2)))
    return LojasiewiczFit(
        theta=float(model.coef_[0]),
        coefficient=float(np.exp(model.intercept_)),
        residual=residual,
        n_samples=int(keep.sum()),
        n_dropped=dropped,
    )


def _sup(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))
