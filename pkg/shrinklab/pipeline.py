"""pipeline.py - Run, verify and sweep orchestration; the only filesystem layer.

    run_scenario   flow + diagnostics + shrinker checks -> series.csv,
                   summary.json, final_curve.csv
    verify         identity suite at two resolutions -> identities.json
    sweep          independent runs over a (mode, amplitude) grid -> rates.csv
    sphere_ode     round-sphere radius ODE -> sphere.csv (optional)

Every run executes inside ``run_scope`` so a numerical failure leaves
``failure_trace.jsonl`` in its own output directory.

Design decisions:
    - The config ``dt`` is the sampling interval of the series; the flow
      covers each interval with admissible sub-steps.
    - Checks never abort a run. Each check lands in summary.json with
      ``passed`` true, false or null (not applicable), plus its numbers.
    - JSON is written with sorted keys and non-finite floats mapped to null,
      and CSV floats with ``%.17g``, so identical configs give identical files.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd

from .config import InitialShape, RunConfig
from .diagnostics import (
    SERIES_COLUMNS,
    CheckResult,
    DiagnosticsRecord,
    IdentityReport,
    decay_lower_bound_check,
    energy_pinching,
    energy_rate_integrated,
    integrability_tail,
    lojasiewicz_probe,
    lookup,
    measure,
    monotonicity_residual,
    ndot_lower_bound_check,
    run_identity_suite,
)
from .errors import (
    BlowUpDetected,
    CheckFailed,
    FitDegenerate,
    GraphDecompositionFailed,
    InsufficientData,
    InvalidArgument,
    ShrinklabError,
)
from .flow import (
    SHRINKER_AREA,
    FlowMode,
    FlowState,
    admissible_dt,
    advance,
    estimate_singular_time,
    renormalize,
    rescale_to_normalized,
    sphere_extinction_time,
    sphere_fixed_point,
    sphere_radius_exact,
    sphere_radius_ode,
)
from .geometry import (
    ClosedCurve,
    centroid,
    circle,
    ellipse,
    enclosed_area,
    fourier_curve,
    hausdorff_distance,
    is_simple,
    resample_uniform,
    snapshot,
)
from .runlog import run_scope, traced
from .shrinker import (
    RateFit,
    ReferenceShrinker,
    dichotomy_check,
    fit_rate,
    graph_decompose,
    graph_gaussian_area,
    initial_distance,
    predicted_rate,
    rate_lemma_check,
    stability_spectrum,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SERIES_FILE = "series.csv"
SUMMARY_FILE = "summary.json"
FINAL_CURVE_FILE = "final_curve.csv"
IDENTITIES_FILE = "identities.json"
RATES_FILE = "rates.csv"
SPHERE_FILE = "sphere.csv"
RATE_COLUMNS = ("k", "amplitude", "m", "C", "expected_m", "relative_error", "status", "passed", "error")

SWEEP_RATE_TOLERANCE = 0.15
LOJASIEWICZ_BAND = (0.4, 0.6)
GRAPH_AREA_TOLERANCE = 1e-8
AREA_LAW_TOLERANCE = 1e-3
_DOMINANT_MODE_FLOOR = 1e-12


@dataclass
class RunResult:
    """Everything ``run_scenario`` produced, besides the files."""

    config: RunConfig
    records: list[DiagnosticsRecord]
    summary: dict[str, Any]
    final_curve: ClosedCurve
    output_dir: Path
    checks: dict[str, CheckResult] = field(default_factory=dict)

    def failed_checks(self) -> list[str]:
        return [name for name, check in self.checks.items() if check.passed is False]


# ---------------------------------------------------------------------------
# Curve files and initial curves
# ---------------------------------------------------------------------------
def read_curve_csv(path: str | Path) -> ClosedCurve:
    """Read a CSV with header ``x,y`` (implicit closure).

    Raises:
        InvalidArgument: Missing file, missing columns or an invalid curve.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidArgument(f"initial: curve file {path} does not exist")
    frame = pd.read_csv(path)
    if list(frame.columns[:2]) != ["x", "y"]:
        raise InvalidArgument(f"initial: {path} must have header 'x,y', got {list(frame.columns)}")
    pts = frame[["x", "y"]].to_numpy(dtype=float)
    if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    return ClosedCurve(pts)


def write_curve_csv(curve: ClosedCurve, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(curve.vertices, columns=["x", "y"]).to_csv(path, index=False, float_format="%.17g")
    return path


def build_initial_curve(shape: InitialShape | str, n: int) -> ClosedCurve:
    """Uniformly sampled initial curve with ``n`` vertices."""
    shape = InitialShape.parse(shape) if isinstance(shape, str) else shape
    if shape.kind == "circle":
        return circle(shape.params[0], n)
    if shape.kind == "ellipse":
        return ellipse(shape.params[0], shape.params[1], n)
    if shape.kind == "fourier":
        return fourier_curve(shape.modes, n)
    return resample_uniform(read_curve_csv(shape.path), n)


def normalize_initial(curve: ClosedCurve) -> tuple[ClosedCurve, float]:
    """Recenter at the area centroid and scale to singular time 1.

    Returns:
        ``(normalized curve, singular time of the input)``.
    """
    singular_time = estimate_singular_time(curve)
    shifted = curve.translated(-centroid(curve))
    return shifted.scaled(1.0 / math.sqrt(singular_time)), singular_time


def prepare_initial(config: RunConfig, n: int | None = None) -> ClosedCurve:
    """Initial curve of ``config`` at ``n`` points, normalized when configured."""
    curve = build_initial_curve(config.shape, n or config.n_points)
    if not is_simple(curve):
        raise InvalidArgument(f"initial: {config.initial} is not a simple curve")
    if config.mode is not FlowMode.MCF and config.normalize:
        curve, _ = normalize_initial(curve)
    return curve


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------
def run_scenario(config: RunConfig, write: bool = True) -> RunResult:
    """Run one scenario and write its files.

    Raises:
        InvalidArgument: The initial curve cannot be built.
        BlowUpDetected: The curve degenerates during the run.
    """
    out = Path(config.output_dir)
    with run_scope(out.name or "run", out):
        try:
            return simulate(config, out, write)
        except ShrinklabError as exc:
            logger.error("run %s failed: %s", out.name, exc)
            raise


@traced
def simulate(config: RunConfig, out: Path, write: bool) -> RunResult:
    shrinker = ReferenceShrinker()
    curve0 = prepare_initial(config)
    mode = config.mode
    pinned = mode is not FlowMode.MCF and config.normalize
    area0 = enclosed_area(curve0)
    singular_time = estimate_singular_time(curve0)
    state = FlowState(curve0, 0.0, mode, method=config.derivative)
    logger.info(
        "run %s: initial=%s mode=%s N=%d dt=%g t_end=%g",
        out.name,
        config.initial,
        mode.value,
        config.n_points,
        config.dt,
        config.t_end,
    )

    sampler = _Sampler(config, shrinker, curve0, singular_time)
    sampler.sample(state)
    stopped_by = "t_end"
    max_area_drift = 0.0
    while state.clock < config.t_end - 1e-12 * max(1.0, config.t_end):
        duration = min(config.dt, config.t_end - state.clock)
        state = advance(state, duration, cfl=config.cfl, resample_every=config.resample_every)
        if pinned:
            drift = abs(enclosed_area(state.curve) / SHRINKER_AREA - 1.0)
            max_area_drift = max(max_area_drift, drift)
            state = replace(state, curve=renormalize(state.curve))
        if mode is FlowMode.MCF and enclosed_area(state.curve) < config.tol("area_stop") * area0:
            sampler.sample(state)
            stopped_by = "area_stop"
            break
        sampler.sample(state)

    logger.info("run %s: %d samples, clock=%.6g (%s)", out.name, len(sampler.records), state.clock, stopped_by)
    if pinned:
        logger.debug("run %s: largest relative area correction %.3g", out.name, max_area_drift)
    checks, fits = _post_run_checks(config, sampler, shrinker)
    run_info = {
        "mode": mode.value,
        "n_samples": len(sampler.records),
        "clock_final": state.clock,
        "t_final": sampler.records[-1].t,
        "steps": state.step_count,
        "stopped_by": stopped_by,
        "singular_time": singular_time,
        "initial_distance": initial_distance(curve0, shrinker),
        "initial_q": sampler.records[0].q,
        "max_drift": sampler.max_drift,
        "max_area_drift": max_area_drift if pinned else None,
        "energy_rate_forms": sampler.initial_rate_forms,
        "final": {
            "omega": sampler.records[-1].omega,
            "energy": sampler.records[-1].energy,
            "q": sampler.records[-1].q,
            "v_c0": sampler.records[-1].v_c0,
        },
    }
    summary = {
        "schema": SCHEMA_VERSION,
        "config": config.to_dict(),
        "run": run_info,
        "fits": fits,
        "checks": {name: check.to_dict() for name, check in checks.items()},
    }
    result = RunResult(config, sampler.records, summary, state.curve, out, checks)
    if write:
        write_run_files(result)
    failed = result.failed_checks()
    if failed:
        logger.warning("run %s: checks not passed: %s", out.name, ", ".join(failed))
    return result


class _Sampler:
    """Turns flow states into diagnostics records and tracks run-level extras."""

    def __init__(self, config: RunConfig, shrinker: ReferenceShrinker, curve0: ClosedCurve, singular_time: float):
        self.config = config
        self.shrinker = shrinker
        self.curve0 = curve0
        self.singular_time = singular_time
        self.records: list[DiagnosticsRecord] = []
        self.graphs: list[Any] = []
        self.taus: list[float] = []
        self.areas: list[float] = []
        self.max_drift = 0.0
        self.initial_rate_forms: dict[str, float] = {}

    def sample(self, state: FlowState) -> DiagnosticsRecord:
        config = self.config
        curve, t = state.curve, state.clock
        if state.mode is FlowMode.MCF:
            self.taus.append(state.clock)
            self.areas.append(enclosed_area(curve))
            curve, t = rescale_to_normalized(curve, state.clock, self.singular_time)
        else:
            self.max_drift = max(self.max_drift, hausdorff_distance(curve, self.curve0))

        if len(self.records) % config.simplicity_every == 0 and not is_simple(curve):
            raise BlowUpDetected(f"curve self-intersects at clock {state.clock:.6g}", clock=state.clock)

        snap = snapshot(curve, config.derivative)
        graph = None
        try:
            graph = graph_decompose(curve, self.shrinker)
        except GraphDecompositionFailed as exc:
            logger.warning("t=%.4g: no graph over the shrinker (%s at angle %.3f)", t, exc, exc.angle)
        record = measure(
            t,
            snap,
            graph_norms=graph.norms() if graph is not None else None,
            energy_floor=config.tol("energy_floor"),
        )
        record = replace(record, q=record.omega - self.shrinker.omega)
        if not self.records:
            self.initial_rate_forms = {"direct": record.energy_rate, "integrated": energy_rate_integrated(snap)}
        self.records.append(record)
        self.graphs.append(graph)
        logger.debug(
            "t=%.4f omega=%.10g E=%.4g N=%s c0=%.3g",
            t,
            record.omega,
            record.energy,
            "undefined" if record.quotient is None else f"{record.quotient:.6g}",
            record.v_c0,
        )
        return record


def _column(records: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in records], dtype=float)


def _post_run_checks(
    config: RunConfig,
    sampler: _Sampler,
    shrinker: ReferenceShrinker,
) -> tuple[dict[str, CheckResult], dict[str, float | None]]:
    records = sampler.records
    tol = config.tol
    t = _column(records, "t")
    omega = _column(records, "omega")
    energies = _column(records, "energy")
    quotient = [r.quotient for r in records]
    q = _column(records, "q")
    c0 = _column(records, "v_c0")
    c2_alpha = _column(records, "v_c2_alpha")
    checks: dict[str, CheckResult] = {}
    fits: dict[str, float | None] = dict.fromkeys(("C", "m", "K", "K_prime", "C_tilde", "theta"))

    if len(t) >= 3:
        residual = monotonicity_residual(t, omega, energies)
        decreasing = bool(np.all(np.diff(omega) <= 1e-12 * omega[:-1]))
        checks["monotonicity"] = CheckResult(
            decreasing, {"max_residual": float(residual.max()), "omega_nonincreasing": decreasing}
        )
    else:
        checks["monotonicity"] = CheckResult(None, {"reason": "fewer than 3 samples"})

    checks["ndot_lower_bound"] = ndot_lower_bound_check(
        t, quotient, _column(records, "ndot_bound"), slack=tol("ndot_slack")
    )

    pinching = energy_pinching(
        t, energies, quotient, _column(records, "sup_kappa"), config.burn_in, slack=tol("pinching_slack")
    )
    fits["K"], fits["K_prime"] = pinching.K, pinching.K_prime
    checks["energy_pinching"] = CheckResult(
        pinching.passed,
        {
            "K": pinching.K,
            "K_prime": pinching.K_prime,
            "upper_rate_ok": pinching.upper_rate_ok,
            "envelope_ok": pinching.envelope_ok,
            "max_quotient": pinching.max_quotient,
        },
    )
    checks["decay_lower_bound"] = decay_lower_bound_check(
        t, q, energies, pinching.K_prime, config.burn_in, slack=tol("decay_bound_slack")
    )
    checks["integrability"] = integrability_tail(
        t,
        {
            "sup_S": _column(records, "sup_S"),
            "sup_dS": _column(records, "sup_dS"),
            "sup_d2S": _column(records, "sup_d2S"),
        },
        tail_start=tol("tail_start"),
        fraction=tol("tail_fraction"),
    )

    # Samples at the energy floor are numerically the shrinker; Q and the
    # graph norms there are round-off.
    defined = np.array([v is not None for v in quotient], dtype=bool)
    late = (t >= config.burn_in) & defined
    try:
        loj = lojasiewicz_probe(q[late], np.sqrt(energies[late]))
        fits["theta"] = loj.theta
        lo, hi = LOJASIEWICZ_BAND
        checks["lojasiewicz"] = CheckResult(
            lo <= loj.theta <= hi,
            {"theta": loj.theta, "residual": loj.residual, "samples": loj.n_samples, "dropped": loj.n_dropped},
        )
    except (InsufficientData, FitDegenerate) as exc:
        checks["lojasiewicz"] = CheckResult(None, {"reason": str(exc)})

    fit: RateFit | None = None
    try:
        nonzero = c0 > tol("graph_zero")
        fit = fit_rate(
            t[nonzero], c0[nonzero], config.fit_window, convexity=tol("convexity"), floor=tol("fit_floor")
        )
        fits["C"], fits["m"] = fit.C, fit.m
        checks["rate_fit"] = CheckResult(fit.exponential, fit.to_dict())
    except (InsufficientData, FitDegenerate) as exc:
        checks["rate_fit"] = CheckResult(None, {"reason": str(exc)})

    checks["stability_prediction"] = _stability_prediction(sampler, fit, shrinker)

    try:
        lemma = rate_lemma_check(
            t[late], q[late], c2_alpha[late], slack=tol("rate_lemma_slack"), zero_tol=tol("graph_zero")
        )
        fits["C_tilde"] = lemma.details.get("C_tilde")
        checks["rate_lemma"] = lemma
    except CheckFailed as exc:
        checks["rate_lemma"] = CheckResult(False, {"reason": str(exc)})
    checks["graph_gaussian_area"] = _graph_area_check(sampler)

    checks["dichotomy"] = dichotomy_check(t, c0, fit, margin=tol("dichotomy_margin"), zero_tol=tol("graph_zero"))

    if records[0].energy <= tol("fixed_point_energy") and config.mode is not FlowMode.MCF:
        max_energy = float(energies.max())
        checks["fixed_point"] = CheckResult(
            sampler.max_drift < tol("fixed_point_drift") and max_energy < tol("fixed_point_energy"),
            {"max_drift": sampler.max_drift, "max_energy": max_energy},
        )
    else:
        checks["fixed_point"] = CheckResult(None, {"reason": "initial curve is not a shrinker"})

    if config.mode is FlowMode.MCF:
        checks["area_law"] = _area_law_check(sampler.taus, sampler.areas)
    return checks, fits


def _stability_prediction(sampler: _Sampler, fit: RateFit | None, shrinker: ReferenceShrinker) -> CheckResult:
    graph = sampler.graphs[0]
    if graph is None:
        return CheckResult(None, {"reason": "initial curve is not a graph over the shrinker"})
    amplitudes = np.abs(np.fft.rfft(graph.v))[2:]
    if amplitudes.size == 0 or amplitudes.max() <= _DOMINANT_MODE_FLOOR * len(graph.v):
        return CheckResult(None, {"reason": "no perturbation mode with k >= 2"})
    k = int(np.argmax(amplitudes)) + 2
    spectrum = stability_spectrum(shrinker, m=2 * k + 1)
    details: dict[str, Any] = {
        "k": k,
        "expected_m": predicted_rate(k),
        "eigenvalue": float(spectrum[2 * k - 1]),
        "spectrum_head": [float(v) for v in spectrum[:5]],
    }
    if fit is None:
        return CheckResult(None, {**details, "reason": "no rate fit"})
    relative = abs(fit.m - predicted_rate(k)) / predicted_rate(k)
    return CheckResult(relative <= SWEEP_RATE_TOLERANCE, {**details, "m": fit.m, "relative_error": relative})


def _graph_area_check(sampler: _Sampler) -> CheckResult:
    for graph, record in zip(reversed(sampler.graphs), reversed(sampler.records)):
        if graph is not None:
            gap = abs(graph_gaussian_area(graph) - record.omega)
            return CheckResult(gap <= GRAPH_AREA_TOLERANCE, {"difference": gap, "t": record.t})
    return CheckResult(None, {"reason": "no sample is a graph over the shrinker"})


def _area_law_check(taus: Sequence[float], areas: Sequence[float]) -> CheckResult:
    tau = np.asarray(taus, dtype=float)
    area = np.asarray(areas, dtype=float)
    if len(tau) < 2:
        return CheckResult(None, {"reason": "fewer than 2 samples"})
    rate = np.diff(area) / np.diff(tau)
    residual = float(np.max(np.abs(rate + 2.0 * math.pi)))
    return CheckResult(
        residual <= AREA_LAW_TOLERANCE * 2.0 * math.pi,
        {"max_residual": residual, "tau_final": float(tau[-1]), "area_final": float(area[-1])},
    )


def write_run_files(result: RunResult) -> None:
    out = result.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(result.records, out / SERIES_FILE)
    write_json(result.summary, out / SUMMARY_FILE)
    write_curve_csv(result.final_curve, out / FINAL_CURVE_FILE)
    logger.info("wrote %s, %s and %s to %s", SERIES_FILE, SUMMARY_FILE, FINAL_CURVE_FILE, out)


def write_series_csv(records: Iterable[DiagnosticsRecord], path: str | Path) -> Path:
    path = Path(path)
    frame = pd.DataFrame([r.to_series_row() for r in records], columns=list(SERIES_COLUMNS))
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def write_json(payload: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------
def verify(config: RunConfig, names: Sequence[str] | None = None, write: bool = True) -> list[IdentityReport]:
    """Run the identity suite at (N, delta) and (2N, delta / 2).

    delta / 2 is the smaller of half the sampling interval and the admissible
    step at 2N.

    Raises:
        InvalidArgument: Unknown identity name (before any flow is run).
    """
    out = Path(config.output_dir)
    with run_scope(out.name or "verify", out):
        try:
            return check_identities(config, names, out, write)
        except ShrinklabError as exc:
            logger.error("verify %s failed: %s", out.name, exc)
            raise


@traced
def check_identities(config: RunConfig, names: Sequence[str] | None, out: Path, write: bool) -> list[IdentityReport]:
    for name in names or ():
        lookup(name)
    n = config.n_points
    fine = prepare_initial(config, 2 * n)
    delta_fine = min(0.5 * config.dt, admissible_dt(fine, config.cfl, config.derivative))
    reports = run_identity_suite(
        lambda points: prepare_initial(config, points),
        n,
        2.0 * delta_fine,
        names=names,
        method=config.derivative,
        cfl=config.cfl,
    )
    if write:
        write_json([r.to_dict() for r in reports], out / IDENTITIES_FILE)
        logger.info("wrote %d identity reports to %s", len(reports), out / IDENTITIES_FILE)
    return reports


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------
def sweep(config: RunConfig, grid: Iterable[tuple[int, float]], write: bool = True) -> pd.DataFrame:
    """Independent runs from fourier:k:amplitude initial curves.

    Grid points are deduplicated in order. Failed runs are recorded in their
    row and do not stop the sweep. Mode k is fitted on ``config.fit_window``
    divided by max(1, k^2/2 - 1), so every mode is fitted over the same
    range of e-folds.

    Raises:
        InvalidArgument: The grid is empty.
    """
    points = list(dict.fromkeys((int(k), float(a)) for k, a in grid))
    if not points:
        raise InvalidArgument("sweep grid is empty")
    base = Path(config.output_dir)
    logger.info("sweep: %d runs with %d workers into %s", len(points), config.workers, base)

    with ThreadPoolExecutor(max_workers=min(config.workers, len(points))) as pool:
        rows = list(pool.map(lambda point: _sweep_row(config, base, *point), points))

    frame = pd.DataFrame(rows, columns=list(RATE_COLUMNS))
    if write:
        base.mkdir(parents=True, exist_ok=True)
        frame.to_csv(base / RATES_FILE, index=False, float_format="%.17g")
    return frame


def mode_fit_window(window: tuple[float, float], k: int) -> tuple[float, float]:
    """``window`` shrunk by the predicted rate of mode ``k`` (modes 0 and 1 keep it)."""
    scale = max(1.0, predicted_rate(k))
    return (window[0] / scale, window[1] / scale)


def _sweep_row(config: RunConfig, base: Path, k: int, amplitude: float) -> dict[str, Any]:
    expected = predicted_rate(k)
    row: dict[str, Any] = {"k": k, "amplitude": amplitude, "m": None, "C": None, "expected_m": expected,
                           "relative_error": None, "status": "ok", "passed": False, "error": ""}
    run_config = config.with_overrides(
        initial=f"fourier:{k}:{amplitude!r}",
        output_dir=str(base / f"k{k}_eps{amplitude:g}"),
        fit_window=mode_fit_window(config.fit_window, k),
    )
    try:
        result = run_scenario(run_config)
    except ShrinklabError as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return row
    m, C = result.summary["fits"]["m"], result.summary["fits"]["C"]
    row.update(m=m, C=C)
    if m is not None and expected != 0.0:
        row["relative_error"] = abs(m - expected) / abs(expected)
        row["passed"] = row["relative_error"] <= SWEEP_RATE_TOLERANCE
    return row


# ---------------------------------------------------------------------------
# sphere-ode
# ---------------------------------------------------------------------------
def sphere_ode(
    n: int,
    r0: float,
    t_end: float,
    dt: float,
    output_dir: str | Path | None = None,
) -> dict[str, Any]:
    """Integrate dr/dt = r/2 - n/r and compare with the closed form."""
    trajectory = sphere_radius_ode(n, r0, t_end, dt)
    exact = sphere_radius_exact(n, r0, trajectory.times)
    valid = np.isfinite(exact)
    error = float(np.max(np.abs(trajectory.radii[valid] - exact[valid]))) if valid.any() else None
    summary = {
        "n": n,
        "r0": r0,
        "fixed_point": sphere_fixed_point(n),
        "final_radius": trajectory.final_radius,
        "event": trajectory.event,
        "event_time": trajectory.event_time,
        "exact_extinction_time": sphere_extinction_time(n, r0),
        "max_exact_error": error,
    }
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({"t": trajectory.times, "r": trajectory.radii}).to_csv(
            out / SPHERE_FILE, index=False, float_format="%.17g"
        )
    return _jsonable(summary)
