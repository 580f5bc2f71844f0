"""Dispatch of configured experiments to the numerical modules."""

from __future__ import annotations

import os
import time
import traceback
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import __version__
from ..gaussian_fields import FieldLaw, covariance_report
from ..gns_ground_state import (
    GnsParameters,
    SolverSettings,
    default_box,
    localized_test_field,
    solve_ground_state,
    weinstein_functional,
)
from ..partition_mc import divergence_diagnostic, partition_ladder, threshold_scan, Verdict
from ..rng import SampleStream
from ..spectral_core import SpectralField, SpectralGrid
from ..variational_lab import build_soliton_drift, divergence_rate_fit, objective_breakdown, verify_approx_rates
from .config import ExperimentConfig
from .output import OutputDir

__all__ = ["RunManifest", "run_experiment", "output_directory", "EXIT_SUCCESS", "EXIT_INCONCLUSIVE", "EXIT_ERROR"]

EXIT_SUCCESS, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2
OUTPUT_ROOT_ENV = "FGIBBS_OUTPUT_ROOT"


@dataclass
class RunManifest:
    config_hash: str
    version: str
    kind: str
    seed: int
    started: str
    finished: str = ""
    status: str = "incomplete"
    outcome: str = "error"
    exit_code: int = EXIT_ERROR
    error: str | None = None
    resolved_config: dict[str, Any] = field(default_factory=dict)
    defaults: list[str] = field(default_factory=list)
    workers: int = 1
    elapsed_seconds: float = 0.0
    files: dict[str, str] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    output_dir: str = ""

    def as_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def output_directory(cfg: ExperimentConfig) -> Path:
    if cfg.out:
        return Path(cfg.out)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "results"))
    return root / f"{cfg.kind}-{cfg.digest()[:12]}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _solver(cfg: ExperimentConfig) -> SolverSettings:
    return SolverSettings(tol=cfg["solver.tol"], residual_tol=cfg["solver.residual_tol"],
                          max_iter=cfg["solver.max_iter"])


def _profile(cfg: ExperimentConfig, p: float | None = None):
    d, s = cfg["model.d"], cfg["model.s"]
    params = GnsParameters(d, s, cfg["model.p"] if p is None else p)
    grid = None
    if cfg.get("grid.modes") is not None or cfg.get("grid.box") is not None:
        base = default_box(d)
        grid = SpectralGrid(d, cfg.get("grid.modes") or base.modes, cfg.get("grid.box") or base.box_side,
                            base.convention)
    return solve_ground_state(params, _solver(cfg), grid)


# ---------------------------------------------------------------- experiments


def _ground_state(cfg, out, stream):
    prof = _profile(cfg)
    conv = cfg.convention
    q = prof.field_in(conv)
    std = SpectralField(q.grid, prof.standard_field.coeffs, True)
    g = q.grid
    P = 2 * g.modes + 2
    x = g.coordinates(P)
    axes = [x] + [np.zeros(1)] * (g.d - 1)
    qv = q.evaluate(axes).reshape(-1).real
    sv = std.evaluate(axes).reshape(-1).real
    out.write_table("profile.csv", ({"x": float(a), "Q": float(b), "Q_standard": float(c)}
                                    for a, b, c in zip(x, qv, sv)))
    row = {"d": g.d, "s": prof.params.s, "p": prof.params.p, "convention": conv.value,
           "mass": prof.mass_in(conv), "c_gns": prof.sharp_constant_in(conv), "residual": prof.residual,
           "gradient_norm": prof.gradient_norm, "iterations": prof.iterations, "converged": prof.converged,
           "modes": g.modes, "box_side": g.box_side}
    out.write_table("constants.csv", [row])
    return (EXIT_SUCCESS if prof.converged else EXIT_INCONCLUSIVE), row


def _gns_verify(cfg, out, stream):
    prof = _profile(cfg)
    conv = cfg.convention
    params = prof.params
    c = prof.sharp_constant_in(conv)
    identity = c * weinstein_functional(prof.field_in(conv), params)
    box = prof.field.grid
    grid = prof.field_in(conv).grid
    rows = []
    slack = cfg["verify.slack"]
    for i in range(cfg["sampling.samples"]):
        u = localized_test_field(box, stream.generator(i))
        ratio = c * weinstein_functional(SpectralField(grid, u.coeffs), params)
        rows.append({"index": i, "c_gns_times_J": ratio, "violation": bool(ratio < 1 - slack)})
    out.write_table("fields.csv", rows)
    bad = sum(r["violation"] for r in rows)
    summary = {"c_gns": c, "identity": identity, "identity_error": abs(identity - 1), "fields": len(rows),
               "violations": bad, "min_ratio": min(r["c_gns_times_J"] for r in rows)}
    out.write_json("gns_check.json", summary)
    ok = bad == 0 and abs(identity - 1) < 1e-8
    return (EXIT_SUCCESS if ok else EXIT_INCONCLUSIVE), summary


def _covariance(cfg, out, stream):
    law = FieldLaw(cfg["model.s"], cfg["model.variant"])
    grid = SpectralGrid(cfg["model.d"], cfg.get("grid.modes") or 16, 1.0, cfg.convention)
    rep = covariance_report(law, grid, cfg["sampling.samples"], stream, cfg["covariance.max_mode"], cfg.workers)
    z = rep.z_scores()
    rows = [dict(row, z=float(zz)) for row, zz in zip(rep.rows(), z)]
    out.write_table("covariance.csv", rows)
    cz = rep.cross_z_scores()
    out.write_table("cross.csv", [
        {"mode_a": " ".join(map(str, rep.modes[a])), "mode_b": " ".join(map(str, rep.modes[b])),
         "re": float(v.real), "im": float(v.imag), "stderr": float(se), "z": float(zz)}
        for (a, b), v, se, zz in zip(rep.cross_modes, rep.cross_empirical, rep.cross_stderr, cz)])
    summary = {"max_abs_z": float(np.max(np.abs(z))), "max_cross_z": float(np.max(cz)) if len(cz) else 0.0,
               "modes": len(rows), "samples": rep.samples}
    ok = summary["max_abs_z"] < cfg["covariance.z_max"]
    return (EXIT_SUCCESS if ok else EXIT_INCONCLUSIVE), summary


def _estimate_row(e):
    return {"N": e.N, "K": e.K, "samples": e.samples, "log_estimate": e.log_estimate, "jackknife_se": e.jackknife_se,
            "acceptance_rate": e.acceptance_rate, "max_weight_share": e.max_weight_share}


def _partition_ladder(cfg, out, stream):
    law = FieldLaw(cfg["model.s"], cfg["model.variant"])
    ests = partition_ladder(law, cfg["model.p"], cfg["model.K"], cfg["model.d"], cfg["sampling.ladder"],
                            cfg["sampling.samples"], stream, cfg.convention, cfg.workers)
    out.write_table("ladder.csv", [_estimate_row(e) for e in ests])
    verdict = divergence_diagnostic(ests)
    summary = {"verdict": verdict.value, "p": cfg["model.p"], "K": cfg["model.K"],
               "top_log_estimate": ests[-1].log_estimate}
    out.write_json("verdict.json", summary)
    return (EXIT_INCONCLUSIVE if verdict is Verdict.INCONCLUSIVE else EXIT_SUCCESS), summary


def _threshold_scan(cfg, out, stream):
    from ..partition_mc import reference_mass

    d, s = cfg["model.d"], cfg["model.s"]
    mass = reference_mass(d, s, cfg.convention)
    if cfg["scan.K"] is not None:
        K_grid = cfg["scan.K"]
    else:
        K_grid = tuple(f * mass for f in cfg["scan.K_over_mass"])
    rep = threshold_scan(d, s, K_grid, cfg["sampling.samples"], cfg["sampling.ladder"], stream, cfg.convention,
                         p=cfg.get("model.p"), mass=mass, variant=cfg["model.variant"], workers=cfg.workers)
    out.write_table("scan.csv", [{"K": K, "K_over_mass": K / mass, "verdict": v.value}
                                 for K, v in zip(rep.K_grid, rep.verdicts)])
    out.write_table("ladder_plot.csv", [_estimate_row(e) for row in rep.estimates for e in row])
    summary = {"reference_mass": mass, "last_convergent": rep.last_convergent,
               "first_divergent": rep.first_divergent, "bracket": rep.bracket,
               "verdicts": [v.value for v in rep.verdicts], "K_grid": list(rep.K_grid)}
    out.write_json("transition.json", summary)
    return (EXIT_SUCCESS if rep.bracket == "within grid" else EXIT_INCONCLUSIVE), summary


def _ou_rates(cfg, out, stream):
    rep = verify_approx_rates(cfg["model.s"], cfg["model.d"], cfg["rates.M_ladder"], cfg["sampling.samples"],
                              stream, cfg.convention, cfg["rates.time_steps"], cfg["rates.oversample"],
                              cfg.workers)
    out.write_table("rates.csv", [
        {"M": M, "l2_error": a, "l2_stderr": b, "l2_exact": c, "cost": e, "cost_stderr": f, "cost_exact": g}
        for M, a, b, c, e, f, g in zip(rep.M, rep.l2_error, rep.l2_stderr, rep.l2_exact, rep.cost,
                                       rep.cost_stderr, rep.cost_exact)])
    summary = {"l2_slope": rep.l2_slope, "l2_target": rep.l2_target, "cost_slope": rep.cost_slope,
               "cost_target": rep.cost_target, "samples": rep.samples}
    out.write_json("fit.json", summary)
    ok = abs(rep.l2_slope - rep.l2_target) <= 0.15 and abs(rep.cost_slope - rep.cost_target) <= 0.2
    return (EXIT_SUCCESS if ok else EXIT_INCONCLUSIVE), summary


def _drift_divergence(cfg, out, stream):
    prof = _profile(cfg)
    d, s, p, K = cfg["model.d"], cfg["model.s"], cfg["model.p"], cfg["model.K"]
    soliton_rows, rows, breakdowns = [], [], []
    for inv in cfg["drift.rho_inv"]:
        rho = 1.0 / inv
        grid = SpectralGrid(d, cfg["drift.modes_per_inv_rho"] * inv, 1.0, cfg.convention)
        M = cfg["drift.M_per_inv_rho"] * inv
        drift = build_soliton_drift(d, s, p, K, rho, cfg["drift.delta"], prof, grid,
                                    alpha=cfg["drift.alpha"], eta=cfg["drift.eta"])
        soliton_rows.append({"rho": rho, "alpha": drift.alpha, "eta": drift.eta, "delta": drift.delta,
                             "hamiltonian": drift.energy, "A1": drift.A1, "A2": drift.A2, "l2": drift.l2,
                             "K_minus_eta": K - drift.eta, "mean_abs": drift.mean_abs})
        b = objective_breakdown(drift, M, cfg["sampling.samples"], stream.child(f"rho=1/{inv}"),
                                cfg["rates.time_steps"], cfg.workers)
        breakdowns.append(b)
        rows.append({"rho": rho, "M": M, **b.terms, "total": b.total, "C_se": b.C_se, "D_se": b.D_se,
                     "E_se": b.E_se, "total_se": b.total_se, "E_kinetic_exact": b.E_kinetic_exact,
                     "E_kinetic_mc": b.E_kinetic_mc, "E_cross_mc": b.E_cross_mc,
                     "event_probability": b.event_probability,
                     "cauchy_schwarz_min_slack": b.cauchy_schwarz_min_slack})
    out.write_table("soliton.csv", soliton_rows)
    out.write_table("breakdown.csv", rows)
    target = d * p / 2 - d
    try:
        fit = divergence_rate_fit(breakdowns)
    except ValueError as exc:
        summary = {"fit": "refused", "reason": str(exc), "target": target}
        out.write_json("fit.json", summary)
        return EXIT_INCONCLUSIVE, summary
    summary = {"fit": "ok", "slope": fit.slope, "intercept": fit.intercept, "target": target,
               "relative_error": fit.relative_error}
    out.write_json("fit.json", summary)
    return (EXIT_SUCCESS if fit.relative_error <= 0.1 else EXIT_INCONCLUSIVE), summary


EXPERIMENTS: dict[str, Callable] = {
    "ground_state": _ground_state,
    "gns_verify": _gns_verify,
    "covariance": _covariance,
    "partition_ladder": _partition_ladder,
    "threshold_scan": _threshold_scan,
    "ou_rates": _ou_rates,
    "drift_divergence": _drift_divergence,
}

_OUTCOMES = {EXIT_SUCCESS: "success", EXIT_INCONCLUSIVE: "inconclusive", EXIT_ERROR: "error"}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunManifest:
    """Run one experiment, write its outputs and ``manifest.json``.

    Module errors do not propagate: they are recorded in the manifest, which
    is then marked incomplete with exit code 1.
    """
    out = OutputDir(Path(out_dir) if out_dir is not None else output_directory(cfg))
    manifest = RunManifest(cfg.digest(), __version__, cfg.kind, cfg.seed, _now(),
                           resolved_config=cfg.resolved(), defaults=list(cfg.defaults), workers=cfg.workers,
                           output_dir=str(out.root))
    stream = SampleStream(cfg.seed, cfg.kind)
    t0 = time.perf_counter()
    try:
        code, summary = EXPERIMENTS[cfg.kind](cfg, out, stream)
        manifest.status = "complete"
        manifest.summary = summary
    except Exception as exc:  # surfaced through the manifest and the exit code
        code = EXIT_ERROR
        manifest.error = f"{type(exc).__name__}: {exc} [experiment {cfg.kind}, config {cfg.source or '<inline>'}]"
        manifest.summary = {"traceback": traceback.format_exc()}
    manifest.exit_code = code
    manifest.outcome = _OUTCOMES[code]
    manifest.elapsed_seconds = time.perf_counter() - t0
    manifest.finished = _now()
    manifest.files = out.checksums()
    out.write_json("manifest.json", manifest.as_dict())
    return manifest
