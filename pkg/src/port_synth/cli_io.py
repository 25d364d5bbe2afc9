"""Configuration parsing, pipeline orchestration and artifact emission.

Configs are JSON documents; every field except the circuit is optional::

    {
      "circuit": {"R1": 1, "R2": 3, "L1": 2, "L2": 1, "C1": 1},
      "tolerance_pct": 5,
      "grid": {"min_omega": 0.01, "max_omega": 100, "points": 400, "spacing": "log"},
      "bound_mode": {"mode": "manual", "num": [0.36, 0.06], "den": [3.4, 1]},
      "beta_tol": 0.05,
      "cancel_tol": 0.02
    }

Coefficient arrays are in ascending powers of ``s`` everywhere.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ParseError, ValidationError
from .poly_rational import FrequencyGrid, Polynomial, RationalFunction
from .synthesis import (
    PARAM_NAMES,
    CircuitParams,
    SweepResult,
    SynthesisResult,
    build_T1_T2,
    circuit_impedance,
    compensator,
    dominance_margin,
    envelope,
    fit_bound,
    minimal_impedance,
    sweep_perturbations,
    validate_bound,
    verify_robust,
)
from .hinf import model_match

__all__ = [
    "GridSpec",
    "BoundSpec",
    "RunConfig",
    "ReportBundle",
    "STAGES",
    "parse_config",
    "load_config",
    "run_pipeline",
    "run_stage",
    "emit_artifacts",
    "rational_to_json",
    "rational_from_json",
    "loci_csv",
    "report_document",
]

STAGES = ("derive", "sweep", "bound", "synth", "verify", "pipeline")


@dataclass(frozen=True)
class GridSpec:
    min_omega: float = 1e-2
    max_omega: float = 1e2
    points: int = 400
    spacing: str = "log"

    def build(self) -> FrequencyGrid:
        return FrequencyGrid.make(self.min_omega, self.max_omega, self.points, self.spacing)


@dataclass(frozen=True)
class BoundSpec:
    mode: str = "auto"
    num: tuple[float, ...] | None = None
    den: tuple[float, ...] | None = None

    def rational(self) -> RationalFunction | None:
        if self.mode == "auto":
            return None
        return RationalFunction.from_coeffs(list(self.num), list(self.den))


@dataclass(frozen=True)
class RunConfig:
    circuit: CircuitParams = field(default_factory=CircuitParams)
    tolerance_pct: float = 5.0
    grid: GridSpec = field(default_factory=GridSpec)
    bound_mode: BoundSpec = field(default_factory=BoundSpec)
    beta_tol: float = 0.05
    cancel_tol: float = 0.02
    fit_margin: float = 0.05

    def with_overrides(self, grid_points=None, tolerance_pct=None, beta_tol=None) -> "RunConfig":
        cfg = self
        if grid_points is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, points=int(grid_points)))
        if tolerance_pct is not None:
            cfg = replace(cfg, tolerance_pct=float(tolerance_pct))
        if beta_tol is not None:
            cfg = replace(cfg, beta_tol=float(beta_tol))
        _validate(cfg)
        return cfg

    def as_dict(self) -> dict:
        d = asdict(self)
        b = d["bound_mode"]
        d["bound_mode"] = {"mode": b["mode"]} if b["mode"] == "auto" else {
            "mode": "manual", "num": list(b["num"]), "den": list(b["den"])
        }
        return d


@dataclass(frozen=True)
class ReportBundle:
    synthesis: SynthesisResult
    loci_csv_path: Path | None
    report_json_path: Path | None
    exit_code: int = 0


def _number(value, name, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError("must be a number", field=name)
    if not math.isfinite(value):
        raise ValidationError("must be finite", field=name)
    if integer:
        if float(value) != int(value):
            raise ValidationError("must be an integer", field=name)
        return int(value)
    return float(value)


def _object(value, name, allowed):
    if not isinstance(value, dict):
        raise ValidationError("must be an object", field=name)
    extra = sorted(set(value) - set(allowed))
    if extra:
        raise ValidationError(f"unknown keys {extra}", field=name)
    return value


def _coeff_list(value, name):
    if not isinstance(value, list) or not value:
        raise ValidationError("must be a nonempty array of numbers", field=name)
    return tuple(_number(v, f"{name}[{i}]") for i, v in enumerate(value))


def parse_config(text: bytes | str) -> RunConfig:
    """Parse and validate a JSON config document, filling defaults.

    Raises
    ------
    ParseError
        Malformed document (carries the line number).
    ValidationError
        A field has the wrong type or breaks an invariant (carries the field).
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"config is not valid UTF-8: {exc.reason}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    doc = _object(doc, "<root>", ("circuit", "tolerance_pct", "grid", "bound_mode", "beta_tol", "cancel_tol", "fit_margin"))

    circ = _object(doc.get("circuit", {}), "circuit", PARAM_NAMES)
    values = {k: _number(v, f"circuit.{k}") for k, v in circ.items()}
    try:
        circuit = CircuitParams(**values)
    except ValueError as exc:
        raise ValidationError(str(exc), field="circuit") from exc

    g = _object(doc.get("grid", {}), "grid", ("min_omega", "max_omega", "points", "spacing"))
    grid = GridSpec(
        min_omega=_number(g.get("min_omega", 1e-2), "grid.min_omega"),
        max_omega=_number(g.get("max_omega", 1e2), "grid.max_omega"),
        points=_number(g.get("points", 400), "grid.points", integer=True),
        spacing=g.get("spacing", "log"),
    )

    bm = doc.get("bound_mode", "auto")
    if isinstance(bm, str):
        bm = {"mode": bm}
    bm = _object(bm, "bound_mode", ("mode", "num", "den"))
    mode = bm.get("mode", "auto")
    if mode == "auto":
        if "num" in bm or "den" in bm:
            raise ValidationError("coefficients are only allowed in manual mode", field="bound_mode")
        bound = BoundSpec()
    elif mode == "manual":
        if "num" not in bm or "den" not in bm:
            raise ValidationError("manual mode needs num and den", field="bound_mode")
        bound = BoundSpec("manual", _coeff_list(bm["num"], "bound_mode.num"), _coeff_list(bm["den"], "bound_mode.den"))
    else:
        raise ValidationError(f"mode must be 'auto' or 'manual', got {mode!r}", field="bound_mode.mode")

    cfg = RunConfig(
        circuit=circuit,
        tolerance_pct=_number(doc.get("tolerance_pct", 5.0), "tolerance_pct"),
        grid=grid,
        bound_mode=bound,
        beta_tol=_number(doc.get("beta_tol", 0.05), "beta_tol"),
        cancel_tol=_number(doc.get("cancel_tol", 0.02), "cancel_tol"),
        fit_margin=_number(doc.get("fit_margin", 0.05), "fit_margin"),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    g = cfg.grid
    if g.spacing not in ("log", "linear"):
        raise ValidationError("must be 'log' or 'linear'", field="grid.spacing")
    if g.points < 2:
        raise ValidationError("grid.points >= 2 is required", field="grid.points")
    if not g.min_omega < g.max_omega:
        raise ValidationError("min_omega < max_omega is required", field="grid")
    if g.min_omega < 0 or (g.spacing == "log" and g.min_omega <= 0):
        raise ValidationError("must be positive (nonnegative for linear spacing)", field="grid.min_omega")
    # zero tolerance is allowed: it is the no-uncertainty degenerate run
    if not 0 <= cfg.tolerance_pct < 100:
        raise ValidationError("must lie in [0, 100)", field="tolerance_pct")
    if cfg.beta_tol <= 0:
        raise ValidationError("must be positive", field="beta_tol")
    if cfg.cancel_tol < 0:
        raise ValidationError("must be nonnegative", field="cancel_tol")
    if cfg.fit_margin < 0:
        raise ValidationError("must be nonnegative", field="fit_margin")
    if cfg.bound_mode.mode == "manual":
        den = Polynomial(cfg.bound_mode.den)
        if den.is_zero():
            raise ValidationError("denominator is zero", field="bound_mode.den")
        b = cfg.bound_mode.rational()
        if b.is_zero() or not b.in_S():
            raise ValidationError("bound must be nonzero, proper and stable", field="bound_mode")


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}") from exc
    return parse_config(data)


# ---- pipeline -------------------------------------------------------------

def _sweep(cfg: RunConfig, workers=None) -> SweepResult:
    return sweep_perturbations(
        cfg.circuit, cfg.tolerance_pct, cfg.grid.build(), cfg.cancel_tol, workers
    )


def _bound(cfg: RunConfig, sweep: SweepResult) -> RationalFunction:
    manual = cfg.bound_mode.rational()
    if manual is None:
        return fit_bound(sweep, sweep.grid, cfg.fit_margin)
    validate_bound(manual, sweep)
    return manual


def run_pipeline(cfg: RunConfig, out_dir: str | os.PathLike | None = None, workers=None) -> ReportBundle:
    """derive -> sweep -> bound -> T1/T2 -> model match -> compensator -> verify.

    Artifacts are written only after every stage succeeded.  ``exit_code``
    is 0 when all corners are stable and 1 otherwise.
    """
    sweep = _sweep(cfg, workers)
    bound = _bound(cfg, sweep)
    T1, T2 = build_T1_T2(bound, sweep.nominal)
    match = model_match(T1, T2, cfg.beta_tol, sweep.grid)
    Zc = compensator(sweep.nominal, match.Q)
    verdicts = verify_robust(Zc, cfg.circuit, cfg.tolerance_pct, cfg.cancel_tol, workers)
    res = SynthesisResult(bound, match, Zc, tuple(verdicts), sweep)
    code = 0 if res.all_stable else 1
    if out_dir is None:
        return ReportBundle(res, None, None, code)
    bundle = emit_artifacts(res, out_dir, cfg)
    return replace(bundle, exit_code=code)


def run_stage(stage: str, cfg: RunConfig, out_dir: str | os.PathLike, workers=None) -> tuple[int, list[Path]]:
    """Run the pipeline up to ``stage`` and write that stage's artifacts.

    Returns the exit code and the written paths.
    """
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    out = Path(out_dir)
    if stage in ("verify", "pipeline"):
        b = run_pipeline(cfg, out, workers)
        return b.exit_code, [b.loci_csv_path, b.report_json_path]
    doc: dict[str, Any] = {"stage": stage, "config": cfg.as_dict(), "nominal": _derive_doc(cfg)}
    files: dict[str, str] = {}
    if stage != "derive":
        sweep = _sweep(cfg, workers)
        env = envelope(sweep)
        doc["sweep"] = {
            "corners": len(sweep.corners),
            "nominal_corner": sweep.nominal_index,
            "envelope_max": float(np.max(env)),
        }
        files["loci.csv"] = loci_csv(sweep)
        if stage in ("bound", "synth"):
            bound = _bound(cfg, sweep)
            doc["bound"] = rational_to_json(bound)
            doc["bound_margin"] = dominance_margin(bound, env, sweep.grid)
        if stage == "synth":
            T1, T2 = build_T1_T2(bound, sweep.nominal)
            match = model_match(T1, T2, cfg.beta_tol, sweep.grid)
            Zc = compensator(sweep.nominal, match.Q)
            doc.update(_match_doc(match))
            doc["Zc"] = rational_to_json(Zc)
    files[f"{stage}.json"] = _dumps(doc)
    return 0, _write_all(out, files)


# ---- serialization --------------------------------------------------------

def _clean(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("non-finite number in report")
    return x


def rational_to_json(r: RationalFunction) -> dict:
    """``{"num_coeffs": [...], "den_coeffs": [...]}``, ascending powers, monic denominator."""
    return {
        "num_coeffs": [_clean(c) for c in r.num.coeffs],
        "den_coeffs": [_clean(c) for c in r.den.coeffs],
    }


def rational_from_json(d: dict) -> RationalFunction:
    return RationalFunction.from_coeffs(d["num_coeffs"], d["den_coeffs"])


def _pairs(z) -> list[list[float]]:
    return [[_clean(np.real(p)), _clean(np.imag(p))] for p in z]


def _derive_doc(cfg: RunConfig) -> dict:
    from .coprime import coprime_factorization

    Z = circuit_impedance(cfg.circuit)
    Zm = minimal_impedance(cfg.circuit, cfg.cancel_tol)
    fr = coprime_factorization(Zm)
    return {
        "impedance": rational_to_json(Z),
        "minimal": rational_to_json(Zm),
        "minimal_zeros": _pairs(Zm.zeros),
        "minimal_poles": _pairs(Zm.poles),
        "N": rational_to_json(fr.N),
        "D": rational_to_json(fr.D),
        "X": rational_to_json(fr.X),
        "Ycof": rational_to_json(fr.Ycof),
    }


def _match_doc(m) -> dict:
    return {
        "beta": _clean(m.beta),
        "gamma": _clean(m.gamma),
        "hankel_norm": _clean(m.hankel_norm),
        "yvec_norm": _clean(m.yvec_norm),
        "t1_norm": _clean(m.t1_norm),
        "achieved_norm": _clean(m.achieved_norm),
        "certified": bool(m.achieved_norm < 1.0),
        "bisection": [[_clean(b), _clean(h)] for b, h in m.history],
        "Q": rational_to_json(m.Q),
    }


def report_document(res: SynthesisResult, cfg: RunConfig | None = None) -> dict:
    doc: dict[str, Any] = {}
    if cfg is not None:
        doc["config"] = cfg.as_dict()
        doc["nominal"] = _derive_doc(cfg)
    doc["bound"] = rational_to_json(res.bound)
    doc.update(_match_doc(res.match))
    doc["Zc"] = rational_to_json(res.Zc)
    doc["all_stable"] = res.all_stable
    doc["stable_count"] = sum(v.stable for v in res.verdicts)
    doc["corners"] = [
        {"id": i, "levels": list(v.levels), "stable": v.stable, "poles": _pairs(v.poles)}
        for i, v in enumerate(res.verdicts)
    ]
    return doc


def _dumps(doc) -> str:
    # json writes floats with repr, i.e. the shortest round-trip form
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def loci_csv(sweep: SweepResult) -> str:
    """Rows ``omega,corner_id,norm`` (17 significant digits), grid-major order."""
    lines = ["omega,corner_id,norm"]
    curves = [c.norm_curve[:, 1] for c in sweep.corners]
    for k, w in enumerate(sweep.grid.points):
        ws = f"{w:.17g}"
        for c, curve in zip(sweep.corners, curves):
            lines.append(f"{ws},{c.index},{curve[k]:.17g}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_all(out: Path, files: dict[str, str]) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        p = out / name
        _atomic_write(p, text)
        paths.append(p)
    return paths


def emit_artifacts(res: SynthesisResult, out_dir: str | os.PathLike, cfg: RunConfig | None = None) -> ReportBundle:
    """Write ``loci.csv`` and ``report.json`` into ``out_dir`` (each atomically)."""
    out = Path(out_dir)
    files = {}
    if res.sweep is not None:
        files["loci.csv"] = loci_csv(res.sweep)
    files["report.json"] = _dumps(report_document(res, cfg))
    paths = _write_all(out, files)
    csv_path = out / "loci.csv" if res.sweep is not None else None
    return ReportBundle(res, csv_path, paths[-1])
