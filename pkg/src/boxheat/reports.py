"""Fitted-constant reports and the least-squares decay fit shared by all checks."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InsufficientSamples

RATIO_SLACK = 1e-9


@dataclass
class DecayFitReport:
    """Outcome of one check.

    kind "fit": constants of a bound |f| <= C exp(-c x);
    kind "identity" or "regression": a defect compared with a tolerance;
    kind "constant": a recorded comparability constant C;
    kind "error": the check raised and is recorded as failed.
    """

    claim_id: str
    C: float
    c: float
    sup_ratio: float
    argmax: dict
    sample_count: int
    passed: bool
    kind: str = "fit"
    c_min: float = 0.0
    defect: float | None = None
    tolerance: float | None = None
    extras: dict = field(default_factory=dict)

    def consistent(self) -> bool:
        """Stored pass flag agrees with the stored numbers."""
        if self.kind in ("identity", "regression"):
            conditions = all(self.extras.get("conditions", {}).values())
            ok = self.defect is not None and self.defect <= self.tolerance and conditions
            return self.passed == ok
        if self.kind == "fit":
            ok = self.c >= self.c_min and self.c > 0 and self.sup_ratio <= 1 + RATIO_SLACK
            ok = ok and self.extras.get("refinement_change", 0.0) < self.extras.get("refine_tol", math.inf)
            return self.passed == ok
        if self.kind == "constant":
            return self.passed == (math.isfinite(self.C) and all(self.extras.get("conditions", {}).values()))
        return not self.passed

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "DecayFitReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "DecayFitReport":
        return cls.from_dict(json.loads(s))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class ExpFit:
    C: float
    c: float
    argmax: int
    sup_ratio: float
    r2: float


def fit_exponential_bound(x, logf, min_samples: int = 3) -> ExpFit:
    """Fit log f ~ log C - c x by least squares, then lift C so the bound holds at every sample.

    c is minus the regression slope; C = max_i f_i exp(c x_i), so the largest
    ratio f / (C exp(-c x)) equals 1 and is attained at `argmax`.
    """
    x = np.asarray(x, dtype=float)
    logf = np.asarray(logf, dtype=float)
    keep = np.isfinite(x) & np.isfinite(logf)
    if keep.sum() < min_samples or np.ptp(x[keep]) == 0:
        raise InsufficientSamples(f"{int(keep.sum())} usable samples")
    xs, ys = x[keep], logf[keep]
    slope, icpt = np.polyfit(xs, ys, 1)
    c = -float(slope)
    lifted = ys + c * xs
    k = int(np.argmax(lifted))
    logC = float(lifted[k])
    ratios = np.exp(lifted - logC)
    resid = ys - (slope * xs + icpt)
    ss = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    idx = np.flatnonzero(keep)[k]
    return ExpFit(math.exp(logC), c, int(idx), float(ratios.max()), r2)


def fit_report(claim_id: str, x, logf, samples, c_min: float = 0.01, **extras) -> DecayFitReport:
    fit = fit_exponential_bound(x, logf)
    passed = fit.c >= c_min and fit.c > 0 and fit.sup_ratio <= 1 + RATIO_SLACK
    extras.setdefault("r2", fit.r2)
    return DecayFitReport(claim_id, fit.C, fit.c, fit.sup_ratio, _jsonable(samples[fit.argmax]),
                          int(np.isfinite(np.asarray(logf, float)).sum()), bool(passed),
                          "fit", c_min, extras=_jsonable(extras))


def identity_report(claim_id: str, defect: float, tolerance: float, count: int = 1,
                    argmax: dict | None = None, **extras) -> DecayFitReport:
    defect = float(defect)
    return DecayFitReport(claim_id, 0.0, 0.0, 0.0, _jsonable(argmax or {}), int(count),
                          bool(defect <= tolerance), "identity", 0.0, defect, float(tolerance),
                          extras=_jsonable(extras))


def error_report(claim_id: str, exc: BaseException) -> DecayFitReport:
    return DecayFitReport(claim_id, 0.0, 0.0, math.inf, {}, 0, False, "error",
                          extras={"error": f"{type(exc).__name__}: {exc}"})
