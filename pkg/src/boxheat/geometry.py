"""Polynomial model, Taylor tables and the size functions built on them.

A model is a real polynomial p(z) = sum c_jk z^j conj(z)^k.  Everything
geometric (twist, Lambda, mu, control distance, volumes) is computed from
the Taylor coefficients A_jk(z) of p re-expanded about a base point z.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegenerateTable, InvalidPolynomial

ZERO_COEFF = 1e-14
MAX_DEGREE = 16


@dataclass(frozen=True)
class SubharmonicPolynomial:
    """p(z) = sum c_jk z^j zbar^k with c_kj = conj(c_jk)."""

    coeffs: Mapping[tuple[int, int], complex]
    sample_radius: float = 2.0
    n_sample: int = 21

    def __post_init__(self):
        clean = {}
        for (j, k), c in self.coeffs.items():
            j, k = int(j), int(k)
            if j < 0 or k < 0:
                raise InvalidPolynomial(f"negative exponent ({j},{k})")
            c = complex(c)
            if abs(c) > ZERO_COEFF:
                clean[(j, k)] = clean.get((j, k), 0) + c
        object.__setattr__(self, "coeffs", clean)
        scale = max([abs(c) for c in clean.values()], default=1.0)
        for (j, k), c in clean.items():
            if abs(clean.get((k, j), 0) - c.conjugate()) > 1e-12 * scale:
                raise InvalidPolynomial(f"c_{k}{j} must equal conj(c_{j}{k})")
        if not any(j >= 1 and k >= 1 for j, k in clean):
            raise InvalidPolynomial("polynomial is harmonic (no mixed terms)")
        if self.degree > MAX_DEGREE:
            raise InvalidPolynomial(f"degree {self.degree} exceeds {MAX_DEGREE}")
        xs = np.linspace(-self.sample_radius, self.sample_radius, self.n_sample)
        zz = xs[:, None] + 1j * xs[None, :]
        lap = self.laplacian(zz)
        floor = 1e-9 * max(1.0, float(np.max(np.abs(lap))))
        if np.min(lap) < -floor:
            raise InvalidPolynomial("Laplacian is negative somewhere on the sample grid")

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0])))

    @property
    def degree(self) -> int:
        return max(j + k for j, k in self.coeffs)

    def terms(self):
        return sorted(self.coeffs.items())

    def evaluate(self, z):
        return self.derivative(0, 0, z).real

    def derivative(self, a: int, b: int, z):
        """d^a/dz^a d^b/dzbar^b of p, evaluated at z (scalar or array)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        zb = np.conj(z)
        for (j, k), c in self.coeffs.items():
            if j < a or k < b:
                continue
            f = c * math.perm(j, a) * math.perm(k, b)
            out = out + f * z ** (j - a) * zb ** (k - b)
        return out if out.ndim else complex(out)

    def laplacian(self, z):
        return 4 * np.real(self.derivative(1, 1, z))

    def real_coefficients(self) -> np.ndarray:
        """Array R with p(x, y) = sum R[a, b] x^a y^b."""
        return real_grid_polynomial(self)

    def to_json(self) -> dict:
        return {"coeffs": [[j, k, c.real, c.imag] for (j, k), c in self.terms()]}

    @classmethod
    def from_json(cls, data: dict, **kw) -> "SubharmonicPolynomial":
        try:
            rows = data["coeffs"]
            coeffs = {(int(r[0]), int(r[1])): complex(r[2], r[3]) for r in rows}
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise InvalidPolynomial(f"malformed polynomial JSON: {exc}") from exc
        return cls(coeffs, **kw)

    @classmethod
    def load(cls, path) -> "SubharmonicPolynomial":
        return cls.from_json(json.loads(Path(path).read_text()))


def _binomial_power(m: int, unit: complex) -> list[tuple[int, int, complex]]:
    # (x + unit*y)^m as a list of (power of x, power of y, coefficient)
    return [(m - i, i, math.comb(m, i) * unit**i) for i in range(m + 1)]


def _outer_product_2d(a, b) -> np.ndarray:
    n = max(t[0] + t[1] for t in a) + max(t[0] + t[1] for t in b) + 1
    out = np.zeros((n, n), dtype=complex)
    for ax, ay, ac in a:
        for bx, by, bc in b:
            out[ax + bx, ay + by] += ac * bc
    return out


def heisenberg() -> SubharmonicPolynomial:
    return SubharmonicPolynomial({(1, 1): 1.0})


def abs_power(m: int) -> SubharmonicPolynomial:
    """|z|^(2m)."""
    return SubharmonicPolynomial({(m, m): 1.0})


def standard_models() -> dict[str, SubharmonicPolynomial]:
    return {
        "heisenberg": heisenberg(),
        "quartic": abs_power(2),
        "mixed_2_6": SubharmonicPolynomial({(1, 1): 1.0, (3, 3): 1.0}),
        "twisted_quartic": SubharmonicPolynomial({(2, 2): 1.0, (3, 1): 0.5, (1, 3): 0.5}),
    }


@dataclass
class TaylorTable:
    """Coefficients A_jk of p re-expanded about `center`."""

    center: complex
    coeffs: dict[tuple[int, int], complex] = field(default_factory=dict)

    def mixed(self):
        """Nonzero A_jk with j, k >= 1, as (j, k, |A_jk|)."""
        return [(j, k, abs(a)) for (j, k), a in self.coeffs.items()
                if j >= 1 and k >= 1 and abs(a) >= ZERO_COEFF]

    def holomorphic(self):
        return {j: a for (j, k), a in self.coeffs.items() if k == 0 and j >= 1}


def taylor_table(p: SubharmonicPolynomial, z: complex) -> TaylorTable:
    z = complex(z)
    zb = z.conjugate()
    A: dict[tuple[int, int], complex] = {}
    for (a, b), c in p.coeffs.items():
        for j in range(a + 1):
            for k in range(b + 1):
                term = c * math.comb(a, j) * math.comb(b, k) * z ** (a - j) * zb ** (b - k)
                A[(j, k)] = A.get((j, k), 0) + term
    return TaylorTable(z, A)


def reconstruct(tbl: TaylorTable, w):
    """Evaluate sum A_jk (w - z)^j conj(w - z)^k; equals p(w)."""
    u = np.asarray(w, dtype=complex) - tbl.center
    out = sum(a * u**j * np.conj(u) ** k for (j, k), a in tbl.coeffs.items())
    return np.real(out)


def twist(p: SubharmonicPolynomial, z: complex, w: complex) -> float:
    """T(w, z) = -2 Im sum_{j>=1} A_j0(z) (w - z)^j."""
    tbl = taylor_table(p, z)
    u = complex(w) - complex(z)
    return -2.0 * sum(a * u**j for j, a in tbl.holomorphic().items()).imag


def lambda_size(tbl: TaylorTable, delta):
    delta = np.abs(np.asarray(delta, dtype=float))
    mixed = tbl.mixed()
    if not mixed:
        raise DegenerateTable(f"no mixed terms at {tbl.center}")
    return sum(a * delta ** (j + k) for j, k, a in mixed)


def mu_size(tbl: TaylorTable, delta):
    """Inverse size function: min over nonzero mixed A_jk of |delta / A_jk|^(1/(j+k))."""
    delta = np.abs(np.asarray(delta, dtype=float))
    mixed = tbl.mixed()
    if not mixed:
        raise DegenerateTable(f"no mixed terms at {tbl.center}")
    vals = [(delta / a) ** (1.0 / (j + k)) for j, k, a in mixed]
    return np.minimum.reduce(vals) if len(vals) > 1 else vals[0]


def ball_volume(tbl: TaylorTable, delta):
    delta = np.abs(np.asarray(delta, dtype=float))
    return delta**2 * lambda_size(tbl, delta)


@dataclass(frozen=True)
class MetricPoint:
    z: complex
    t: float


@dataclass(frozen=True)
class PairVolume:
    distance: float
    volume: float
    max_volume: float


def control_distance(p: SubharmonicPolynomial, alpha: MetricPoint, beta: MetricPoint,
                     order: str = "zw") -> float:
    """|z - w| + mu(z, t1 - t2 + T) with alpha = (z, t1), beta = (w, t2).

    order="zw" uses T(z, w); order="wz" uses T(w, z).
    """
    z, w = alpha.z, beta.z
    T = twist(p, w, z) if order == "zw" else twist(p, z, w)
    tbl = taylor_table(p, z)
    return abs(z - w) + float(mu_size(tbl, alpha.t - beta.t + T))


def pair_volume(p: SubharmonicPolynomial, alpha: MetricPoint, beta: MetricPoint,
                order: str = "zw") -> PairVolume:
    d = control_distance(p, alpha, beta, order)
    tz = taylor_table(p, alpha.z)
    tw = taylor_table(p, beta.z)
    v = float(ball_volume(tz, d))
    vmax = d**2 * max(float(lambda_size(tz, d)), float(lambda_size(tw, d)))
    return PairVolume(d, v, vmax)


def twist_antisymmetry_defect(p: SubharmonicPolynomial, z: complex, w: complex) -> float:
    """|T(w, z) + T(z, w)|, zero exactly when the twist is antisymmetric."""
    return abs(twist(p, z, w) + twist(p, w, z))


def e_series(p: SubharmonicPolynomial, z: complex, w: complex) -> complex:
    """e(w, z) = sum_{j>=1} A_j1(z) (w - z)^j."""
    tbl = taylor_table(p, z)
    u = complex(w) - complex(z)
    return complex(sum(a * u**j for (j, k), a in tbl.coeffs.items() if k == 1 and j >= 1))


def e_series_dual(p: SubharmonicPolynomial, z: complex, w: complex) -> complex:
    """The same quantity expanded about w instead of z."""
    tbl = taylor_table(p, w)
    u = complex(z) - complex(w)
    total = 0j
    for (j, k1), a in tbl.coeffs.items():
        k = k1 - 1
        if j >= 1 and k >= 0:
            total += k1 * a * u**j * u.conjugate() ** k
    return -total


def relative_inverse_ratios(p: SubharmonicPolynomial, zs, deltas) -> np.ndarray:
    """mu(z, Lambda(z, delta)) / delta for every (z, delta); shape (len(zs), len(deltas))."""
    deltas = np.asarray(deltas, dtype=float)
    out = np.empty((len(zs), len(deltas)))
    for i, z in enumerate(zs):
        tbl = taylor_table(p, z)
        out[i] = mu_size(tbl, lambda_size(tbl, deltas)) / deltas
    return out


def relative_inverse_constant(p: SubharmonicPolynomial, zs, deltas) -> float:
    """Smallest c with 1/c <= mu(z, Lambda(z, delta)) / delta <= c over the samples."""
    r = relative_inverse_ratios(p, zs, deltas)
    return float(max(r.max(), (1 / r).max()))


def geometry_rows(p: SubharmonicPolynomial, zs, deltas):
    rows = []
    for z in zs:
        tbl = taylor_table(p, z)
        for d in deltas:
            lam = float(lambda_size(tbl, d))
            mu = float(mu_size(tbl, lam))
            rows.append((complex(z), float(d), lam, mu, mu / d))
    return rows


def real_grid_polynomial(p: SubharmonicPolynomial) -> np.ndarray:
    """Real coefficient array R with p(x, y) = sum R[a, b] x^a y^b."""
    d = p.degree
    R = np.zeros((d + 1, d + 1), dtype=complex)
    for (j, k), c in p.coeffs.items():
        block = _outer_product_2d(_binomial_power(j, 1j), _binomial_power(k, -1j))
        m = block.shape[0]
        R[:m, :m] += c * block
    if np.max(np.abs(R.imag), initial=0) > 1e-9 * max(1.0, np.max(np.abs(R))):
        raise InvalidPolynomial("polynomial is not real valued")
    return R.real


def evaluate_real(R: np.ndarray, x, y):
    return P.polyval2d(x, y, R)
