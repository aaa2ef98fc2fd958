"""Weighted heat equations on a truncated square grid.

Second-order parts are discretized as gauge-covariant line transports:
along each grid line the covariant derivative D = d - iA is conjugated to a
plain derivative by the exact line integral of A, so

    -D_x^2  ->  G_x (-L_x) G_x^*,   G_x = diag(exp(-i tau Q)),  dQ/dx = p_y

and likewise along y.  With A = tau(-p_y, p_x) this gives

    Box      = (1/4)(K_x + K_y) + (tau/4) lap p
    BoxTilde = (1/4)(K_x + K_y) - (tau/4) lap p

which are Hermitian, never form exp(tau p), and satisfy
Box(-tau) = conj(BoxTilde(tau)) exactly on the grid.  First-order operators
use the same transports around a central first difference.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from numpy.polynomial import polynomial as P

from .errors import BoundaryContamination, GridMismatch, SolverDiverged, StencilUnderflow
from .geometry import SubharmonicPolynomial, mu_size, real_grid_polynomial, taylor_table, twist

OPERATORS = ("Z", "Zbar", "W", "Wbar", "Box", "BoxTilde")


@dataclass(frozen=True)
class GridSpec:
    radius: float
    n_side: int
    center: complex = 0j

    def __post_init__(self):
        if self.radius <= 0:
            raise GridMismatch("radius must be positive")
        if self.n_side < 33 or self.n_side % 2 == 0:
            raise GridMismatch("n_side must be odd and at least 33")
        object.__setattr__(self, "center", complex(self.center))

    @property
    def h(self) -> float:
        return 2 * self.radius / (self.n_side - 1)

    @property
    def x(self) -> np.ndarray:
        return self.center.real + np.linspace(-self.radius, self.radius, self.n_side)

    @property
    def y(self) -> np.ndarray:
        return self.center.imag + np.linspace(-self.radius, self.radius, self.n_side)

    def nodes(self) -> np.ndarray:
        """Complex node positions, indexed [i, j] with x = x[i], y = y[j]."""
        return self.x[:, None] + 1j * self.y[None, :]

    def nearest(self, z: complex) -> tuple[int, int]:
        off = (complex(z) - self.center + self.radius * (1 + 1j)) / self.h
        i, j = int(round(off.real)), int(round(off.imag))
        if not (0 <= i < self.n_side and 0 <= j < self.n_side):
            raise GridMismatch(f"{z} lies outside the grid")
        return i, j

    def node(self, i: int, j: int) -> complex:
        return complex(self.x[i], self.y[j])

    def to_json(self) -> dict:
        return {"radius": self.radius, "n_side": self.n_side,
                "center": [self.center.real, self.center.imag]}

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        c = d.get("center", [0.0, 0.0])
        return cls(float(d["radius"]), int(d["n_side"]), complex(c[0], c[1]))


@dataclass
class GridField:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        n = self.spec.n_side
        self.values = np.asarray(self.values, dtype=complex).reshape(n, n)

    def norm_l2(self) -> float:
        return math.sqrt(self.spec.h**2 * float(np.sum(np.abs(self.values) ** 2)))

    def mass_l1(self) -> float:
        return self.spec.h**2 * float(np.sum(np.abs(self.values)))

    def inner(self, other: "GridField") -> complex:
        _same_grid(self.spec, other.spec)
        return complex(self.spec.h**2 * np.vdot(other.values, self.values))

    def at_node(self, z: complex) -> complex:
        i, j = self.spec.nearest(z)
        return complex(self.values[i, j])

    def sample(self, z: complex, points: int = 6) -> complex:
        """Tensor Lagrange interpolation on the `points` x `points` nodes around z."""
        g = self.spec
        off = (complex(z) - g.center + g.radius * (1 + 1j)) / g.h
        out = []
        for coord in (off.real, off.imag):
            lo = int(math.floor(coord)) - points // 2 + 1
            lo = min(max(lo, 0), g.n_side - points)
            idx = np.arange(lo, lo + points)
            out.append((idx, _lagrange_weights(idx, coord)))
        (ix, wx), (iy, wy) = out
        return complex(wx @ self.values[np.ix_(ix, iy)] @ wy)


def _lagrange_weights(nodes: np.ndarray, x: float) -> np.ndarray:
    w = np.ones(len(nodes))
    for k, xk in enumerate(nodes):
        for m, xm in enumerate(nodes):
            if m != k:
                w[k] *= (x - xm) / (xk - xm)
    return w


def _same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridMismatch("fields live on different grids")


@dataclass(frozen=True)
class SolverConfig:
    order: int = 6            # accuracy order of the spatial stencils
    dt_factor: float = 0.5    # dt <= dt_factor * h^2
    linear_solver: str = "cg"
    rtol: float = 1e-12
    maxiter: int = 5000
    boundary_tol: float = 1e-8
    boundary_width: int = 3
    check_boundary: bool = True

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SolverConfig":
        return cls(**d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


# finite-difference weights

@lru_cache(maxsize=None)
def central_weights(deriv: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central difference for d^deriv/dx^deriv with given accuracy."""
    points = deriv + order - 1
    if points % 2 == 0:
        points += 1
    q = (points - 1) // 2
    m = np.arange(-q, q + 1)
    A = np.array([m.astype(float) ** k for k in range(2 * q + 1)])
    b = np.zeros(2 * q + 1)
    b[deriv] = math.factorial(deriv)
    return m, np.linalg.solve(A, b)


def _line_operator(n: int, h: float, deriv: int, order: int) -> sp.csr_matrix:
    m, c = central_weights(deriv, order)
    return sp.diags([np.full(n - abs(k), ck) for k, ck in zip(m, c)], list(m),
                    shape=(n, n), format="csr") / h**deriv


@lru_cache(maxsize=32)
def _grid_operators(spec: GridSpec, order: int):
    n = spec.n_side
    eye = sp.identity(n, format="csr")
    out = {}
    for deriv in (1, 2):
        L = _line_operator(n, spec.h, deriv, order)
        out[("x", deriv)] = sp.kron(L, eye, format="csr")
        out[("y", deriv)] = sp.kron(eye, L, format="csr")
    return out


def _conjugate_by_phase(M: sp.csr_matrix, g: np.ndarray, sign: float) -> sp.csr_matrix:
    # sign * diag(g) M diag(conj g)
    rows = np.repeat(np.arange(M.shape[0]), np.diff(M.indptr))
    data = sign * M.data * g[rows] * np.conj(g[M.indices])
    return sp.csr_matrix((data, M.indices, M.indptr), shape=M.shape)


@lru_cache(maxsize=64)
def _grid_geometry(p: SubharmonicPolynomial, spec: GridSpec):
    R = real_grid_polynomial(p)
    x, y = spec.x, spec.y
    px = P.polyder(R, axis=0)
    py = P.polyder(R, axis=1)
    Q = P.polyint(py, axis=0)
    Rint = P.polyint(px, axis=1)
    Qg = P.polygrid2d(x, y, Q) - P.polygrid2d(np.array([spec.center.real]), y, Q)
    Rg = P.polygrid2d(x, y, Rint) - P.polygrid2d(x, np.array([spec.center.imag]), Rint)
    lap = P.polygrid2d(x, y, P.polyder(R, 2, axis=0)) + P.polygrid2d(x, y, P.polyder(R, 2, axis=1))
    pz = 0.5 * (P.polygrid2d(x, y, px) - 1j * P.polygrid2d(x, y, py))
    return Qg.ravel(), Rg.ravel(), lap.ravel(), pz.ravel()


class WeightedOperatorSet:
    """Discrete Z, Zbar, W, Wbar, Box and BoxTilde for one (p, tau, grid)."""

    def __init__(self, p: SubharmonicPolynomial, tau: float, spec: GridSpec, order: int = 6):
        self.p = p
        self.tau = float(tau)
        self.spec = spec
        self.order = order
        Q, Rphase, lap, pz = _grid_geometry(p, spec)
        self.lap_p = lap
        self.dpdz = pz
        self.dpdzbar = np.conj(pz)
        self._Q, self._R = Q, Rphase
        self._cache: dict[str, sp.csr_matrix] = {}

    def _transports(self, tau: float):
        ops = _grid_operators(self.spec, self.order)
        gx = np.exp(-1j * tau * self._Q)
        gy = np.exp(1j * tau * self._R)
        return {
            "Kx": _conjugate_by_phase(ops[("x", 2)], gx, -1.0),
            "Ky": _conjugate_by_phase(ops[("y", 2)], gy, -1.0),
            "Dx": _conjugate_by_phase(ops[("x", 1)], gx, 1.0),
            "Dy": _conjugate_by_phase(ops[("y", 1)], gy, 1.0),
        }

    def matrix(self, which: str) -> sp.csr_matrix:
        if which not in OPERATORS:
            raise ValueError(f"unknown operator {which!r}")
        if which in self._cache:
            return self._cache[which]
        tau = -self.tau if which in ("W", "Wbar") else self.tau
        t = self._transports(tau)
        if which in ("Z", "W"):
            M = 0.5 * (t["Dx"] - 1j * t["Dy"])
        elif which in ("Zbar", "Wbar"):
            M = 0.5 * (t["Dx"] + 1j * t["Dy"])
        else:
            sign = 1.0 if which == "Box" else -1.0
            M = 0.25 * (t["Kx"] + t["Ky"]) + sp.diags(sign * self.tau / 4 * self.lap_p)
            M = M.tocsr()
        self._cache[which] = M
        return M


def apply_operator(ops: WeightedOperatorSet, which: str, u: GridField) -> GridField:
    _same_grid(ops.spec, u.spec)
    return GridField(u.spec, ops.matrix(which) @ u.values.ravel())


def composite_box(ops: WeightedOperatorSet, u: GridField, tilde: bool = False) -> GridField:
    """-Zbar Z u (or -Z Zbar u), the operator written as a product of first-order factors."""
    Z, Zb = ops.matrix("Z"), ops.matrix("Zbar")
    v = u.values.ravel()
    out = -(Z @ (Zb @ v)) if tilde else -(Zb @ (Z @ v))
    return GridField(u.spec, out)


def delta_field(spec: GridSpec, w: complex) -> GridField:
    i, j = spec.nearest(w)
    vals = np.zeros((spec.n_side, spec.n_side), dtype=complex)
    vals[i, j] = 1.0 / spec.h**2
    return GridField(spec, vals)


class _Stepper:
    """Crank-Nicolson steps for du/ds = -B u with a cached solve per step size."""

    def __init__(self, B: sp.csr_matrix, cfg: SolverConfig):
        self.B = B
        self.cfg = cfg
        self._dt = None
        self._A = None
        self._lu = None

    def _prepare(self, dt: float):
        if dt == self._dt:
            return
        eye = sp.identity(self.B.shape[0], format="csr")
        self._A = (eye + 0.5 * dt * self.B).tocsr()
        self._lu = sla.splu(self._A.tocsc()) if self.cfg.linear_solver == "lu" else None
        self._dt = dt

    def step(self, u: np.ndarray, dt: float, forcing: np.ndarray | None = None) -> np.ndarray:
        self._prepare(dt)
        b = u - 0.5 * dt * (self.B @ u)
        if forcing is not None:
            b = b + dt * forcing
        if self._lu is not None:
            return self._lu.solve(b)
        x, info = sla.cg(self._A, b, x0=u, rtol=self.cfg.rtol, atol=0.0, maxiter=self.cfg.maxiter)
        if info != 0:
            raise SolverDiverged(f"CG returned info={info} at dt={dt:g}")
        return x


def step_schedule(s_start: float, s_end: float, h: float, cfg: SolverConfig) -> tuple[int, float]:
    span = s_end - s_start
    if span <= 0:
        return 0, 0.0
    n = max(1, math.ceil(span / (cfg.dt_factor * h**2) - 1e-9))
    return n, span / n


def _check_boundary(u: np.ndarray, spec: GridSpec, cfg: SolverConfig):
    if not cfg.check_boundary:
        return
    a = np.abs(u.reshape(spec.n_side, spec.n_side))
    total = a.sum()
    if total == 0:
        return
    k = cfg.boundary_width
    inner = a[k:-k, k:-k].sum()
    frac = (total - inner) / total
    if frac > cfg.boundary_tol:
        raise BoundaryContamination(
            f"{frac:.2e} of the mass lies within {k}h of the boundary (R={spec.radius:g})")


def evolve(ops: WeightedOperatorSet, u0: GridField, s_end: float, cfg: SolverConfig = SolverConfig(),
           which: str = "Box", snapshots=None, forcing: GridField | None = None):
    """Crank-Nicolson evolution of du/ds + B u = g from s = 0.

    Returns the field at s_end, or a list of fields at the sorted `snapshots`.
    """
    _same_grid(ops.spec, u0.spec)
    stepper = _Stepper(ops.matrix(which), cfg)
    times = sorted(snapshots) if snapshots is not None else [s_end]
    g = forcing.values.ravel() if forcing is not None else None
    u = u0.values.ravel().copy()
    out = []
    s = 0.0
    for target in times:
        nsteps, dt = step_schedule(s, target, ops.spec.h, cfg)
        for _ in range(nsteps):
            u = stepper.step(u, dt, g)
        s = target
        _check_boundary(u, ops.spec, cfg)
        out.append(GridField(ops.spec, u.copy()))
    return out if snapshots is not None else out[0]


@dataclass
class HeatKernelSlice:
    tau: float
    w: complex
    s_list: list
    fields: list
    variant: str = "forms"
    symmetry_defect: float | None = None
    masses: list = field(default_factory=list)

    def header(self) -> dict:
        return {"tau": self.tau, "w": [self.w.real, self.w.imag], "s_list": list(self.s_list),
                "variant": self.variant, "grid": self.fields[0].spec.to_json(),
                "masses": self.masses, "symmetry_defect": self.symmetry_defect}

    def write(self, json_path, csv_path):
        Path(json_path).write_text(json.dumps(self.header(), indent=2))
        g = self.fields[0].spec
        X, Y = np.meshgrid(g.x, g.y, indexing="ij")
        with open(csv_path, "w") as fh:
            fh.write("s,x,y,re,im\n")
            for s, f in zip(self.s_list, self.fields):
                for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
                    fh.write(f"{s!r},{x!r},{y!r},{v.real!r},{v.imag!r}\n")


def kernel_column(ops: WeightedOperatorSet, w: complex, s_list, cfg: SolverConfig = SolverConfig(),
                  variant: str = "forms") -> HeatKernelSlice:
    """H(s, ., w) for each s in s_list, starting from a single-node delta at w."""
    spec = ops.spec
    if abs(complex(w) - spec.center) > spec.radius / 2:
        raise GridMismatch("source must lie within R/2 of the grid center")
    which = "Box" if variant == "forms" else "BoxTilde"
    u0 = delta_field(spec, w)
    fields = evolve(ops, u0, max(s_list), cfg, which=which, snapshots=list(s_list))
    i, j = spec.nearest(w)
    return HeatKernelSlice(ops.tau, spec.node(i, j), sorted(s_list), fields, variant,
                           masses=[f.mass_l1() for f in fields])


# grids sized to the kernel

def kernel_width(p: SubharmonicPolynomial, w: complex, s: float, tau: float) -> float:
    """Spatial scale of H(s, ., w): sqrt(s) capped smoothly by mu(w, 1/|tau|)."""
    if tau == 0:
        return math.sqrt(s)
    mu = float(mu_size(taylor_table(p, w), 1.0 / abs(tau)))
    return 1.0 / math.sqrt(1.0 / s + 1.0 / mu**2)


def adapted_grid(p: SubharmonicPolynomial, w: complex, s: float, tau: float = 0.0,
                 reach: float = 0.0, K: float = 6.0, n_side: int = 97) -> GridSpec:
    """Grid centred at w covering `reach` plus K kernel widths."""
    width = kernel_width(p, w, s, tau)
    return GridSpec(reach + K * width + 1e-12, n_side, complex(w))


def kernel_values(p: SubharmonicPolynomial, tau: float, z: complex, w: complex, s_list,
                  spec: GridSpec, cfg: SolverConfig = SolverConfig(),
                  variant: str = "forms") -> np.ndarray:
    """H(s, z, w) for each s, interpolated at z from a column with source w."""
    ops = WeightedOperatorSet(p, tau, spec, cfg.order)
    sl = kernel_column(ops, w, s_list, cfg, variant)
    return np.array([f.sample(z) for f in sl.fields])


# twisted tau derivatives

@dataclass(frozen=True)
class TwistedDerivativeStencil:
    n: int
    dtau: float
    order: int = 2

    def __post_init__(self):
        if not 0 <= self.n <= 4:
            raise ValueError("n must lie in 0..4")
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")

    @property
    def offsets(self) -> np.ndarray:
        return central_weights(self.n, self.order)[0] if self.n else np.array([0])

    @property
    def weights(self) -> np.ndarray:
        if self.n == 0:
            return np.array([1.0])
        return central_weights(self.n, self.order)[1] / self.dtau**self.n


def default_dtau(tau: float) -> float:
    return max(1e-3, abs(tau) * 1e-2)


def twisted_samples(p: SubharmonicPolynomial, z: complex, w: complex, s_list, tau: float,
                    offsets, dtau: float, spec: GridSpec, cfg: SolverConfig) -> np.ndarray:
    """exp(-i tau_m T(w, z)) H_{tau_m}(s, z, w) at tau_m = tau + m dtau; shape (len(offsets), len(s_list))."""
    T = twist(p, w, z)
    rows = []
    for m in offsets:
        tm = tau + m * dtau
        vals = kernel_values(p, tm, z, w, s_list, spec, cfg)
        rows.append(np.exp(-1j * tm * T) * vals)
    return np.array(rows)


def combine_stencil(samples: np.ndarray, offsets, n: int, order: int, dtau: float,
                    tau: float, T: float) -> np.ndarray:
    """Apply the central difference for the n-th derivative to twisted samples and untwist."""
    if n == 0:
        idx = list(offsets).index(0)
        return samples[idx] * np.exp(1j * tau * T)
    m, c = central_weights(n, order)
    lookup = {int(k): r for k, r in zip(offsets, samples)}
    total = sum(ck * lookup[int(mk)] for mk, ck in zip(m, c))
    return np.exp(1j * tau * T) * total / dtau**n


def twisted_tau_derivative(p: SubharmonicPolynomial, w: complex, z: complex, s: float, tau: float,
                           stencil: TwistedDerivativeStencil, cfg: SolverConfig = SolverConfig(),
                           spec: GridSpec | None = None, noise_floor: float | None = None) -> complex:
    """(M)^n H(s, z, w) with M = d/dtau - i T(w, z), by central differences in tau."""
    if noise_floor is None:
        noise_floor = max(cfg.rtol, 1e-13)
    if stencil.n and noise_floor / stencil.dtau**stencil.n > 1e-3:
        raise StencilUnderflow(f"dtau={stencil.dtau:g} amplifies solver noise beyond 1e-3")
    if spec is None:
        spec = adapted_grid(p, w, s, tau + abs(stencil.offsets).max() * stencil.dtau,
                            reach=abs(z - w))
    offsets = stencil.offsets
    samples = twisted_samples(p, z, w, [s], tau, offsets, stencil.dtau, spec, cfg)
    T = twist(p, w, z)
    return complex(combine_stencil(samples, offsets, stencil.n, stencil.order,
                                   stencil.dtau, tau, T)[0])


def mehler_kernel(tau: float, s, z: complex, w: complex):
    """Closed-form H(s, z, w) for p = |z|^2 on the plane, tau of either sign."""
    s = np.asarray(s, dtype=float)
    T = 2.0 * (complex(z) * complex(w).conjugate()).imag
    if tau == 0:
        return np.exp(-abs(z - w) ** 2 / s) / (np.pi * s) + 0j
    x = tau * s
    pref = tau * np.exp(-x) / (np.pi * np.sinh(x))
    return pref * np.exp(-tau / np.tanh(x) * abs(z - w) ** 2) * np.exp(1j * tau * T)
