"""Space-time kernels from per-tau solves by inverse partial Fourier transform.

    Hcal(s, z, w, t) = (1/2 pi) int exp(i t tau) H_tau(s, z, w) dtau

The integral is a trapezoid sum on a symmetric tau grid.  For tau < 0 the
kernel value is read off the tilde operator at |tau| with source and target
exchanged.  Near the diagonal H_tau grows linearly as tau -> -inf (the
lowest Landau level), so that part is fitted on the outer samples,
subtracted with two smooth profiles whose transforms are known in closed form,
and added back analytically.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigInvalid, InsufficientSamples, TruncationResidual
from .geometry import (MetricPoint, SubharmonicPolynomial, mu_size, pair_volume, taylor_table,
                       twist)
from .reports import DecayFitReport, fit_report
from .solver import (GridSpec, SolverConfig, WeightedOperatorSet, central_weights, kernel_column,
                     kernel_width, mehler_kernel)


@dataclass(frozen=True)
class TauGrid:
    """Symmetric grid tau_k = k dtau, |k| <= (n_tau - 1)/2."""

    tau_max: float
    n_tau: int

    def __post_init__(self):
        if self.tau_max <= 0:
            raise ConfigInvalid("tau_max must be positive")
        if self.n_tau < 5 or self.n_tau % 4 != 1:
            raise ConfigInvalid("n_tau must be 1 mod 4 and at least 5")

    @property
    def dtau(self) -> float:
        return 2 * self.tau_max / (self.n_tau - 1)

    @property
    def taus(self) -> np.ndarray:
        m = (self.n_tau - 1) // 2
        return np.arange(-m, m + 1) * self.dtau

    def to_json(self) -> dict:
        return {"tau_max": self.tau_max, "n_tau": self.n_tau, "dtau": self.dtau}


@dataclass(frozen=True)
class SynthesisConfig:
    eps: float = 1e-6           # target relative size of the truncated tau tail
    c_fit: float = 2.0          # decay rate assumed in the tau_max rule
    oversample: float = 2.0     # tau samples per Nyquist interval of the largest |t|
    n_tau_max: int = 129
    K: float = 6.0              # grid radius in units of sqrt(s) beyond |z - w|
    n_side: int = 65
    noise_rel: float = 1e-5     # assumed accuracy of the solver values, relative to the L1 scale
    subtract_growth: bool = True
    linear_tol: float = 1e-3    # max misfit of the linear tail model, relative to the tail size
    window_frac: float = 0.5    # share of the tau < 0 half rolled off after the subtraction
    check_truncation: bool = True
    workers: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.eps <= 0 or self.c_fit <= 0 or self.oversample <= 0 or self.K <= 0:
            raise ConfigInvalid("eps, c_fit, oversample and K must be positive")
        if isinstance(self.solver, dict):
            object.__setattr__(self, "solver", SolverConfig(**self.solver))

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SynthesisConfig":
        return cls(**d)


def tau_cutoff(p: SubharmonicPolynomial, w: complex, s: float, eps: float, c_fit: float) -> float:
    """Smallest tau with exp(-c_fit s / mu(w, 1/tau)^2) < eps / 10."""
    target = math.log(10 / eps) / c_fit
    tbl = taylor_table(p, w)
    g = lambda tau: s / float(mu_size(tbl, 1 / tau)) ** 2 - target
    lo, hi = 1e-8, 1.0
    while g(hi) < 0:
        hi *= 2
        if hi > 1e12:
            raise ConfigInvalid("tau cutoff does not converge")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-12:
            break
    return hi


def tau_grid_for(p: SubharmonicPolynomial, w: complex, s: float, t_max: float,
                 cfg: SynthesisConfig = SynthesisConfig(), z: complex | None = None) -> TauGrid:
    """tau_max from the forms-side decay; off the diagonal it is also made long enough
    for the exp(-|tau| |z - w|^2) decay of the tau < 0 side."""
    tau_max = tau_cutoff(p, w, s, cfg.eps, cfg.c_fit)
    if z is not None and complex(z) != complex(w):
        # |tau| exp(-|tau| r^2) < eps / 10, by fixed-point iteration; the rate is the
        # Heisenberg one, and synthesize() still checks the tail that is left
        rate = abs(complex(z) - w) ** 2
        neg = math.log(10 / cfg.eps) / rate
        for _ in range(8):
            neg = (math.log(10 / cfg.eps) + math.log(1 + neg)) / rate
        tau_max = max(tau_max, neg)
    dtau = math.pi / (cfg.oversample * max(abs(t_max), 1e-12))
    half = math.ceil(tau_max / dtau)
    half = 2 * math.ceil(half / 2)
    n = min(2 * half + 1, cfg.n_tau_max - (cfg.n_tau_max - 1) % 4)
    return TauGrid(tau_max, max(n, 5))


# column providers: callables tau -> H_tau(s, z, w)

@dataclass(frozen=True)
class MehlerProvider:
    """Closed-form Heisenberg values; stands in for the solver in tests."""

    s: float
    z: complex
    w: complex

    def __call__(self, tau: float) -> complex:
        return complex(mehler_kernel(float(tau), self.s, self.z, self.w))


@dataclass(frozen=True)
class SolverProvider:
    """Finite-difference values.  tau >= 0 uses Box with source w;
    tau < 0 uses BoxTilde at |tau| with source z, sampled at w."""

    p: SubharmonicPolynomial
    s: float
    z: complex
    w: complex
    K: float = 6.0
    n_side: int = 97
    solver: SolverConfig = SolverConfig()

    def grid(self, center: complex, tau: float) -> GridSpec:
        """Radius |z - w| plus K kernel widths at this tau, so the resolution follows the kernel."""
        width = kernel_width(self.p, center, self.s, tau)
        return GridSpec(abs(self.z - self.w) + self.K * width, self.n_side, complex(center))

    def __call__(self, tau: float) -> complex:
        tau = float(tau)
        if tau >= 0:
            source, target, variant = self.w, self.z, "forms"
        else:
            source, target, variant = self.z, self.w, "functions"
        spec = self.grid(source, tau)
        ops = WeightedOperatorSet(self.p, abs(tau), spec, self.solver.order)
        col = kernel_column(ops, source, [self.s], self.solver, variant)
        return col.fields[0].sample(target)


# profiles used to remove the linear growth as tau -> -inf

def growth_profile(tau, kappa: float):
    """tau / (exp(kappa tau) - 1): ~ |tau| as tau -> -inf, exponentially small as tau -> inf."""
    tau = np.asarray(tau, dtype=float)
    x = kappa * tau
    out = np.empty_like(tau)
    small = np.abs(x) < 1e-8
    out[small] = 1 / kappa - tau[small] / 2
    xs = x[~small]
    out[~small] = tau[~small] / np.expm1(xs)
    return out


def step_profile(tau, kappa: float):
    """1 / (1 + exp(kappa tau)): ~ 1 as tau -> -inf, exponentially small as tau -> inf."""
    return 0.5 * (1 - np.tanh(0.5 * kappa * np.asarray(tau, dtype=float)))


def growth_profile_transform(t, kappa: float):
    """(1/2 pi) int exp(i t tau) growth_profile(tau) dtau for t != 0."""
    t = np.asarray(t, dtype=float)
    return -math.pi / (2 * kappa**2 * np.sinh(math.pi * t / kappa) ** 2)


def step_profile_transform(t, kappa: float):
    """(1/2 pi) int exp(i t tau) step_profile(tau) dtau for t != 0."""
    t = np.asarray(t, dtype=float)
    return -1j / (2 * kappa * np.sinh(math.pi * t / kappa))


@dataclass
class SpaceTimeKernel:
    z: complex
    w: complex
    s: float
    t_list: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    tau_grid: TauGrid
    tau_values: np.ndarray
    growth: dict
    tail_mass: float
    scale: float
    config: SynthesisConfig

    @property
    def resolved(self) -> np.ndarray:
        """Samples whose magnitude exceeds ten times the error estimate."""
        return np.abs(self.values) > 10 * self.errors

    def rows(self):
        return [(float(t), complex(v), float(e)) for t, v, e in
                zip(self.t_list, self.values, self.errors)]

    def header(self) -> dict:
        return {"z": [self.z.real, self.z.imag], "w": [self.w.real, self.w.imag], "s": self.s,
                "tau_grid": self.tau_grid.to_json(), "growth": self.growth,
                "tail_mass": self.tail_mass, "scale": self.scale,
                "config": self.config.to_json()}


def _trapezoid_transform(taus, vals, t_list, dtau) -> np.ndarray:
    wts = np.full(len(taus), dtau)
    wts[[0, -1]] *= 0.5
    return np.exp(1j * np.outer(t_list, taus)) @ (wts * vals) / (2 * math.pi)


def _tail_mass(vals: np.ndarray, dtau: float, tau_max: float) -> float:
    # integral beyond each end, extrapolating the decay seen in the last two samples
    total = 0.0
    for last, prev in ((vals[0], vals[1]), (vals[-1], vals[-2])):
        a, b = abs(last), abs(prev)
        if a == 0:
            continue
        length = dtau / math.log(b / a) if b > a else tau_max
        total += a * length
    return total / (2 * math.pi)


def _sweep(provider, taus, workers: int) -> np.ndarray:
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return np.array(list(pool.map(provider, taus)), dtype=complex)
    return np.array([provider(t) for t in taus], dtype=complex)


def taper(taus: np.ndarray, frac: float) -> np.ndarray:
    """1 on tau >= -(1 - frac) tau_max, rolling off as sin^2 to 0 at -tau_max."""
    if frac <= 0:
        return np.ones_like(taus)
    tau_max = float(taus[-1])
    x = np.clip((taus + tau_max) / (frac * tau_max), 0, 1)
    return np.where(taus < 0, np.sin(np.pi * x / 2) ** 2, 1.0)


def synthesize_values(taus: np.ndarray, vals: np.ndarray, s: float, t_list,
                      cfg: SynthesisConfig = SynthesisConfig()):
    """Transform tau samples to t.  Returns (values, errors, growth, tail, scale).

    The error estimate adds the half-grid difference, the extrapolated tail
    beyond tau_max, the residual mass removed by the taper and a floor of
    noise_rel times the L1 scale of the samples.
    """
    t_list = np.asarray(t_list, dtype=float)
    dtau = float(taus[1] - taus[0])
    tau_max = float(taus[-1])
    scale = float(dtau * np.sum(np.abs(vals)) / (2 * math.pi))
    kappa = 2 * s
    growth = {"alpha": [0.0, 0.0], "beta": [0.0, 0.0], "kappa": kappa, "applied": False,
              "window_mass": 0.0}
    resid = vals.copy()
    analytic = np.zeros(len(t_list), dtype=complex)
    outer = taus <= -tau_max / 2
    A = np.column_stack([np.abs(taus[outer]), np.ones(outer.sum())])
    (alpha, beta), *_ = np.linalg.lstsq(A, vals[outer], rcond=None)
    misfit = np.max(np.abs(A @ [alpha, beta] - vals[outer]))
    linear = misfit <= cfg.linear_tol * np.max(np.abs(vals[outer]))
    window_mass = 0.0
    if cfg.subtract_growth and abs(vals[0]) > cfg.eps * max(scale, 1e-300) and linear:
        resid = vals - alpha * growth_profile(taus, kappa) - beta * step_profile(taus, kappa)
        win = taper(taus, cfg.window_frac)
        window_mass = float(dtau * np.sum(np.abs(resid) * (1 - win)) / (2 * math.pi))
        resid = resid * win
        with np.errstate(divide="ignore", invalid="ignore"):
            analytic = (alpha * growth_profile_transform(t_list, kappa)
                        + beta * step_profile_transform(t_list, kappa))
        # the growing part has no transform at t = 0
        analytic[t_list == 0] = np.nan
        growth = {"alpha": [alpha.real, alpha.imag], "beta": [beta.real, beta.imag],
                  "kappa": kappa, "applied": True, "window_mass": window_mass}
    full = _trapezoid_transform(taus, resid, t_list, dtau) + analytic
    half = _trapezoid_transform(taus[::2], resid[::2], t_list, 2 * dtau) + analytic
    tail = _tail_mass(resid, dtau, tau_max)
    errors = np.abs(full - half) + tail + window_mass + cfg.noise_rel * scale
    errors[~np.isfinite(full)] = np.inf
    return full, errors, growth, tail, scale


def synthesize(p: SubharmonicPolynomial, z: complex, w: complex, s: float, t_list,
               grid: TauGrid | None = None, cfg: SynthesisConfig = SynthesisConfig(),
               provider=None) -> SpaceTimeKernel:
    """Hcal(s, z, w, t) for each t in t_list."""
    z, w = complex(z), complex(w)
    t_list = np.asarray(t_list, dtype=float)
    if len(t_list) == 0:
        raise InsufficientSamples("empty t_list")
    if grid is None:
        grid = tau_grid_for(p, w, s, float(np.max(np.abs(t_list))), cfg, z)
    if provider is None:
        provider = SolverProvider(p, s, z, w, cfg.K, cfg.n_side, cfg.solver)
    taus = grid.taus
    vals = _sweep(provider, taus, cfg.workers)
    full, errors, growth, tail, scale = synthesize_values(taus, vals, s, t_list, cfg)
    if cfg.check_truncation and tail > cfg.eps * scale:
        raise TruncationResidual(f"tau tail {tail:.2e} exceeds {cfg.eps:g} of the scale {scale:.2e}")
    return SpaceTimeKernel(z, w, s, t_list, full, errors, grid, vals, growth, tail, scale, cfg)


def conjugate_symmetry_defect(forward: SpaceTimeKernel, backward: SpaceTimeKernel) -> float:
    """max |Hcal(s, z, w, t) - conj Hcal(s, w, z, -t)| relative to the largest value.

    `backward` must be synthesized at (w, z) on the negated t list.
    """
    a = forward.values
    b = np.conj(backward.values)
    if not np.allclose(forward.t_list, -backward.t_list):
        raise ConfigInvalid("backward kernel must use the negated t list")
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))


def t_integral(kernel: SpaceTimeKernel) -> complex:
    """Trapezoid integral of the returned samples over t."""
    return complex(np.trapezoid(kernel.values, kernel.t_list))


# decay fits

def decay_samples(p: SubharmonicPolynomial, kernels, restrict: bool = True):
    """(x = d^2/s, log(|Hcal| V), sample dict) for every resolved sample in the hard regime."""
    xs, ys, meta = [], [], []
    for k in kernels:
        a_t = twist(p, k.z, k.w)
        for t, v, ok in zip(k.t_list, k.values, k.resolved):
            if not ok or v == 0:
                continue
            pv = pair_volume(p, MetricPoint(k.z, float(t)), MetricPoint(k.w, 0.0), order="wz")
            d = pv.distance
            if restrict:
                mu_part = d - abs(k.z - k.w)
                if k.s > d**2 or mu_part < abs(k.z - k.w):
                    continue
            xs.append(d**2 / k.s)
            ys.append(math.log(abs(v) * pv.volume))
            meta.append({"s": k.s, "t": float(t), "z": [k.z.real, k.z.imag],
                         "w": [k.w.real, k.w.imag], "d": d, "volume": pv.volume,
                         "abs_value": abs(v), "twist": a_t})
    return np.array(xs), np.array(ys), meta


def decay_report(p: SubharmonicPolynomial, kernels, claim_id: str = "space_time_gaussian_decay",
                 c_min: float = 0.01, restrict: bool = True) -> DecayFitReport:
    """Fit |Hcal| <= C exp(-c d^2/s) / V over the resolved samples of `kernels`."""
    xs, ys, meta = decay_samples(p, kernels, restrict)
    if len(xs) < 3:
        raise InsufficientSamples(f"only {len(xs)} resolved samples in the restricted regime")
    return fit_report(claim_id, xs, ys, meta, c_min=c_min, sample_x=list(xs), sample_log=list(ys))


def workhorse_samples(p: SubharmonicPolynomial, tau: float, s: float, field_values, points, w):
    """(X, log(|H| s)) with X = |z-w|^2/s + s/mu(z,1/tau)^2 + s/mu(w,1/tau)^2."""
    mu_w = float(mu_size(taylor_table(p, w), 1 / tau))
    xs, ys = [], []
    for z, v in zip(points, field_values):
        if v == 0:
            continue
        mu_z = float(mu_size(taylor_table(p, z), 1 / tau))
        xs.append(abs(z - w) ** 2 / s + s / mu_z**2 + s / mu_w**2)
        ys.append(math.log(abs(v) * s))
    return xs, ys


def transform_identity_check(p: SubharmonicPolynomial, z: complex, w: complex, profile=None,
                             n_t: int = 4096, t_span: float = 40.0,
                             taus=(-1.0, -0.3, 0.0, 0.4, 1.2), fd_step: float = 1e-2) -> float:
    """Sup defect of  -i(t + T) phi  ->  (d/dtau - i T) phi_hat  on a dense t grid.

    The left side is transformed by FFT on n_t points; the right side
    differentiates the transform of phi (evaluated by direct sums at nearby
    tau) with an eighth-order central difference.
    """
    T = twist(p, z, w)
    if profile is None:
        profile = lambda t: np.exp(-0.5 * (t - 0.3) ** 2) * (1 + 0.2j * t)
    dt = t_span / n_t
    t = (np.arange(n_t) - n_t // 2) * dt
    phi = profile(t)
    lhs_t = -1j * (t + T) * phi

    def hat(f, tau):
        return dt * np.sum(np.exp(-1j * t * tau) * f)

    fft_lhs = dt * np.exp(-1j * np.fft.fftfreq(n_t, dt) * 2 * math.pi * t[0]) * np.fft.fft(lhs_t)
    freqs = np.fft.fftfreq(n_t, dt) * 2 * math.pi
    offsets = np.arange(-4, 5)
    _, fd = central_weights(1, 8)
    defect = 0.0
    for tau in taus:
        k = int(np.argmin(np.abs(freqs - tau)))
        tau_k = freqs[k]
        deriv = sum(c * hat(phi, tau_k + m * fd_step) for m, c in zip(offsets, fd)) / fd_step
        rhs = deriv - 1j * T * hat(phi, tau_k)
        defect = max(defect, abs(fft_lhs[k] - rhs))
    return float(defect)
