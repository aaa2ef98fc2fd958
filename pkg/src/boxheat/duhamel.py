"""Path-tree combinatorics and the separable time integrals of the recursion.

Each term of the recursion for n twisted tau-derivatives is indexed by a
composition of n into parts 1 and 2.  A part of size 1 at current depth m
contributes a factor m, a part of size 2 contributes -m(m-1), so the product
along a path is n! (-1)^J2.  The time integrals along a path are nested
Beta integrals with closed forms.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator

import mpmath
import numpy as np
from scipy import integrate, interpolate
from scipy.special import gammaln

from .errors import PatternMismatch, TooLarge

MAX_ENUMERATION = 40
PATTERNS = ("plain", "tau_decay_i", "second_derivative", "tau_decay_iii")


@dataclass(frozen=True, slots=True)
class DuhamelPath:
    parts: tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def J1(self) -> int:
        return self.parts.count(1)

    @property
    def J2(self) -> int:
        return self.parts.count(2)

    @property
    def coefficient(self) -> int:
        return math.factorial(self.n) * (-1) ** self.J2


def iter_compositions(n: int) -> Iterator[tuple[int, ...]]:
    """Compositions of n into parts {1, 2} in lexicographic order.

    Successor rule: the rightmost 1 followed by at least one more unit becomes
    a 2 and everything after it is reset to ones.
    """
    a = [1] * n
    while True:
        yield tuple(a)
        tail = 0
        for i in range(len(a) - 1, -1, -1):
            tail += a[i]
            if a[i] == 1 and tail >= 2:
                a[i:] = [2] + [1] * (tail - 2)
                break
        else:
            return


def enumerate_paths(n: int) -> list[DuhamelPath]:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_ENUMERATION:
        raise TooLarge(f"n={n} exceeds {MAX_ENUMERATION}; use binet for counts")
    return [DuhamelPath(c) for c in iter_compositions(n)]


def count_paths(n: int) -> int:
    """Count by walking the enumeration without storing it."""
    if n > MAX_ENUMERATION:
        raise TooLarge(f"n={n} exceeds {MAX_ENUMERATION}")
    return sum(1 for _ in iter_compositions(n))


def fibonacci_recursion(n: int) -> int:
    """f_1 = 1, f_2 = 2, f_n = f_(n-1) + f_(n-2)."""
    a, b = 1, 2
    if n == 1:
        return 1
    for _ in range(n - 2):
        a, b = b, a + b
    return b


def binet(n: int) -> int:
    """(phi^(n+1) - psi^(n+1)) / sqrt(5) rounded, evaluated in high precision."""
    with mpmath.workdps(max(30, n // 4 + 30)):
        r5 = mpmath.sqrt(5)
        phi = (1 + r5) / 2
        psi = (1 - r5) / 2
        val = (phi ** (n + 1) - psi ** (n + 1)) / r5
        return int(mpmath.nint(val))


def compose_coefficient(parts) -> int:
    """Multiply the per-level factors m (part 1) or -m(m-1) (part 2) down the path."""
    m = sum(parts)
    coef = 1
    for a in parts:
        if a == 1:
            coef *= m
        else:
            coef *= -m * (m - 1)
        m -= a
    return coef


def coefficient_histogram(n: int) -> dict[str, int]:
    """Number of paths per coefficient value, keyed by the signed integer as a string."""
    fact = math.factorial(n)
    if n <= 30:
        counts = Counter(DuhamelPath(c).coefficient for c in iter_compositions(n))
    else:
        counts = Counter()
        for j2 in range(n // 2 + 1):
            counts[fact * (-1) ** j2] += math.comb(n - j2, j2)
    return {f"{k:+d}": v for k, v in sorted(counts.items())}


def stirling_constant(n_max: int) -> float:
    """Smallest A with n! / (n^2 Gamma(n/2)) <= A^n n^(n/2) for n = 1..n_max."""
    ns = np.arange(1, n_max + 1)
    logs = gammaln(ns + 1) - 2 * np.log(ns) - gammaln(ns / 2) - ns / 2 * np.log(ns)
    return float(np.exp(np.max(logs / ns)))


# time chains

def beta_step(m: int, r: float) -> float:
    """integral_0^r u^(m/2 - 1) (r - u)^(-1/2) du."""
    if m < 1:
        raise ValueError("m must be at least 1")
    logv = ((m + 1) / 2 - 1) * math.log(r) + 0.5 * math.log(math.pi) \
        + gammaln(m / 2) - gammaln((m + 1) / 2)
    return math.exp(logv)


@dataclass(frozen=True)
class TimeChainSpec:
    n: int
    pattern: str
    s: float

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise PatternMismatch(f"unknown pattern {self.pattern!r}")
        if self.n < 1 or (self.pattern in ("tau_decay_i", "tau_decay_iii") and self.n < 3):
            raise PatternMismatch(f"pattern {self.pattern} needs larger n (got {self.n})")
        if self.s <= 0:
            raise PatternMismatch("s must be positive")


@dataclass(frozen=True)
class ChainIntegrand:
    """prefactor * prod_k (r_(k-1) - r_k)^diff[k-1] * r_k^pows[k-1] over s > r_1 > ... > r_n > 0."""

    diff: tuple[float, ...]
    pows: tuple[float, ...]
    s_power: float = 0.0  # the prefactor is s^s_power


def chain_integrand(spec: TimeChainSpec) -> ChainIntegrand:
    n = spec.n
    half = -0.5
    if spec.pattern == "plain":
        diff = (0.0,) + (half,) * (n - 1)
        pows = (0.0,) * (n - 1) + (half,)
        return ChainIntegrand(diff, pows)
    if spec.pattern == "tau_decay_i":
        diff = (0.0,) + (half,) * (n - 1)
        pows = (0.0,) * (n - 3) + (half, half, half)
        return ChainIntegrand(diff, pows, -1.0)
    if spec.pattern == "second_derivative":
        diff = (half,) * n
        pows = (0.0,) * (n - 1) + (half,)
        return ChainIntegrand(diff, pows, -1.0)
    diff = (half,) * n
    pows = (0.0,) * (n - 3) + (-0.25, half, -0.75)
    return ChainIntegrand(diff, pows)


def _log_plain(n: int, s: float) -> float:
    # pi^(n/2) s^(n/2) / ((n/2) Gamma(n/2))
    return n / 2 * math.log(math.pi) + n / 2 * math.log(s) - gammaln(n / 2 + 1)


def _log_endpoint(m: int, s: float) -> float:
    # chain with an extra (s - r_1)^(-1/2): pi^((m+1)/2) s^((m-1)/2) / Gamma((m+1)/2)
    return (m + 1) / 2 * math.log(math.pi) + (m - 1) / 2 * math.log(s) - gammaln((m + 1) / 2)


QUARTER_CONSTANT = math.pi * math.gamma(0.25) ** 2 / math.gamma(0.75) ** 2


def time_chain(spec: TimeChainSpec) -> float:
    """Closed-form value of the time integral for a chain pattern."""
    n, s = spec.n, spec.s
    if spec.pattern == "plain":
        return math.exp(_log_plain(n, s))
    if spec.pattern == "tau_decay_i":
        return math.pi**2 * math.exp(_log_plain(n - 2, s)) / s
    if spec.pattern == "second_derivative":
        return math.exp(_log_endpoint(n, s)) / s
    return QUARTER_CONSTANT * math.exp(_log_endpoint(n - 2, s))


def tau_decay_iii_as_printed(n: int, s: float) -> float:
    """The closed form with pi^((n-2)/2) in front, as it is usually quoted."""
    return (math.pi ** ((n - 2) / 2) / math.gamma((n - 1) / 2) * QUARTER_CONSTANT
            * s ** ((n - 1) / 2 - 1))


def chain_by_beta_steps(ig: ChainIntegrand, s: float) -> float:
    """Integrate the chain innermost-first with one Beta function per level."""
    e = 0.0
    logc = 0.0
    for a, g in zip(reversed(ig.diff), reversed(ig.pows)):
        x = g + e + 1
        logc += gammaln(x) + gammaln(a + 1) - gammaln(x + a + 1)
        e = x + a
    return math.exp(logc) * s ** (e + ig.s_power)


def nested_quadrature(ig: ChainIntegrand, s: float, n_table: int = 48,
                      decades: float = 14.0, epsrel: float = 1e-11) -> float:
    """Numerical value of the chain integral by adaptive quadrature, one level at a time.

    Each inner level is tabulated on a log-spaced grid and interpolated with a
    cubic spline in (log r, log F) coordinates.  The local power-law exponent
    at the small-r end is estimated from the table and moved into the
    algebraic weight of the next quadrature so that every adaptive call sees a
    bounded integrand.
    """
    xs = s * np.logspace(-decades, 0, n_table)
    logx = np.log(xs)
    inner = None  # (spline of log G, exponent e) with F(u) = u^e G(u)
    for level in range(len(ig.diff) - 1, -1, -1):
        a, g = ig.diff[level], ig.pows[level]
        targets = xs if level > 0 else np.array([s])
        vals = np.array([_level_integral(x, a, g, inner, epsrel) for x in targets])
        if level == 0:
            return float(vals[0]) * s**ig.s_power
        logf = np.log(vals)
        e = float(np.polyfit(logx[:4], logf[:4], 1)[0])
        spline = interpolate.CubicSpline(logx, logf - e * logx)
        inner = (spline, e)
    raise AssertionError("unreachable")


def _level_integral(x: float, a: float, g: float, inner, epsrel: float) -> float:
    if inner is None:
        e, fun = 0.0, (lambda u: 1.0)
    else:
        spline, e = inner
        fun = lambda u: math.exp(float(spline(math.log(max(u, 1e-300)))))
    val, _ = integrate.quad(fun, 0.0, x, weight="alg", wvar=(g + e, a),
                            epsabs=0.0, epsrel=epsrel, limit=200)
    return val


def nested_quadrature_direct(ig: ChainIntegrand, s: float, epsrel: float = 1e-9) -> float:
    """Fully recursive adaptive quadrature with no tabulation; practical for n <= 3."""
    depth = len(ig.diff)

    def level(k: int, upper: float) -> float:
        if upper <= 0:
            return 0.0
        a, g = ig.diff[k], ig.pows[k]
        if k == depth - 1:
            f = lambda u: 1.0
        else:
            f = lambda u: level(k + 1, u)
        val, _ = integrate.quad(f, 0.0, upper, weight="alg", wvar=(g, a),
                                epsabs=0.0, epsrel=epsrel, limit=100)
        return val

    return level(0, s) * s**ig.s_power


# the spatial identities used along each path

def gauss_convolution_check(c0: float, r_prev: float, r_cur: float,
                            xi_prev: complex, xi_cur: complex) -> float:
    """Absolute defect of the completed-square identity for two heat Gaussians."""
    if not 0 < r_cur < r_prev:
        raise ValueError("need 0 < r_cur < r_prev")
    lhs = math.exp(-c0 * abs(xi_prev - xi_cur) ** 2 / (r_prev - r_cur)
                   - c0 * abs(xi_cur) ** 2 / r_cur)
    k = c0 * r_prev / ((r_prev - r_cur) * r_cur)
    rhs = math.exp(-k * abs(xi_cur - r_cur / r_prev * xi_prev) ** 2
                   - c0 * abs(xi_prev) ** 2 / r_prev)
    return abs(lhs - rhs)


def power_mean_bound(a) -> tuple[float, float]:
    """(prod a_i, mean of a_i^k) with k = len(a); the first never exceeds the second."""
    a = [float(x) for x in a]
    if not a or min(a) <= 0:
        raise ValueError("need a non-empty list of positive numbers")
    k = len(a)
    return math.prod(a), sum(x**k for x in a) / k


def level_by_level(n: int) -> list[tuple[tuple[int, ...], int]]:
    """Expand the recursion one level at a time and return (path, coefficient) pairs."""
    if n == 0:
        return [((), 1)]
    out = []
    for parts, c in level_by_level(n - 1):
        out.append(((1, *parts), n * c))
    if n >= 2:
        for parts, c in level_by_level(n - 2):
            out.append(((2, *parts), -n * (n - 1) * c))
    return sorted(out)


# the inhomogeneous heat equation

def duhamel_solution(ops, f0, g, s: float, cfg=None, n_gauss: int = 16):
    """u(s) = e^{-s B} f0 + int_0^s e^{-(s - r) B} g dr for time-independent g.

    The integral becomes int_0^s e^{-r B} g dr and is evaluated by
    Gauss-Legendre quadrature on snapshots of one evolution of g.
    """
    from .solver import GridField, SolverConfig, evolve
    cfg = cfg or SolverConfig()
    x, wts = np.polynomial.legendre.leggauss(n_gauss)
    nodes = 0.5 * s * (x + 1)
    fields = evolve(ops, g, s, cfg, snapshots=list(nodes))
    integral = sum(0.5 * s * wk * f.values for wk, f in zip(wts, fields))
    free = evolve(ops, f0, s, cfg).values if np.any(f0.values) else 0.0
    return GridField(g.spec, free + integral)


def duhamel_residual(ops, g, f0, s: float, cfg=None, ds: float | None = None,
                     n_gauss: int = 16) -> float:
    """Discrete L2 norm of du/ds + B u - g at s for the Duhamel solution u.

    du/ds is a fourth-order central difference of the Duhamel formula in s.
    """
    from .solver import GridField
    ds = ds if ds is not None else 0.05 * s
    if not 2 * ds < s:
        raise ValueError("need 2 ds < s")
    u = {k: duhamel_solution(ops, f0, g, s + k * ds, cfg, n_gauss).values.ravel()
         for k in (-2, -1, 0, 1, 2)}
    dudt = (u[-2] - 8 * u[-1] + 8 * u[1] - u[2]) / (12 * ds)
    r = dudt + ops.matrix("Box") @ u[0] - g.values.ravel()
    return GridField(g.spec, r).norm_l2()


def forced_evolution_gap(ops, g, s: float, cfg=None, n_gauss: int = 16) -> float:
    """Relative L2 gap between the Duhamel solution with f0 = 0 and forced Crank-Nicolson."""
    from .solver import GridField, SolverConfig, evolve
    cfg = cfg or SolverConfig()
    zero = GridField(g.spec, np.zeros_like(g.values))
    duh = duhamel_solution(ops, zero, g, s, cfg, n_gauss)
    direct = evolve(ops, zero, s, cfg, forcing=g)
    diff = GridField(g.spec, duh.values - direct.values)
    return diff.norm_l2() / direct.norm_l2()
