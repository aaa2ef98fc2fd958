"""Stretched-exponential decay versus derivative growth.

A function with |phi(t)| <= C exp(-a |t|^(1/beta)) has a transform whose
derivatives grow like C A^l l^(l beta) with A = (beta / (a e))^beta, and
conversely.  The helpers here evaluate the infima that link the two sides,
convert moment tables into decay constants, fit growth constants to derivative
norms, and evaluate the moment envelopes E_n(z, s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonconformingMoments
from .geometry import TaylorTable, lambda_size

NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class QseProfile:
    beta: float
    C: float
    A: float
    q: str = "inf"

    def bound(self, ell: int) -> float:
        return self.C * self.A**ell * _pow_self(ell, self.beta)


@dataclass(frozen=True)
class DecayProfile:
    a: float
    beta: float
    C: float

    @property
    def A(self) -> float:
        return moment_constant(self.a, self.beta)

    def bound(self, t):
        return self.C * np.exp(-self.a * np.abs(t) ** (1 / self.beta))


def _pow_self(n: int, beta: float) -> float:
    # n^(n beta) with 0^0 = 1
    return 1.0 if n == 0 else float(n) ** (n * beta)


def moment_constant(a: float, beta: float) -> float:
    """A = (beta / (a e))^beta."""
    return (beta / (a * math.e)) ** beta


def nu_continuous(xi, beta: float):
    """inf over real gamma >= 0 of gamma^(gamma beta) / xi^gamma."""
    xi = np.asarray(xi, dtype=float)
    return np.exp(-(beta / math.e) * xi ** (1 / beta))


def nu_continuous_t(t, a: float, beta: float):
    """The same infimum written in terms of t, i.e. exp(-a t^(1/beta))."""
    return nu_continuous(np.asarray(t, dtype=float) / moment_constant(a, beta), beta)


def continuous_minimizer(xi: float, beta: float) -> float:
    return xi ** (1 / beta) / math.e


def _log_integer_term(n: int, xi: float, beta: float) -> float:
    # log of n^(n beta) / xi^n
    return n * beta * math.log(n) - n * math.log(xi)


def nu_integer(t: float, a: float, beta: float) -> float:
    """inf over integers n >= 1 of min(1, (n beta / (a e t^(1/beta)))^(n beta))."""
    if t <= 0:
        return 1.0
    xi = t / moment_constant(a, beta)
    g0 = continuous_minimizer(xi, beta)
    lo = max(1, math.floor(g0) - 2)
    hi = math.ceil(g0) + 2
    best = min(_log_integer_term(n, xi, beta) for n in {1, *range(lo, hi + 1)})
    return math.exp(min(0.0, best))


def nu_integer_bruteforce(t: float, a: float, beta: float, n_max: int = 400) -> float:
    """Enumerate n = 1..n_max directly; reference for the windowed search."""
    if t <= 0:
        return 1.0
    xi = t / moment_constant(a, beta)
    best = min(_log_integer_term(n, xi, beta) for n in range(1, n_max + 1))
    return math.exp(min(0.0, best))


def sandwich_rows(a: float, beta: float, ts):
    """(t, lower, integer infimum, upper) rows for the two-sided bound."""
    rows = []
    factor = math.exp(math.e * beta / 2)
    for t in ts:
        lower = float(nu_continuous_t(t, a, beta))
        rows.append((float(t), lower, nu_integer(float(t), a, beta), factor * lower))
    return rows


def moments_to_decay(moments, beta: float, C: float | None = None,
                     a_max: float = 1e6, slope_tol: float = 0.05) -> DecayProfile:
    """Decay constants implied by a table of moment bounds M_0, M_1, ...

    With r = sup_n (M_n / C)^(1/(n beta)) / n, the bound M_n <= C (n r)^(n beta)
    matches C (n beta / (a e))^(n beta) for a = beta / (e r).
    """
    m = np.asarray(moments, dtype=float)
    if C is None:
        C = max(float(m[0]), NORM_FLOOR)
    ns = np.arange(1, len(m))
    with np.errstate(divide="ignore"):
        logr = (np.log(m[1:]) - math.log(C)) / (ns * beta) - np.log(ns)
    finite = np.isfinite(logr)
    if not finite.any():
        return DecayProfile(a_max, beta, C)
    half = ns[finite][len(ns[finite]) // 2:]
    if len(half) >= 4:
        slope = np.polyfit(np.log(half), logr[finite][len(ns[finite]) // 2:], 1)[0]
        if slope > slope_tol:
            raise NonconformingMoments(
                f"normalized growth rate increases like n^{slope:.2f}")
    r = float(np.exp(np.max(logr[finite])))
    return DecayProfile(min(beta / (math.e * r), a_max), beta, C)


def fit_qse(norms, beta: float) -> QseProfile:
    """Smallest A for C = norms[0] such that norms[l] <= C A^l l^(l beta)."""
    norms = np.asarray(norms, dtype=float)
    C = max(float(norms[0]), NORM_FLOOR)
    A = 0.0
    for ell in range(1, len(norms)):
        if norms[ell] > 0:
            A = max(A, math.exp((math.log(norms[ell] / C) - ell * beta * math.log(ell)) / ell))
    return QseProfile(beta, C, A)


def qse_rows(norms, prof: QseProfile):
    return [(ell, float(v), prof.bound(ell)) for ell, v in enumerate(norms)]


def calculus_bound(gamma: float, a: float, beta: float) -> float:
    """max over t of |t|^gamma exp(-a |t|^(1/beta))."""
    if gamma == 0:
        return 1.0
    return (gamma * beta / (a * math.e)) ** (gamma * beta)


def transform_derivative_bound(prof: DecayProfile, n: int) -> float:
    """Bound on sup |d^n/dtau^n phi_hat| implied by the decay profile."""
    A = prof.A
    return 2 * prof.C * A**n * _pow_self(n, prof.beta) * (1 + A**2 * _pow_self(n, prof.beta) ** 2)


# moment envelopes

def _mixed_sorted(tbl: TaylorTable):
    return sorted(tbl.mixed())


def log_envelope(tbl: TaylorTable, n: int, s: float) -> float:
    """log E_n(z, s) with E_n = sum |A_jk|^n s^(n(j+k)/2) n^(n(j+k)/2); E_0 is the term count."""
    terms = _mixed_sorted(tbl)
    if n == 0:
        return math.log(len(terms))
    logs = [n * math.log(a) + n * (j + k) / 2 * (math.log(s) + math.log(n)) for j, k, a in terms]
    return _logsumexp(logs)


def envelope(tbl: TaylorTable, n: int, s: float) -> float:
    return math.exp(log_envelope(tbl, n, s))


def _logsumexp(vals) -> float:
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


@dataclass(frozen=True)
class EnvelopeChain:
    """Three members of the envelope comparability chain, stored as logs."""

    n: int
    s: float
    log_upper: float   # shifted sum over s^2
    log_middle: float  # E_n over (s times the ball volume at radius sqrt(s))
    log_lower: float   # upper divided by n^(deg/2)
    term_count: int

    @property
    def upper_ratio(self) -> float:
        """middle / upper, at most 1."""
        return math.exp(self.log_middle - self.log_upper)

    @property
    def lower_ratio(self) -> float:
        """middle / lower, at least 1 / term_count^2."""
        return math.exp(self.log_middle - self.log_lower)


def check_envelope_chain(tbl: TaylorTable, n: int, s: float, degree: int) -> EnvelopeChain:
    terms = _mixed_sorted(tbl)
    ln, ls = math.log(n), math.log(s)
    log_shift = _logsumexp([(n - 1) * math.log(a) + (n - 1) * (j + k) / 2 * ls
                            + n * (j + k) / 2 * ln for j, k, a in terms])
    log_upper = log_shift - 2 * ls
    log_ball = ls + math.log(float(lambda_size(tbl, math.sqrt(s))))
    log_middle = log_envelope(tbl, n, s) - ls - log_ball
    log_lower = log_upper - degree / 2 * ln
    return EnvelopeChain(n, s, log_upper, log_middle, log_lower, len(terms))
