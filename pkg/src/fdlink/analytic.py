"""Closed-form distributions, averages, ceilings, floors, and asymptotics
for the Serial-Max policy, plus quadrature oracles that evaluate the
defining integrals independently.

Numerical strategy for the alternating binomial sums: coefficients are
exact integers converted to float at the final multiply, terms are
reduced with math.fsum, and each result carries a cancellation diagnostic.
SER sums losing more than ~6 digits (max term magnitude > 1e6 * |value|)
are re-evaluated with mpmath at 50 digits, where the cancellation is
harmless; if the diagnostic trips hard (> 1e12 * |value|) the public
averages fall back to the quadrature value and keep the flag set.

The product Q(sqrt(2a+b)) * e^(a+b/2) that appears throughout the SER
forms equals 0.5 * erfcx(sqrt(a+b/2)) and is computed that way; the bare
exponential overflows for small eta*lambda_s while the product stays
bounded.

Closed forms are supported for n_a*n_b <= 36; larger systems are
simulation-only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.special import erfcx, gamma as gamma_fn

from .config import ModulationParams, SystemConfig
from .errors import (
    CancellationWarning,
    ConvergenceFailure,
    DomainError,
    RequiresPerfectCancellation,
    SingularTermWarning,
)
from .special import binom, exp_e1_scaled

_LN2 = math.log(2.0)
_MAX_NN_CLOSED_FORM = 36
_SINGULAR_TOL = 1e-9
_SINGULAR_PERTURB = 1e-6
_CANCELLATION_RATIO = 1e12
_MP_PROMOTE_RATIO = 1e6
_CDF_CLAMP = 1e-9


@dataclass(frozen=True)
class MixtureWeights:
    """p[k-1] = probability that the second selected link's SNR is the
    (n_a*n_b - k)-th order statistic of the full matrix, k = 1..n_a+n_b-1."""

    p: np.ndarray


@dataclass(frozen=True)
class AnalyticValue:
    value: float
    max_term_magnitude: float
    cancellation_flag: bool


def _check_closed_form_size(cfg: SystemConfig) -> None:
    if cfg.nn > _MAX_NN_CLOSED_FORM:
        raise DomainError(
            f"closed forms support n_a*n_b <= {_MAX_NN_CLOSED_FORM}, got {cfg.nn}; "
            "use the Monte Carlo estimators instead"
        )


def mu_coefficient(k: int, l: int, m: int, n_a: int, n_b: int) -> float:
    """Combinatorial coefficient of the second-link CDF triple sum."""
    nn = n_a * n_b
    num = binom(nn - k - 1, n_a + n_b - k - 1) * binom(nn, l) * binom(l, m)
    return num / binom(nn - 1, n_a + n_b - 2)


def mu_prime_coefficient(k: int, l: int, n_a: int, n_b: int) -> float:
    """m-marginalized coefficient used by the perfect-cancellation CDF."""
    nn = n_a * n_b
    num = binom(nn - k - 1, n_a + n_b - k - 1) * binom(nn, l)
    return num / binom(nn - 1, n_a + n_b - 2)


def mixture_weights(n_a: int, n_b: int) -> MixtureWeights:
    """Rank-mixture probabilities of the second selected link."""
    nn = n_a * n_b
    denom = binom(nn - 1, n_a + n_b - 2)
    p = np.array(
        [binom(nn - k - 1, n_a + n_b - k - 1) / denom for k in range(1, n_a + n_b)]
    )
    return MixtureWeights(p=p)


def order_statistic_cdf(r: int, n: int, x: float, lam: float) -> float:
    """CDF at x of the order statistic reached by at least r of n i.i.d.
    exponential(mean lam) draws: sum_{i=r}^{n} C(n,i) F^i (1-F)^{n-i}."""
    if not 1 <= r <= n:
        raise DomainError(f"need 1 <= r <= n, got r={r}, n={n}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    f = -math.expm1(-x / lam)
    return math.fsum(
        binom(n, i) * f**i * (1.0 - f) ** (n - i) for i in range(r, n + 1)
    )


def _clamp_cdf(value: float) -> float:
    if -_CDF_CLAMP <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + _CDF_CLAMP:
        return 1.0
    return value


def cdf_gamma_ab(x: float, cfg: SystemConfig) -> float:
    """CDF of the first selected link's instantaneous SINR."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    _check_closed_form_size(cfg)
    nn = cfg.nn
    if cfg.eta == 0.0:
        return (-math.expm1(-x / cfg.lambda_s)) ** nn
    terms = [
        (-1.0) ** k
        * binom(nn, k)
        * math.exp(-k * x / cfg.lambda_s)
        / (k * cfg.eta * x + 1.0)
        for k in range(nn + 1)
    ]
    return _clamp_cdf(math.fsum(terms))


def cdf_gamma_ba(x: float, cfg: SystemConfig) -> float:
    """CDF of the second selected link's instantaneous SINR."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    _check_closed_form_size(cfg)
    nn, n_a, n_b = cfg.nn, cfg.n_a, cfg.n_b
    terms = []
    if cfg.eta == 0.0:
        f = -math.expm1(-x / cfg.lambda_s)
        for k in range(1, n_a + n_b):
            for l in range(nn - k, nn + 1):
                terms.append(
                    mu_prime_coefficient(k, l, n_a, n_b)
                    * f**l
                    * math.exp(-(nn - l) * x / cfg.lambda_s)
                )
    else:
        for k in range(1, n_a + n_b):
            for l in range(nn - k, nn + 1):
                for m in range(l + 1):
                    c = nn - l + m
                    terms.append(
                        (-1.0) ** m
                        * mu_coefficient(k, l, m, n_a, n_b)
                        * math.exp(-c * x / cfg.lambda_s)
                        / (c * cfg.eta * x + 1.0)
                    )
    return _clamp_cdf(math.fsum(terms))


# ---------------------------------------------------------------------------
# quadrature oracles over the defining integrals


def quadrature_avg_rate(cdf_evaluator, tolerance: float = 1e-10) -> float:
    """(1/ln 2) * int_0^inf (1 - F(x)) / (1 + x) dx, via the compactifying
    substitution t = x/(1+x)."""

    def integrand(t: float) -> float:
        if t >= 1.0 - 1e-15:
            return 0.0
        x = t / (1.0 - t)
        return (1.0 - cdf_evaluator(x)) / (1.0 - t)

    value, abserr, info, *rest = quad(
        integrand, 0.0, 1.0, epsabs=1e-14, epsrel=tolerance, limit=500, full_output=True
    )
    if rest:
        raise ConvergenceFailure(f"rate quadrature failed: {rest[0]}")
    return value / _LN2


def quadrature_avg_ser(
    cdf_evaluator, mod: ModulationParams, tolerance: float = 1e-10
) -> float:
    """alpha*sqrt(beta)/(2*sqrt(2*pi)) * int_0^inf F(x) e^{-beta x/2}/sqrt(x) dx,
    with the endpoint singularity removed by x = t^2."""
    beta = mod.beta_mod

    def integrand(t: float) -> float:
        return 2.0 * cdf_evaluator(t * t) * math.exp(-beta * t * t / 2.0)

    # a finite upper limit where the Gaussian factor has underflowed keeps
    # quad from overlooking the narrow bulk of the integrand, which the
    # infinite-interval transformation can sample too sparsely
    upper = math.sqrt(1500.0 / beta)
    value, abserr, info, *rest = quad(
        integrand, 0.0, upper, epsabs=1e-14, epsrel=tolerance, limit=500, full_output=True
    )
    if rest:
        raise ConvergenceFailure(f"SER quadrature failed: {rest[0]}")
    return mod.alpha_mod * math.sqrt(beta) / (2.0 * math.sqrt(2.0 * math.pi)) * value


# ---------------------------------------------------------------------------
# closed-form averages


def _safe_term_eta(c: int, eta: float) -> float:
    """Eta to use for a term with denominator 1 - c*eta.

    When the denominator is within 1e-9 of zero the whole term is a 0/0
    form with a finite limit; evaluating both its numerator and denominator
    at a slightly perturbed eta recovers that limit to O(1e-6)."""
    if abs(1.0 - c * eta) < _SINGULAR_TOL:
        warnings.warn(
            f"singular denominator 1 - {c}*eta; term evaluated at perturbed eta",
            SingularTermWarning,
            stacklevel=3,
        )
        return eta * (1.0 + _SINGULAR_PERTURB)
    return eta


def _rate_kernel(c: int, cfg: SystemConfig) -> float:
    """[S(1/(eta*lam)) - S(c/lam)] / (1 - c*eta), with S(x) = e^x E1(x)."""
    eta = _safe_term_eta(c, cfg.eta)
    bracket = exp_e1_scaled(1.0 / (eta * cfg.lambda_s)) - exp_e1_scaled(c / cfg.lambda_s)
    return bracket / (1.0 - c * eta)


def _ceiling_kernel(c: int, eta_in: float) -> float:
    """ln(c*eta) / (1 - c*eta), the lambda_s -> inf limit of _rate_kernel."""
    eta = _safe_term_eta(c, eta_in)
    return math.log(c * eta) / (1.0 - c * eta)


def _finalize(terms: list[float], fallback=None) -> AnalyticValue:
    value = math.fsum(terms)
    max_term = max((abs(t) for t in terms), default=0.0)
    flagged = abs(value) > 0 and max_term / abs(value) > _CANCELLATION_RATIO
    if flagged and fallback is not None:
        warnings.warn(
            "alternating sum lost too many digits; quadrature value substituted",
            CancellationWarning,
            stacklevel=3,
        )
        value = fallback()
    return AnalyticValue(value=value, max_term_magnitude=max_term, cancellation_flag=flagged)


def avg_rate_ab(cfg: SystemConfig) -> AnalyticValue:
    """Average rate of the first selected link.

    The closed-form sum starts at k = 1; the k = 0 term would contain a
    divergent E1(0).  For eta = 0 the value is obtained by quadrature
    over the degenerate max-order-statistic CDF.
    """
    _check_closed_form_size(cfg)
    if cfg.eta == 0.0:
        value = quadrature_avg_rate(lambda x: cdf_gamma_ab(x, cfg))
        return AnalyticValue(value=value, max_term_magnitude=abs(value), cancellation_flag=False)
    nn = cfg.nn
    terms = [
        (-1.0) ** k * binom(nn, k) * _rate_kernel(k, cfg) / _LN2
        for k in range(1, nn + 1)
    ]
    return _finalize(terms, fallback=lambda: quadrature_avg_rate(lambda x: cdf_gamma_ab(x, cfg)))


def _rate_ba_terms(cfg: SystemConfig) -> list[float]:
    nn, n_a, n_b = cfg.nn, cfg.n_a, cfg.n_b
    terms = []
    for k in range(1, n_a + n_b):
        for l in range(nn - k, nn):  # F1: l up to nn-1
            for m in range(l + 1):
                c = nn - l + m
                terms.append(
                    (-1.0) ** m
                    * mu_coefficient(k, l, m, n_a, n_b)
                    * _rate_kernel(c, cfg)
                    / _LN2
                )
        for m in range(1, nn + 1):  # F2: l = nn, m >= 1
            terms.append(
                (-1.0) ** m
                * mu_coefficient(k, nn, m, n_a, n_b)
                * _rate_kernel(m, cfg)
                / _LN2
            )
    return terms


def avg_rate_ba(cfg: SystemConfig) -> AnalyticValue:
    """Average rate of the second selected link."""
    _check_closed_form_size(cfg)
    if cfg.eta == 0.0:
        value = quadrature_avg_rate(lambda x: cdf_gamma_ba(x, cfg))
        return AnalyticValue(value=value, max_term_magnitude=abs(value), cancellation_flag=False)
    return _finalize(
        _rate_ba_terms(cfg),
        fallback=lambda: quadrature_avg_rate(lambda x: cdf_gamma_ba(x, cfg)),
    )


def avg_weighted_sum_rate(cfg: SystemConfig) -> AnalyticValue:
    """Average weighted sum rate of Serial-Max; the better link carries
    the larger of (w, 1-w)."""
    r_ab = avg_rate_ab(cfg)
    r_ba = avg_rate_ba(cfg)
    wmax, wmin = max(cfg.w, 1.0 - cfg.w), min(cfg.w, 1.0 - cfg.w)
    return AnalyticValue(
        value=wmax * r_ab.value + wmin * r_ba.value,
        max_term_magnitude=max(r_ab.max_term_magnitude, r_ba.max_term_magnitude),
        cancellation_flag=r_ab.cancellation_flag or r_ba.cancellation_flag,
    )


def rate_ceiling(cfg: SystemConfig) -> float:
    """Limit of the average weighted sum rate as lambda_s -> inf.

    Obtained from the closed forms via E1(eps) ~ -euler_gamma - ln eps:
    each bracket tends to ln(c*eta)."""
    _check_closed_form_size(cfg)
    if cfg.eta == 0.0:
        raise DomainError("rate ceiling requires eta > 0 (no ceiling under perfect cancellation)")
    nn, n_a, n_b = cfg.nn, cfg.n_a, cfg.n_b
    ab_terms = [
        (-1.0) ** k * binom(nn, k) * _ceiling_kernel(k, cfg.eta) / _LN2
        for k in range(1, nn + 1)
    ]
    ba_terms = []
    for k in range(1, n_a + n_b):
        for l in range(nn - k, nn):
            for m in range(l + 1):
                c = nn - l + m
                ba_terms.append(
                    (-1.0) ** m
                    * mu_coefficient(k, l, m, n_a, n_b)
                    * _ceiling_kernel(c, cfg.eta)
                    / _LN2
                )
        for m in range(1, nn + 1):
            ba_terms.append(
                (-1.0) ** m
                * mu_coefficient(k, nn, m, n_a, n_b)
                * _ceiling_kernel(m, cfg.eta)
                / _LN2
            )
    wmax, wmin = max(cfg.w, 1.0 - cfg.w), min(cfg.w, 1.0 - cfg.w)
    return wmax * math.fsum(ab_terms) + wmin * math.fsum(ba_terms)


def _ser_product(a: float, b: float) -> float:
    # Q(sqrt(2a+b)) * e^{a+b/2} without overflow
    return 0.5 * erfcx(math.sqrt(a + b / 2.0))


def _ser_ab_coeffs(cfg: SystemConfig):
    """(sign, exact integer coefficient, c) triples of the first-link sum;
    the shared denominator is 1."""
    nn = cfg.nn
    for k in range(1, nn + 1):
        yield (-1) ** k, binom(nn, k), k


def _ser_ba_coeffs(cfg: SystemConfig):
    """(sign, exact integer numerator, c) triples of the second-link sum;
    the shared denominator is C(nn-1, n_a+n_b-2)."""
    nn, n_a, n_b = cfg.nn, cfg.n_a, cfg.n_b
    for k in range(1, n_a + n_b):
        rank = binom(nn - k - 1, n_a + n_b - k - 1)
        for l in range(nn - k, nn):  # G1
            for m in range(l + 1):
                yield (-1) ** m, rank * binom(nn, l) * binom(l, m), nn - l + m
        for m in range(1, nn + 1):  # G2: l = nn
            yield (-1) ** m, rank * binom(nn, m), m


def _ser_terms(cfg: SystemConfig, a: float, which: str) -> list[float]:
    mod = cfg.modulation
    pre = mod.alpha_mod * math.sqrt(mod.beta_mod * math.pi) / math.sqrt(2.0)
    if which == "ab":
        coeffs, denom = _ser_ab_coeffs(cfg), 1
    else:
        coeffs, denom = _ser_ba_coeffs(cfg), binom(cfg.nn - 1, cfg.n_a + cfg.n_b - 2)
    # the constant part of the CDF integrates to alpha/2
    terms = [mod.alpha_mod / 2.0]
    for sign, numer, c in coeffs:
        terms.append(
            pre
            * sign
            * (numer / denom)
            / math.sqrt(c * cfg.eta)
            * _ser_product(a, mod.beta_mod / (c * cfg.eta))
        )
    return terms


def _ser_value_mp(cfg: SystemConfig, a: float, which: str, dps: int = 50) -> float:
    """Re-evaluate an SER sum at high precision; the alternating terms are
    identical, only the arithmetic carries more digits."""
    mod = cfg.modulation
    with mpmath.workdps(dps):
        alpha = mpmath.mpf(mod.alpha_mod)
        beta = mpmath.mpf(mod.beta_mod)
        eta = mpmath.mpf(cfg.eta)
        pre = alpha * mpmath.sqrt(beta * mpmath.pi) / mpmath.sqrt(2)
        if which == "ab":
            coeffs, denom = _ser_ab_coeffs(cfg), 1
        else:
            coeffs, denom = _ser_ba_coeffs(cfg), binom(cfg.nn - 1, cfg.n_a + cfg.n_b - 2)
        total = alpha / 2
        for sign, numer, c in coeffs:
            z = mpmath.sqrt(mpmath.mpf(a) + beta / (2 * c * eta))
            product = mpmath.exp(z * z) * mpmath.erfc(z) / 2
            total += pre * sign * mpmath.mpf(numer) / denom / mpmath.sqrt(c * eta) * product
        return float(total)


def _ser_average(cfg: SystemConfig, which: str) -> AnalyticValue:
    _check_closed_form_size(cfg)
    cdf = cdf_gamma_ab if which == "ab" else cdf_gamma_ba
    if cfg.eta == 0.0:
        value = quadrature_avg_ser(lambda x: cdf(x, cfg), cfg.modulation)
        return AnalyticValue(value=value, max_term_magnitude=abs(value), cancellation_flag=False)
    a = 1.0 / (cfg.eta * cfg.lambda_s)
    terms = _ser_terms(cfg, a, which)
    value = math.fsum(terms)
    max_term = max(abs(t) for t in terms)
    if value == 0.0 or max_term / abs(value) > _MP_PROMOTE_RATIO:
        value = _ser_value_mp(cfg, a, which)
    flagged = value == 0.0 or max_term / abs(value) > _CANCELLATION_RATIO
    return AnalyticValue(value=value, max_term_magnitude=max_term, cancellation_flag=flagged)


def avg_ser_ab(cfg: SystemConfig) -> AnalyticValue:
    """Average SER of the first selected link."""
    return _ser_average(cfg, "ab")


def avg_ser_ba(cfg: SystemConfig) -> AnalyticValue:
    """Average SER of the second selected link."""
    return _ser_average(cfg, "ba")


def avg_weighted_sum_ser(cfg: SystemConfig) -> AnalyticValue:
    """Average weighted sum SER of Serial-Max; the better link carries
    the larger of (w, 1-w)."""
    s_ab = avg_ser_ab(cfg)
    s_ba = avg_ser_ba(cfg)
    wmax, wmin = max(cfg.w, 1.0 - cfg.w), min(cfg.w, 1.0 - cfg.w)
    return AnalyticValue(
        value=wmax * s_ab.value + wmin * s_ba.value,
        max_term_magnitude=max(s_ab.max_term_magnitude, s_ba.max_term_magnitude),
        cancellation_flag=s_ab.cancellation_flag or s_ba.cancellation_flag,
    )


def ser_floor(cfg: SystemConfig) -> float:
    """Limit of the average weighted sum SER as lambda_s -> inf (a = 0)."""
    _check_closed_form_size(cfg)
    if cfg.eta == 0.0:
        raise DomainError("SER floor requires eta > 0 (no floor under perfect cancellation)")
    wmax, wmin = max(cfg.w, 1.0 - cfg.w), min(cfg.w, 1.0 - cfg.w)

    def component(which: str) -> float:
        terms = _ser_terms(cfg, 0.0, which)
        value = math.fsum(terms)
        if value == 0.0 or max(abs(t) for t in terms) / abs(value) > _MP_PROMOTE_RATIO:
            value = _ser_value_mp(cfg, 0.0, which)
        return value

    return wmax * component("ab") + wmin * component("ba")


# ---------------------------------------------------------------------------
# perfect-cancellation asymptotics


def asymptotic_ser_generic(
    n_order: int, zeta: float, lam: float, mod: ModulationParams
) -> float:
    """High-SNR SER of a link whose SINR density opens as zeta*x^N/lam^(N+1)."""
    if n_order < 0 or lam <= 0:
        raise DomainError("need n_order >= 0 and lam > 0")
    n = n_order
    return (
        2.0**n
        * mod.alpha_mod
        * zeta
        * gamma_fn(n + 1.5)
        / (math.sqrt(math.pi) * (n + 1) * (mod.beta_mod * lam) ** (n + 1))
    )


def asymptotic_ser_perfect_cancellation(
    cfg: SystemConfig, lambda_s: float
) -> tuple[float, float, float]:
    """High-SNR SER asymptotes (ser_ab, ser_ba, weighted) for eta = 0.

    ser_ab decays with diversity order n_a*n_b, ser_ba and the weighted
    sum with (n_a-1)*(n_b-1)."""
    if cfg.eta != 0.0:
        raise RequiresPerfectCancellation(f"eta must be 0, got {cfg.eta}")
    nn, n_a, n_b = cfg.nn, cfg.n_a, cfg.n_b
    mod = cfg.modulation
    u1 = (
        2.0 ** (nn - 1)
        * mod.alpha_mod
        * gamma_fn(nn + 0.5)
        / (mod.beta_mod**nn * math.sqrt(math.pi))
    )
    m_div = (n_a - 1) * (n_b - 1)
    u2 = (
        2.0 ** (nn - n_a - n_b)
        * mod.alpha_mod
        * gamma_fn(m_div + 0.5)
        * binom(nn, m_div)
        / (mod.beta_mod**m_div * math.sqrt(math.pi) * binom(nn - 1, n_a + n_b - 2))
    )
    ser_ab = u1 / lambda_s**nn
    ser_ba = u2 / lambda_s**m_div
    weighted = min(cfg.w, 1.0 - cfg.w) * u2 / lambda_s**m_div
    return ser_ab, ser_ba, weighted
