"""Necessary security conditions and the transmission / distance limits they imply.

All criteria are strict inequalities; a point exactly on a boundary is
reported insecure with zero margin.

The error criterion caps the error rate per sifted bit at 1/4, the rate at
which intercept-resend already leaves Bob without any advantage over Eve.
The multi-photon criterion demands more detected signals than multi-photon
pulses, otherwise a photon-number-splitting eavesdropper can feed Bob only
split pulses. The combined criterion subtracts the multi-photon fraction from
the click rate before applying the error criterion.

Bounds come in two flavours: ``closed_form`` (low-intensity expansions) and
``numeric_exact`` (bisection on the combined criterion with the exact
photon-number distribution, e = d_B / 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal, Optional

import numpy as np
from scipy import optimize

from .link_model import (
    DetectorParams,
    ErrorModel,
    UnattainableTransmissionError,
    detection_prob_signal,
    distance_for_transmission,
    expected_click_rate,
)
from .photon_statistics import (
    DEFAULT_N_MAX,
    HeraldedPDC,
    PhotonNumberDistribution,
    SinglePhoton,
    SourceModel,
    WeakCoherent,
    heralded_pdc_distribution,
    multi_photon_probability,
    poisson_distribution,
)

Method = Literal["closed_form", "numeric_exact"]
Criterion = Literal["error_only", "multiphoton_only", "combined"]

# Tolerable error rate per sifted bit.
ERROR_THRESHOLD = 0.25

WCP_CLOSED_FORM_MAX_MU = 0.25
PDC_CLOSED_FORM_MAX_CHI_SQ = 0.1
BISECTION_BRACKET = (1e-12, 1.0)
BISECTION_RTOL = 1e-9


@dataclass(frozen=True)
class SecurityVerdict:
    secure: bool
    lhs: float
    rhs: float
    margin: float
    criterion: Criterion


@dataclass(frozen=True)
class BoundResult:
    """Minimum transmission and, when the link is specified, the maximum distance.

    ``attainable`` is False when ``f_min`` cannot be reached: above 1 for a
    bare bound, above the zero-length transmission when a link is given.
    ``l_max`` is None when no link was given or the bound is unattainable.
    """

    f_min: float
    method: Method
    optimal_intensity: Optional[float] = None
    l_max: Optional[float] = None
    attainable: bool = True
    note: str = ""


def _verdict(lhs: float, rhs: float, criterion: Criterion) -> SecurityVerdict:
    margin = rhs - lhs
    return SecurityVerdict(secure=margin > 0, lhs=lhs, rhs=rhs, margin=margin, criterion=criterion)


def necessary_condition_error(p_exp: float, e: float, threshold: float = ERROR_THRESHOLD) -> SecurityVerdict:
    """Secure only if p_exp > e / threshold."""
    return _verdict(e / threshold, p_exp, "error_only")


def necessary_condition_multiphoton(p_sig: float, p_multi: float) -> SecurityVerdict:
    """Secure only if more signals are detected than multi-photon pulses are sent."""
    return _verdict(p_multi, p_sig, "multiphoton_only")


def combined_condition(
    p_exp: float, e: float, p_multi: float, threshold: float = ERROR_THRESHOLD
) -> SecurityVerdict:
    """Secure only if e / threshold < p_exp - p_multi."""
    return _verdict(e / threshold, p_exp - p_multi, "combined")


def check_all(
    p_sig: float, p_exp: float, e: float, p_multi: float, threshold: float = ERROR_THRESHOLD
) -> dict[Criterion, SecurityVerdict]:
    return {
        "error_only": necessary_condition_error(p_exp, e, threshold),
        "multiphoton_only": necessary_condition_multiphoton(p_sig, p_multi),
        "combined": combined_condition(p_exp, e, p_multi, threshold),
    }


# --------------------------------------------------------------------------
# numerical helpers
# --------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def numeric_minimize(
    objective: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-10,
    max_iter: int = 200,
    polish: bool = True,
) -> tuple[float, float]:
    """Golden-section search for the minimum of a unimodal function.

    Stops once the bracket is narrower than ``tol`` relative to its midpoint,
    or after ``max_iter`` iterations. With ``polish`` the result is refined by
    parabolic interpolation, which needs a smooth objective; turn it off for
    objectives that are themselves computed to limited precision.

    Returns
    -------
    (argmin, min)
    """
    a, b = map(float, bracket)
    if not a < b:
        raise ValueError(f"bracket must be ordered, got {bracket!r}")

    def f(x: float) -> float:
        y = float(objective(x))
        if not math.isfinite(y):
            raise ValueError(f"objective is not finite at x={x!r}")
        return y

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(abs(a + b) / 2.0, np.finfo(float).tiny):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc < fd else (d, fd)
    if polish:
        lo, hi = map(float, bracket)
        for _ in range(2):
            x, fx = _parabolic_step(f, x, fx, lo, hi, width=b - a)
    return x, fx


def _parabolic_step(f, x, fx, lo, hi, width):
    # Near the minimum the objective differs from f(x*) only by O(dx**2), so
    # comparisons stall at relative sqrt(eps). A symmetric three-point vertex
    # with a wide stencil resolves the curvature instead.
    h = 1e-5 * abs(x) if x != 0 else 1e-5 * (hi - lo)
    if x - h < lo or x + h > hi:
        return x, fx
    fm, fp = f(x - h), f(x + h)
    curv = fp - 2.0 * fx + fm
    if not curv > 0:
        return x, fx
    step = 0.5 * h * (fm - fp) / curv
    if abs(step) > width + h:
        return x, fx
    x_new = x + step
    return x_new, f(x_new)


def _combined_margin(
    dist: PhotonNumberDistribution,
    det: DetectorParams,
    err: ErrorModel,
    threshold: float,
) -> Callable[[float], float]:
    p_multi = multi_photon_probability(dist)

    def margin(f: float) -> float:
        p_sig = detection_prob_signal(dist, f, det.eta)
        p_exp = expected_click_rate(p_sig, det.dark, "exact")
        # conservative error floor: every dark click is an error with probability 1/2
        e = p_sig * err.p_e_signal + det.dark / 2.0
        return (p_exp - p_multi) - e / threshold

    return margin


def exact_min_transmission(
    dist: PhotonNumberDistribution,
    det: DetectorParams,
    err: ErrorModel = ErrorModel(),
    threshold: float = ERROR_THRESHOLD,
    f_hi: float = BISECTION_BRACKET[1],
) -> float:
    """Smallest transmission passing the combined criterion, by bisection.

    Returns ``inf`` when the criterion fails even at ``f_hi`` and the lower
    bracket end when it already holds there.
    """
    margin = _combined_margin(dist, det, err, threshold)
    lo = BISECTION_BRACKET[0]
    grid = np.geomspace(lo, f_hi, 25)
    values = np.array([margin(x) for x in grid])
    if np.any(np.diff(values) < -1e-15 * np.abs(values[1:]).max(initial=1.0)):
        raise ArithmeticError("combined-criterion margin is not monotone in transmission")
    if values[-1] <= 0:
        return math.inf
    if values[0] > 0:
        return lo
    return optimize.bisect(margin, lo, f_hi, xtol=1e-300, rtol=BISECTION_RTOL, maxiter=500)


def _with_attainability(f_min: float, method: Method, **kw) -> BoundResult:
    return BoundResult(f_min=f_min, method=method, attainable=bool(f_min <= 1.0), **kw)


# --------------------------------------------------------------------------
# single photons
# --------------------------------------------------------------------------

def min_transmission_single_photon(det: DetectorParams, method: Method = "closed_form") -> BoundResult:
    """Minimum transmission for an ideal single-photon source, d_B / eta_B."""
    if method == "closed_form":
        return _with_attainability(det.dark / det.eta, method)
    dist = PhotonNumberDistribution.single_photon()
    f = exact_min_transmission(dist, det)
    if f == BISECTION_BRACKET[0] and det.dark == 0:
        f = 0.0
    return _with_attainability(f, method)


# --------------------------------------------------------------------------
# weak coherent pulses
# --------------------------------------------------------------------------

def _wcp_closed_form(mu: float, det: DetectorParams) -> float:
    return det.dark / (det.eta * mu) + mu / (2.0 * det.eta)


def wcp_transmission_bound(mu: float, det: DetectorParams, method: Method = "closed_form") -> BoundResult:
    """Minimum transmission for weak coherent pulses of mean photon number ``mu``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if method == "closed_form":
        if mu > WCP_CLOSED_FORM_MAX_MU:
            raise ValueError(
                f"closed form needs mu <= {WCP_CLOSED_FORM_MAX_MU}, got {mu}; use method='numeric_exact'"
            )
        return _with_attainability(_wcp_closed_form(mu, det), method, optimal_intensity=None)
    if method == "numeric_exact":
        f = exact_min_transmission(poisson_distribution(mu, _n_max_for_poisson(mu)), det)
        return _with_attainability(f, method)
    raise ValueError(f"unknown method {method!r}")


def _n_max_for_poisson(mu: float) -> int:
    return max(DEFAULT_N_MAX, int(mu + 12 * math.sqrt(mu) + 30))


def optimal_wcp_mu(det: DetectorParams, method: Method = "closed_form") -> BoundResult:
    """Mean photon number minimizing the weak-coherent-pulse bound.

    The closed form gives mu* = sqrt(2 d_B) and f_min = sqrt(2 d_B) / eta_B.
    ``numeric_exact`` minimizes the bisection bound over mu instead.
    """
    if det.dark <= 0:
        raise ValueError("without dark counts the optimum degenerates to mu -> 0 (bound improves without limit)")
    mu_star = math.sqrt(2.0 * det.dark)
    if method == "closed_form":
        return _with_attainability(mu_star / det.eta, method, optimal_intensity=mu_star)
    if method != "numeric_exact":
        raise ValueError(f"unknown method {method!r}")

    f_hi = 1.0 / det.eta

    def objective(mu: float) -> float:
        return exact_min_transmission(poisson_distribution(mu, _n_max_for_poisson(mu)), det, f_hi=f_hi)

    lo, hi = mu_star / 4.0, min(4.0 * mu_star, 1.0)
    mu_opt, f = numeric_minimize(objective, (lo, hi), tol=1e-8, polish=False)
    return _with_attainability(f, method, optimal_intensity=mu_opt)


def honest_detector_wcp_bound(mu: float) -> BoundResult:
    """Multi-photon bound when Eve cannot tamper with Bob's detector efficiency.

    Forwarded multi-photon pulses then see the same eta_B as honest signals,
    so eta_B cancels and F * mu > mu**2 / 2 leaves f_min = mu / 2.
    """
    if not (0 < mu <= WCP_CLOSED_FORM_MAX_MU):
        raise ValueError(f"mu must lie in (0, {WCP_CLOSED_FORM_MAX_MU}], got {mu!r}")
    return _with_attainability(mu / 2.0, "closed_form", note="eta_B outside Eve's control")


# --------------------------------------------------------------------------
# heralded parametric downconversion
# --------------------------------------------------------------------------

def _pdc_closed_form(chi_sq: float, eta_a: float, d_a: float, det: DetectorParams) -> float:
    return (
        d_a * det.dark / (eta_a * det.eta * chi_sq)
        + det.dark / det.eta
        + (2.0 - eta_a) * chi_sq / det.eta
    )


def pdc_transmission_bound(source: HeraldedPDC, det: DetectorParams, method: Method = "closed_form") -> BoundResult:
    """Minimum transmission for a heralded PDC source."""
    if method == "closed_form":
        if source.chi_sq > PDC_CLOSED_FORM_MAX_CHI_SQ:
            raise ValueError(
                f"closed form needs chi_sq <= {PDC_CLOSED_FORM_MAX_CHI_SQ}, got {source.chi_sq}; "
                "use method='numeric_exact'"
            )
        return _with_attainability(_pdc_closed_form(source.chi_sq, source.eta_a, source.d_a, det), method)
    if method == "numeric_exact":
        dist = heralded_pdc_distribution(source).distribution
        return _with_attainability(exact_min_transmission(dist, det), method)
    raise ValueError(f"unknown method {method!r}")


def optimal_pdc_chi(eta_a: float, d_a: float, det: DetectorParams, method: Method = "closed_form") -> BoundResult:
    """Squeezing strength chi**2 minimizing the heralded-PDC bound.

    The closed-form bound has the shape A / x + B + C x in x = chi**2, so the
    minimizer is sqrt(A / C) = sqrt(d_A d_B / (eta_A (2 - eta_A))) and the
    minimum 2 sqrt(A C) + d_B / eta_B.
    """
    if not (0 < eta_a <= 1):
        raise ValueError(f"eta_a must lie in (0, 1], got {eta_a!r}")
    if d_a < 0:
        raise ValueError(f"d_a must be >= 0, got {d_a!r}")
    if d_a == 0 or det.dark == 0:
        # no dark-count coincidences: optimum at chi**2 -> 0
        return _with_attainability(
            det.dark / det.eta, method, optimal_intensity=0.0, note="limit chi_sq -> 0"
        )
    chi_sq_star = math.sqrt(d_a * det.dark / (eta_a * (2.0 - eta_a)))
    if method == "closed_form":
        f = 2.0 * math.sqrt(d_a * det.dark * (2.0 - eta_a) / (eta_a * det.eta**2)) + det.dark / det.eta
        return _with_attainability(f, method, optimal_intensity=chi_sq_star)
    if method != "numeric_exact":
        raise ValueError(f"unknown method {method!r}")

    f_hi = 1.0 / det.eta

    def objective(chi_sq: float) -> float:
        dist = heralded_pdc_distribution(HeraldedPDC(chi_sq, eta_a, d_a)).distribution
        return exact_min_transmission(dist, det, f_hi=f_hi)

    lo, hi = chi_sq_star / 4.0, min(4.0 * chi_sq_star, 0.5)
    x, f = numeric_minimize(objective, (lo, hi), tol=1e-8, polish=False)
    return _with_attainability(f, method, optimal_intensity=x)


# --------------------------------------------------------------------------
# distance
# --------------------------------------------------------------------------

def min_transmission(
    source: SourceModel,
    det: DetectorParams,
    optimize_intensity: bool = False,
    method: Method = "closed_form",
    eve_controls_detector: bool = True,
) -> BoundResult:
    """Dispatch to the transmission bound matching ``source``."""
    if isinstance(source, SinglePhoton):
        return min_transmission_single_photon(det, method)
    if isinstance(source, WeakCoherent):
        if not eve_controls_detector:
            if optimize_intensity:
                raise ValueError("the honest-detector bound improves without limit as mu -> 0")
            return honest_detector_wcp_bound(source.mu)
        if optimize_intensity:
            return optimal_wcp_mu(det, method)
        return wcp_transmission_bound(source.mu, det, method)
    if isinstance(source, HeraldedPDC):
        if optimize_intensity:
            return optimal_pdc_chi(source.eta_a, source.d_a, det, method)
        return pdc_transmission_bound(source, det, method)
    raise TypeError(f"unsupported source {source!r}")


def max_secure_distance(
    source: SourceModel,
    det: DetectorParams,
    beta: float,
    c: float,
    optimize_intensity: bool = False,
    method: Method = "closed_form",
    eve_controls_detector: bool = True,
) -> BoundResult:
    """Longest fiber (km) over which the necessary condition can still hold."""
    bound = min_transmission(source, det, optimize_intensity, method, eve_controls_detector)
    f = bound.f_min
    if f <= 0:
        return replace(bound, l_max=math.inf, attainable=True)
    if not math.isfinite(f) or f > 1:
        return replace(bound, l_max=None, attainable=False)
    try:
        l_max = distance_for_transmission(f, beta, c)
    except UnattainableTransmissionError:
        return replace(bound, l_max=None, attainable=False, note=_join(bound.note, "insecure at any distance"))
    return replace(bound, l_max=l_max, attainable=True)


def _join(*parts: str) -> str:
    return "; ".join(p for p in parts if p)
