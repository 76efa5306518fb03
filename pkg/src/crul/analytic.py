"""Closed-form and quadrature approximations of the ergodic secondary rate.

The adaptive-integration engine in :mod:`crul.oracle` evaluates the raw
two-dimensional region integrals; this module evaluates the closed forms
obtained by carrying out the inner integrations analytically.  The total
rate for each protocol decomposes over the decision regions:

* below-threshold term -- the primary link misses its SINR target, the
  secondary transmits at full power and sees primary interference (shared
  by both protocols);
* split-band / reduced-power / preferred-order terms -- the contested band
  where the two protocols differ;
* clear-channel term -- the primary tolerates the secondary at full power.

Every piece is available in more than one route so they can be cross-checked
term by term:

* ``derived`` closed forms, re-derived from scratch.  Products of
  exponentials with the exponential integral are evaluated in log space
  (via :func:`crul.specfun.log_e1`) so extreme rate parameters cannot
  overflow.
* ``stated`` closed forms, transcribed verbatim from the derivation these
  formulas originate from -- including its transcription slips -- so the
  validation report can show exactly where they deviate.  Being literal
  transcriptions they use plain products and may overflow outside the
  moderate-parameter regime they were stated for.
* fixed half-line quadrature of the kernels (the headline approximation
  route).
* adaptive panel integration of the same kernels.  This removes the fixed
  rule's tail truncation: the largest order-100 node is near 375, so a
  kernel decaying like ``exp(-lambda_su * x)`` loses visible mass once
  ``1/lambda_su`` grows past the node range.

:mod:`crul.crosscheck` arbitrates between the routes term by term against
the adaptive-integration oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .channel import ScenarioConfig
from .specfun import QuadratureRule, expint_ei, gauss_laguerre, log_e1

LN2 = math.log(2.0)

#: Relative spread below which the two rate parameters are treated as equal
#: and the branch terms switch to their analytic limit; the generic branch
#: divides by the difference and loses all precision near coincidence.
EQUAL_RATE_REL_TOL = 1e-9

DERIVED = "derived"
STATED = "stated"

# Tail horizon for the adaptive routes, in units of the kernel decay
# length: the neglected mass is below exp(-45) of the total.
_TAIL_HORIZON = 45.0


def _check_variant(variant: str) -> None:
    if variant not in (DERIVED, STATED):
        raise ValueError(f"variant must be {DERIVED!r} or {STATED!r}, got {variant!r}")


@dataclass(frozen=True)
class AnalyticParams:
    """Immutable inputs of the closed-form rate approximations.

    ``rule`` drives every single quadrature sum; ``pu_rule`` is the second
    axis (primary-side offsets) of the double sum in the preferred-order
    term.
    """

    lambda_pu: float
    lambda_su: float
    theta: float
    bandwidth: float = 1.0
    rule: QuadratureRule = field(default_factory=lambda: gauss_laguerre(100))
    pu_rule: QuadratureRule | None = None

    def __post_init__(self) -> None:
        for name in ("lambda_pu", "lambda_su", "theta", "bandwidth"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.pu_rule is None:
            object.__setattr__(self, "pu_rule", self.rule)

    @classmethod
    def from_scenario(
        cls, scenario: ScenarioConfig, nodes: int = 100, pu_nodes: int | None = None
    ) -> "AnalyticParams":
        return cls(
            lambda_pu=scenario.lambda_pu,
            lambda_su=scenario.lambda_su,
            theta=scenario.theta,
            bandwidth=scenario.bandwidth,
            rule=gauss_laguerre(nodes),
            pu_rule=gauss_laguerre(pu_nodes) if pu_nodes is not None else None,
        )

    @property
    def equal_rates(self) -> bool:
        return abs(self.lambda_su - self.lambda_pu) < EQUAL_RATE_REL_TOL * max(
            self.lambda_su, self.lambda_pu
        )


def _exp_ei_neg(exponent: float, arg: float) -> float:
    """``exp(exponent) * Ei(-arg)`` for ``arg > 0``, evaluated in log space.

    The factors routinely over/underflow separately (e.g. ``exp(lambda_su)``
    against ``Ei(-lambda_su*(1+theta))``) while the product stays modest.
    """
    return -math.exp(exponent + log_e1(arg))


def _adaptive_panels(f, lower: float, scale: float, rel_tol: float) -> float:
    """Integrate ``f`` from ``lower`` over geometrically growing panels.

    Plain adaptive quadrature on one huge interval misses mass that is
    localized near the lower end; doubling panels keep every feature
    resolved.  The upper truncation point neglects below ``exp(-45)`` of
    relative mass.
    """
    upper = lower + (_TAIL_HORIZON + abs(math.log(rel_tol))) * scale
    total = 0.0
    position = lower
    width = scale / 8.0
    while position < upper:
        edge = min(position + width, upper)
        value = scipy.integrate.quad(
            f, position, edge, epsabs=0.0, epsrel=rel_tol, limit=200, full_output=1
        )[0]
        total += value
        position = edge
        width *= 2.0
    return total


# --------------------------------------------- below-threshold term


def ratio_density(z, params: AnalyticParams, variant: str = DERIVED):
    """Defective density of ``gamma_su/(1+gamma_pu)`` on the protected event.

    Integrates to ``Pr{gamma_pu < theta}`` rather than one: it carries only
    the probability mass of the event where the primary link misses its
    SINR target.  Accepts scalars or arrays.

    The stated variant swaps the two rate parameters inside its second
    term; it is kept verbatim for the validation report and can go
    negative, whereas the derived variant is a true (defective) density.
    """
    _check_variant(variant)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0.0):
        raise ValueError("ratio must be >= 0")
    lam_p, lam_s, theta = params.lambda_pu, params.lambda_su, params.theta
    denom = lam_p + lam_s * z_arr
    if variant == DERIVED:
        result = lam_s * lam_p * np.exp(-lam_s * z_arr) * (1.0 / denom + 1.0 / denom**2) - (
            lam_s
            * lam_p
            * math.exp(-lam_p * theta)
            * np.exp(-lam_s * (1.0 + theta) * z_arr)
            * ((1.0 + theta) / denom + 1.0 / denom**2)
        )
    else:
        result = (
            lam_s * lam_p * np.exp(-lam_s * z_arr) / denom
            - lam_p * lam_s * math.exp(-lam_s * theta) * np.exp(-lam_p * (1.0 + theta) * z_arr)
            / denom**2
            + lam_s * lam_p * np.exp(-lam_s * z_arr) / denom**2
            - lam_p
            * lam_s
            * (1.0 + theta)
            * math.exp(-lam_p * theta)
            * np.exp(-lam_s * (1.0 + theta) * z_arr)
            / denom
        )
    if np.ndim(z) == 0:
        return float(result)
    return result


def below_threshold_term(params: AnalyticParams, variant: str = DERIVED) -> float:
    """Rate contribution of the protected-primary event, by quadrature.

    Weighted sum of ``B log2(1+z)`` times the ratio density over the
    half-line rule's nodes.
    """
    rule = params.rule
    density = ratio_density(rule.nodes, params, variant)
    return params.bandwidth * float(
        np.sum(rule.integration_weights * np.log2(1.0 + rule.nodes) * density)
    )


def below_threshold_term_integral(params: AnalyticParams, rel_tol: float = 1e-9) -> float:
    """Same contribution by adaptive integration of the ratio density."""
    integrand = lambda z: math.log2(1.0 + z) * ratio_density(z, params)
    return params.bandwidth * _adaptive_panels(integrand, 0.0, 1.0 / params.lambda_su, rel_tol)


# --------------------------------------------- split-band closed form


def split_band_branch_term(params: AnalyticParams, variant: str = DERIVED) -> float:
    """The piece of the split-band closed form with two algebraic branches.

    Its shape depends on whether the two rate parameters coincide; the
    generic branch carries a ``1/(lambda_su - lambda_pu)`` factor whose
    cancellation the equal branch resolves analytically.
    """
    _check_variant(variant)
    lam_p, lam_s, theta, width = (
        params.lambda_pu,
        params.lambda_su,
        params.theta,
        params.bandwidth,
    )
    ei_arg_full = lam_s * (1.0 + theta)
    if variant == DERIVED:
        if params.equal_rates:
            lam = lam_s
            return (width / LN2) * (
                lam * theta * _exp_ei_neg(lam, lam * (1.0 + theta))
                + theta * math.exp(-lam * theta) / (1.0 + theta)
            )
        diff = lam_s - lam_p
        ei_arg_band = lam_s + lam_p * theta
        return (width / LN2) * (lam_s / diff) * (
            _exp_ei_neg(lam_s + theta * diff, ei_arg_full) - _exp_ei_neg(lam_s, ei_arg_band)
        )
    if params.equal_rates:
        return (
            width * lam_s * theta / LN2
            + lam_s * theta * (lam_p * theta + 1.0) / (LN2 * (1.0 + theta) * lam_p)
        ) * math.exp(lam_p) * expint_ei(-lam_p * (theta + 1.0)) + (
            width * lam_p * theta * math.exp(-lam_p * theta) / (LN2 * (1.0 + theta) * lam_p)
        )
    return (width * lam_s * math.exp(lam_s) / ((lam_p - lam_s) * LN2)) * (
        expint_ei(-(lam_s + lam_p * theta))
        - math.exp(theta * (lam_p - lam_s)) * expint_ei(-ei_arg_full)
    )


def split_band_term(params: AnalyticParams, variant: str = DERIVED) -> float:
    """Closed form of the rate earned inside the contested band.

    Covers the event where the primary meets its target only thanks to the
    secondary's split (or reduced) transmission; the rate-splitting
    protocol earns ``B log2((1+x+y)/(1+theta))`` there.
    """
    _check_variant(variant)
    lam_p, lam_s, theta, width = (
        params.lambda_pu,
        params.lambda_su,
        params.theta,
        params.bandwidth,
    )
    ei_arg_band = lam_s + lam_p * theta
    ei_arg_full = lam_s * (1.0 + theta)
    branch = split_band_branch_term(params, variant)
    if variant == DERIVED:
        diff = lam_s - lam_p
        head = -_exp_ei_neg(lam_s + theta * diff, ei_arg_full)
        middle = lam_s * _exp_ei_neg(lam_s, ei_arg_band) / ei_arg_band
        return (width / LN2) * (head + middle) + branch
    head = (
        (width * lam_s * math.exp(lam_p * theta) / (LN2 * ei_arg_band))
        * math.exp(lam_p * theta + lam_s)
        * expint_ei(-ei_arg_band)
    )
    middle = -(width / LN2) * math.exp(theta * (lam_s - lam_p) + lam_s) * expint_ei(-ei_arg_full)
    return head + middle + branch


def clear_channel_term(params: AnalyticParams, variant: str = DERIVED) -> float:
    """Closed form of the rate earned when the primary tolerates full power.

    The stated variant carries a stray ``exp(-lambda_pu*theta)`` prefactor
    squared; kept for the validation report.
    """
    _check_variant(variant)
    lam_p, lam_s, theta, width = (
        params.lambda_pu,
        params.lambda_su,
        params.theta,
        params.bandwidth,
    )
    ei_arg_band = lam_s + lam_p * theta
    if variant == DERIVED:
        return -(width / LN2) * lam_s * _exp_ei_neg(lam_s, ei_arg_band) / ei_arg_band
    return (
        -(width * lam_s * math.exp(-lam_p * theta) / (LN2 * ei_arg_band))
        * math.exp(-lam_p * theta + lam_s)
        * expint_ei(-ei_arg_band)
    )


def merged_tail_stated(params: AnalyticParams) -> float:
    """Split-band plus clear-channel terms as merged in the stated headline.

    The stated headline formula folds the two closed forms into a single
    expression with an ``exp(lambda_pu*theta) - exp(-lambda_pu*theta)``
    factor; re-derivation shows the two leading pieces actually cancel.
    Preserved verbatim for the validation report.
    """
    lam_p, lam_s, theta, width = (
        params.lambda_pu,
        params.lambda_su,
        params.theta,
        params.bandwidth,
    )
    ei_arg_band = lam_s + lam_p * theta
    merged = (
        (width * lam_s * (math.exp(lam_p * theta) - math.exp(-lam_p * theta)) / (LN2 * ei_arg_band))
        * math.exp(lam_p * theta + lam_s)
        * expint_ei(-ei_arg_band)
    )
    second = (
        -(width / LN2)
        * math.exp(theta * (lam_s - lam_p) + lam_s)
        * expint_ei(-lam_s * (theta + 1.0))
    )
    return merged + second + split_band_branch_term(params, STATED)


def ergodic_rsma_analytic(params: AnalyticParams, variant: str = DERIVED) -> float:
    """Ergodic secondary rate under rate splitting: quadrature plus closed forms."""
    _check_variant(variant)
    if variant == STATED:
        return below_threshold_term(params, STATED) + merged_tail_stated(params)
    return (
        below_threshold_term(params)
        + split_band_term(params)
        + clear_channel_term(params)
    )


# --------------------------------------------- pure-SIC terms


def order_switch_threshold(su_snr: float, theta: float) -> float:
    """Primary SNR above which decoding the primary first beats swapping.

    Below it, the secondary's full-power rate under primary interference
    exceeds the reduced-power rate, so the secondary is decoded first.
    Inverse of :func:`preferred_order_boundary` along the switch curve.
    """
    if theta <= 0.0:
        raise ValueError(f"threshold must be > 0, got {theta}")
    if su_snr < 0.0:
        raise ValueError(f"secondary SNR must be >= 0, got {su_snr}")
    return 0.5 * (theta - 1.0 + math.sqrt((theta + 1.0) ** 2 + 4.0 * theta * su_snr))


def preferred_order_boundary(pu_snr, theta: float):
    """Secondary SNR above which the secondary-first order is preferred.

    The same switch curve as :func:`order_switch_threshold`, sliced along
    the other axis.  Accepts scalars or arrays.
    """
    if theta <= 0.0:
        raise ValueError(f"threshold must be > 0, got {theta}")
    return (1.0 + pu_snr) * (pu_snr / theta - 1.0)


def reduced_power_kernel(su_snr: float, params: AnalyticParams, variant: str = DERIVED) -> float:
    """Closed-form inner integral of the reduced-power rate at one SU SNR.

    For fixed secondary SNR ``x``, integrates ``B log2(y/theta)`` over the
    primary band where the secondary transmits at reduced power, times the
    secondary density factor.  Vanishes at ``x = 0`` (the band collapses)
    and is nonnegative everywhere.

    The stated variant omits the bandwidth factor but is otherwise the
    same algebra (kept verbatim for the validation report).
    """
    _check_variant(variant)
    if su_snr < 0.0:
        raise ValueError(f"secondary SNR must be >= 0, got {su_snr}")
    lam_p, lam_s, theta = params.lambda_pu, params.lambda_su, params.theta
    switch = order_switch_threshold(su_snr, theta)
    band_edge = theta * (su_snr + 1.0)
    if switch >= band_edge:
        # Empty band: analytically only at su_snr == 0, but rounding in
        # the square root can land the switch point one ulp past the edge.
        return 0.0
    if variant == DERIVED:
        return (params.bandwidth * lam_s * math.exp(-lam_s * su_snr) / LN2) * (
            math.exp(-lam_p * switch) * math.log(switch / theta)
            - math.exp(-lam_p * band_edge) * math.log(band_edge / theta)
            + expint_ei(-lam_p * band_edge)
            - expint_ei(-lam_p * switch)
        )
    return -(lam_s * math.exp(-lam_s * su_snr) / LN2) * (
        math.log(su_snr + 1.0) * math.exp(-lam_p * theta * (su_snr + 1.0))
        + math.log(theta / switch) * math.exp(-lam_p * switch)
        + expint_ei(-lam_p * switch)
        - expint_ei(-lam_p * theta * (su_snr + 1.0))
    )


def reduced_power_term(params: AnalyticParams, variant: str = DERIVED) -> float:
    """Rate contribution of the reduced-power event, by quadrature."""
    rule = params.rule
    return math.fsum(
        weight * reduced_power_kernel(node, params, variant)
        for node, weight in zip(rule.nodes, rule.integration_weights)
    )


def reduced_power_term_integral(params: AnalyticParams, rel_tol: float = 1e-9) -> float:
    """Same contribution by adaptive integration of the closed-form kernel."""
    integrand = lambda x: reduced_power_kernel(x, params)
    return _adaptive_panels(integrand, 0.0, 1.0 / params.lambda_su, rel_tol)


def preferred_order_kernel(su_snr, pu_snr, params: AnalyticParams):
    """Joint-density-weighted secondary rate for the swapped decoding order.

    ``B log2(1 + x/(1+y))`` times the joint exponential density, evaluated
    at secondary SNR ``x`` and primary SNR ``y``.  Accepts scalars or
    arrays (broadcasting).
    """
    lam_p, lam_s = params.lambda_pu, params.lambda_su
    return (
        params.bandwidth
        * np.log2(1.0 + np.asarray(su_snr) / (1.0 + np.asarray(pu_snr)))
        * lam_s
        * lam_p
        * np.exp(-lam_s * np.asarray(su_snr))
        * np.exp(-lam_p * np.asarray(pu_snr))
    )


def preferred_order_term(params: AnalyticParams) -> float:
    """Rate contribution of the swapped decoding order, by double quadrature.

    Both axes are shifted: the primary axis starts at the protection
    threshold, the secondary axis at the order-switch boundary for that
    primary SNR.
    """
    su_rule, pu_rule = params.rule, params.pu_rule
    pu = pu_rule.nodes + params.theta
    su_shift = preferred_order_boundary(pu, params.theta)
    su = su_rule.nodes[:, None] + su_shift[None, :]
    values = preferred_order_kernel(su, pu[None, :], params)
    return float(
        np.einsum(
            "i,j,ij->",
            su_rule.integration_weights,
            pu_rule.integration_weights,
            values,
        )
    )


def preferred_order_term_integral(params: AnalyticParams, rel_tol: float = 1e-9) -> float:
    """Same contribution by nested adaptive integration of the kernel."""
    lam_p, lam_s, theta = params.lambda_pu, params.lambda_su, params.theta
    inner_span = (_TAIL_HORIZON + abs(math.log(rel_tol))) / lam_s

    def shell(pu_snr: float) -> float:
        low = preferred_order_boundary(pu_snr, theta)
        value = scipy.integrate.quad(
            lambda x: math.log2(1.0 + x / (1.0 + pu_snr)) * lam_s * math.exp(-lam_s * x),
            low,
            low + inner_span,
            epsabs=0.0,
            epsrel=rel_tol / 5.0,
            limit=200,
            full_output=1,
        )[0]
        return params.bandwidth * value * lam_p * math.exp(-lam_p * pu_snr)

    return _adaptive_panels(shell, theta, 1.0 / lam_p, rel_tol)


def ergodic_sic_analytic(params: AnalyticParams, variant: str = DERIVED) -> float:
    """Ergodic secondary rate under pure SIC: quadrature terms plus closed form.

    The stated variant only differs through the stated kernels (ratio
    density, reduced-power kernel); the final closed-form term is stated
    correctly where this headline formula originates.
    """
    _check_variant(variant)
    final = clear_channel_term(params, DERIVED)
    return (
        below_threshold_term(params, variant)
        + reduced_power_term(params, variant)
        + preferred_order_term(params)
        + final
    )


# --------------------------------------------- protocol difference


def delta_rate(params: AnalyticParams, rel_tol: float = 1e-9, integrator=None) -> float:
    """Ergodic-rate gap (rate splitting minus pure SIC) inside the band.

    The protocols only differ where the secondary's full power would break
    the primary's target: the rate-splitting protocol earns the split-band
    rate there, pure SIC earns either the reduced-power rate or the
    swapped-order rate depending on which side of the switch curve the
    draw falls.  No closed form exists, so the three restricted
    expectations are delegated to the adaptive-integration engine
    (``integrator``, defaulting to the oracle's).

    Nonnegative for every parameter set: inside the band the split-band
    rate dominates both alternatives pointwise.
    """
    if integrator is None:
        from .oracle import restricted_expectation

        integrator = restricted_expectation
    from .oracle import RegionSpec

    lam_p, lam_s, theta, width = (
        params.lambda_pu,
        params.lambda_su,
        params.theta,
        params.bandwidth,
    )
    band = RegionSpec(
        "contested band", pu_lower=theta, su_lower=lambda x: x / theta - 1.0
    )
    reduced = RegionSpec(
        "reduced power",
        pu_lower=theta,
        su_lower=lambda x: x / theta - 1.0,
        su_upper=lambda x: preferred_order_boundary(x, theta),
    )
    preferred = RegionSpec(
        "secondary first preferred",
        pu_lower=theta,
        su_lower=lambda x: preferred_order_boundary(x, theta),
    )
    split_rate = lambda x, y: math.log2((1.0 + x + y) / (1.0 + theta))
    reduced_rate = lambda x, y: math.log2(x / theta)
    swapped_rate = lambda x, y: math.log2(1.0 + y / (1.0 + x))
    return width * (
        integrator(split_rate, band, lam_p, lam_s, rel_tol)
        - integrator(reduced_rate, reduced, lam_p, lam_s, rel_tol)
        - integrator(swapped_rate, preferred, lam_p, lam_s, rel_tol)
    )
