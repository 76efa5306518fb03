"""Independent numerical-integration route for every ergodic quantity.

The estimands are expectations of piecewise-smooth functions of two
independent exponential SNRs.  This module evaluates them by brute
force: split the plane into the protocol's decision regions (so each
integrand is smooth where it is integrated), then run nested adaptive
quadrature with the exponential densities written out explicitly.

It deliberately shares no code with :mod:`crul.analytic` -- no
Gauss-Laguerre rules, no exponential-integral identities -- so that
agreement between the two routes is evidence, not tautology.

Adaptive quadrature on ``[a, inf)`` has a classic failure mode here:
with rates as small as 1e-4 the mass sits in a sliver of an enormous
interval and QUADPACK can return a near-zero answer with a clean error
estimate.  Two countermeasures, applied everywhere:

* truncate at ``lower + horizon/rate`` where ``horizon`` leaves a
  relative tail below one tenth of the requested tolerance, and
* integrate the outer variable over geometrically growing panels
  (first panel an eighth of the decay length, doubling) so the
  integrator is never asked to find localized mass on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import scipy.integrate

from .channel import ScenarioConfig
from .protocols import ProtocolKind

__all__ = [
    "OracleAccuracyError",
    "RegionSpec",
    "FULL_QUADRANT",
    "restricted_expectation",
    "region_probability",
    "rsma_case_regions",
    "sic_case_regions",
    "qos_region",
    "ergodic_rate_oracle",
    "ergodic_delta_oracle",
    "mean_power_factor_oracle",
    "expected_clean_rate",
]

LN2 = math.log(2.0)


class OracleAccuracyError(RuntimeError):
    """The integrator could not vouch for the requested tolerance."""


@dataclass(frozen=True)
class RegionSpec:
    """A region of the positive SNR quadrant, sliced along the primary axis.

    For each primary SNR ``x`` in ``[pu_lower, pu_upper)`` the region
    contains the secondary SNRs in ``[su_lower(x), su_upper(x))``.  ``None``
    bounds mean 0 / infinity.  Every protocol decision region in this
    package has this sliced form.
    """

    description: str
    pu_lower: float = 0.0
    pu_upper: float = math.inf
    su_lower: Callable[[float], float] | None = None
    su_upper: Callable[[float], float] | None = None

    def su_bounds(self, gamma_pu: float) -> tuple[float, float]:
        low = 0.0 if self.su_lower is None else max(0.0, self.su_lower(gamma_pu))
        high = math.inf if self.su_upper is None else self.su_upper(gamma_pu)
        return low, high

    def contains(self, gamma_pu: float, gamma_su: float) -> bool:
        """Membership test (used by sampling cross-checks, not integration)."""
        if not self.pu_lower <= gamma_pu < self.pu_upper:
            return False
        low, high = self.su_bounds(gamma_pu)
        return low <= gamma_su < high


FULL_QUADRANT = RegionSpec("both SNRs unconstrained")

# Tail horizon in units of the decay length 1/rate: exp(-45) ~ 3e-20 of
# relative mass is ignored, far below any tolerance this module accepts.
_TAIL_HORIZON = 45.0
_FIRST_PANEL_FRACTION = 0.125


def _panels(lower: float, upper: float, scale: float):
    """Geometrically doubling subintervals of [lower, upper]."""
    edges = [lower]
    width = scale * _FIRST_PANEL_FRACTION
    position = lower
    while position + width < upper:
        position += width
        edges.append(position)
        width *= 2.0
    edges.append(upper)
    return zip(edges[:-1], edges[1:])


def _horizon(rel_tol: float) -> float:
    return _TAIL_HORIZON + abs(math.log(rel_tol))


def restricted_expectation(
    integrand: Callable[[float, float], float],
    region: RegionSpec,
    lambda_pu: float,
    lambda_su: float,
    rel_tol: float = 1e-9,
) -> float:
    """``E[integrand(gamma_pu, gamma_su) ; region]`` for exponential SNRs.

    ``integrand`` must be smooth inside the region (split piecewise
    integrands into one region per piece).  Raises
    :class:`OracleAccuracyError` when the accumulated quadrature error
    cannot be reconciled with ``rel_tol``.
    """
    if not 0.0 < rel_tol <= 1e-2:
        raise ValueError(f"rel_tol must be in (0, 1e-2], got {rel_tol}")
    if lambda_pu <= 0.0 or lambda_su <= 0.0:
        raise ValueError("rate parameters must be > 0")

    horizon = _horizon(rel_tol)
    inner_span = horizon / lambda_su

    def inner(x: float) -> float:
        low, high = region.su_bounds(x)
        high = min(high, low + inner_span)
        if not high > low:
            return 0.0
        # full_output=1 keeps QUADPACK's advisory warnings off the console;
        # its error estimate is enforced right here instead.
        result = scipy.integrate.quad(
            lambda y: integrand(x, y) * lambda_su * math.exp(-lambda_su * y),
            low,
            high,
            epsabs=0.0,
            epsrel=rel_tol / 5.0,
            limit=200,
            full_output=1,
        )
        value, abserr = result[0], result[1]
        if abserr > 20.0 * rel_tol * abs(value) + 1e-12:
            raise OracleAccuracyError(
                f"inner quadrature error {abserr:.3e} at gamma_pu={x:.5g} "
                f"for value {value:.6e} ({region.description})"
            )
        return value

    outer_low = region.pu_lower
    outer_high = min(region.pu_upper, outer_low + horizon / lambda_pu)
    if not outer_high > outer_low:
        return 0.0

    total = 0.0
    error = 0.0
    for a, b in _panels(outer_low, outer_high, 1.0 / lambda_pu):
        result = scipy.integrate.quad(
            lambda x: inner(x) * lambda_pu * math.exp(-lambda_pu * x),
            a,
            b,
            epsabs=0.0,
            epsrel=rel_tol / 2.0,
            limit=100,
            full_output=1,
        )
        value, abserr = result[0], result[1]
        total += value
        error += abserr

    if error > 10.0 * rel_tol * abs(total) + 1e-12:
        raise OracleAccuracyError(
            f"quadrature error {error:.3e} exceeds budget for value {total:.6e} "
            f"({region.description})"
        )
    return total


def region_probability(
    region: RegionSpec, lambda_pu: float, lambda_su: float, rel_tol: float = 1e-9
) -> float:
    return restricted_expectation(lambda x, y: 1.0, region, lambda_pu, lambda_su, rel_tol)


# ------------------------------------------------------ decision regions


def rsma_case_regions(theta: float) -> tuple[RegionSpec, RegionSpec, RegionSpec]:
    """The three rate-splitting regions, in case-index order."""
    if theta < 0.0:
        raise ValueError(f"threshold must be >= 0, got {theta}")
    if theta == 0.0:
        empty = RegionSpec("empty", pu_lower=0.0, pu_upper=0.0)
        return empty, empty, RegionSpec("no protection constraint")
    return (
        RegionSpec("primary below threshold", pu_upper=theta),
        RegionSpec(
            "split band",
            pu_lower=theta,
            su_lower=lambda x: x / theta - 1.0,
        ),
        RegionSpec(
            "interference tolerant",
            pu_lower=theta,
            su_upper=lambda x: x / theta - 1.0,
        ),
    )


def sic_case_regions(theta: float) -> tuple[RegionSpec, RegionSpec, RegionSpec, RegionSpec]:
    """The four pure-SIC regions, in case-index order.

    The secondary-first-preferred boundary is where the SU's full-power
    rate under PU interference matches the reduced-power rate:
    ``gamma_su = (1 + gamma_pu) (gamma_pu/theta - 1)``.
    """
    if theta < 0.0:
        raise ValueError(f"threshold must be >= 0, got {theta}")
    if theta == 0.0:
        empty = RegionSpec("empty", pu_lower=0.0, pu_upper=0.0)
        return empty, empty, empty, RegionSpec("no protection constraint")

    def switch_level(x: float) -> float:
        return (1.0 + x) * (x / theta - 1.0)

    return (
        RegionSpec("primary below threshold", pu_upper=theta),
        RegionSpec(
            "reduced power",
            pu_lower=theta,
            su_lower=lambda x: x / theta - 1.0,
            su_upper=switch_level,
        ),
        RegionSpec("secondary first preferred", pu_lower=theta, su_lower=switch_level),
        RegionSpec(
            "interference tolerant",
            pu_lower=theta,
            su_upper=lambda x: x / theta - 1.0,
        ),
    )


def qos_region(theta: float) -> RegionSpec:
    """Where the hard-QoS baseline lets the secondary transmit."""
    if theta < 0.0:
        raise ValueError(f"threshold must be >= 0, got {theta}")
    if theta == 0.0:
        return RegionSpec("no protection constraint")
    return RegionSpec(
        "primary tolerates full interference",
        pu_lower=theta,
        su_upper=lambda x: x / theta - 1.0,
    )


# ------------------------------------------------------- ergodic rates


def _interference_limited(x: float, y: float) -> float:
    return math.log2(1.0 + y / (1.0 + x))


def _clean(x: float, y: float) -> float:
    return math.log2(1.0 + y)


def ergodic_rate_oracle(
    protocol: ProtocolKind, scenario: ScenarioConfig, rel_tol: float = 1e-9
) -> float:
    """Ergodic SU rate of ``protocol``, by nested adaptive integration."""
    lam_pu, lam_su = scenario.lambda_pu, scenario.lambda_su
    theta, bandwidth = scenario.theta, scenario.bandwidth

    if protocol is ProtocolKind.CR_RSMA:
        below, band, tolerant = rsma_case_regions(theta)
        split_rate = lambda x, y: math.log2((1.0 + x + y) / (1.0 + theta))
        parts = (
            restricted_expectation(_interference_limited, below, lam_pu, lam_su, rel_tol),
            restricted_expectation(split_rate, band, lam_pu, lam_su, rel_tol),
            restricted_expectation(_clean, tolerant, lam_pu, lam_su, rel_tol),
        )
        return bandwidth * math.fsum(parts)

    if protocol is ProtocolKind.CR_SIC:
        below, reduced, preferred, tolerant = sic_case_regions(theta)
        reduced_rate = lambda x, y: math.log2(x / theta)
        parts = (
            restricted_expectation(_interference_limited, below, lam_pu, lam_su, rel_tol),
            restricted_expectation(reduced_rate, reduced, lam_pu, lam_su, rel_tol)
            if theta > 0.0
            else 0.0,
            restricted_expectation(_interference_limited, preferred, lam_pu, lam_su, rel_tol),
            restricted_expectation(_clean, tolerant, lam_pu, lam_su, rel_tol),
        )
        return bandwidth * math.fsum(parts)

    if protocol is ProtocolKind.CR_SIC_NORM:
        factor = mean_power_factor_oracle(scenario, rel_tol)
        boosted = scenario.with_secondary_snr_scaled(1.0 / factor)
        return ergodic_rate_oracle(ProtocolKind.CR_SIC, boosted, rel_tol)

    if protocol is ProtocolKind.BENCH_CSI:
        return bandwidth * restricted_expectation(
            _interference_limited, FULL_QUADRANT, lam_pu, lam_su, rel_tol
        )

    if protocol is ProtocolKind.BENCH_QOS:
        return bandwidth * restricted_expectation(
            _clean, qos_region(theta), lam_pu, lam_su, rel_tol
        )

    raise ValueError(f"unknown protocol: {protocol}")


def ergodic_delta_oracle(scenario: ScenarioConfig, rel_tol: float = 1e-9) -> float:
    """Ergodic-rate gap (rate splitting minus pure SIC) as a region integral.

    Outside the split band the two protocols act identically, so the gap
    is integrated only there, split along the order-preference boundary
    where the SIC rate changes formula.  Cross-checking this against the
    difference of the two full oracles is a consistency test of all the
    region plumbing.
    """
    lam_pu, lam_su = scenario.lambda_pu, scenario.lambda_su
    theta, bandwidth = scenario.theta, scenario.bandwidth
    if theta == 0.0:
        return 0.0
    _, reduced, preferred, _ = sic_case_regions(theta)
    split_rate = lambda x, y: math.log2((1.0 + x + y) / (1.0 + theta))
    gap_vs_reduced = lambda x, y: split_rate(x, y) - math.log2(x / theta)
    gap_vs_preferred = lambda x, y: split_rate(x, y) - _interference_limited(x, y)
    return bandwidth * (
        restricted_expectation(gap_vs_reduced, reduced, lam_pu, lam_su, rel_tol)
        + restricted_expectation(gap_vs_preferred, preferred, lam_pu, lam_su, rel_tol)
    )


def mean_power_factor_oracle(scenario: ScenarioConfig, rel_tol: float = 1e-9) -> float:
    """Average of the pure-SIC control-law power scale.

    The scale is 1 below the threshold and beyond the tolerance edge,
    and ``(gamma_pu/theta - 1)/gamma_su`` in between; each piece is
    integrated over its own region so the integrands stay smooth.
    """
    lam_pu, lam_su = scenario.lambda_pu, scenario.lambda_su
    theta = scenario.theta
    if theta == 0.0:
        return 1.0
    below = RegionSpec("primary below threshold", pu_upper=theta)
    tolerant = RegionSpec(
        "full power despite protection",
        pu_lower=theta,
        su_upper=lambda x: x / theta - 1.0,
    )
    band = RegionSpec(
        "scaled power band",
        pu_lower=theta,
        su_lower=lambda x: x / theta - 1.0,
    )
    scaled = lambda x, y: (x / theta - 1.0) / y
    return math.fsum(
        (
            region_probability(below, lam_pu, lam_su, rel_tol),
            region_probability(tolerant, lam_pu, lam_su, rel_tol),
            restricted_expectation(scaled, band, lam_pu, lam_su, rel_tol),
        )
    )


def expected_clean_rate(
    rate_parameter: float, bandwidth: float = 1.0, rel_tol: float = 1e-9
) -> float:
    """``E[bandwidth * log2(1 + gamma)]`` for one exponential SNR.

    The interference-free ceiling every protocol approaches when the
    primary link is overwhelmingly strong.
    """
    if rate_parameter <= 0.0:
        raise ValueError("rate parameter must be > 0")
    horizon = _horizon(rel_tol)
    total = 0.0
    error = 0.0
    for a, b in _panels(0.0, horizon / rate_parameter, 1.0 / rate_parameter):
        result = scipy.integrate.quad(
            lambda y: math.log2(1.0 + y) * rate_parameter * math.exp(-rate_parameter * y),
            a,
            b,
            epsabs=0.0,
            epsrel=rel_tol / 2.0,
            limit=100,
            full_output=1,
        )
        value, abserr = result[0], result[1]
        total += value
        error += abserr
    if error > 10.0 * rel_tol * abs(total) + 1e-12:
        raise OracleAccuracyError("one-dimensional rate integral did not converge")
    return bandwidth * total
