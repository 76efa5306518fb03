"""Term-wise arbitration between the closed forms and the oracle.

Every analytic total is a sum of per-case terms, and several of those
terms exist in more than one written form (a transcription of the source
expression, the re-derived expression, and an adaptive integration of the
pre-quadrature kernel).  This module evaluates every available route for
every term, compares each against that term's own restricted-expectation
oracle, and assembles the arbitrated total from the first route in
preference order that lands within tolerance — transcription first (keep
the written form when it is right), then the derived form, then the
adaptive kernel route, with the oracle value itself as the fallback.

The full comparison table is exported as a JSON-ready deviation report so
that a reader can see exactly which written forms disagree with the
integrals they claim to equal, by how much, and what was used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import analytic
from .analytic import DERIVED, STATED, AnalyticParams
from .channel import ScenarioConfig
from .montecarlo import EstimateResult, McConfig, estimate
from .oracle import (
    ergodic_rate_oracle,
    mean_power_factor_oracle,
    restricted_expectation,
    rsma_case_regions,
    sic_case_regions,
)
from .protocols import ProtocolKind

#: Routes tried in order; the first within ARBITRATION_REL_TOL of the
#: term oracle wins.  "stated" is the transcription, "derived" the
#: re-derivation (both fixed-rule quadrature where the term needs one),
#: "integral" the adaptive integration of the derived kernel.
ROUTE_PREFERENCE = ("stated", "derived", "integral")
#: Structurally correct routes agree with their term oracle to ~1e-8;
#: the tolerance sits far above that but far below the smallest
#: coincidental match observed from a slipped transcription (a stray
#: exp factor drifting to 1 can bring one within ~9e-4 of the oracle at
#: the top of the SNR grid, which must not win over an exact route).
ARBITRATION_REL_TOL = 1e-4
#: Routes further off than this from the term oracle are flagged in the
#: deviation report.
REPORT_REL_TOL = 1e-2

_ANALYTIC_PROTOCOLS = (
    ProtocolKind.CR_RSMA,
    ProtocolKind.CR_SIC,
    ProtocolKind.CR_SIC_NORM,
)


def relative_deviation(value: float, reference: float) -> float:
    """|value - reference| over |reference|, saturated for a zero reference."""
    gap = abs(value - reference)
    if gap <= 1e-12:
        return 0.0
    return gap / max(abs(reference), 1e-12)


@dataclass(frozen=True)
class TermReport:
    """All evaluated routes for one term, against its oracle value."""

    protocol: str
    term: str
    oracle_value: float
    routes: dict[str, float]
    chosen_route: str
    chosen_value: float
    #: Report-only rows (alternative groupings) are excluded from totals.
    in_total: bool = True

    @property
    def deviations(self) -> dict[str, float]:
        return {
            name: relative_deviation(value, self.oracle_value)
            for name, value in self.routes.items()
        }

    @property
    def flagged_routes(self) -> tuple[str, ...]:
        return tuple(
            name for name, dev in self.deviations.items() if dev > REPORT_REL_TOL
        )


def _arbitrate(routes: dict[str, float], oracle_value: float) -> tuple[str, float]:
    for name in ROUTE_PREFERENCE:
        if name in routes:
            if relative_deviation(routes[name], oracle_value) <= ARBITRATION_REL_TOL:
                return name, routes[name]
    return "oracle", oracle_value


def _report(protocol, term, routes, oracle_value, in_total=True) -> TermReport:
    chosen_route, chosen_value = _arbitrate(routes, oracle_value)
    return TermReport(
        protocol=protocol.value,
        term=term,
        oracle_value=oracle_value,
        routes=dict(routes),
        chosen_route=chosen_route,
        chosen_value=chosen_value,
        in_total=in_total,
    )


def _rsma_reports(scenario: ScenarioConfig, params: AnalyticParams, rel_tol: float):
    lam_p, lam_s = scenario.lambda_pu, scenario.lambda_su
    theta, width = scenario.theta, scenario.bandwidth
    below, band, clear = rsma_case_regions(theta)

    oracle_below = restricted_expectation(
        lambda x, y: width * math.log2(1.0 + y / (1.0 + x)), below, lam_p, lam_s, rel_tol
    )
    oracle_band = restricted_expectation(
        lambda x, y: width * math.log2((1.0 + x + y) / (1.0 + theta)),
        band,
        lam_p,
        lam_s,
        rel_tol,
    )
    oracle_clear = restricted_expectation(
        lambda x, y: width * math.log2(1.0 + y), clear, lam_p, lam_s, rel_tol
    )

    reports = [
        _report(
            ProtocolKind.CR_RSMA,
            "interference_limited",
            {
                "stated": analytic.below_threshold_term(params, STATED),
                "derived": analytic.below_threshold_term(params, DERIVED),
                "integral": analytic.below_threshold_term_integral(params),
            },
            oracle_below,
        ),
        _report(
            ProtocolKind.CR_RSMA,
            "split_band",
            {
                "stated": analytic.split_band_term(params, STATED),
                "derived": analytic.split_band_term(params, DERIVED),
            },
            oracle_band,
        ),
        _report(
            ProtocolKind.CR_RSMA,
            "clear_channel",
            {
                "stated": analytic.clear_channel_term(params, STATED),
                "derived": analytic.clear_channel_term(params, DERIVED),
            },
            oracle_clear,
        ),
        # The source's headline groups the last two terms behind one
        # combined exponential factor; kept as a report-only row since
        # the separated terms above already cover the total.
        _report(
            ProtocolKind.CR_RSMA,
            "combined_tail",
            {
                "stated": analytic.merged_tail_stated(params),
                "derived": analytic.split_band_term(params, DERIVED)
                + analytic.clear_channel_term(params, DERIVED),
            },
            oracle_band + oracle_clear,
            in_total=False,
        ),
    ]
    return reports


def _sic_reports(scenario: ScenarioConfig, params: AnalyticParams, rel_tol: float):
    lam_p, lam_s = scenario.lambda_pu, scenario.lambda_su
    theta, width = scenario.theta, scenario.bandwidth
    miss, reduced, preferred, clear = sic_case_regions(theta)

    oracle_miss = restricted_expectation(
        lambda x, y: width * math.log2(1.0 + y / (1.0 + x)), miss, lam_p, lam_s, rel_tol
    )
    oracle_reduced = restricted_expectation(
        lambda x, y: width * math.log2(x / theta), reduced, lam_p, lam_s, rel_tol
    )
    oracle_preferred = restricted_expectation(
        lambda x, y: width * math.log2(1.0 + y / (1.0 + x)),
        preferred,
        lam_p,
        lam_s,
        rel_tol,
    )
    oracle_clear = restricted_expectation(
        lambda x, y: width * math.log2(1.0 + y), clear, lam_p, lam_s, rel_tol
    )

    return [
        _report(
            ProtocolKind.CR_SIC,
            "interference_limited",
            {
                "stated": analytic.below_threshold_term(params, STATED),
                "derived": analytic.below_threshold_term(params, DERIVED),
                "integral": analytic.below_threshold_term_integral(params),
            },
            oracle_miss,
        ),
        _report(
            ProtocolKind.CR_SIC,
            "reduced_power",
            {
                "derived": analytic.reduced_power_term(params, DERIVED),
                "integral": analytic.reduced_power_term_integral(params),
            },
            oracle_reduced,
        ),
        _report(
            ProtocolKind.CR_SIC,
            "preferred_order",
            {
                "derived": analytic.preferred_order_term(params),
                "integral": analytic.preferred_order_term_integral(params),
            },
            oracle_preferred,
        ),
        # The headline prints this term in the same form the derivation
        # produces, so there is only one closed-form route.
        _report(
            ProtocolKind.CR_SIC,
            "clear_channel",
            {"derived": analytic.clear_channel_term(params, DERIVED)},
            oracle_clear,
        ),
    ]


def term_reports(
    protocol: ProtocolKind,
    scenario: ScenarioConfig,
    nodes: int = 100,
    rel_tol: float = 1e-9,
) -> list[TermReport]:
    """Route-by-route comparison of every term against its own oracle.

    The normalized protocol reports the plain-SIC terms evaluated at the
    power-normalized configuration (oracle mean scale).
    """
    if protocol is ProtocolKind.CR_SIC_NORM:
        scale = mean_power_factor_oracle(scenario, rel_tol)
        scenario = scenario.with_secondary_snr_scaled(1.0 / scale)
        protocol = ProtocolKind.CR_SIC
    params = AnalyticParams.from_scenario(scenario, nodes=nodes)
    if protocol is ProtocolKind.CR_RSMA:
        return _rsma_reports(scenario, params, rel_tol)
    if protocol is ProtocolKind.CR_SIC:
        return _sic_reports(scenario, params, rel_tol)
    raise ValueError(f"no closed-form decomposition for {protocol}")


def arbitrated_rate(
    protocol: ProtocolKind,
    scenario: ScenarioConfig,
    nodes: int = 100,
    rel_tol: float = 1e-9,
) -> float:
    """Oracle-arbitrated analytic ergodic rate (sum of chosen term routes)."""
    reports = term_reports(protocol, scenario, nodes=nodes, rel_tol=rel_tol)
    return math.fsum(r.chosen_value for r in reports if r.in_total)


def evaluate(
    protocol: ProtocolKind,
    scenario: ScenarioConfig,
    method: str,
    mc: McConfig | None = None,
    *,
    nodes: int = 100,
    workers: int | None = None,
) -> EstimateResult:
    """Uniform front door over the three estimation routes.

    ``mc`` estimates carry their sampling stderr; ``analytic`` (the
    arbitrated closed form, defined only for the protocols that have one)
    and ``oracle`` rows are deterministic and record zero samples.
    """
    if method == "mc":
        return estimate(protocol, scenario, mc or McConfig(), workers=workers)
    if method == "analytic":
        if protocol not in _ANALYTIC_PROTOCOLS:
            raise ValueError(f"no closed form for {protocol.value}")
        value = arbitrated_rate(protocol, scenario, nodes=nodes)
        return EstimateResult(
            value=value, stderr=0.0, n_samples=0, method="analytic", protocol=protocol
        )
    if method == "oracle":
        value = ergodic_rate_oracle(protocol, scenario)
        return EstimateResult(
            value=value, stderr=0.0, n_samples=0, method="oracle", protocol=protocol
        )
    raise ValueError(f"unknown method {method!r}")


def deviation_report(
    scenarios: dict[str, ScenarioConfig],
    nodes: int = 100,
    rel_tol: float = 1e-9,
) -> dict:
    """JSON-ready table of every route of every term at every config.

    ``flagged`` summarizes the routes that miss their term oracle by more
    than the report tolerance — the transcription slips show up here.
    """
    entries = []
    flagged = []
    for label, scenario in scenarios.items():
        for protocol in (ProtocolKind.CR_RSMA, ProtocolKind.CR_SIC):
            for report in term_reports(protocol, scenario, nodes=nodes, rel_tol=rel_tol):
                entry = {
                    "config": label,
                    "protocol": report.protocol,
                    "term": report.term,
                    "oracle": report.oracle_value,
                    "routes": report.routes,
                    "deviations": report.deviations,
                    "chosen_route": report.chosen_route,
                    "chosen_value": report.chosen_value,
                    "counts_toward_total": report.in_total,
                    "flagged_routes": list(report.flagged_routes),
                }
                entries.append(entry)
                for route in report.flagged_routes:
                    flagged.append(
                        {
                            "config": label,
                            "protocol": report.protocol,
                            "term": report.term,
                            "route": route,
                            "deviation": report.deviations[route],
                        }
                    )
    return {
        "arbitration_rel_tol": ARBITRATION_REL_TOL,
        "report_rel_tol": REPORT_REL_TOL,
        "entries": entries,
        "flagged": flagged,
    }
