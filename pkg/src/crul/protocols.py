"""Per-realization access-protocol mechanics for the two-user uplink.

Licensed primary user (PU) and unlicensed secondary user (SU) transmit
simultaneously; the base station runs successive interference
cancellation.  The SU must never push the PU's post-cancellation SINR
below the protection threshold ``theta`` whenever the PU could have met
it alone.  Two cognitive protocols enforce that:

* **Rate splitting** (``cr-rsma``): the SU splits its message in two
  parts, putting a fraction ``alpha`` of its power on the part decoded
  *before* the PU and the rest on the part decoded after.  ``alpha`` is
  chosen per realization so the PU's SINR lands exactly on ``theta``
  whenever the split matters.
* **Pure SIC** (``cr-sic``): the SU transmits a single message and can
  only scale its power by ``c <= 1``; the receiver picks the decoding
  order.  Protection costs actual power here, which is the gap the
  rate-splitting scheme closes.

Two non-cognitive baselines complete the comparison: ``bench-csi``
always decodes the SU first (full interference from the PU), and
``bench-qos`` silences the SU unless the PU tolerates it at full power.

Everything in this module is a pure function of one fading draw
``(gamma_pu, gamma_su)`` plus the threshold; averaging over fading lives
in :mod:`crul.montecarlo`, :mod:`crul.analytic` and :mod:`crul.oracle`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProtocolKind",
    "DecodingOrder",
    "RateOutcome",
    "rsma_alpha",
    "rsma_rates",
    "rsma_case_index",
    "sic_power_factor",
    "sic_decoding_order",
    "sic_case_index",
    "sic_rates",
    "benchmark_su_rate",
    "rsma_alpha_array",
    "rsma_rate_arrays",
    "rsma_case_array",
    "sic_power_factor_array",
    "sic_rate_arrays",
    "sic_case_array",
    "csi_rate_array",
    "qos_rate_array",
    "RSMA_CASE_LABELS",
    "SIC_CASE_LABELS",
]


class ProtocolKind(enum.Enum):
    """Access protocols the estimators understand; values are CLI names."""

    CR_RSMA = "cr-rsma"
    CR_SIC = "cr-sic"
    CR_SIC_NORM = "cr-sic-norm"
    BENCH_CSI = "bench-csi"
    BENCH_QOS = "bench-qos"

    @classmethod
    def from_name(cls, name: str) -> "ProtocolKind":
        for kind in cls:
            if kind.value == name:
                return kind
        valid = ", ".join(kind.value for kind in cls)
        raise ValueError(f"unknown protocol {name!r} (expected one of: {valid})")


class DecodingOrder(enum.Enum):
    SU_FIRST = "su-first"
    PU_FIRST = "pu-first"


@dataclass(frozen=True)
class RateOutcome:
    """Rates realized by one protocol on one fading draw.

    ``power_factor`` is the control knob the protocol actually applied:
    the split fraction ``alpha`` for rate splitting, the transmitted
    power scale for pure SIC (1 whenever the SU is decoded first or the
    PU is safe at full interference).  ``case_index`` indexes the
    protocol's case labels below.
    """

    su_rate: float
    pu_rate: float
    power_factor: float
    case_index: int
    decoding_order: DecodingOrder | None = None


RSMA_CASE_LABELS = (
    "primary-below-threshold",  # even alone the PU cannot reach theta
    "split",                    # alpha tuned so the PU sits exactly at theta
    "interference-tolerant",    # PU meets theta under full SU interference
)

SIC_CASE_LABELS = (
    "primary-below-threshold",  # SU decoded first at full power
    "reduced-power",            # PU decoded first, SU power scaled down
    "secondary-first-preferred",  # SU first beats the reduced-power rate
    "interference-tolerant",    # PU first, SU at full power
)


def _validate_draw(gamma_pu: float, gamma_su: float, theta: float, bandwidth: float):
    if gamma_pu < 0.0 or gamma_su < 0.0:
        raise ValueError(f"SNRs must be >= 0, got ({gamma_pu}, {gamma_su})")
    if theta < 0.0:
        raise ValueError(f"threshold must be >= 0, got {theta}")
    if not bandwidth > 0.0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")


# -------------------------------------------------------- rate splitting


def rsma_alpha(gamma_pu: float, gamma_su: float, theta: float) -> float:
    """Fraction of SU power on the early-decoded message part.

    Chosen so the PU's SINR after the early part is cancelled equals
    ``theta`` exactly when a genuine split is needed; pinned at the
    endpoints when protection is impossible (PU below threshold alone)
    or free (PU meets threshold under full interference).  Continuous in
    both SNRs.
    """
    _validate_draw(gamma_pu, gamma_su, theta, 1.0)
    if gamma_pu >= theta * (1.0 + gamma_su):
        return 0.0
    if gamma_pu < theta:
        return 1.0
    # theta <= gamma_pu < theta*(1+gamma_su) implies gamma_su > 0, theta > 0
    return 1.0 - (gamma_pu / theta - 1.0) / gamma_su


def rsma_case_index(gamma_pu: float, gamma_su: float, theta: float) -> int:
    _validate_draw(gamma_pu, gamma_su, theta, 1.0)
    if gamma_pu < theta:
        return 0
    if gamma_pu < theta * (1.0 + gamma_su):
        return 1
    return 2


def rsma_rates(
    gamma_pu: float, gamma_su: float, theta: float, bandwidth: float = 1.0
) -> RateOutcome:
    """Rates under rate splitting: early part, then PU, then late part.

    The SU rate is the sum of its two parts' rates: the early part sees
    the PU plus the late part as interference, the late part is decoded
    interference-free.  The PU sees only the late part.
    """
    _validate_draw(gamma_pu, gamma_su, theta, bandwidth)
    alpha = rsma_alpha(gamma_pu, gamma_su, theta)
    late_power = (1.0 - alpha) * gamma_su
    early = math.log2(1.0 + alpha * gamma_su / (gamma_pu + late_power + 1.0))
    late = math.log2(1.0 + late_power)
    pu = math.log2(1.0 + gamma_pu / (late_power + 1.0))
    return RateOutcome(
        su_rate=bandwidth * (early + late),
        pu_rate=bandwidth * pu,
        power_factor=alpha,
        case_index=rsma_case_index(gamma_pu, gamma_su, theta),
        decoding_order=None,
    )


# --------------------------------------------------------------- pure SIC


def sic_power_factor(gamma_pu: float, gamma_su: float, theta: float) -> float:
    """Power scale that parks the PU's full-interference SINR on ``theta``.

    This is the protocol's *control law*: inside the band where partial
    power helps (PU above threshold but not under full interference) it
    solves ``gamma_pu / (1 + c*gamma_su) = theta``; outside the band the
    SU keeps full power, either because protection is impossible or
    because it is free.  The fleet-average of this quantity is the
    energy diagnostic reported alongside sweeps.
    """
    _validate_draw(gamma_pu, gamma_su, theta, 1.0)
    if theta <= 0.0:
        return 1.0
    if theta <= gamma_pu < theta * (1.0 + gamma_su):
        return (gamma_pu / theta - 1.0) / gamma_su
    return 1.0


def sic_decoding_order(gamma_pu: float, gamma_su: float, theta: float) -> DecodingOrder:
    """Receiver's order choice: decode the SU first whenever that is
    feasible for the PU and not worse for the SU.

    SU first is forced when the PU is below threshold alone (protection
    impossible, nothing to preserve) and preferred when the SU's rate
    under full PU interference beats the reduced-power alternative
    ``log2(gamma_pu/theta)`` while the PU still clears ``theta`` after
    the SU is cancelled.
    """
    _validate_draw(gamma_pu, gamma_su, theta, 1.0)
    if gamma_pu <= theta:
        return DecodingOrder.SU_FIRST
    if theta == 0.0:
        # no protection target: PU first costs the SU nothing and decodes clean
        return DecodingOrder.PU_FIRST
    if gamma_su / (1.0 + gamma_pu) > gamma_pu / theta - 1.0:
        return DecodingOrder.SU_FIRST
    return DecodingOrder.PU_FIRST


def sic_case_index(gamma_pu: float, gamma_su: float, theta: float) -> int:
    _validate_draw(gamma_pu, gamma_su, theta, 1.0)
    if gamma_pu < theta:
        return 0
    if sic_decoding_order(gamma_pu, gamma_su, theta) is DecodingOrder.SU_FIRST:
        return 2
    if gamma_pu >= theta * (1.0 + gamma_su):
        return 3
    return 1


def sic_rates(
    gamma_pu: float, gamma_su: float, theta: float, bandwidth: float = 1.0
) -> RateOutcome:
    """Rates under pure SIC with the order/power choices above."""
    _validate_draw(gamma_pu, gamma_su, theta, bandwidth)
    case = sic_case_index(gamma_pu, gamma_su, theta)
    if case in (0, 2):
        order = DecodingOrder.SU_FIRST
        su = math.log2(1.0 + gamma_su / (1.0 + gamma_pu))
        pu = math.log2(1.0 + gamma_pu)
        factor = 1.0
    elif case == 1:
        order = DecodingOrder.PU_FIRST
        factor = (gamma_pu / theta - 1.0) / gamma_su
        su = math.log2(gamma_pu / theta)  # = log2(1 + c*gamma_su)
        pu = math.log2(1.0 + theta)
    else:
        order = DecodingOrder.PU_FIRST
        factor = 1.0
        su = math.log2(1.0 + gamma_su)
        pu = math.log2(1.0 + gamma_pu / (1.0 + gamma_su))
    return RateOutcome(
        su_rate=bandwidth * su,
        pu_rate=bandwidth * pu,
        power_factor=factor,
        case_index=case,
        decoding_order=order,
    )


# ------------------------------------------------------------- baselines


def benchmark_su_rate(
    kind: ProtocolKind,
    gamma_pu: float,
    gamma_su: float,
    theta: float,
    bandwidth: float = 1.0,
) -> float:
    """SU rate of the two non-cognitive baselines.

    ``BENCH_CSI`` decodes the SU first unconditionally (PU interference
    always present); ``BENCH_QOS`` lets the SU transmit at full power
    only when the PU strictly clears the threshold despite it, else the
    SU stays silent.
    """
    _validate_draw(gamma_pu, gamma_su, theta, bandwidth)
    if kind is ProtocolKind.BENCH_CSI:
        return bandwidth * math.log2(1.0 + gamma_su / (1.0 + gamma_pu))
    if kind is ProtocolKind.BENCH_QOS:
        if gamma_pu > theta * (1.0 + gamma_su):
            return bandwidth * math.log2(1.0 + gamma_su)
        return 0.0
    raise ValueError(f"not a benchmark protocol: {kind}")


# ------------------------------------------------------ vectorized kernels
#
# Mask-based mirrors of the scalar rules above, used by the Monte Carlo
# estimator on whole chunks.  The scalar forms stay the readable source
# of truth; an elementwise-agreement property test keeps them in sync.


def _validate_arrays(gamma_pu, gamma_su, theta: float, bandwidth: float):
    gamma_pu = np.asarray(gamma_pu, dtype=float)
    gamma_su = np.asarray(gamma_su, dtype=float)
    if gamma_pu.shape != gamma_su.shape:
        raise ValueError("SNR arrays must have matching shapes")
    if np.any(gamma_pu < 0.0) or np.any(gamma_su < 0.0):
        raise ValueError("SNRs must be >= 0")
    if theta < 0.0:
        raise ValueError(f"threshold must be >= 0, got {theta}")
    if not bandwidth > 0.0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    return gamma_pu, gamma_su


def rsma_case_array(gamma_pu, gamma_su, theta: float) -> np.ndarray:
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, 1.0)
    cases = np.ones(gamma_pu.shape, dtype=np.int8)
    cases[gamma_pu < theta] = 0
    cases[gamma_pu >= theta * (1.0 + gamma_su)] = 2
    return cases


def rsma_alpha_array(gamma_pu, gamma_su, theta: float) -> np.ndarray:
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, 1.0)
    cases = rsma_case_array(gamma_pu, gamma_su, theta)
    safe_su = np.where(gamma_su > 0.0, gamma_su, 1.0)
    safe_theta = theta if theta > 0.0 else 1.0
    split = 1.0 - (gamma_pu / safe_theta - 1.0) / safe_su
    return np.where(cases == 0, 1.0, np.where(cases == 2, 0.0, split))


def rsma_rate_arrays(gamma_pu, gamma_su, theta: float, bandwidth: float = 1.0):
    """``(su_rates, pu_rates)`` under rate splitting, elementwise."""
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, bandwidth)
    alpha = rsma_alpha_array(gamma_pu, gamma_su, theta)
    late_power = (1.0 - alpha) * gamma_su
    su = np.log2(1.0 + alpha * gamma_su / (gamma_pu + late_power + 1.0)) + np.log2(
        1.0 + late_power
    )
    pu = np.log2(1.0 + gamma_pu / (late_power + 1.0))
    return bandwidth * su, bandwidth * pu


def sic_case_array(gamma_pu, gamma_su, theta: float) -> np.ndarray:
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, 1.0)
    if theta > 0.0:
        su_first = (gamma_pu <= theta) | (
            gamma_su / (1.0 + gamma_pu) > gamma_pu / theta - 1.0
        )
    else:
        su_first = gamma_pu <= 0.0
    cases = np.full(gamma_pu.shape, 1, dtype=np.int8)
    cases[(gamma_pu >= theta * (1.0 + gamma_su)) & ~su_first] = 3
    cases[su_first] = 2
    cases[gamma_pu < theta] = 0
    return cases


def sic_power_factor_array(gamma_pu, gamma_su, theta: float) -> np.ndarray:
    """Elementwise control-law power scale (the energy diagnostic)."""
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, 1.0)
    if theta <= 0.0:
        return np.ones(gamma_pu.shape)
    in_band = (gamma_pu >= theta) & (gamma_pu < theta * (1.0 + gamma_su))
    safe_su = np.where(gamma_su > 0.0, gamma_su, 1.0)
    return np.where(in_band, (gamma_pu / theta - 1.0) / safe_su, 1.0)


def sic_rate_arrays(gamma_pu, gamma_su, theta: float, bandwidth: float = 1.0):
    """``(su_rates, pu_rates)`` under pure SIC, elementwise."""
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, bandwidth)
    cases = sic_case_array(gamma_pu, gamma_su, theta)
    safe_theta = theta if theta > 0.0 else 1.0
    su_first = np.log2(1.0 + gamma_su / (1.0 + gamma_pu))
    reduced = np.log2(np.where(cases == 1, gamma_pu / safe_theta, 1.0))
    clear = np.log2(1.0 + gamma_su)
    su = np.where(
        (cases == 0) | (cases == 2), su_first, np.where(cases == 1, reduced, clear)
    )
    pu_su_first = np.log2(1.0 + gamma_pu)
    pu_clear = np.log2(1.0 + gamma_pu / (1.0 + gamma_su))
    pu = np.where(
        (cases == 0) | (cases == 2),
        pu_su_first,
        np.where(cases == 1, math.log2(1.0 + theta), pu_clear),
    )
    return bandwidth * su, bandwidth * pu


def csi_rate_array(gamma_pu, gamma_su, theta: float, bandwidth: float = 1.0):
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, bandwidth)
    return bandwidth * np.log2(1.0 + gamma_su / (1.0 + gamma_pu))


def qos_rate_array(gamma_pu, gamma_su, theta: float, bandwidth: float = 1.0):
    gamma_pu, gamma_su = _validate_arrays(gamma_pu, gamma_su, theta, bandwidth)
    allowed = gamma_pu > theta * (1.0 + gamma_su)
    return bandwidth * np.where(allowed, np.log2(1.0 + gamma_su), 0.0)
