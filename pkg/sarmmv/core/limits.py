"""
Regime Limits
=============

Definitions of the regime diagnostics checked before an inversion and the
rules that turn a diagnostic value into a status.

``large`` diagnostics must be at least one; ``small`` diagnostics must be
much less than one (pass up to the small threshold, warn up to the warning
threshold). ``info`` entries are reported without a verdict.
"""

from typing import Optional


# Diagnostic table: kind, whether it needs a multi-frequency sub-band, and a
# short description for the text report.
REGIME_LIMITS = {
    "fresnel_a": {
        "kind": "large",
        "needs_band": False,
        "description": "sub-aperture Fresnel number a^2/(lambda L)",
    },
    "fresnel_Y": {
        "kind": "large",
        "needs_band": False,
        "description": "window Fresnel number Yc^2/(lambda L)",
    },
    "crossrange_window": {
        "kind": "large",
        "needs_band": False,
        "description": "window over cross-range resolution a Yc/(lambda L)",
    },
    "range_window": {
        "kind": "large",
        "needs_band": True,
        "description": "window over sub-band range resolution Y/(c/b)",
    },
    "m8": {
        "kind": "small",
        "needs_band": True,
        "description": "(b/omega_o) Yc/(lambda L/a), b in Hz against rad/s",
    },
    "m8_hz": {
        "kind": "info",
        "needs_band": True,
        "description": "m8 with b and f_o both in Hz",
    },
    "m10_range": {
        "kind": "small",
        "needs_band": False,
        "description": "a^2 Y/(lambda L^2)",
    },
    "m10_cross": {
        "kind": "small",
        "needs_band": False,
        "description": "a^2 Yc/(lambda L^2)",
    },
    "rot_range": {
        "kind": "small",
        "needs_band": True,
        "description": "max (b/c)|(m_a - m_1).dy| over window",
    },
    "rot_cross": {
        "kind": "small",
        "needs_band": False,
        "description": "max |(a k_b/L_a t_a.P_a - a k_1/L_1 t_1.P_1) dy|",
    },
    "doppler_band": {
        "kind": "small",
        "needs_band": True,
        "description": "(V/c)(Yc/L)/(b/omega_o)",
    },
    "doppler_curv": {
        "kind": "small",
        "needs_band": True,
        "description": "(V/c)(a/R)(Y/(c/b))",
    },
    "doppler_rot_range": {
        "kind": "small",
        "needs_band": True,
        "description": "(V/c)(b/c) max |(t_a - t_1).dy|",
    },
    "doppler_rot_cross": {
        "kind": "small",
        "needs_band": False,
        "description": "(V/c)(a/(lambda R)) max |(n_a - n_1).dy|",
    },
    "startstop_travel": {
        "kind": "marginal",
        "needs_band": False,
        "description": "omega_o (L/c)(V/c), marginal, constant-phase",
    },
    "startstop_pulse": {
        "kind": "small",
        "needs_band": False,
        "description": "(omega_o/B)(V/c)",
    },
}

STATUS_PASS = "pass"
STATUS_WARN = "warn"
STATUS_FAIL = "fail"
STATUS_NA = "not_applicable"
STATUS_INFO = "info"


def requires_band(name: str) -> bool:
    """Check whether a diagnostic is meaningless for a single frequency."""
    return REGIME_LIMITS.get(name, {}).get("needs_band", False)


def classify(
    name: str,
    value: Optional[float],
    small_threshold: float = 0.1,
    warn_threshold: float = 1.0,
) -> str:
    """
    Status of a diagnostic value.

    ``None`` marks a diagnostic that does not apply to the segmentation.
    """
    if value is None:
        return STATUS_NA

    kind = REGIME_LIMITS[name]["kind"]
    if kind == "info":
        return STATUS_INFO
    if kind == "large":
        return STATUS_PASS if value >= 1.0 else STATUS_FAIL
    if kind == "marginal":
        # The residual is a constant phase; it is flagged but never fatal.
        return STATUS_PASS if value <= small_threshold else STATUS_WARN

    if value <= small_threshold:
        return STATUS_PASS
    if value <= warn_threshold:
        return STATUS_WARN
    return STATUS_FAIL
