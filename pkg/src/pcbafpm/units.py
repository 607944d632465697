"""Unit conversions and deterministic number formatting.

Internal state is SI throughout (m, kg, s, A, V, ohm, Nm, W, T, rad/s).
Spec documents and reports use the workshop units the suffixes name
(mm, mNm, rpm, mH, ...). Keep every conversion here so the factors are
written exactly once.
"""

import math

MM = 1e-3          # m per mm
MNM = 1e-3         # Nm per mNm
MH = 1e-3          # H per mH
UM = 1e-6          # m per um

RPM_TO_RAD_S = 2.0 * math.pi / 60.0


def rpm_to_rad_s(rpm: float) -> float:
    return rpm * RPM_TO_RAD_S


def rad_s_to_rpm(w: float) -> float:
    return w / RPM_TO_RAD_S


def c_to_k(temp_c: float) -> float:
    return temp_c + 273.15


def fmt_float(x: float) -> str:
    """Format a float with 9 significant digits, stable across runs.

    Shared by every CSV/JSON/spec emitter so identical inputs yield
    byte-identical artifacts.
    """
    if x != x:  # NaN guard: never emit NaN silently
        raise ValueError("refusing to format NaN")
    s = f"{x:.9g}"
    # normalize "-0" to "0" so arithmetic noise cannot flip a byte
    if s in ("-0", "-0.0"):
        s = "0"
    return s


def fmt_value(x) -> str:
    """Format ints as ints, floats via fmt_float, strings verbatim."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return fmt_float(x)
    return str(x)
