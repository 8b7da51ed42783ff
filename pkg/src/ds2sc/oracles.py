"""Reference physics for the three case-study chiplets.

Independent numeric models used to seed expected values in test scenarios
and to double-check simulation output: a direct O(N^2) discrete Fourier
transform, a memoryless limiting-amplifier transfer function, and the
power-domain Rapp nonlinearity with a 1-D smoothness-factor fit.

Everything here is pure double-precision math with no dependency on the
code-generation side of the pipeline, so it can stand as an oracle for it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

__all__ = [
    "ComplexSample",
    "LaParams",
    "RappParams",
    "CurvePoint",
    "dft",
    "roundtrip_error",
    "la_transfer",
    "rapp_pout_dbm",
    "fit_smoothness",
    "curve_max_error_db",
    "compression_point_1db",
]

_LOG10_2 = math.log10(2.0)


class OracleError(ValueError):
    """Raised on bad oracle inputs (empty vectors, ill-conditioned fits)."""


@dataclass(frozen=True)
class ComplexSample:
    """One complex sample with finite real/imaginary parts."""

    re: float
    im: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise OracleError(f"non-finite complex sample ({self.re}, {self.im})")

    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexSample":
        return cls(z.real, z.imag)


@dataclass(frozen=True)
class LaParams:
    """Limiting-amplifier parameters: linear gain plus output clamp window.

    v_out_min < quiescent < v_out_max and gain > 0 are required; the
    quiescent level is what a disabled stage holds its output at.
    """

    gain: float
    v_out_max: float
    v_out_min: float
    quiescent: float
    enabled: bool = True

    def __post_init__(self):
        if not self.gain > 0:
            raise OracleError(f"gain must be > 0, got {self.gain}")
        if not (self.v_out_min < self.quiescent < self.v_out_max):
            raise OracleError(
                f"require v_out_min < quiescent < v_out_max, got "
                f"{self.v_out_min} / {self.quiescent} / {self.v_out_max}"
            )


@dataclass(frozen=True)
class RappParams:
    """Power-amplifier nonlinearity: small-signal gain, saturation, knee sharpness."""

    g_db: float
    psat_dbm: float
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise OracleError(f"smoothness factor must be > 0, got {self.s}")
        if not math.isfinite(self.psat_dbm):
            raise OracleError("psat_dbm must be finite")


@dataclass(frozen=True)
class CurvePoint:
    """One (input power, output power) point of an AM-AM curve, both in dBm."""

    pin_dbm: float
    pout_dbm: float

    def __post_init__(self):
        if not (math.isfinite(self.pin_dbm) and math.isfinite(self.pout_dbm)):
            raise OracleError("curve points must be finite")


def _as_complex_list(x: Sequence) -> list[complex]:
    out = []
    for v in x:
        if isinstance(v, ComplexSample):
            out.append(v.as_complex())
        else:
            out.append(complex(v))
    return out


def dft(x: Sequence, inverse: bool = False) -> list[complex]:
    """Direct discrete Fourier transform by summation, O(N^2).

    Forward: X[k] = sum_n x[n] * exp(-2*pi*i*n*k/N).
    Inverse uses the +i exponent and scales by 1/N, so dft(dft(x), True)
    reproduces x up to double-precision rounding.

    Accepts complex numbers, reals, or ComplexSample values.
    """
    xs = _as_complex_list(x)
    n = len(xs)
    if n == 0:
        raise OracleError("dft of empty input")
    sign = 1.0 if inverse else -1.0
    out: list[complex] = []
    for k in range(n):
        acc = 0j
        for i, v in enumerate(xs):
            acc += v * cmath.exp(sign * 2j * math.pi * i * k / n)
        out.append(acc / n if inverse else acc)
    return out


def roundtrip_error(x: Sequence) -> float:
    """Max absolute per-component error of inverse(forward(x)) against x."""
    xs = _as_complex_list(x)
    if not xs:
        raise OracleError("roundtrip of empty input")
    back = dft(dft(xs), inverse=True)
    err = 0.0
    for a, b in zip(xs, back):
        err = max(err, abs(a.real - b.real), abs(a.imag - b.imag))
    return err


def la_transfer(v_in: float, p: LaParams) -> float:
    """Memoryless limiting-amplifier output voltage.

    Disabled stage sits at the quiescent level; enabled stage amplifies
    linearly and clamps to [v_out_min, v_out_max].
    """
    if not p.enabled:
        return p.quiescent
    v = p.gain * v_in
    if v > p.v_out_max:
        return p.v_out_max
    if v < p.v_out_min:
        return p.v_out_min
    return v


def rapp_pout_dbm(pin_dbm: float, p: RappParams) -> float:
    """Output power of the power-linear Rapp model, in dBm.

    Linear-domain form: p_out = G*p_in / (1 + (G*p_in/P_sat)^s)^(1/s),
    evaluated here in the log domain for numerical stability at large
    drive levels:

        pout_dbm = pin_dbm + g_db - (10/s) * log10(1 + 10^(s*excess/10))

    with excess = pin_dbm + g_db - psat_dbm. Strictly increasing in
    pin_dbm and strictly below psat_dbm for finite input.
    """
    excess = pin_dbm + p.g_db - p.psat_dbm
    u = p.s * excess / 10.0
    if u > 0:
        # rewrite pin+g-(10/s)*(u+log10(1+10^-u)) as psat minus a positive
        # term: algebraically identical, and it keeps the float result from
        # rounding one ulp above the saturation bound at deep drive
        return p.psat_dbm - (10.0 / p.s) * math.log10(1.0 + 10.0 ** (-u))
    return pin_dbm + p.g_db - (10.0 / p.s) * math.log10(1.0 + 10.0 ** u)


def _sum_sq_error(points: Sequence[CurvePoint], g_db: float, psat_dbm: float, s: float) -> float:
    p = RappParams(g_db=g_db, psat_dbm=psat_dbm, s=s)
    return sum((rapp_pout_dbm(pt.pin_dbm, p) - pt.pout_dbm) ** 2 for pt in points)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def _golden_section_min(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    """Golden-section search for the minimiser of a unimodal f on [a, b]."""
    h = b - a
    if h <= tol:
        return (a + b) / 2.0
    steps = int(math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
    c = a + _INV_PHI_SQ * h
    d = a + _INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(steps):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= _INV_PHI
            c = a + _INV_PHI_SQ * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= _INV_PHI
            d = a + _INV_PHI * h
            yd = f(d)
    return (a + b) / 2.0


S_MIN = 0.1
S_MAX = 20.0
_GRID_STEP = 0.05


def fit_smoothness(points: Sequence[CurvePoint], g_db: float, psat_dbm: float) -> float:
    """Least-squares fit of the Rapp smoothness factor to sampled curve points.

    Coarse grid over [0.1, 20] at step 0.05, then golden-section refinement
    of the best bracket down to |delta s| < 1e-4. At least one point must
    show >= 0.5 dB of gain compression, otherwise the objective is flat in
    s and the fit is rejected as ill-conditioned.
    """
    if len(points) < 2:
        raise OracleError("need at least 2 curve points to fit")
    max_compression = max((pt.pin_dbm + g_db) - pt.pout_dbm for pt in points)
    if max_compression < 0.5:
        raise OracleError(
            f"ill-conditioned fit: max compression {max_compression:.3f} dB < 0.5 dB"
        )

    def objective(s: float) -> float:
        return _sum_sq_error(points, g_db, psat_dbm, s)

    best_s = S_MIN
    best_val = objective(S_MIN)
    s = S_MIN
    while s < S_MAX:
        s = min(s + _GRID_STEP, S_MAX)
        val = objective(s)
        if val < best_val:
            best_val = val
            best_s = s
    lo = max(S_MIN, best_s - _GRID_STEP)
    hi = min(S_MAX, best_s + _GRID_STEP)
    return _golden_section_min(objective, lo, hi, 1e-4)


def curve_max_error_db(a: Sequence[CurvePoint], b: Sequence[CurvePoint]) -> float:
    """Max |pout| deviation of curve a from curve b, interpolating b at a's pins.

    Both curves must be sorted by pin_dbm and b's pin range must cover a's.
    """
    if not a or not b:
        raise OracleError("empty curve")
    for seq, label in ((a, "a"), (b, "b")):
        for prev, cur in zip(seq, seq[1:]):
            if cur.pin_dbm < prev.pin_dbm:
                raise OracleError(f"curve {label} not sorted by pin_dbm")
    if a[0].pin_dbm < b[0].pin_dbm or a[-1].pin_dbm > b[-1].pin_dbm:
        raise OracleError(
            f"curve b [{b[0].pin_dbm}, {b[-1].pin_dbm}] does not cover "
            f"curve a [{a[0].pin_dbm}, {a[-1].pin_dbm}]"
        )
    err = 0.0
    j = 0
    for pt in a:
        while j + 1 < len(b) and b[j + 1].pin_dbm < pt.pin_dbm:
            j += 1
        lo, hi = b[j], b[min(j + 1, len(b) - 1)]
        if hi.pin_dbm == lo.pin_dbm:
            ref = lo.pout_dbm
        else:
            t = (pt.pin_dbm - lo.pin_dbm) / (hi.pin_dbm - lo.pin_dbm)
            t = min(max(t, 0.0), 1.0)
            ref = lo.pout_dbm + t * (hi.pout_dbm - lo.pout_dbm)
        err = max(err, abs(pt.pout_dbm - ref))
    return err


def compression_point_1db(p: RappParams) -> tuple[float, float]:
    """Input/output power at exactly 1 dB of gain compression, by bisection.

    Compression (pin + g_db) - pout is 0 at small signal and grows without
    bound, so a root of (compression - 1) always exists and is unique; the
    bracket is widened geometrically before bisecting to 1e-6 dB.
    """

    def compression(pin: float) -> float:
        return (pin + p.g_db) - rapp_pout_dbm(pin, p)

    lo = p.psat_dbm - p.g_db - 60.0
    hi = p.psat_dbm - p.g_db + 10.0
    while compression(lo) >= 1.0:
        lo -= 60.0
    while compression(hi) < 1.0:
        hi += 60.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if compression(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    pin = (lo + hi) / 2.0
    return pin, rapp_pout_dbm(pin, p)


def knee_pout_dbm(p: RappParams) -> float:
    """Closed-form output power where the linear extrapolation meets saturation."""
    return p.psat_dbm - 10.0 * _LOG10_2 / p.s
