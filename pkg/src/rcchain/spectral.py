"""Frequency-domain solution of the uniform RC chain.

A chain of ``n`` equal resistors ``R`` and ``n+1`` equal grounded capacitors
``C`` driven at its port obeys, after a Fourier transform, the recurrence

    (2 + jRCω) V_i - V_{i-1} = V_{i+1}          i = 1..n-1
    (1 + jRCω) V_n = V_{n-1}
    (1 + jRCω) V_0 - R I = V_1

whose characteristic roots ``a``, ``b`` (``a*b = 1``) give the port
admittance ``Y_n(ω) = I/V_0`` in closed form.  ``admittance`` evaluates it
through ``H_n = ((τb-1)/(τa-1)) (b/a)^(n-1)`` with ``τ = 1 + jRCω``; since
``|b/a| <= 1`` the power never overflows.

``fn_gn`` turns the admittance into the one-step current coefficients

    I(s) = F_n(s) Δv/s + G_n(s) v

for a port voltage that is linear over the step and Gaussian-damped,
``V_0(t) = (Δv t/s + v) exp(-M²t²)``.  The damping pushes the voltage to zero
outside the step, which keeps the (acausal) full-line convolution with the
impulse response physically meaningful without touching ``Y_n``.  The
alternative, truncating the impulse response with a unit step, amounts to
``Y_real = π (Y - j H[Y])`` where ``H`` is the Hilbert transform (the
``πδ(ν) + 1/(jν)`` spectrum of the step); it is not needed here and not
computed.  A plain truncated-linear ``V_0`` is also avoided: since
``Y_n(ω)/ω -> jC`` at high frequency, its coefficient integrals diverge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .quadrature import QuadratureError, integrate

LAMBDA_MAX = 25.0


@dataclass(frozen=True)
class SpectralParams:
    n: int
    R: float
    C: float
    M: float
    s: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chain needs n >= 1")
        if not (self.R > 0 and self.C > 0 and self.s > 0):
            raise ValueError("R, C and s must be positive")
        if not 1.0 <= self.M <= 1e-6 / self.s * (1 + 1e-12):
            raise ValueError(f"M={self.M:g} outside [1, 1e-6/s]")

    @classmethod
    def with_default_m(cls, n: int, R: float, C: float, s: float) -> "SpectralParams":
        """Damping rate M = 1e-8/s clamped into [1, 1e-6/s] (M = 1e4 at s = 1 ps)."""
        M = min(max(1e-8 / s, 1.0), 1e-6 / s)
        return cls(n, R, C, M, s)


@dataclass(frozen=True)
class FGCoefficients:
    F: float
    G: float
    F_err_abs: float
    G_err_abs: float
    F_imag: float = 0.0
    G_imag: float = 0.0

    def current(self, v_prev: float, v_next: float, s: float) -> float:
        return self.F * (v_next - v_prev) / s + self.G * v_prev


def _cexpm1(z):
    # numpy's complex expm1/log1p lose accuracy near zero on some builds
    x, y = z.real, z.imag
    return np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2 + 1j * np.exp(x) * np.sin(y)


def _ipow(z, k: int):
    """z**k for integer k >= 0 by binary exponentiation."""
    result = np.ones_like(z)
    base = z
    while k:
        if k & 1:
            result = result * base
        base = base * base
        k >>= 1
    return result


def _roots(x):
    """Roots of z² - (2+x)z + 1 for x = jRCω, ordered so |b| <= |a|."""
    p0 = 1.0 + 0.5 * x
    q = np.sqrt(x * (1.0 + 0.25 * x))
    flip = (q * np.conj(p0)).real < 0
    q = np.where(flip, -q, q)
    a = p0 + q
    # b = 1/a avoids the cancellation in p0 - q at high frequency
    b = 1.0 / a
    return a, b, p0, q


def char_roots(R: float, C: float, omega):
    """Characteristic roots ``(a, b)`` of the chain recurrence, ``|b| <= |a|``."""
    x = 1j * R * C * np.asarray(omega, dtype=float)
    a, b, _, _ = _roots(x)
    if np.ndim(omega) == 0:
        return complex(a), complex(b)
    return a, b


def h_ratio(params: SpectralParams, omega):
    """H_n(ω) = ((τb-1)/(τa-1)) (b/a)^(n-1)."""
    x = 1j * params.R * params.C * np.asarray(omega, dtype=float)
    a, b, _, _ = _roots(x)
    tau = 1.0 + x
    ratio = b / a
    if not np.all(np.abs(ratio) <= 1.0 + 1e-12):
        raise FloatingPointError("|b/a| > 1: root ordering violated")
    with np.errstate(invalid="ignore", divide="ignore"):
        h = (tau * b - 1.0) / (tau * a - 1.0) * _ipow(ratio, params.n - 1)
    return h


def _ratio_g(n: int, x):
    """Dimensionless g(x) with Y_n(ω)/ω = jC·g, x = jRCω, x != 0.

    Algebraically identical to the H_n form, rearranged so every term stays
    accurate as x -> 0: with ρ = (b/a)^(n-1),

        g = 1/2 + [q p'(1+ρ) + (1+x/4)(1+x)(1-ρ)] / [x p'(1-ρ) + q(1+x)(1+ρ)]

    where q = sqrt(x + x²/4), p' = 3/2 + x/2 and 1-ρ comes from expm1 of
    (n-1)·log(b/a), log(b/a) = -2·atanh(q/p0) = -2·log(a).
    """
    a, _, p0, q = _roots(x)
    if n == 1:
        one_minus_rho = np.zeros_like(x)
    else:
        # atanh keeps log(b/a) accurate near |a| = 1; log(a) is safe elsewhere
        near = np.abs(x) < 1.0
        z = np.where(near, q / p0, 0.0)
        log_r = np.where(near, -2.0 * np.arctanh(z), -2.0 * np.log(a))
        one_minus_rho = -_cexpm1((n - 1) * log_r)
    one_plus_rho = 2.0 - one_minus_rho
    pp = 1.5 + 0.5 * x
    num = q * pp * one_plus_rho + (1.0 + 0.25 * x) * (1.0 + x) * one_minus_rho
    den = x * pp * one_minus_rho + q * (1.0 + x) * one_plus_rho
    return 0.5 + num / den


def admittance_ratio(params: SpectralParams, omega):
    """Y_n(ω)/ω, equal to (n+1)Cj at ω = 0 and tending to Cj as ω -> ∞."""
    w = np.asarray(omega, dtype=float)
    x = 1j * params.R * params.C * w
    zero = w == 0
    xs = np.where(zero, 1j, x)
    out = 1j * params.C * _ratio_g(params.n, xs)
    out = np.where(zero, 1j * params.C * (params.n + 1), out)
    return complex(out) if np.ndim(omega) == 0 else out


# below this |RCω| the direct H_n expression loses digits to cancellation
_DIRECT_MIN = 1e-3


def admittance(params: SpectralParams, omega):
    """Port admittance Y_n(ω) from the H_n closed form."""
    w = np.asarray(omega, dtype=float)
    R, C = params.R, params.C
    x = 1j * R * C * w
    small = np.abs(x) < _DIRECT_MIN
    xs = np.where(small, 1j, x)
    a, b, _, _ = _roots(xs)
    tau = 1.0 + xs
    h = h_ratio(params, xs.imag / (R * C))
    y = ((tau - b) + (a - tau) * h) / (1.0 - h) / R
    y = np.where(small, w * admittance_ratio(params, np.where(small, w, 0.0)), y)
    return complex(y) if np.ndim(omega) == 0 else y


def _solve_deviation(n: int, x: complex, rhs: complex) -> np.ndarray:
    """Solve the Dirichlet-at-port chain system for W_k = 1 - V_k (V_0 = 1)."""
    diag = np.full(n, 2.0 + x, dtype=complex)
    diag[-1] = 1.0 + x
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = -1.0
    ab[1] = diag
    ab[2, :-1] = -1.0
    return solve_banded((1, 1), ab, np.full(n, rhs, dtype=complex))


def admittance_bruteforce(params: SpectralParams, omega: float) -> complex:
    """Port current for V_0 = 1 from a direct solve of the recurrence system.

    The unknowns are written as W_k = 1 - V_k, which satisfy the same
    tridiagonal matrix with right-hand side x = jRCω; then
    I = ((1+x) - V_1)/R = (x + W_1)/R without the 1 - V_1 cancellation.
    """
    if params.n > 4096:
        raise ValueError("bruteforce solve limited to n <= 4096")
    x = 1j * params.R * params.C * float(omega)
    if x == 0:
        return 0j
    w = _solve_deviation(params.n, x, x)
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("singular chain system")
    return complex((x + w[0]) / params.R)


def admittance_ratio_bruteforce(params: SpectralParams, omega: float) -> complex:
    """Y_n(ω)/ω via the direct solve, scaled by x so ω = 0 is regular."""
    x = 1j * params.R * params.C * float(omega)
    w = _solve_deviation(params.n, x, 1.0)  # W_k / x
    return complex(1j * params.C * (1.0 + w[0]))


def _breakpoints(params: SpectralParams) -> np.ndarray:
    pts = [0.0, 1.0, 5.0, 10.0, LAMBDA_MAX]
    # the admittance turns over between |RCω| ~ 1/n² and |RCω| ~ 1
    lam_c = 1.0 / (params.R * params.C * params.M)
    decades = int(math.ceil(2 * math.log10(params.n + 1))) + 2
    for k in range(-decades, 3):
        lam = lam_c * 10.0 ** k
        if 0 < lam < LAMBDA_MAX:
            pts.append(lam)
    pts = np.array(sorted(set(pts)))
    return np.concatenate([-pts[:0:-1], pts])


def fn_gn(params: SpectralParams, epsrel: float = 1e-9, epsabs: float = 0.0,
          limit: int = 4000) -> FGCoefficients:
    """Coefficients F_n(s), G_n(s) of the one-step port current.

    With λ = ω/M,

        F = -j/(4√π) ∫ λ² (Y(λM)/(λM)) exp(-λ²/4 + jλMs) dλ
        G =  M/(2√π) ∫ λ  (Y(λM)/(λM)) exp(-λ²/4 + jλMs) dλ

    over λ ∈ [-25, 25].  Y is Hermitian so both integrals are real; the
    imaginary remainder is reported and folded into the error estimates.
    """
    M, s = params.M, params.s

    def kernel(lam):
        return admittance_ratio(params, lam * M) * np.exp(-0.25 * lam * lam + 1j * lam * (M * s))

    pf = -1j / (4.0 * math.sqrt(math.pi))
    pg = M / (2.0 * math.sqrt(math.pi))
    bps = _breakpoints(params)
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=limit)
    rf = integrate(lambda lam: pf * lam * lam * kernel(lam), bps, **kw)
    rg = integrate(lambda lam: pg * lam * kernel(lam), bps, **kw)

    F, G = rf.value.real, rg.value.real
    coeffs = FGCoefficients(
        F=F, G=G,
        F_err_abs=rf.error + abs(rf.value.imag),
        G_err_abs=rg.error + abs(rg.value.imag),
        F_imag=rf.value.imag, G_imag=rg.value.imag,
    )
    if not (rf.converged and rg.converged) \
            or coeffs.F_err_abs > 1e-6 * max(abs(F), 1e-30) \
            or coeffs.G_err_abs > 1e-6 * max(abs(G), M * abs(F), 1e-30):
        raise QuadratureError(f"F/G quadrature did not converge for {params}", coeffs)
    return coeffs
