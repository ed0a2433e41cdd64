"""Complex error functions and Legendre polynomials.

Everything downstream needs exactly two special-function families: erf/erfi
of complex argument (Gaussian switching windows integrate to these) and
Legendre polynomials P_l(cos gamma) (the angular factor of the mode sums).
Both are self-contained here; no scipy.

erf is evaluated by a region split:
  * Maclaurin series for |z| <= 1.5 (keeps full relative accuracy near the
    origin, where 1 - erfc would cancel),
  * 1 - exp(-z^2) w(iz) elsewhere, with the Faddeeva function w computed by
    Weideman's rational approximation (N = 42 gives ~1e-14 over the upper
    half-plane) switching to the asymptotic Laurent series for |z| >= 16.
Inputs are first mapped to the closed first quadrant with erf(-z) = -erf(z)
and erf(conj z) = conj erf(z), so those symmetries hold exactly.

Note on range: |erf(x+iy)| grows like exp(y^2 - x^2), which overflows float64
for y^2 - x^2 > ~709.  Such values are returned as inf; callers that need the
product of erf/erfi with a Gaussian prefactor (the response layer does) must
combine exponents analytically and call wofz directly.
"""

import math

import numpy as np

from .errors import DomainError

_SQRT_PI = math.sqrt(math.pi)
_TWO_PI_LD = 2.0 * np.longdouble("3.141592653589793238462643383279503")


def _cexp_neg_zsq(z):
    """exp(-z^2) with the exponent formed in extended precision.

    Re(z^2) and Im(z^2) grow like |z|^2; forming them in float64 costs
    ~|z|^2 * eps of absolute phase/log error, which alone would exceed the
    1e-13 relative target for |z| beyond ~30.  Intermediates here are
    x86 longdouble.
    """
    x = np.real(z).astype(np.longdouble)
    y = np.imag(z).astype(np.longdouble)
    re = (y - x) * (y + x)
    im = -2.0 * x * y
    im = im - np.round(im / _TWO_PI_LD) * _TWO_PI_LD
    mag = np.exp(re)
    return np.asarray(mag * np.cos(im) + 1j * (mag * np.sin(im)), dtype=complex)


def _weideman_coeffs(n=42):
    """Polynomial coefficients for Weideman's Faddeeva approximation."""
    m = 2 * n
    m2 = 2 * m
    k = np.arange(-m + 1, m)
    ll = math.sqrt(n / math.sqrt(2.0))
    theta = k * math.pi / m
    t = ll * np.tan(0.5 * theta)
    f = np.zeros(m2, dtype=float)
    f[1:] = np.exp(-t * t) * (ll * ll + t * t)
    a = np.fft.fft(np.fft.fftshift(f)).real / m2
    return ll, a[1 : n + 1][::-1].copy()


_WEIDEMAN_L, _WEIDEMAN_A = _weideman_coeffs(42)

# (2k-1)!!/2^k for the large-|z| Laurent series of w, k = 1..11
_W_ASYMP = np.array(
    [
        0.5,
        0.75,
        1.875,
        6.5625,
        29.53125,
        162.421875,
        1055.7421875,
        7918.06640625,
        67303.564453125,
        639383.8623046875,
        6713530.55419921875,
    ]
)


def _wofz_upper(z):
    """Faddeeva w(z) for Im z >= 0 (array valued)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    big = np.abs(z) >= 16.0

    if np.any(big):
        zb = z[big]
        inv2 = 1.0 / (zb * zb)
        s = np.zeros_like(zb)
        for ck in _W_ASYMP[::-1]:
            s = (s + ck) * inv2
        out[big] = 1j / _SQRT_PI / zb * (1.0 + s)

    if np.any(~big):
        zs = z[~big]
        ll = _WEIDEMAN_L
        zz = (ll + 1j * zs) / (ll - 1j * zs)
        p = np.zeros_like(zs)
        for ck in _WEIDEMAN_A:
            p = p * zz + ck
        out[~big] = 2.0 * p / (ll - 1j * zs) ** 2 + (1.0 / _SQRT_PI) / (ll - 1j * zs)

    return out


def wofz(z):
    """Faddeeva function w(z) = exp(-z^2) erfc(-iz), any quadrant.

    For Im z < 0 uses w(z) = 2 exp(-z^2) - w(-z); the exponential can
    overflow for strongly negative Im z, which is a property of w itself.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    lower = z.imag < 0.0
    zz = np.where(lower, -z, z)
    w = _wofz_upper(zz)
    if np.any(lower):
        w = np.where(lower, 2.0 * _cexp_neg_zsq(z) - w, w)
    return w[0] if scalar else w


def _erf_series(z):
    """Maclaurin series, adequate to ~1e-16 relative for |z| <= 1.5."""
    z2 = z * z
    term = np.ones_like(z)
    acc = np.full_like(z, 1.0)
    for n in range(1, 32):
        term = term * (-z2) / n
        acc = acc + term / (2 * n + 1)
    return (2.0 / _SQRT_PI) * z * acc


def _erf_first_quadrant(z):
    small = np.abs(z) <= 1.5
    out = np.empty_like(z)
    if np.any(small):
        out[small] = _erf_series(z[small])
    if np.any(~small):
        zl = z[~small]
        out[~small] = 1.0 - _cexp_neg_zsq(zl) * _wofz_upper(1j * zl)
    return out


def _check_finite(z):
    if not np.all(np.isfinite(z)):
        raise DomainError("erf/erfi argument must be finite")


def erf_complex(z):
    """Error function of complex argument.

    Relative accuracy ~1e-13 wherever the value is representable in float64.
    Odd symmetry and erf(conj z) = conj erf(z) hold exactly.
    """
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    neg = z.real < 0.0
    z1 = np.where(neg, -z, z)
    flip = z1.imag < 0.0
    z2 = np.where(flip, np.conj(z1), z1)
    val = _erf_first_quadrant(z2)
    val = np.where(flip, np.conj(val), val)
    val = np.where(neg, -val, val)
    return complex(val[0]) if scalar else val


def erfc_complex(z):
    """Complementary error function, relative-accurate for Re z >= 0."""
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    direct = (z.real >= 0.0) & (np.abs(z) > 1.5)
    out = np.empty_like(z)
    if np.any(direct):
        zd = z[direct]
        out[direct] = _cexp_neg_zsq(zd) * _wofz_upper(1j * zd)
    if np.any(~direct):
        out[~direct] = 1.0 - erf_complex(z[~direct])
    return complex(out[0]) if scalar else out


def erfi_complex(z):
    """Imaginary error function, erfi(z) = -i erf(iz).

    Real arguments return exactly real values (via the Dawson-like form
    erfi(x) = exp(x^2) Im w(x)).
    """
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    realmask = z.imag == 0.0
    if np.any(realmask):
        x = z.real[realmask]
        ax = np.abs(x)
        val = np.exp(ax * ax) * _wofz_upper(ax + 0j).imag
        out[realmask] = np.sign(x) * val
    if np.any(~realmask):
        out[~realmask] = -1j * erf_complex(1j * z[~realmask])
    return complex(out[0]) if scalar else out


def legendre_p(ell, x):
    """Legendre polynomial P_ell(x) by the three-term recurrence.

    ell: non-negative integer; x in [-1, 1].
    """
    if ell < 0 or ell != int(ell):
        raise DomainError(f"degree must be a non-negative integer, got {ell}")
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"argument must lie in [-1, 1], got {x}")
    if ell == 0:
        return 1.0
    p_prev = 1.0
    p = x
    for n in range(1, int(ell)):
        p, p_prev = ((2 * n + 1) * x * p - n * p_prev) / (n + 1), p
    return p


def legendre_table(lmax, x):
    """P_0(x) .. P_lmax(x) as one array (same recurrence as legendre_p)."""
    if lmax < 0 or lmax != int(lmax):
        raise DomainError(f"lmax must be a non-negative integer, got {lmax}")
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"argument must lie in [-1, 1], got {x}")
    out = np.empty(int(lmax) + 1)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = x
    for n in range(1, int(lmax)):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out
