"""Frequency kernels of the field two-point function in the three states.

For mode label (ell, w) and radii (r, r') the kernels are assembled from the
stored rescaled modes (units M = 1, surface gravity kappa = 1/4):

    Boulware:        theta(w) [ up(w) + in(w) ]
    Unruh:           B(w) up(w) + theta(w) in(w)
    Hartle-Hawking:  B(w) [ up(w) + in*(w) ]

with up(w) = Rbar_up(r) conj Rbar_up(r'), in(w) = Rbar_in(r) conj Rbar_in(r'),
in*(w) = conj Rbar_in(r) Rbar_in(r') (the Hartle-Hawking in-term carries the
conjugate on the first slot, as printed in the source expressions), and the
thermal factor B(w) = 1 / (1 - e^{-2 pi w / kappa}), evaluated through expm1
so the w -> 0 pole B ~ kappa/(2 pi w) keeps full precision.  Negative
frequencies use Rbar(-w) = conj Rbar(w) and B(-w) = 1 - B(w); the Boulware
kernel vanishes identically for w < 0.

The symmetric/antisymmetric split used for the correlation-term
decomposition works on the weight H(w) = G(w)/w of the frequency integral:

    symmetric (anticommutator) weight   [H(w) + conj H(-w)] / 2
    antisymmetric (commutator) weight   [H(w) - conj H(-w)] / (2i)

The antisymmetric weight is state independent (exactly so for Boulware vs
Unruh at any radii; for Hartle-Hawking the printed in-term ordering makes it
exact only at r = r').
"""

import enum

import numpy as np

from .errors import DomainError

SURFACE_GRAVITY = 0.25
_THERMAL_RATE = 2.0 * np.pi / SURFACE_GRAVITY  # exponent rate 2 pi / kappa


class FieldState(enum.Enum):
    BOULWARE = "boulware"
    UNRUH = "unruh"
    HARTLE_HAWKING = "hartle-hawking"

    @classmethod
    def parse(cls, name):
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "b": cls.BOULWARE,
            "boulware": cls.BOULWARE,
            "u": cls.UNRUH,
            "unruh": cls.UNRUH,
            "h": cls.HARTLE_HAWKING,
            "hh": cls.HARTLE_HAWKING,
            "hartle-hawking": cls.HARTLE_HAWKING,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown field state {name!r}") from None


def bose_factor(omega):
    """1 / (1 - e^{-2 pi omega / kappa}); B(-w) = 1 - B(w)."""
    return 1.0 / (-np.expm1(-_THERMAL_RATE * np.asarray(omega, dtype=float)))


def kernel(state, table, ell, omega, r, rp):
    """Per-state frequency kernel G(r, r') at one signed grid frequency."""
    if omega == 0.0:
        raise DomainError("omega = 0 is excluded from the kernel domain")
    lu_r = table.lookup("up", ell, omega, r)
    lu_p = table.lookup("up", ell, omega, rp)
    li_r = table.lookup("in", ell, omega, r)
    li_p = table.lookup("in", ell, omega, rp)
    up = lu_r * np.conj(lu_p)
    if state is FieldState.BOULWARE:
        if omega < 0.0:
            return 0.0 + 0.0j
        return complex(up + li_r * np.conj(li_p))
    b = float(bose_factor(omega))
    if state is FieldState.UNRUH:
        inn = li_r * np.conj(li_p) if omega > 0.0 else 0.0
        return complex(b * up + inn)
    if state is FieldState.HARTLE_HAWKING:
        return complex(b * (up + np.conj(li_r) * li_p))
    raise DomainError(f"unknown state {state!r}")


def kernel_split(state, table, ell, omega, r, rp):
    """(symmetric, antisymmetric) frequency weights at omega > 0.

    symmetric + i * antisymmetric recombines to H(w) = G(w)/w exactly.
    """
    if not omega > 0.0:
        raise DomainError("kernel_split expects a positive frequency")
    g_pos = kernel(state, table, ell, omega, r, rp)
    g_neg = kernel(state, table, ell, -omega, r, rp)
    sym = (g_pos - np.conj(g_neg)) / (2.0 * omega)
    anti = (g_pos + np.conj(g_neg)) / (2.0j * omega)
    return complex(sym), complex(anti)


def kernel_blocks(state, table, i_r, j_r, l_cut):
    """Vectorized kernels over the whole (ell <= l_cut, omega-grid) block.

    Returns (g_pos, g_neg): the kernel at +omega and at -omega for every
    positive grid frequency, shape [l_cut + 1, n_omega].
    """
    sl = slice(0, l_cut + 1)
    ru_r = table.rup_bar[sl, :, i_r]
    ru_p = table.rup_bar[sl, :, j_r]
    ri_r = table.rin_bar[sl, :, i_r]
    ri_p = table.rin_bar[sl, :, j_r]
    up_pos = ru_r * np.conj(ru_p)
    in_pos = ri_r * np.conj(ri_p)
    if state is FieldState.BOULWARE:
        return up_pos + in_pos, np.zeros_like(up_pos)
    b = bose_factor(table.grid.omegas())[None, :]
    up_neg = np.conj(ru_r) * ru_p
    if state is FieldState.UNRUH:
        return b * up_pos + in_pos, (1.0 - b) * up_neg
    if state is FieldState.HARTLE_HAWKING:
        int_pos = np.conj(ri_r) * ri_p
        int_neg = ri_r * np.conj(ri_p)
        return b * (up_pos + int_pos), (1.0 - b) * (up_neg + int_neg)
    raise DomainError(f"unknown state {state!r}")
