"""Independent brute-force oracles for the closed forms and solvers.

Every oracle computes reference values through a code path that shares no
numerical kernels with the fast path it checks:

* window integrals: adaptive quadrature in mpmath (the inner one-sided
  window uses mpmath's own complex erf), against the closed forms;
* negativity: eigenvalues of the partially transposed 4x4 matrix, against
  the closed formula;
* correlation amplitude: Gauss-Legendre quadrature of the nested time
  integrals feeding the identical mode-sum assembly, against the
  closed-form window path;
* radial modes: series vs horizon-side ODE integration, Wronskian
  constancy, flux conservation, barrier-limit reflection, and the measured
  convergence order of a fixed-step integrator.

Oracles run on coarse, fast samples so they can gate every build; each
returns an OracleReport with one record per check.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import SpacetimeParams, tortoise
from .modecache import GridSpec, build
from .radial import ModeIndex, extract_coeffs, solve_in_jaffe, solve_in_ode, solve_up
from .response import (
    ConvergenceControls,
    DetectorPairSpec,
    DetectorSpec,
    density_matrix,
    m_term,
    negativity,
    window_integral_full,
    window_integral_nested,
)
from .states import FieldState


@dataclass
class OracleRecord:
    check: str
    error: float
    tol: float

    @property
    def passed(self):
        return self.error <= self.tol

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.check} err={self.error:.3e} tol={self.tol:.1e} {status}"


@dataclass
class OracleReport:
    name: str
    records: list = field(default_factory=list)

    def add(self, check, error, tol):
        self.records.append(OracleRecord(check, float(error), float(tol)))

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    @property
    def max_error(self):
        return max((r.error for r in self.records), default=0.0)

    def lines(self):
        return [f"{self.name}.{r.line()}" for r in self.records]


# ----------------------------------------------------------------------
# window integrals
# ----------------------------------------------------------------------


def _mp():
    import mpmath

    return mpmath


def _quantize_dps(dps):
    # mpmath caches quadrature nodes per precision; quantizing the working
    # precision lets successive samples reuse them
    return 15 * (1 + (int(dps) - 1) // 15)


def _full_window_mp(mp, nu, width, center):
    # integration range must track the saddle at t0 + i nu T^2/2: the value
    # is e^{-(nu T)^2/4}, far below the max of the integrand on the real
    # line, so the working precision has to absorb that cancellation too
    pad = (abs(nu) * width / 2 + 10.0) * width
    extra = int((nu * width) ** 2 / 4 / math.log(10.0)) + 6
    with mp.workdps(_quantize_dps(22 + extra)):
        f = lambda t: mp.e ** (mp.mpc(0, nu * t)) * mp.e ** (-(((t - center) / width) ** 2))
        return mp.quad(f, [center - pad, center, center + pad])


def _nested_window_mp(mp, nu, mu, w_in, w_out, c_in, c_out):
    """Nested window integral by an erf-free route: substituting t = t' - u
    makes the t' integral a pure product of Gaussians (elementary), leaving
    a one-sided 1D integral in u whose only float cancellation is the
    center-offset suppression e^{-v^2}."""
    ti2 = w_in * w_in
    to2 = w_out * w_out
    r2 = ti2 + to2
    v2 = (c_out - c_in) ** 2 / r2
    extra = int(v2 / math.log(10.0)) + 8
    with mp.workdps(_quantize_dps(22 + extra)):
        sigma = mp.mpf(float(nu)) + mp.mpf(float(mu))
        kk = mp.mpf(1) / ti2 + mp.mpf(1) / to2
        pref = mp.sqrt(mp.pi / kk) * mp.e ** (-sigma * sigma / (4 * kk))

        def g(u):
            a = c_in + u
            m = (a / ti2 + c_out / to2) / kk
            d = (a - c_out) ** 2 / r2
            return mp.e ** (mp.mpc(0, sigma * m - nu * u) - d)

        rr = mp.sqrt(r2)
        hi = max(0.0, c_out - c_in) + 10.0 * float(rr)
        mid = min(max(c_out - c_in, 0.0), hi)
        return pref * mp.quad(g, sorted({0.0, mid, hi}))


def oracle_window_integrals(n_samples=100, seed=20240809, tol=1e-10):
    """Closed-form window integrals against mpmath quadrature."""
    mp = _mp()
    mp.mp.dps = 30
    rng = np.random.default_rng(seed)
    report = OracleReport("windows")

    # identity sample: nu = mu = 0 has the elementary value pi T T' / 2 * erfc(...)
    val = window_integral_nested(0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
    ref = complex(_nested_window_mp(mp, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0))
    report.add("identity.nested00", abs(val - ref) / abs(ref), tol)

    for i in range(n_samples):
        w_in, w_out = np.exp(rng.uniform(np.log(0.3), np.log(3.0), 2))
        if i % 5 == 0:
            w_out = 10.0 * w_in  # exercise strongly unequal widths
        nu = rng.uniform(-20.0, 20.0) / w_in
        mu = rng.uniform(-20.0, 20.0) / w_out
        c_in, c_out = rng.uniform(-6.0, 6.0, 2)

        val = complex(window_integral_full(nu, w_in, c_in))
        ref = complex(_full_window_mp(mp, nu, w_in, c_in))
        report.add(f"full.{i:03d}", abs(val - ref) / abs(ref), tol)

        val = complex(window_integral_nested(nu, mu, w_in, w_out, c_in, c_out))
        ref = complex(_nested_window_mp(mp, nu, mu, w_in, w_out, c_in, c_out))
        report.add(f"nested.{i:03d}", abs(val - ref) / abs(ref), tol)
    return report


# ----------------------------------------------------------------------
# negativity / partial transpose
# ----------------------------------------------------------------------


def partial_transpose_negativity(rho):
    """Negativity from the eigenvalues of the partial transpose over the
    second detector (basis order gg, eg, ge, ee)."""
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    pt = np.transpose(rho, (0, 3, 2, 1)).reshape(4, 4)
    eig = np.linalg.eigvalsh(pt)
    return float(-np.sum(eig[eig < 0.0]))


@dataclass
class _Entries:
    l_aa: float
    l_bb: float
    l_ab: complex
    m: complex


def _rho_from_entries(e):
    class _Resp:
        l_aa, l_bb, l_ab, m = e.l_aa, e.l_bb, e.l_ab, e.m

    return density_matrix(_Resp)


def oracle_partial_transpose(n_samples=1000, seed=7, tol=1e-10):
    """Closed negativity formula vs partial-transpose eigenvalues.

    Entries are small (couplings-squared scale <= 1e-4); the cross noise is
    kept below 1e-6 because its exact PT eigenvalue -|l_ab|^2/(1-trace) is a
    second-order effect the closed formula legitimately omits.
    """
    rng = np.random.default_rng(seed)
    report = OracleReport("negativity")

    report.add("m_zero", abs(negativity(3e-5, 1e-5, 0.0) - 0.0), tol)
    l, m = 2e-5, 5e-5
    report.add(
        "equal_noise_reduction",
        abs(negativity(l, l, m) - max(abs(m) - l, 0.0)),
        tol,
    )

    for i in range(n_samples):
        l_aa, l_bb = rng.uniform(0.0, 1e-4, 2)
        m = rng.uniform(0.0, 1e-4) * np.exp(2j * math.pi * rng.uniform())
        l_ab = rng.uniform(0.0, 1e-6) * np.exp(2j * math.pi * rng.uniform())
        e = _Entries(l_aa, l_bb, l_ab, m)
        n_pt = partial_transpose_negativity(_rho_from_entries(e))
        n_cl = negativity(l_aa, l_bb, m)
        report.add(f"random.{i:04d}", abs(n_pt - n_cl), tol)
    return report


# ----------------------------------------------------------------------
# radial modes
# ----------------------------------------------------------------------

_ORACLE_RADII = (2.12, 2.3, 3.0, 4.5, 6.0, 8.5, 10.0)  # r* from -3.9 to 12.8


def default_mode_sample():
    """>= 20 (ell, Mw) pairs in the regime where the direct series carries
    no float64 cancellation (Mw <= 1.25)."""
    return [
        (ell, w)
        for ell in (0, 1, 2, 3, 5, 8, 12, 20)
        for w in (0.05, 0.35, 0.8)
    ] + [(0, 1.25), (2, 1.0)]


def _rk4_in_mode(ell, w, rstar_grid, h):
    """Fixed-step RK4 outward integration of the in-mode (oracle-only path,
    independent of the adaptive production integrator)."""
    from .radial import _eps_of_rstar, _potential_eps

    x = rstar_grid[0]
    eps = _eps_of_rstar(x)
    rr = np.exp(-1j * w * x)
    dd = -1j * w * rr
    out = []

    def rhs(eps_, rr_, dd_):
        v = _potential_eps(ell, eps_)
        return eps_ / (2.0 + eps_), dd_, (v - w * w) * rr_

    for xt in rstar_grid[1:]:
        n = max(1, int(math.ceil((xt - x) / h)))
        hh = (xt - x) / n
        for _ in range(n):
            k1e, k1r, k1d = rhs(eps, rr, dd)
            k2e, k2r, k2d = rhs(eps + 0.5 * hh * k1e, rr + 0.5 * hh * k1r, dd + 0.5 * hh * k1d)
            k3e, k3r, k3d = rhs(eps + 0.5 * hh * k2e, rr + 0.5 * hh * k2r, dd + 0.5 * hh * k2d)
            k4e, k4r, k4d = rhs(eps + hh * k3e, rr + hh * k3r, dd + hh * k3d)
            eps += hh * (k1e + 2 * k2e + 2 * k3e + k4e) / 6.0
            rr += hh * (k1r + 2 * k2r + 2 * k3r + k4r) / 6.0
            dd += hh * (k1d + 2 * k2d + 2 * k3d + k4d) / 6.0
        x = xt
        out.append(rr)
    return np.array(out)


def oracle_mode_consistency(
    modes=None,
    tol_series=1e-10,
    tol_flux=1e-8,
    tol_wronskian=1e-8,
    order_window=0.5,
):
    """Cross-validation of the two independent in-mode routes plus the
    conservation identities of the scattering extraction."""
    modes = default_mode_sample() if modes is None else modes
    params = SpacetimeParams()
    radii = np.array(_ORACLE_RADII)
    rstars = np.array([tortoise(params, r) for r in radii])
    report = OracleReport("modes")

    for ell, w in modes:
        mode = ModeIndex(ell, w)
        sol_ode = solve_in_ode(mode, rstars, rtol=3e-13)
        vj, dj, _info = solve_in_jaffe(mode, radii)
        rel = np.max(np.abs(vj - sol_ode.values) / np.abs(vj))
        rel = max(rel, np.max(np.abs(dj - sol_ode.derivs) / np.abs(dj)))
        report.add(f"series_vs_ode.l{ell}.w{w}", rel, tol_series)

        sol_up = solve_up(mode, rstars, rtol=3e-13)
        coeffs = extract_coeffs(mode, sol_ode, sol_up, raise_tol=1.0)
        report.add(f"flux.l{ell}.w{w}", coeffs.flux_residual, tol_flux)

        wm, wl = sol_ode.wronskian_with(sol_up)
        wm = wm * np.exp(wl - wl[0])
        wdev = np.max(np.abs(wm - np.median(wm.real) - 1j * np.median(wm.imag)))
        report.add(f"wronskian.l{ell}.w{w}", wdev / abs(wm[0]), tol_wronskian)

        # imposed negative-frequency symmetry
        neg = solve_in_jaffe(ModeIndex(ell, -w), radii)[0]
        report.add(
            f"conjugation.l{ell}.w{w}",
            float(np.max(np.abs(neg - np.conj(vj)))) / float(np.max(np.abs(vj))),
            1e-15,
        )

    # total reflection below the centrifugal barrier
    mode = ModeIndex(20, 0.05)
    sol_up = solve_up(mode, rstars, rtol=1e-12)
    sol_in = solve_in_ode(mode, rstars, rtol=1e-12)
    coeffs = extract_coeffs(mode, sol_in, sol_up)
    report.add("barrier_reflection.l20.w0.05", 1.0 - coeffs.reflection_ratio_in, 1e-3)

    # measured convergence order of the fixed-step oracle integrator
    grid = np.array([-20.0, 5.0])
    y1 = _rk4_in_mode(2, 0.8, grid, 0.02)
    y2 = _rk4_in_mode(2, 0.8, grid, 0.01)
    y4 = _rk4_in_mode(2, 0.8, grid, 0.005)
    order = math.log2(abs(y1[-1] - y2[-1]) / abs(y2[-1] - y4[-1]))
    report.add("rk4_order", abs(order - 4.0), order_window)
    return report


# ----------------------------------------------------------------------
# correlation amplitude: closed-form windows vs time quadrature
# ----------------------------------------------------------------------


def _ordered_window_quadrature(omegas, sign, gap_n_in, gap_n_out, w_in, w_out, c_in, c_out, n_nodes):
    """K(sign*w) for the time-ordered window product, by Gauss-Legendre
    quadrature of the nested double time integral (no closed forms)."""
    w = sign * np.asarray(omegas)
    nu = w + gap_n_in  # inner (earlier) detector frequency
    mu = gap_n_out - w  # outer detector frequency
    # outer nodes on the support of the outer window
    xo, wo = np.polynomial.legendre.leggauss(n_nodes)
    to = c_out + 9.0 * w_out * xo
    wout = 9.0 * w_out * wo
    # inner variable u >= 0 with t = t_outer - u, covering the inner window
    span = max((c_out + 9.0 * w_out) - (c_in - 9.0 * w_in), 0.0) + w_in
    xi, wi = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * span * (xi + 1.0)
    wu = 0.5 * span * wi
    eta_out = np.exp(-(((to - c_out) / w_out) ** 2))
    eta_in = np.exp(-((((to[:, None] - u[None, :]) - c_in) / w_in) ** 2))
    # K = sum_j W_j eta_out_j e^{i(nu+mu) t_j} sum_k w_k eta_in_jk e^{-i nu u_k}
    phase_u = np.exp(-1j * np.multiply.outer(u, nu))  # [k, nw]
    inner = (eta_in * wu[None, :]) @ phase_u  # [j, nw]
    s_const = gap_n_in + gap_n_out  # nu + mu, frequency independent
    outer_w = wout * eta_out * np.exp(1j * s_const * to)
    k = outer_w @ inner  # [nw]
    # normalize to the dimensionless ordered factor (drop Ti To pi / 2)
    return k / (0.5 * math.pi * w_in * w_out)


def m_term_quadrature(pair, table, controls=None, n_nodes=480):
    """Correlation amplitude with the window factors from numeric time
    quadrature instead of closed forms (same kernels, same assembly)."""
    a, b = pair.a, pair.b
    na, nb = a.gap * a.redshift, b.gap * b.redshift
    omegas = table.grid.omegas()
    kab = {
        s: _ordered_window_quadrature(omegas, s, nb, na, b.width, a.width, b.center, a.center, n_nodes)
        for s in (+1.0, -1.0)
    }
    kba = {
        s: _ordered_window_quadrature(omegas, s, na, nb, a.width, b.width, a.center, b.center, n_nodes)
        for s in (+1.0, -1.0)
    }
    return m_term(
        pair,
        table,
        controls,
        window_arrays=(kab[1.0], kab[-1.0], kba[1.0], kba[-1.0]),
    )


def oracle_m_closed_vs_quadrature(table=None, tol=1e-8):
    """Closed-form vs quadrature window path for the full correlation
    amplitude on a coarse grid (l_cut = 5, omega step 0.05)."""
    if table is None:
        grid = GridSpec(lmax=5, omega_min=0.05, omega_max=10.0, omega_step=0.05, radii=(6.009,))
        table = build(grid)
    controls = ConvergenceControls(l_cut=min(5, table.grid.lmax))
    report = OracleReport("m_quadrature")
    for delay, gamma in ((8.0, 0.6), (21.5, 3.0), (0.0, math.pi)):
        det_a = DetectorSpec(radius=6.009, gap=5.0, width=1.0, center=0.0)
        det_b = DetectorSpec(radius=6.009, gap=5.0, width=1.0, center=delay)
        pair = DetectorPairSpec(a=det_a, b=det_b, gamma=gamma, state=FieldState.BOULWARE)
        m_fast = m_term(pair, table, controls, with_split=False)[0]
        m_ref = m_term_quadrature(pair, table, controls)[0]
        report.add(
            f"m.delay{delay}.gamma{gamma:.2f}",
            abs(m_fast - m_ref) / abs(m_ref),
            tol,
        )
    return report


_SUITES = {
    "windows": lambda: oracle_window_integrals(),
    "negativity": lambda: oracle_partial_transpose(),
    "modes": lambda: oracle_mode_consistency(),
    "m-quadrature": lambda: oracle_m_closed_vs_quadrature(),
}


def run_suite(name):
    """Run one named suite ('all' for everything); returns list of reports."""
    if name == "all":
        return [fn() for fn in _SUITES.values()]
    if name not in _SUITES:
        raise DomainError(f"unknown validation suite {name!r}; choose from "
                          f"{sorted(_SUITES)} or 'all'")
    return [_SUITES[name]()]
