"""Schwarzschild background quantities and null-geodesic computations.

Geometric units G = c = 1; every input and output length/time is in units of
the black-hole mass (the kernels fix M = 1).  The exterior metric functions
are

    f(r) = 1 - 2/r,   r* = r + 2 ln(r/2 - 1),   dtau/dt = sqrt(f)

with the horizon at r = 2, the photon sphere at r = 3 and surface gravity
kappa = 1/4.

Null geodesics are handled through the orbit equation for u = 1/r,

    u'' = 3 u^2 - u          (' = d/dphi),

whose first integral u'^2 + u^2 (1 - 2u) = 1/b^2 defines the impact
parameter b.  Propagation times integrate dt/dphi = (1/b) / (u^2 (1 - 2u))
along the orbit.  Connecting geodesics between two static points are found
by shooting on the initial slope q = u'(0); turning points then need no
special handling, and windings (primary / secondary / tertiary) are fixed by
the total swept angle.  Shots that fall into the hole or run off to infinity
before completing the sweep are continued with a signed penalty so the
shooting residual stays continuous and sign changes can be bracketed.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .errors import DomainError, NoSolutionError

# shots are abandoned outside this u = 1/r corridor
_U_CAP = 0.4999
_U_FLOOR = 1e-9
_CRITICAL_INV_B2 = 1.0 / 27.0  # photon-sphere value of u^2(1-2u)


@dataclass(frozen=True)
class SpacetimeParams:
    """Black-hole mass and derived constants."""

    mass: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise DomainError(f"mass must be positive and finite, got {self.mass}")

    @property
    def horizon_radius(self):
        return 2.0 * self.mass

    @property
    def surface_gravity(self):
        return 0.25 / self.mass

    @property
    def photon_sphere_radius(self):
        return 3.0 * self.mass

    @property
    def critical_impact_parameter(self):
        return 3.0 * math.sqrt(3.0) * self.mass


class GeodesicBranch(enum.Enum):
    """Winding class of a connecting null geodesic."""

    PRIMARY = "primary"
    SECONDARY = "secondary"
    TERTIARY = "tertiary"

    def swept_angle(self, gamma):
        """Total orbital angle swept for endpoints separated by gamma."""
        if self is GeodesicBranch.PRIMARY:
            return gamma
        if self is GeodesicBranch.SECONDARY:
            return 2.0 * math.pi - gamma
        return 2.0 * math.pi + gamma


def _require_exterior(params, r, name="r"):
    if not (r > params.horizon_radius):
        raise DomainError(
            f"{name} = {r} must lie outside the horizon r = {params.horizon_radius}"
        )


def lapse(params, r):
    """Metric function f(r) = 1 - 2M/r; in (0, 1) outside the horizon."""
    _require_exterior(params, r)
    return 1.0 - 2.0 * params.mass / r


def redshift_factor(params, r):
    """dtau/dt = sqrt(f(r)) for a static worldline at radius r."""
    return math.sqrt(lapse(params, r))


@jit
def _tortoise_m1(r):
    return r + 2.0 * np.log(0.5 * r - 1.0)


@jit
def _tortoise_inverse_m1(rstar):
    # seed from the appropriate asymptotic branch, then Newton on
    # g(r) = r + 2 ln(r/2 - 1) - rstar, g'(r) = 1/f(r)
    if rstar > 4.0:
        r = rstar
        for _ in range(40):
            rn = rstar - 2.0 * np.log(0.5 * r - 1.0)
            if abs(rn - r) < 1e-15 * r:
                r = rn
                break
            r = rn
    else:
        r = 2.0 + 2.0 * np.exp(0.5 * (rstar - 2.0))
    for _ in range(60):
        f = 1.0 - 2.0 / r
        g = r + 2.0 * np.log(0.5 * r - 1.0) - rstar
        step = g * f
        rn = r - step
        if rn <= 2.0:
            rn = 0.5 * (r + 2.0)
        if abs(rn - r) <= 1e-15 * rn:
            return rn
        r = rn
    return r


def tortoise(params, r):
    """Tortoise coordinate r* = r + 2M ln(r/2M - 1); -inf at the horizon."""
    _require_exterior(params, r)
    m = params.mass
    return m * _tortoise_m1(r / m)


def tortoise_inverse(params, rstar):
    """Radius r > 2M with tortoise(r) = rstar; defined for all real rstar."""
    if not math.isfinite(rstar):
        raise DomainError(f"rstar must be finite, got {rstar}")
    m = params.mass
    return m * _tortoise_inverse_m1(rstar / m)


# ----------------------------------------------------------------------
# orbit-equation integrator (Dormand-Prince 5(4), adaptive)
# ----------------------------------------------------------------------


@jit
def _dt_stage(u, binv):
    # dt/dphi = (1/b) / (u^2 (1 - 2u)); trial stages may step outside the
    # valid corridor before the guards act, so clamp the denominator
    d = u * u * (1.0 - 2.0 * u)
    if d < 1e-300:
        d = 1e-300
    return binv / d


@jit
def _binet_shot(u0, q, phi_end, rtol):
    """Integrate (u, u', t) from phi = 0 to phi_end.

    Returns (status, u_end, du_end, t_end, phi_stop) with status 0 on
    completion, 1 if the shot dived below r ~ 2M (u > cap), 2 if it escaped
    past infinity (u < floor).
    """
    binv = np.sqrt(q * q + u0 * u0 * (1.0 - 2.0 * u0))
    u = u0
    du = q
    t = 0.0
    phi = 0.0
    h = 0.01
    for _ in range(400000):
        if phi >= phi_end:
            break
        if u > _U_CAP:
            return 1, u, du, t, phi
        if u < _U_FLOOR:
            return 2, u, du, t, phi
        if h > phi_end - phi:
            h = phi_end - phi

        # stage derivatives for y = (u, du, t)
        k1u = du
        k1d = u * (3.0 * u - 1.0)
        k1t = _dt_stage(u, binv)

        u2 = u + h * 0.2 * k1u
        d2 = du + h * 0.2 * k1d
        k2u = d2
        k2d = u2 * (3.0 * u2 - 1.0)
        k2t = _dt_stage(u2, binv)

        u3 = u + h * (0.075 * k1u + 0.225 * k2u)
        d3 = du + h * (0.075 * k1d + 0.225 * k2d)
        k3u = d3
        k3d = u3 * (3.0 * u3 - 1.0)
        k3t = _dt_stage(u3, binv)

        u4 = u + h * ((44.0 / 45.0) * k1u - (56.0 / 15.0) * k2u + (32.0 / 9.0) * k3u)
        d4 = du + h * ((44.0 / 45.0) * k1d - (56.0 / 15.0) * k2d + (32.0 / 9.0) * k3d)
        k4u = d4
        k4d = u4 * (3.0 * u4 - 1.0)
        k4t = _dt_stage(u4, binv)

        u5 = u + h * (
            (19372.0 / 6561.0) * k1u
            - (25360.0 / 2187.0) * k2u
            + (64448.0 / 6561.0) * k3u
            - (212.0 / 729.0) * k4u
        )
        d5 = du + h * (
            (19372.0 / 6561.0) * k1d
            - (25360.0 / 2187.0) * k2d
            + (64448.0 / 6561.0) * k3d
            - (212.0 / 729.0) * k4d
        )
        k5u = d5
        k5d = u5 * (3.0 * u5 - 1.0)
        k5t = _dt_stage(u5, binv)

        u6 = u + h * (
            (9017.0 / 3168.0) * k1u
            - (355.0 / 33.0) * k2u
            + (46732.0 / 5247.0) * k3u
            + (49.0 / 176.0) * k4u
            - (5103.0 / 18656.0) * k5u
        )
        d6 = du + h * (
            (9017.0 / 3168.0) * k1d
            - (355.0 / 33.0) * k2d
            + (46732.0 / 5247.0) * k3d
            + (49.0 / 176.0) * k4d
            - (5103.0 / 18656.0) * k5d
        )
        k6u = d6
        k6d = u6 * (3.0 * u6 - 1.0)
        k6t = _dt_stage(u6, binv)

        # 5th order solution
        un = u + h * (
            (35.0 / 384.0) * k1u
            + (500.0 / 1113.0) * k3u
            + (125.0 / 192.0) * k4u
            - (2187.0 / 6784.0) * k5u
            + (11.0 / 84.0) * k6u
        )
        dn = du + h * (
            (35.0 / 384.0) * k1d
            + (500.0 / 1113.0) * k3d
            + (125.0 / 192.0) * k4d
            - (2187.0 / 6784.0) * k5d
            + (11.0 / 84.0) * k6d
        )
        tn = t + h * (
            (35.0 / 384.0) * k1t
            + (500.0 / 1113.0) * k3t
            + (125.0 / 192.0) * k4t
            - (2187.0 / 6784.0) * k5t
            + (11.0 / 84.0) * k6t
        )

        if un > _U_CAP or un < _U_FLOOR or (1.0 - 2.0 * un) <= 1e-6:
            # let the guards above terminate on the accepted state
            u, du, t = un, dn, tn
            phi += h
            continue

        k7u = dn
        k7d = un * (3.0 * un - 1.0)
        k7t = _dt_stage(un, binv)

        # embedded 4th order error estimate
        eu = h * (
            (35.0 / 384.0 - 5179.0 / 57600.0) * k1u
            + (500.0 / 1113.0 - 7571.0 / 16695.0) * k3u
            + (125.0 / 192.0 - 393.0 / 640.0) * k4u
            + (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k5u
            + (11.0 / 84.0 - 187.0 / 2100.0) * k6u
            - (1.0 / 40.0) * k7u
        )
        ed = h * (
            (35.0 / 384.0 - 5179.0 / 57600.0) * k1d
            + (500.0 / 1113.0 - 7571.0 / 16695.0) * k3d
            + (125.0 / 192.0 - 393.0 / 640.0) * k4d
            + (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k5d
            + (11.0 / 84.0 - 187.0 / 2100.0) * k6d
            - (1.0 / 40.0) * k7d
        )
        et = h * (
            (35.0 / 384.0 - 5179.0 / 57600.0) * k1t
            + (500.0 / 1113.0 - 7571.0 / 16695.0) * k3t
            + (125.0 / 192.0 - 393.0 / 640.0) * k4t
            + (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k5t
            + (11.0 / 84.0 - 187.0 / 2100.0) * k6t
            - (1.0 / 40.0) * k7t
        )

        su = rtol * max(abs(u), abs(un), 1e-4)
        sd = rtol * max(abs(du), abs(dn), 1e-4)
        st = rtol * max(abs(t), abs(tn), 1.0)
        err = max(abs(eu) / su, abs(ed) / sd, abs(et) / st)

        if err <= 1.0:
            u, du, t = un, dn, tn
            phi += h
        fac = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h *= fac
        if h < 1e-12:
            h = 1e-12
    return 0, u, du, t, phi


@jit
def _shot_residual(u0, q, u_target, phi_end, rtol):
    """Signed shooting residual, continuous across capture/escape."""
    status, u_end, _du, _t, phi_stop = _binet_shot(u0, q, phi_end, rtol)
    if status == 1:
        return (_U_CAP - u_target) + (phi_end - phi_stop)
    if status == 2:
        return (_U_FLOOR - u_target) - (phi_end - phi_stop)
    return u_end - u_target


@jit
def _bisect_connector(u0, qa, qb, u_target, phi_end, rtol):
    fa = _shot_residual(u0, qa, u_target, phi_end, rtol)
    for _ in range(90):
        qm = 0.5 * (qa + qb)
        fm = _shot_residual(u0, qm, u_target, phi_end, rtol)
        if fa * fm <= 0.0:
            qb = qm
        else:
            qa = qm
            fa = fm
        if abs(qb - qa) < 1e-16 * (1.0 + abs(qa)):
            break
    return 0.5 * (qa + qb)


def _shooting_grid(u0, u_target=0.5, phi_end=math.pi):
    """q samples: coarse cover plus geometric refinement near the critical
    slopes where orbits hug the photon sphere (connector families bunch
    exponentially close to them), plus a coarse far tail for the steep
    near-radial connectors of small swept angles."""
    pieces = [np.linspace(-6.0, 6.0, 481)]
    q_far = 6.0 + 4.0 * max(u0, u_target) * (1.0 + 1.0 / phi_end)
    if q_far > 6.0:
        tail = np.geomspace(6.0, q_far, 160)
        pieces.append(tail)
        pieces.append(-tail)
    qc2 = _CRITICAL_INV_B2 - u0 * u0 * (1.0 - 2.0 * u0)
    if qc2 > 0.0:
        offs = np.logspace(-13, np.log10(0.5), 48)
        for qc in (math.sqrt(qc2), -math.sqrt(qc2)):
            pieces.append(qc + offs)
            pieces.append(qc - offs)
    grid = np.unique(np.concatenate(pieces))
    return grid


def _connectors(u0, u_target, phi_end, rtol=1e-12):
    """All shooting roots q with u(phi_end; q) = u_target, with their times."""
    grid = _shooting_grid(u0, u_target, phi_end)
    res = np.array(
        [_shot_residual(u0, q, u_target, phi_end, rtol) for q in grid]
    )
    found = []
    for i in range(len(grid) - 1):
        if res[i] == 0.0:
            found.append(grid[i])
        elif res[i] * res[i + 1] < 0.0:
            found.append(
                _bisect_connector(u0, grid[i], grid[i + 1], u_target, phi_end, rtol)
            )
    if res[-1] == 0.0:
        found.append(grid[-1])

    out = []
    for q in found:
        status, u_end, _du, t, _phi = _binet_shot(u0, q, phi_end, rtol)
        if status != 0:
            continue
        if abs(u_end - u_target) > 1e-7 * max(u_target, 1e-3):
            continue
        out.append((t, q))
    out.sort()
    # drop duplicates from adjacent brackets converging to the same root
    dedup = []
    for t, q in out:
        if dedup and abs(t - dedup[-1][0]) < 1e-9 * (1.0 + abs(t)):
            continue
        dedup.append((t, q))
    return dedup


def null_propagation_times(params, r_a, r_b, gamma, branch=GeodesicBranch.PRIMARY):
    """Coordinate times of all null geodesics joining (r_a, 0) to (r_b, gamma)
    with the branch's swept angle, sorted ascending."""
    _require_exterior(params, r_a, "r_a")
    _require_exterior(params, r_b, "r_b")
    if not (0.0 < gamma <= math.pi):
        raise DomainError(f"gamma must lie in (0, pi], got {gamma}")
    m = params.mass
    phi_end = branch.swept_angle(gamma)
    conns = _connectors(m / r_a, m / r_b, phi_end)
    return [t * m for t, _q in conns]


def null_propagation_time(params, r_a, r_b, gamma, branch=GeodesicBranch.PRIMARY):
    """Light propagation coordinate time: the minimum over connecting
    geodesics of the requested branch.  Raises NoSolutionError if the branch
    does not connect the endpoints."""
    times = null_propagation_times(params, r_a, r_b, gamma, branch)
    if not times:
        raise NoSolutionError(
            f"no {branch.value} null geodesic connects r_a={r_a}, r_b={r_b} "
            f"at gamma={gamma}"
        )
    return times[0]


def propagation_time_curve(params, radii, gamma=math.pi, branch=GeodesicBranch.PRIMARY):
    """Propagation time at fixed gamma for equal-radius detector pairs."""
    return np.array(
        [null_propagation_time(params, r, r, gamma, branch) for r in radii]
    )


# ----------------------------------------------------------------------
# wavefronts at fixed coordinate time
# ----------------------------------------------------------------------


@jit
def _ray_at_time(r0, alpha, t_end, rtol):
    """Null ray from (r0, phi=0) launched at angle alpha from radially
    outward; returns (r, phi, captured) at coordinate time t_end.

    Affine parametrization with energy 1: dr/dt = f pr, dpr/dt = f b^2
    (r-3)/r^4, dphi/dt = f b / r^2, with b = r0 sin(alpha)/sqrt(f0).
    """
    f0 = 1.0 - 2.0 / r0
    b = r0 * np.sin(alpha) / np.sqrt(f0)
    r = r0
    pr = np.cos(alpha)
    phi = 0.0
    t = 0.0
    h = 0.01
    captured = False
    for _ in range(400000):
        if t >= t_end:
            break
        if r < 2.0 + 1e-9:
            captured = True
            break
        if h > t_end - t:
            h = t_end - t

        # 4 stages of a Bogacki-Shampine 3(2) pair; the RHS is cheap and
        # smooth so a lower-order pair with tight tolerance is adequate
        f = 1.0 - 2.0 / r
        k1r = f * pr
        k1p = f * b * b * (r - 3.0) / (r * r * r * r)
        k1f = f * b / (r * r)

        r2 = r + 0.5 * h * k1r
        p2 = pr + 0.5 * h * k1p
        f = 1.0 - 2.0 / r2
        k2r = f * p2
        k2p = f * b * b * (r2 - 3.0) / (r2 * r2 * r2 * r2)
        k2f = f * b / (r2 * r2)

        r3 = r + 0.75 * h * k2r
        p3 = pr + 0.75 * h * k2p
        f = 1.0 - 2.0 / r3
        k3r = f * p3
        k3p = f * b * b * (r3 - 3.0) / (r3 * r3 * r3 * r3)
        k3f = f * b / (r3 * r3)

        rn = r + h * (2.0 * k1r + 3.0 * k2r + 4.0 * k3r) / 9.0
        pn = pr + h * (2.0 * k1p + 3.0 * k2p + 4.0 * k3p) / 9.0
        fn = phi + h * (2.0 * k1f + 3.0 * k2f + 4.0 * k3f) / 9.0

        if rn < 2.0 + 1e-9:
            r, pr, phi = rn, pn, fn
            t += h
            continue

        f = 1.0 - 2.0 / rn
        k4r = f * pn
        k4p = f * b * b * (rn - 3.0) / (rn * rn * rn * rn)
        k4f = f * b / (rn * rn)

        er = h * (-5.0 * k1r / 72.0 + k2r / 12.0 + k3r / 9.0 - k4r / 8.0)
        ep = h * (-5.0 * k1p / 72.0 + k2p / 12.0 + k3p / 9.0 - k4p / 8.0)
        ef = h * (-5.0 * k1f / 72.0 + k2f / 12.0 + k3f / 9.0 - k4f / 8.0)

        sr = rtol * max(abs(r), abs(rn), 1.0)
        sp = rtol * max(abs(pr), abs(pn), 1e-3)
        sf = rtol * max(abs(phi), abs(fn), 1e-3)
        err = max(abs(er) / sr, abs(ep) / sp, abs(ef) / sf)

        if err <= 1.0:
            r, pr, phi = rn, pn, fn
            t += h
        fac = 0.9 * err ** (-1.0 / 3.0) if err > 0.0 else 5.0
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h *= fac
        if h < 1e-13:
            h = 1e-13
    if r < 2.0 + 1e-6 or (pr < 0.0 and b < 3.0 * np.sqrt(3.0) and r < 3.0):
        captured = True
    return r, phi, captured


@dataclass
class Wavefront:
    """Spatial points reached by a null wavefront at fixed coordinate time.

    Points whose geodesics have fallen into the hole are flagged in
    `captured` and excluded from `polyline()`.
    """

    launch_angle: np.ndarray
    r: np.ndarray
    gamma: np.ndarray
    captured: np.ndarray

    def polyline(self):
        keep = ~self.captured
        return np.column_stack([self.r[keep], self.gamma[keep]])


def wavefront(params, r_emit, delta_t, n_directions=181, rtol=1e-10):
    """Propagate a null wavefront from radius r_emit for coordinate time
    delta_t, one geodesic per launch direction (0 = radially out, pi = in)."""
    _require_exterior(params, r_emit, "r_emit")
    if not delta_t >= 0.0:
        raise DomainError(f"delta_t must be non-negative, got {delta_t}")
    if n_directions < 2:
        raise DomainError("need at least two launch directions")
    m = params.mass
    alphas = np.linspace(0.0, math.pi, n_directions)
    rr = np.empty(n_directions)
    gg = np.empty(n_directions)
    cap = np.zeros(n_directions, dtype=bool)
    for i, a in enumerate(alphas):
        r, phi, c = _ray_at_time(r_emit / m, a, delta_t / m, rtol)
        rr[i] = r * m
        gg[i] = phi
        cap[i] = c
    return Wavefront(alphas, rr, gg, cap)


@jit
def _time_to_axis(u0, q, rtol):
    """Coordinate time for a shot to sweep phi = pi; inf if it never does."""
    status, _u, _du, t, _phi = _binet_shot(u0, q, np.pi, rtol)
    if status != 0:
        return np.inf, 0.0
    return t, _u


def axis_touch_time(params, r_emit, rtol=1e-12):
    """First time the wavefront from r_emit reaches the antipodal axis.

    Minimizes the gamma = pi arrival time over launch slope; the minimizer is
    the focusing (caustic) point, returned as (time, radius at the axis).
    """
    _require_exterior(params, r_emit, "r_emit")
    m = params.mass
    u0 = m / r_emit
    grid = _shooting_grid(u0)
    times = np.empty(len(grid))
    for i, q in enumerate(grid):
        times[i], _ = _time_to_axis(u0, q, rtol)
    i0 = int(np.argmin(times))
    lo = grid[max(i0 - 1, 0)]
    hi = grid[min(i0 + 1, len(grid) - 1)]
    # golden-section refine
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, _ = _time_to_axis(u0, c, rtol)
    fd, _ = _time_to_axis(u0, d, rtol)
    for _ in range(120):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc, _ = _time_to_axis(u0, c, rtol)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd, _ = _time_to_axis(u0, d, rtol)
        if abs(b - a) < 1e-15 * (1.0 + abs(a)):
            break
    qbest = 0.5 * (a + b)
    tbest, ubest = _time_to_axis(u0, qbest, rtol)
    return tbest * m, m / ubest
