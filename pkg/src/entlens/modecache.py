"""Build, persist and serve tables of rescaled radial modes.

A table holds, on a rectangular (ell, omega) grid and a sparse list of radii,
the rescaled in/up modes Rbar = R/(rI) plus per-mode scattering coefficients
and build diagnostics.  Only the radii that detector configurations actually
need are stored; the frequency grid defaults to Mw in [1e-3, 10] in steps of
1e-3 and ell up to 100.

File format (little-endian, fixed field order):

    magic  b"ENTLMT"    6 bytes
    version u16          currently 1
    header length u64, header json utf-8 (grid, code version, build rtol)
    arrays, raw C-order bytes in a fixed order:
        rin_bar, rup_bar            complex128 [lmax+1, n_omega, n_radii]
        incidence, rho_in, rho_up   complex128 [lmax+1, n_omega]
        coeff_log_scale             float64    [lmax+1, n_omega]
        flux_residual               float64    [lmax+1, n_omega]
        wronskian_residual          float64    [lmax+1, n_omega]
    sha256 of everything above     32 bytes

Identical grid + parameters give bit-identical files: no timestamps are
stored, rows are assembled in a fixed order, and worker count does not enter
the payload.  Loading verifies the checksum and re-runs a sampled
flux/Wronskian audit before the table is used.

Lookups are exact-grid only (no interpolation); negative frequencies are
served through Rbar(-w) = conj Rbar(w).
"""

import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import (
    ChecksumError,
    ConvergenceError,
    CoverageError,
    DomainError,
    TableFormatError,
    VersionError,
)
from .geometry import _tortoise_m1
from .radial import DEFAULT_RTOL, ModeIndex, ScatteringCoeffs, _build_row

_MAGIC = b"ENTLMT"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    """Mode-grid declaration: ell range, uniform omega grid, explicit radii."""

    lmax: int = 100
    omega_min: float = 1e-3
    omega_max: float = 10.0
    omega_step: float = 1e-3
    radii: tuple = ()

    def __post_init__(self):
        if self.lmax < 0:
            raise DomainError(f"lmax must be non-negative, got {self.lmax}")
        if not (self.omega_min > 0.0):
            raise DomainError("omega_min must be positive (omega = 0 is excluded)")
        if not (self.omega_step > 0.0):
            raise DomainError("omega_step must be positive")
        if self.omega_max < self.omega_min:
            raise DomainError("omega_max must be at least omega_min")
        radii = tuple(sorted(float(r) for r in self.radii))
        if len(set(radii)) != len(radii):
            raise DomainError("radii must be unique")
        for r in radii:
            if not (r > 2.0):
                raise DomainError(f"radius {r} does not lie outside the horizon")
        object.__setattr__(self, "radii", radii)

    @property
    def n_omega(self):
        return int(round((self.omega_max - self.omega_min) / self.omega_step)) + 1

    def omegas(self):
        return self.omega_min + self.omega_step * np.arange(self.n_omega)

    def to_dict(self):
        return {
            "lmax": self.lmax,
            "omega_min": self.omega_min,
            "omega_max": self.omega_max,
            "omega_step": self.omega_step,
            "radii": list(self.radii),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            lmax=int(d["lmax"]),
            omega_min=float(d["omega_min"]),
            omega_max=float(d["omega_max"]),
            omega_step=float(d["omega_step"]),
            radii=tuple(d["radii"]),
        )


@dataclass
class ModeTable:
    """Rescaled modes and scattering coefficients over a GridSpec."""

    grid: GridSpec
    rin_bar: np.ndarray
    rup_bar: np.ndarray
    incidence: np.ndarray
    rho_in: np.ndarray
    rho_up: np.ndarray
    coeff_log_scale: np.ndarray
    flux_residual: np.ndarray
    wronskian_residual: np.ndarray
    code_version: str = __version__
    build_rtol: float = DEFAULT_RTOL
    checksum: str = field(default="", repr=False)

    # -- grid addressing -------------------------------------------------

    def omega_index(self, omega):
        w = abs(omega)
        k = int(round((w - self.grid.omega_min) / self.grid.omega_step))
        if k < 0 or k >= self.grid.n_omega:
            raise CoverageError(f"omega = {omega} outside the table grid")
        if abs(self.grid.omega_min + k * self.grid.omega_step - w) > 1e-12 * self.grid.omega_step:
            raise CoverageError(f"omega = {omega} is not a grid frequency")
        return k

    def radius_index(self, r):
        for j, rj in enumerate(self.grid.radii):
            if abs(rj - r) <= 1e-12 * max(1.0, abs(r)):
                return j
        raise CoverageError(f"radius {r} is not stored in the table")

    def _check_ell(self, ell):
        if not 0 <= ell <= self.grid.lmax:
            raise CoverageError(f"ell = {ell} outside the table range 0..{self.grid.lmax}")

    # -- access ----------------------------------------------------------

    def lookup(self, kind, ell, omega, r):
        """Stored Rbar value; omega < 0 served via conjugation symmetry."""
        if kind not in ("in", "up"):
            raise DomainError(f"kind must be 'in' or 'up', got {kind!r}")
        if omega == 0.0:
            raise DomainError("omega = 0 is excluded from the mode domain")
        self._check_ell(ell)
        k = self.omega_index(omega)
        j = self.radius_index(r)
        arr = self.rin_bar if kind == "in" else self.rup_bar
        val = arr[ell, k, j]
        return complex(np.conj(val)) if omega < 0.0 else complex(val)

    def coeffs(self, ell, omega):
        self._check_ell(ell)
        k = self.omega_index(omega)
        return ScatteringCoeffs(
            mode=ModeIndex(ell, abs(omega)),
            incidence_mantissa=complex(self.incidence[ell, k]),
            rho_in_mantissa=complex(self.rho_in[ell, k]),
            rho_up_mantissa=complex(self.rho_up[ell, k]),
            log_scale=float(self.coeff_log_scale[ell, k]),
            flux_residual=float(self.flux_residual[ell, k]),
        )

    # -- integrity -------------------------------------------------------

    def payload_checksum(self):
        return _checksum_hex(_serialize(self))

    def audit(self, fraction=0.01, n_resolve=6, tol=1e-8, seed=0):
        """Sampled flux/Wronskian audit plus a few from-scratch re-solves.

        Raises ChecksumError-like ConvergenceError on failure; returns the
        number of modes inspected.
        """
        if len(self.grid.radii) == 0:
            return 0
        rng = np.random.default_rng(seed)
        nl, nw = self.flux_residual.shape
        n_sample = max(1, int(fraction * nl * nw))
        ls = rng.integers(0, nl, n_sample)
        ks = rng.integers(0, nw, n_sample)
        bad = np.flatnonzero(self.flux_residual[ls, ks] > tol)
        if bad.size:
            i = int(bad[0])
            raise ConvergenceError(
                f"flux audit failed at ell={ls[i]}, omega index {ks[i]}: "
                f"residual {self.flux_residual[ls[i], ks[i]]:.3e} > {tol:.1e}"
            )
        bad = np.flatnonzero(self.wronskian_residual[ls, ks] > tol)
        if bad.size:
            i = int(bad[0])
            raise ConvergenceError(
                f"Wronskian audit failed at ell={ls[i]}, omega index {ks[i]}: "
                f"residual {self.wronskian_residual[ls[i], ks[i]]:.3e} > {tol:.1e}"
            )
        # re-solve a few modes end to end and compare the stored values
        for _ in range(min(n_resolve, n_sample)):
            ell = int(rng.integers(0, nl))
            k = int(rng.integers(0, nw))
            row = _solve_single(ell, self.grid.omegas()[k : k + 1], self.grid.radii, self.build_rtol)
            stored = self.rin_bar[ell, k, :]
            fresh = row[0][0]
            rel = np.max(np.abs(stored - fresh) / np.maximum(np.abs(stored), 1e-280))
            stored_up = self.rup_bar[ell, k, :]
            fresh_up = row[1][0]
            rel = max(rel, np.max(np.abs(stored_up - fresh_up) / np.maximum(np.abs(stored_up), 1e-280)))
            if rel > tol:
                raise ConvergenceError(
                    f"re-solve audit failed at ell={ell}, omega index {k}: "
                    f"relative deviation {rel:.3e} > {tol:.1e}"
                )
        return n_sample


def _row_arrays(nw, nr):
    return (
        np.empty((nw, nr), np.complex128),
        np.empty((nw, nr), np.complex128),
        np.empty(nw, np.complex128),
        np.empty(nw, np.complex128),
        np.empty(nw, np.complex128),
        np.empty(nw, np.float64),
        np.empty(nw, np.float64),
        np.empty(nw, np.float64),
        np.zeros(nw, np.int8),
    )


def _solve_single(ell, omegas, radii, rtol):
    radii_asc = np.asarray(radii, dtype=float)
    rstars_asc = np.array([_tortoise_m1(r) for r in radii_asc])
    arrs = _row_arrays(len(omegas), len(radii_asc))
    _build_row(ell, np.asarray(omegas, float), radii_asc, rstars_asc, rtol, *arrs)
    if arrs[-1].max() != 0:
        k = int(np.flatnonzero(arrs[-1])[0])
        raise ConvergenceError(
            f"mode solve failed at ell={ell}, omega={omegas[k]} (status {arrs[-1][k]})"
        )
    return arrs


_STATUS_TEXT = {
    1: "integrator step cap exhausted",
    2: "outgoing boundary series stalled",
    3: "in-mode series term cap hit",
}


def build(grid, rtol=DEFAULT_RTOL, workers=None, resume_dir=None, progress=False):
    """Build a complete ModeTable for the grid.

    Rows (fixed ell) are independent and dispatched to a thread pool; the
    kernels release the GIL.  With resume_dir set, finished rows are written
    there and picked up by a later build with the same parameters.
    """
    nl = grid.lmax + 1
    nw = grid.n_omega
    nr = len(grid.radii)
    omegas = grid.omegas()
    radii_asc = np.asarray(grid.radii, dtype=float)
    rstars_asc = np.array([_tortoise_m1(r) for r in radii_asc])

    rin = np.zeros((nl, nw, nr), np.complex128)
    rup = np.zeros((nl, nw, nr), np.complex128)
    inc = np.zeros((nl, nw), np.complex128)
    rho_i = np.zeros((nl, nw), np.complex128)
    rho_u = np.zeros((nl, nw), np.complex128)
    logs = np.zeros((nl, nw), np.float64)
    flux = np.zeros((nl, nw), np.float64)
    wres = np.zeros((nl, nw), np.float64)

    table = ModeTable(
        grid=grid,
        rin_bar=rin,
        rup_bar=rup,
        incidence=inc,
        rho_in=rho_i,
        rho_up=rho_u,
        coeff_log_scale=logs,
        flux_residual=flux,
        wronskian_residual=wres,
        build_rtol=rtol,
    )
    if nr == 0:
        return table

    params_key = hashlib.sha256(
        json.dumps({"grid": grid.to_dict(), "rtol": rtol, "code": __version__},
                   sort_keys=True).encode()
    ).hexdigest()[:12]

    def row_path(ell):
        return os.path.join(resume_dir, f"row_{ell:04d}_{params_key}.npz")

    def run_row(ell):
        if resume_dir is not None and os.path.exists(row_path(ell)):
            try:
                with np.load(row_path(ell)) as z:
                    return ell, tuple(z[k] for k in
                                      ("rin", "rup", "inc", "rhoi", "rhou", "logs", "flux", "wres"))
            except Exception:
                pass  # unreadable partial file: recompute
        arrs = _row_arrays(nw, nr)
        _build_row(ell, omegas, radii_asc, rstars_asc, rtol, *arrs)
        status = arrs[-1]
        if status.max() != 0:
            k = int(np.flatnonzero(status)[0])
            reason = _STATUS_TEXT.get(int(status[k]), f"status {status[k]}")
            raise ConvergenceError(
                f"mode solve failed at ell={ell}, omega={omegas[k]:.6g}: {reason}"
            )
        out = tuple(arrs[:-1])
        if resume_dir is not None:
            os.makedirs(resume_dir, exist_ok=True)
            np.savez(row_path(ell),
                     rin=out[0], rup=out[1], inc=out[2], rhoi=out[3],
                     rhou=out[4], logs=out[5], flux=out[6], wres=out[7])
        return ell, out

    n_workers = workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        for ell, out in pool.map(run_row, range(nl)):
            rin[ell], rup[ell] = out[0], out[1]
            inc[ell], rho_i[ell], rho_u[ell] = out[2], out[3], out[4]
            logs[ell], flux[ell], wres[ell] = out[5], out[6], out[7]
            if progress:
                print(f"[modes] ell={ell} done ({ell + 1}/{nl})", file=sys.stderr)
    return table


# ----------------------------------------------------------------------
# persistence
# ----------------------------------------------------------------------


def _header_bytes(table):
    header = {
        "grid": table.grid.to_dict(),
        "code_version": table.code_version,
        "build_rtol": table.build_rtol,
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode()


def _serialize(table):
    chunks = [_MAGIC, _FORMAT_VERSION.to_bytes(2, "little")]
    hb = _header_bytes(table)
    chunks.append(len(hb).to_bytes(8, "little"))
    chunks.append(hb)
    for arr in (
        table.rin_bar,
        table.rup_bar,
        table.incidence,
        table.rho_in,
        table.rho_up,
        table.coeff_log_scale,
        table.flux_residual,
        table.wronskian_residual,
    ):
        chunks.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(chunks)


def _checksum_hex(payload):
    return hashlib.sha256(payload).hexdigest()


def save(table, path):
    """Write the table; returns its checksum (hex sha256 of the payload)."""
    payload = _serialize(table)
    digest = hashlib.sha256(payload).digest()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.write(digest)
    os.replace(tmp, path)
    table.checksum = digest.hex()
    return table.checksum


def load(path, audit=True):
    """Read a table, verifying version and checksum; audits before use."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 2 + 8 + 32 or blob[: len(_MAGIC)] != _MAGIC:
        raise TableFormatError(f"{path} is not a mode-table file")
    version = int.from_bytes(blob[len(_MAGIC) : len(_MAGIC) + 2], "little")
    if version != _FORMAT_VERSION:
        raise VersionError(version, _FORMAT_VERSION)
    payload, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise ChecksumError(f"checksum mismatch reading {path}")
    off = len(_MAGIC) + 2
    hlen = int.from_bytes(blob[off : off + 8], "little")
    off += 8
    header = json.loads(blob[off : off + hlen].decode())
    off += hlen
    grid = GridSpec.from_dict(header["grid"])
    nl, nw, nr = grid.lmax + 1, grid.n_omega, len(grid.radii)

    def take(dtype, shape):
        nonlocal off
        count = int(np.prod(shape)) if shape else 0
        nbytes = count * np.dtype(dtype).itemsize
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off).reshape(shape).copy()
        off += nbytes
        return arr

    table = ModeTable(
        grid=grid,
        rin_bar=take(np.complex128, (nl, nw, nr)),
        rup_bar=take(np.complex128, (nl, nw, nr)),
        incidence=take(np.complex128, (nl, nw)),
        rho_in=take(np.complex128, (nl, nw)),
        rho_up=take(np.complex128, (nl, nw)),
        coeff_log_scale=take(np.float64, (nl, nw)),
        flux_residual=take(np.float64, (nl, nw)),
        wronskian_residual=take(np.float64, (nl, nw)),
        code_version=header["code_version"],
        build_rtol=float(header["build_rtol"]),
        checksum=digest.hex(),
    )
    if off != len(payload):
        raise TableFormatError(f"{path}: {len(payload) - off} unexpected trailing bytes")
    if audit:
        table.audit()
    return table
