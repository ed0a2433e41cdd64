"""Parameter sweeps reproducing the detector-pair scenarios, with CSV/JSON output.

A sweep varies one of {gamma, delay, radius} while the remaining detector
parameters stay fixed, evaluating the pair response for each requested field
state.  Output rows carry the density-matrix entries, the negativity, an
entangled flag and the convergence diagnostics; rows with tail warnings are
flagged, never dropped.  Re-running a sweep with the same configuration and
mode table is byte-identical (deterministic reductions, fixed float
formatting, no timestamps).
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import DomainError
from .response import (
    ConvergenceControls,
    DetectorPairSpec,
    DetectorSpec,
    l_term,
    m_term,
    negativity,
    recombine_per_l,
    width_for_proper,
)
from .states import FieldState

SWEEP_KINDS = ("gamma", "delay", "radius")


@dataclass
class SweepSpec:
    """Declarative sweep configuration (mirrors the JSON config format)."""

    kind: str
    start: float = 0.0
    stop: float = 0.0
    count: int = 0
    radii: list = field(default_factory=list)  # radius sweeps: explicit list
    states: list = field(default_factory=lambda: ["boulware"])
    radius_a: float = 6.009
    radius_b: float = 6.009
    gap_a: float = 5.0
    gap_b: float = 5.0
    coupling_a: float = 1.0
    coupling_b: float = 1.0
    width: float = 1.0
    proper_width: float = 0.0  # if > 0, width = proper_width/sqrt(f(r))
    gamma: float = math.pi
    delay: float = 0.0
    l_cut: int = 40

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise DomainError(f"sweep kind must be one of {SWEEP_KINDS}, got {self.kind!r}")
        if self.kind == "radius":
            if not self.radii:
                raise DomainError("radius sweeps need an explicit radii list")
        elif self.count < 2:
            raise DomainError("sweeps need count >= 2")
        if self.kind == "gamma":
            if not (0.0 < self.start <= self.stop <= math.pi):
                raise DomainError("gamma range must satisfy 0 < start <= stop <= pi")
        if not (0.0 < self.gamma <= math.pi) and self.kind != "gamma":
            raise DomainError("gamma must lie in (0, pi]")

    def field_states(self):
        return [FieldState.parse(s) for s in self.states]

    def points(self):
        if self.kind == "radius":
            return list(self.radii)
        return list(np.linspace(self.start, self.stop, self.count))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise DomainError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**known)

    def detectors(self, radius_a=None, radius_b=None, delay=None):
        ra = self.radius_a if radius_a is None else radius_a
        rb = self.radius_b if radius_b is None else radius_b
        dl = self.delay if delay is None else delay
        if self.proper_width > 0.0:
            wa = width_for_proper(self.proper_width, ra)
            wb = width_for_proper(self.proper_width, rb)
        else:
            wa = wb = self.width
        a = DetectorSpec(radius=ra, gap=self.gap_a, coupling=self.coupling_a,
                         width=wa, center=0.0)
        b = DetectorSpec(radius=rb, gap=self.gap_b, coupling=self.coupling_b,
                         width=wb, center=dl)
        return a, b


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    peaks: dict
    meta: dict

    def to_csv(self, path, json_mirror=False):
        write_rows_csv(path, self.rows, self.meta, json_mirror=json_mirror)
        echo = dict(self.meta)
        echo["spec"] = self.spec.to_dict()
        with open(f"{path}.config.json", "w") as fh:
            json.dump(echo, fh, indent=2, sort_keys=True)
        return path


_COLUMNS = (
    "point",
    "state",
    "abs_m",
    "abs_m_plus",
    "abs_m_minus",
    "l_aa",
    "l_bb",
    "negativity",
    "entangled",
    "tail_warning",
)


def _fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_rows_csv(path, rows, meta, json_mirror=False):
    lines = [f"# entlens {__version__}"]
    for k in sorted(meta):
        lines.append(f"# {k}: {meta[k]}")
    cols = list(rows[0].keys()) if rows else list(_COLUMNS)
    lines.append(",".join(cols))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if json_mirror:
        with open(f"{path}.json", "w") as fh:
            json.dump({"meta": meta, "rows": rows}, fh, indent=2, sort_keys=True)


def _meta(table, spec):
    return {
        "code_version": __version__,
        "table_checksum": table.checksum or table.payload_checksum(),
        "l_cut": spec.l_cut,
        "kind": spec.kind,
    }


def _row(point, state, m, m_plus, m_minus, l_aa, l_bb, diag):
    n2 = negativity(l_aa, l_bb, m)
    return {
        "point": float(point),
        "state": state.value,
        "abs_m": abs(m),
        "abs_m_plus": abs(m_plus),
        "abs_m_minus": abs(m_minus),
        "l_aa": l_aa,
        "l_bb": l_bb,
        "negativity": n2,
        "entangled": n2 > 0.0,
        "tail_warning": bool(diag.warnings),
    }


def run_gamma_sweep(spec, table):
    """Angular-separation sweep; per-ell integrals are computed once per
    state and recombined for every gamma."""
    controls = ConvergenceControls(l_cut=spec.l_cut)
    det_a, det_b = spec.detectors()
    gammas = spec.points()
    rows = []
    for state in spec.field_states():
        pair = DetectorPairSpec(a=det_a, b=det_b, gamma=spec.gamma, state=state)
        l_aa = l_term(pair, det_a, det_a, table, controls).real
        l_bb = l_term(pair, det_b, det_b, table, controls).real
        hoisted = m_term(pair, table, controls, with_per_l=True)
        for g in gammas:
            m = recombine_per_l(hoisted["per_l"][0], g, controls.pairwise)
            m_p = recombine_per_l(hoisted["per_l"][1], g, controls.pairwise)
            m_m = recombine_per_l(hoisted["per_l"][2], g, controls.pairwise)
            rows.append(_row(g, state, m, m_p, m_m, l_aa, l_bb, hoisted["diagnostics"]))
    return SweepResult(spec, rows, peaks={}, meta=_meta(table, spec))


def _find_peaks(points, values, floor_fraction=0.02):
    vmax = max(values) if values else 0.0
    peaks = []
    for i in range(1, len(values) - 1):
        if values[i] > values[i - 1] and values[i] > values[i + 1]:
            if values[i] > floor_fraction * vmax:
                peaks.append(float(points[i]))
    return peaks


def run_delay_sweep(spec, table, workers=None):
    """Switching-delay sweep with |m| peak annotation per state."""
    controls = ConvergenceControls(l_cut=spec.l_cut)
    delays = spec.points()
    rows = []
    peaks = {}
    for state in spec.field_states():
        det_a, det_b = spec.detectors()
        pair0 = DetectorPairSpec(a=det_a, b=det_b, gamma=spec.gamma, state=state)
        l_aa = l_term(pair0, det_a, det_a, table, controls).real
        l_bb = l_term(pair0, det_b, det_b, table, controls).real

        def point(d):
            a, b = spec.detectors(delay=d)
            pair = DetectorPairSpec(a=a, b=b, gamma=spec.gamma, state=state)
            return m_term(pair, table, controls)

        with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
            results = list(pool.map(point, delays))
        state_rows = [
            _row(d, state, m, m_p, m_m, l_aa, l_bb, diag)
            for d, (m, m_p, m_m, diag) in zip(delays, results)
        ]
        rows.extend(state_rows)
        peaks[state.value] = _find_peaks(delays, [r["abs_m"] for r in state_rows])
    return SweepResult(spec, rows, peaks=peaks, meta=_meta(table, spec))


def run_radius_sweep(spec, table, workers=None):
    """Equal-radius sweep (both detectors at the same r, gamma fixed)."""
    controls = ConvergenceControls(l_cut=spec.l_cut)
    radii = spec.points()
    rows = []
    peaks = {}
    for state in spec.field_states():

        def point(r):
            a, b = spec.detectors(radius_a=r, radius_b=r)
            pair = DetectorPairSpec(a=a, b=b, gamma=spec.gamma, state=state)
            l_aa = l_term(pair, a, a, table, controls).real
            l_bb = l_term(pair, b, b, table, controls).real
            return l_aa, l_bb, m_term(pair, table, controls)

        with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
            results = list(pool.map(point, radii))
        state_rows = [
            _row(r, state, m, m_p, m_m, l_aa, l_bb, diag)
            for r, (l_aa, l_bb, (m, m_p, m_m, diag)) in zip(radii, results)
        ]
        rows.extend(state_rows)
        peaks[state.value] = _find_peaks(radii, [r["abs_m"] for r in state_rows])
    return SweepResult(spec, rows, peaks=peaks, meta=_meta(table, spec))


def run_sweep(spec, table, workers=None):
    if spec.kind == "gamma":
        return run_gamma_sweep(spec, table)
    if spec.kind == "delay":
        return run_delay_sweep(spec, table, workers=workers)
    return run_radius_sweep(spec, table, workers=workers)
