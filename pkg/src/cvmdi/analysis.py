"""Figure-level computations: parameter sweeps, maximal transmission
distances, added-noise optimization, and protocol comparison tables."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable

from . import __version__
from .errors import CVMDIError, InvalidParameterError
from .protocols import (
    AddedNoiseParams,
    KeyRateReport,
    ProtocolParams,
    key_rate,
    with_geometry,
)
from .search import golden_section_max, positive_edge

SWEEP_VARIABLES = ("distance-symmetric", "lac-with-fixed-lbc", "chi-n")
GEOMETRIES = ("symmetric", "asymmetric", "most-asymmetric")

CHI_N_BRACKET = (0.0, 50.0)
CHI_N_TOL = 1e-4
CHI_N_GRID_POINTS = 11

SCAN_STEP_KM = 1.0
SCAN_CAP_KM = 500.0

DETECTOR_PRESETS = {"perfect": (1.0, 0.0), "practical": (0.9, 0.015)}
VARIANCE_PRESETS = {"ideal": 1e5, "realistic": 5.04}


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep request."""

    variable: str
    start: float
    stop: float
    step: float
    base: ProtocolParams
    noise: AddedNoiseParams | None = None
    optimize_noise: bool = False

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise InvalidParameterError(
                f"unknown sweep variable {self.variable!r}; pick one of {SWEEP_VARIABLES}")
        if self.step <= 0.0:
            raise InvalidParameterError(f"step must be > 0, got {self.step}")
        if self.start > self.stop:
            raise InvalidParameterError(
                f"start {self.start} must not exceed stop {self.stop}")
        if self.variable == "chi-n" and self.base.protocol != "squeezed-modified":
            raise InvalidParameterError("chi-n sweeps need protocol 'squeezed-modified'")

    def grid(self) -> list[float]:
        xs = []
        x = self.start
        k = 0
        while x <= self.stop + 1e-9 * max(1.0, abs(self.stop)):
            xs.append(x)
            k += 1
            x = self.start + k * self.step
        return xs


@dataclass(frozen=True)
class SweepRow:
    x: float
    report: KeyRateReport | None = None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    metadata: dict = field(default_factory=dict)


def _point_params(spec: SweepSpec, x: float) -> tuple[ProtocolParams, AddedNoiseParams | None]:
    if spec.variable == "distance-symmetric":
        return with_geometry(spec.base, l_ac=x, l_bc=x), spec.noise
    if spec.variable == "lac-with-fixed-lbc":
        return with_geometry(spec.base, l_ac=x), spec.noise
    return spec.base, AddedNoiseParams.from_chi_n(x)


def sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate one KeyRateReport per grid point; failures become error rows."""
    rows = []
    for x in spec.grid():
        params, noise = _point_params(spec, x)
        try:
            if spec.optimize_noise and spec.variable != "chi-n":
                chi_star, _ = optimize_added_noise(params)
                report = key_rate(params, AddedNoiseParams.from_chi_n(chi_star))
            else:
                report = key_rate(params, noise)
            rows.append(SweepRow(x=x, report=report))
        except CVMDIError as exc:
            rows.append(SweepRow(x=x, error=str(exc)))
    meta = {"spec": _spec_echo(spec), "tool_version": __version__}
    return SweepResult(rows=tuple(rows), metadata=meta)


def _spec_echo(spec: SweepSpec) -> dict:
    d = {
        "variable": spec.variable,
        "start": spec.start,
        "stop": spec.stop,
        "step": spec.step,
        "optimize_noise": spec.optimize_noise,
        "base": vars(spec.base).copy(),
    }
    if spec.noise is not None:
        d["noise"] = {"t_r": spec.noise.t_r, "n_r": spec.noise.n_r}
    return d


def optimize_added_noise(params: ProtocolParams,
                         bracket: tuple[float, float] = CHI_N_BRACKET,
                         tol: float = CHI_N_TOL) -> tuple[float, float]:
    """Best trusted added noise at this geometry: returns (chi_n*, K*).

    Golden-section over chi_n on the bracket, verified against a coarse
    grid; when a grid point beats the golden result the search is repeated
    around that point (and a warning emitted, since it means the profile
    was not unimodal).  chi_n* = 0 is a legal boundary optimum.
    """
    if params.protocol != "squeezed-modified":
        raise InvalidParameterError("added-noise optimization needs protocol 'squeezed-modified'")

    def objective(chi: float) -> float:
        return key_rate(params, AddedNoiseParams.from_chi_n(chi)).key_rate

    lo, hi = bracket
    best_x, best_f = golden_section_max(objective, lo, hi, tol)
    step = (hi - lo) / (CHI_N_GRID_POINTS - 1)
    grid = [lo + i * step for i in range(CHI_N_GRID_POINTS)]
    grid_vals = [(x, objective(x)) for x in grid]
    grid_x, grid_f = max(grid_vals, key=lambda p: p[1])
    if grid_f > best_f:
        warnings.warn(
            f"added-noise profile not unimodal near chi_n={grid_x}; refining around the grid",
            RuntimeWarning)
        sub_lo = max(lo, grid_x - step)
        sub_hi = min(hi, grid_x + step)
        rx, rf = golden_section_max(objective, sub_lo, sub_hi, tol)
        if rf > best_f:
            best_x, best_f = rx, rf
        if grid_f > best_f:
            best_x, best_f = grid_x, grid_f
    return best_x, best_f


@dataclass(frozen=True)
class MaxDistanceResult:
    l_star_km: float
    l_ab_km: float
    mode: str
    positive_at_origin: bool
    capped: bool = False
    tol_km: float = 0.05


def max_distance(params: ProtocolParams, mode: str = "symmetric",
                 noise_policy: str = "none", noise: AddedNoiseParams | None = None,
                 tol_km: float = 0.05, cap_km: float = SCAN_CAP_KM) -> MaxDistanceResult:
    """Largest channel length with positive key rate.

    mode 'symmetric' scans d = L_AC = L_BC (total L_AB = 2d); mode
    'fixed-lbc' scans L_AC at the configured L_BC.  noise_policy:
    'none' for the plain protocols, 'fixed' to use `noise` as given,
    'optimized' to re-optimize chi_n inside every evaluation.  Found by a
    1 km forward scan for the last positive point, then bisection.
    """
    if mode not in ("symmetric", "fixed-lbc"):
        raise InvalidParameterError(f"unknown max-distance mode {mode!r}")
    if noise_policy not in ("none", "fixed", "optimized"):
        raise InvalidParameterError(f"unknown noise policy {noise_policy!r}")
    if noise_policy == "none" and params.protocol == "squeezed-modified":
        raise InvalidParameterError(
            "protocol 'squeezed-modified' needs noise_policy 'fixed' or 'optimized'")
    if noise_policy != "none" and params.protocol != "squeezed-modified":
        raise InvalidParameterError(
            f"noise policy {noise_policy!r} needs protocol 'squeezed-modified'")

    def geometry(length: float) -> ProtocolParams:
        if mode == "symmetric":
            return with_geometry(params, l_ac=length, l_bc=length)
        return with_geometry(params, l_ac=length)

    def k_of(length: float) -> float:
        p = geometry(length)
        if noise_policy == "optimized":
            _, k = optimize_added_noise(p)
            return k
        return key_rate(p, noise if noise_policy == "fixed" else None).key_rate

    def total(length: float) -> float:
        return 2.0 * length if mode == "symmetric" else length + params.l_bc

    if k_of(0.0) <= 0.0:
        return MaxDistanceResult(0.0, total(0.0) if mode == "symmetric" else params.l_bc,
                                 mode, positive_at_origin=False, tol_km=tol_km)
    edge, capped = positive_edge(k_of, SCAN_STEP_KM, tol_km, cap_km)
    return MaxDistanceResult(edge, total(edge), mode, positive_at_origin=True,
                             capped=capped, tol_km=tol_km)


@dataclass(frozen=True)
class ComparisonRow:
    protocol: str
    detector: str
    l_bc_km: float | None
    l_star_km: float
    l_ab_km: float
    positive_at_origin: bool
    capped: bool


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    metadata: dict


def compare_protocols(base: ProtocolParams, geometry: str = "most-asymmetric",
                      detectors: Iterable[str] = ("perfect", "practical"),
                      l_bc_grid: Iterable[float] = (0.0, 1.0, 2.0, 5.0),
                      tol_km: float = 0.05) -> ComparisonTable:
    """Max-distance table over protocols x detector presets.

    geometry 'symmetric' scans d = L_AC = L_BC; 'most-asymmetric' pins
    L_BC = 0 and scans L_AC; 'asymmetric' scans L_AC at each L_BC in
    l_bc_grid and keeps the best total per (protocol, detector).  The
    modified protocol always re-optimizes chi_n per evaluation.
    """
    if geometry not in GEOMETRIES:
        raise InvalidParameterError(f"unknown geometry {geometry!r}; pick one of {GEOMETRIES}")
    rows = []
    for protocol in ("coherent", "squeezed", "squeezed-modified"):
        for det in detectors:
            if det not in DETECTOR_PRESETS:
                raise InvalidParameterError(f"unknown detector preset {det!r}")
            eta, v_el = DETECTOR_PRESETS[det]
            p = replace(base, protocol=protocol, eta=eta, v_el=v_el)
            policy = "optimized" if protocol == "squeezed-modified" else "none"
            if geometry == "symmetric":
                res = max_distance(p, mode="symmetric", noise_policy=policy, tol_km=tol_km)
                rows.append(ComparisonRow(protocol, det, None, res.l_star_km, res.l_ab_km,
                                          res.positive_at_origin, res.capped))
            else:
                grid = [0.0] if geometry == "most-asymmetric" else list(l_bc_grid)
                best = None
                for l_bc in grid:
                    res = max_distance(with_geometry(p, l_bc=l_bc), mode="fixed-lbc",
                                       noise_policy=policy, tol_km=tol_km)
                    row = ComparisonRow(protocol, det, l_bc, res.l_star_km, res.l_ab_km,
                                        res.positive_at_origin, res.capped)
                    if best is None or row.l_ab_km > best.l_ab_km:
                        best = row
                rows.append(best)
    meta = {"geometry": geometry, "base": vars(base).copy(), "tol_km": tol_km,
            "tool_version": __version__}
    return ComparisonTable(rows=tuple(rows), metadata=meta)
