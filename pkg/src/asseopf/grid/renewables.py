"""Renewable injection models and per-sample case modification.

Wind and PV plants are modeled as fixed negative-PQ loads (zero marginal
cost, no curtailment, Q = 0); stochastic loads rescale both Pd and Qd so the
nominal power factor is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .case import PowerSystemCase

__all__ = ["WindFarm", "PvPlant", "ResModel", "res_power", "apply_uncertainty"]


@dataclass(frozen=True)
class WindFarm:
    bus: int
    capacity_mw: float
    cut_in: float = 3.0  # m/s
    rated: float = 12.0
    cut_out: float = 25.0

    def __post_init__(self):
        if not self.cut_in < self.rated < self.cut_out:
            raise ValueError("wind curve requires cut_in < rated < cut_out")
        if self.capacity_mw <= 0:
            raise ValueError("wind capacity must be positive")


@dataclass(frozen=True)
class PvPlant:
    bus: int
    capacity_mw: float

    def __post_init__(self):
        if self.capacity_mw <= 0:
            raise ValueError("pv capacity must be positive")


@dataclass(frozen=True)
class ResModel:
    wind: WindFarm
    pv: PvPlant


def res_power(model: ResModel, wind_speed: float, irradiance: float) -> tuple[float, float]:
    """(wind MW, pv MW) for a wind speed in m/s and normalized irradiance.

    Cubic wind curve between cut-in and rated, flat at capacity up to
    cut-out, zero outside; PV output is capacity times irradiance.
    """
    if wind_speed < 0:
        raise ValueError("wind speed must be nonnegative")
    if not 0.0 <= irradiance <= 1.0:
        raise ValueError("irradiance must lie in [0, 1]")
    w = model.wind
    if wind_speed < w.cut_in or wind_speed >= w.cut_out:
        p_wind = 0.0
    elif wind_speed >= w.rated:
        p_wind = w.capacity_mw
    else:
        p_wind = (
            w.capacity_mw
            * (wind_speed**3 - w.cut_in**3)
            / (w.rated**3 - w.cut_in**3)
        )
    return p_wind, model.pv.capacity_mw * irradiance


def apply_uncertainty(
    case: PowerSystemCase,
    res: ResModel,
    zeta,
    load_buses: tuple[int, ...],
    stats: dict | None = None,
) -> PowerSystemCase:
    """Realize one uncertain sample on a copy of the case.

    zeta is ordered (wind speed, irradiance, load_1, ..., load_k) with loads
    in MW at the given buses.  Renewable output enters as negative load at
    its bus; sampled loads replace Pd with Qd rescaled proportionally.
    Negative load samples are clamped to zero (counted through stats).
    """
    zeta = np.asarray(zeta, dtype=float).ravel()
    if zeta.size != 2 + len(load_buses):
        raise ValueError(
            f"sample has {zeta.size} entries, expected {2 + len(load_buses)}"
        )
    p_wind, p_pv = res_power(res, zeta[0], zeta[1])
    injections = {res.wind.bus: p_wind, res.pv.bus: p_pv}
    if res.wind.bus == res.pv.bus:
        injections = {res.wind.bus: p_wind + p_pv}

    loads = dict(zip(load_buses, zeta[2:]))
    clamped = 0
    for bus, val in loads.items():
        if val < 0:
            loads[bus] = 0.0
            clamped += 1
    if stats is not None:
        stats["load_clamped"] = stats.get("load_clamped", 0) + clamped

    buses = []
    for b in case.buses:
        pd, qd = b.pd, b.qd
        if b.id in loads:
            new_pd = loads[b.id]
            scale = new_pd / pd if pd != 0 else 0.0
            pd, qd = new_pd, qd * scale
        if b.id in injections:
            pd = pd - injections[b.id]
        buses.append(replace(b, pd=pd, qd=qd))
    return replace(case, buses=tuple(buses))
