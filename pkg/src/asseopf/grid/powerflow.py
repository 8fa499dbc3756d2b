"""Newton-Raphson AC power flow in polar coordinates, dense formulation.

Also hosts the admittance builder and the complex-voltage derivative
helpers shared with the OPF solver.  Dense matrices are fine at the network
sizes targeted here (well under a hundred buses).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .case import PowerSystemCase

__all__ = [
    "Admittances",
    "build_admittances",
    "dsbus_dv",
    "dsbranch_dv",
    "PowerFlowResult",
    "newton_power_flow",
    "power_mismatch",
]


@dataclass(frozen=True)
class Admittances:
    ybus: np.ndarray  # (nb, nb) complex
    yf: np.ndarray  # (nl, nb) from-end currents
    yt: np.ndarray  # (nl, nb) to-end currents
    f: np.ndarray  # (nl,) from-bus positions
    t: np.ndarray  # (nl,) to-bus positions


def build_admittances(case: PowerSystemCase) -> Admittances:
    pos = case.bus_index()
    nb = case.n_bus
    nl = len(case.branches)
    ybus = np.zeros((nb, nb), dtype=complex)
    yf = np.zeros((nl, nb), dtype=complex)
    yt = np.zeros((nl, nb), dtype=complex)
    f = np.empty(nl, dtype=int)
    t = np.empty(nl, dtype=int)
    for k, br in enumerate(case.branches):
        i, j = pos[br.f_bus], pos[br.t_bus]
        f[k], t[k] = i, j
        ys = 1.0 / complex(br.r, br.x)
        bc = 0.5j * br.b
        ybus[i, i] += ys + bc
        ybus[j, j] += ys + bc
        ybus[i, j] -= ys
        ybus[j, i] -= ys
        yf[k, i] = ys + bc
        yf[k, j] = -ys
        yt[k, i] = -ys
        yt[k, j] = ys + bc
    for b in case.buses:
        i = pos[b.id]
        ybus[i, i] += complex(b.gs, b.bs) / case.base_mva
    return Admittances(ybus=ybus, yf=yf, yt=yt, f=f, t=t)


def dsbus_dv(ybus: np.ndarray, v: np.ndarray):
    """Partial derivatives of complex bus injections w.r.t. angle and magnitude."""
    ibus = ybus @ v
    diagv = np.diag(v)
    diagvnorm = np.diag(v / np.abs(v))
    ds_dva = 1j * diagv @ np.conj(np.diag(ibus) - ybus @ diagv)
    ds_dvm = diagv @ np.conj(ybus @ diagvnorm) + np.conj(np.diag(ibus)) @ diagvnorm
    return ds_dva, ds_dvm


def dsbranch_dv(ybr: np.ndarray, end: np.ndarray, v: np.ndarray):
    """Derivatives of complex branch-end flows S = V_end * conj(Ybr V)."""
    ibr = ybr @ v
    vend = v[end]
    diagv = np.diag(v)
    diagvnorm = np.diag(v / np.abs(v))
    cend = np.zeros((len(end), v.size))
    cend[np.arange(len(end)), end] = 1.0
    dva = 1j * (
        np.diag(np.conj(ibr)) @ cend @ diagv - np.diag(vend) @ np.conj(ybr @ diagv)
    )
    dvm = np.diag(vend) @ np.conj(ybr @ diagvnorm) + np.diag(np.conj(ibr)) @ cend @ diagvnorm
    return dva, dvm


def power_mismatch(case: PowerSystemCase, vm, va, pg_bus=None, qg_bus=None) -> np.ndarray:
    """Complex per-bus mismatch S_inj(V) - (generation - load), p.u."""
    adm = build_admittances(case)
    vm = np.asarray(vm, dtype=float)
    va = np.asarray(va, dtype=float)
    v = vm * np.exp(1j * va)
    pg_bus = np.zeros(case.n_bus) if pg_bus is None else np.asarray(pg_bus, dtype=float)
    qg_bus = np.zeros(case.n_bus) if qg_bus is None else np.asarray(qg_bus, dtype=float)
    pd = np.array([b.pd for b in case.buses])
    qd = np.array([b.qd for b in case.buses])
    s_spec = ((pg_bus - pd) + 1j * (qg_bus - qd)) / case.base_mva
    return v * np.conj(adm.ybus @ v) - s_spec


@dataclass(frozen=True)
class PowerFlowResult:
    vm: np.ndarray
    va: np.ndarray  # radians
    converged: bool
    iterations: int
    max_mismatch: float


def newton_power_flow(
    case: PowerSystemCase,
    pg_bus=None,
    qg_bus=None,
    v0=None,
    theta0=None,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> PowerFlowResult:
    """Solve the power-flow equations for given per-bus generation injections.

    pg_bus / qg_bus are scheduled generator injections per bus in MW / MVAr
    (defaults: sum of generator setpoints; zero reactive).  PV and slack bus
    voltage magnitudes are pinned to their generator setpoints.  Starts flat
    unless v0/theta0 are given.
    """
    adm = build_admittances(case)
    nb = case.n_bus
    pos = case.bus_index()

    if pg_bus is None:
        pg_bus = np.zeros(nb)
        for g in case.generators:
            pg_bus[pos[g.bus]] += g.pg0
    else:
        pg_bus = np.asarray(pg_bus, dtype=float)
    if qg_bus is None:
        qg_bus = np.zeros(nb)
    else:
        qg_bus = np.asarray(qg_bus, dtype=float)

    pd = np.array([b.pd for b in case.buses])
    qd = np.array([b.qd for b in case.buses])
    s_spec = ((pg_bus - pd) + 1j * (qg_bus - qd)) / case.base_mva

    types = [b.btype for b in case.buses]
    slack = [i for i, t in enumerate(types) if t == "slack"]
    pv = [i for i, t in enumerate(types) if t == "PV"]
    pq = [i for i, t in enumerate(types) if t == "PQ"]
    if len(slack) != 1:
        raise ValueError("power flow requires exactly one slack bus")

    vm = np.ones(nb) if v0 is None else np.asarray(v0, dtype=float).copy()
    va = np.zeros(nb) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    vset = {pos[g.bus]: g.vg for g in case.generators}
    for i in slack + pv:
        vm[i] = vset.get(i, vm[i] if v0 is not None else 1.0)

    pvpq = pv + pq
    grow_count = 0
    prev_norm = np.inf
    for it in range(max_iter + 1):
        v = vm * np.exp(1j * va)
        mis = v * np.conj(adm.ybus @ v) - s_spec
        fvec = np.concatenate([mis[pvpq].real, mis[pq].imag])
        norm = float(np.abs(fvec).max()) if fvec.size else 0.0
        if norm < tol:
            return PowerFlowResult(vm=vm, va=va, converged=True, iterations=it, max_mismatch=norm)
        if it == max_iter:
            break
        if norm > prev_norm:
            grow_count += 1
            if grow_count >= 5:
                break
        else:
            grow_count = 0
        prev_norm = norm
        ds_dva, ds_dvm = dsbus_dv(adm.ybus, v)
        j11 = ds_dva[np.ix_(pvpq, pvpq)].real
        j12 = ds_dvm[np.ix_(pvpq, pq)].real
        j21 = ds_dva[np.ix_(pq, pvpq)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, -fvec)
        except np.linalg.LinAlgError:
            break
        va[pvpq] += dx[: len(pvpq)]
        vm[pq] += dx[len(pvpq) :]
    v = vm * np.exp(1j * va)
    mis = v * np.conj(adm.ybus @ v) - s_spec
    fvec = np.concatenate([mis[pvpq].real, mis[pq].imag])
    norm = float(np.abs(fvec).max()) if fvec.size else 0.0
    return PowerFlowResult(vm=vm, va=va, converged=False, iterations=max_iter, max_mismatch=norm)
