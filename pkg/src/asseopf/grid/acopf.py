"""AC optimal power flow via a primal-dual interior-point method.

Polar formulation with variables [theta, Vm, Pg, Qg]; equalities are the
bus power balances plus the slack angle reference, inequalities are voltage
bands, generator capability boxes, and squared branch MVA limits at both
ends.  Newton steps use exact analytic Hessians of the Lagrangian; slack
and multiplier positivity is kept by fraction-to-boundary damping with a
centering parameter of 0.1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .case import PowerSystemCase
from .powerflow import build_admittances, dsbus_dv, dsbranch_dv, newton_power_flow

__all__ = ["OpfStatus", "OpfSolution", "solve_ac_opf", "warm_start_from"]

_XI = 0.99995  # fraction-to-boundary
_SIGMA = 0.1  # centering
_Z0 = 1.0
_GAMMA0 = 1.0


class OpfStatus(str, enum.Enum):
    CONVERGED = "Converged"
    INFEASIBLE_OR_MAX_ITER = "InfeasibleOrMaxIter"


@dataclass(frozen=True)
class OpfSolution:
    pg: np.ndarray  # MW per generator
    qg: np.ndarray  # MVAr per generator
    vm: np.ndarray  # p.u. per bus
    va: np.ndarray  # rad per bus
    objective: float  # $/h
    status: OpfStatus
    kkt_residual: float
    iterations: int
    max_mismatch: float  # p.u., power balance at the returned point
    max_violation: float  # worst inequality violation (<= 0 means feasible)

    @property
    def converged(self) -> bool:
        return self.status is OpfStatus.CONVERGED


def _quadform_hessian(a: np.ndarray, v: np.ndarray, vm: np.ndarray):
    """Hessian blocks of psi = sum_ik a_ik V_i conj(V_k) w.r.t. (theta, Vm)."""
    b = a * v[:, None] * np.conj(v)[None, :]
    rs = b.sum(axis=1)
    cs = b.sum(axis=0)
    haa = b + b.T - np.diag(rs + cs)
    hav = 1j * (b - b.T + np.diag(rs - cs)) / vm[None, :]
    hvv = (b + b.T) / (vm[:, None] * vm[None, :])
    return haa, hav, hvv


def _assemble_quadform(a: np.ndarray, v: np.ndarray, vm: np.ndarray, nx: int) -> np.ndarray:
    nb = v.size
    haa, hav, hvv = _quadform_hessian(a, v, vm)
    h = np.zeros((nx, nx), dtype=complex)
    h[:nb, :nb] = haa
    h[:nb, nb : 2 * nb] = hav
    h[nb : 2 * nb, :nb] = hav.T
    h[nb : 2 * nb, nb : 2 * nb] = hvv
    return h


class _OpfProblem:
    def __init__(self, case: PowerSystemCase):
        self.case = case
        self.adm = build_admittances(case)
        self.nb = case.n_bus
        self.ng = case.n_gen
        self.base = case.base_mva
        pos = case.bus_index()
        self.gen_bus = np.array([pos[g.bus] for g in case.generators])
        self.cg = np.zeros((self.nb, self.ng))
        self.cg[self.gen_bus, np.arange(self.ng)] = 1.0
        self.slack = case.slack_position()
        self.pd = np.array([b.pd for b in case.buses]) / self.base
        self.qd = np.array([b.qd for b in case.buses]) / self.base
        self.vmin = np.array([b.vmin for b in case.buses])
        self.vmax = np.array([b.vmax for b in case.buses])
        self.pmin = np.array([g.pmin for g in case.generators]) / self.base
        self.pmax = np.array([g.pmax for g in case.generators]) / self.base
        self.qmin = np.array([g.qmin for g in case.generators]) / self.base
        self.qmax = np.array([g.qmax for g in case.generators]) / self.base
        self.c2 = np.array([g.c2 for g in case.generators])
        self.c1 = np.array([g.c1 for g in case.generators])
        self.c0 = np.array([g.c0 for g in case.generators])
        self.rated = np.flatnonzero(np.array([br.rate_mva for br in case.branches]) > 0)
        self.rate2 = (
            np.array([case.branches[k].rate_mva for k in self.rated]) / self.base
        ) ** 2
        self.yf = self.adm.yf[self.rated]
        self.yt = self.adm.yt[self.rated]
        self.fpos = self.adm.f[self.rated]
        self.tpos = self.adm.t[self.rated]
        self.nx = 2 * self.nb + 2 * self.ng
        self.ne = 2 * self.nb + 1
        self.nh = 2 * self.nb + 4 * self.ng + 2 * len(self.rated)
        nb, ng = self.nb, self.ng
        self.iva = slice(0, nb)
        self.ivm = slice(nb, 2 * nb)
        self.ipg = slice(2 * nb, 2 * nb + ng)
        self.iqg = slice(2 * nb + ng, 2 * nb + 2 * ng)

    # -- objective ---------------------------------------------------------
    def cost(self, x):
        pg = x[self.ipg] * self.base
        return float(np.sum(self.c2 * pg**2 + self.c1 * pg + self.c0))

    def cost_grad(self, x):
        g = np.zeros(self.nx)
        pg = x[self.ipg] * self.base
        g[self.ipg] = (2.0 * self.c2 * pg + self.c1) * self.base
        return g

    def cost_hess_diag(self):
        d = np.zeros(self.nx)
        d[self.ipg] = 2.0 * self.c2 * self.base**2
        return d

    # -- constraints -------------------------------------------------------
    def _voltages(self, x):
        return x[self.ivm] * np.exp(1j * x[self.iva])

    def equalities(self, x):
        v = self._voltages(x)
        mis = v * np.conj(self.adm.ybus @ v) + (self.pd + 1j * self.qd)
        mis -= self.cg @ (x[self.ipg] + 1j * x[self.iqg])
        return np.concatenate([mis.real, mis.imag, [x[self.iva][self.slack]]])

    def equality_jacobian(self, x):
        v = self._voltages(x)
        dva, dvm = dsbus_dv(self.adm.ybus, v)
        dg = np.zeros((self.ne, self.nx))
        nb = self.nb
        dg[:nb, self.iva] = dva.real
        dg[:nb, self.ivm] = dvm.real
        dg[:nb, self.ipg] = -self.cg
        dg[nb : 2 * nb, self.iva] = dva.imag
        dg[nb : 2 * nb, self.ivm] = dvm.imag
        dg[nb : 2 * nb, self.iqg] = -self.cg
        dg[2 * nb, self.slack] = 1.0
        return dg

    def _flows(self, x):
        v = self._voltages(x)
        sf = v[self.fpos] * np.conj(self.yf @ v)
        st = v[self.tpos] * np.conj(self.yt @ v)
        return sf, st

    def inequalities(self, x):
        vm = x[self.ivm]
        pg = x[self.ipg]
        qg = x[self.iqg]
        sf, st = self._flows(x)
        return np.concatenate(
            [
                self.vmin - vm,
                vm - self.vmax,
                self.pmin - pg,
                pg - self.pmax,
                self.qmin - qg,
                qg - self.qmax,
                np.abs(sf) ** 2 - self.rate2,
                np.abs(st) ** 2 - self.rate2,
            ]
        )

    def inequality_jacobian(self, x):
        nb, ng, nr = self.nb, self.ng, len(self.rated)
        dh = np.zeros((self.nh, self.nx))
        row = 0
        dh[row : row + nb, self.ivm] = -np.eye(nb)
        row += nb
        dh[row : row + nb, self.ivm] = np.eye(nb)
        row += nb
        dh[row : row + ng, self.ipg] = -np.eye(ng)
        row += ng
        dh[row : row + ng, self.ipg] = np.eye(ng)
        row += ng
        dh[row : row + ng, self.iqg] = -np.eye(ng)
        row += ng
        dh[row : row + ng, self.iqg] = np.eye(ng)
        row += ng
        if nr:
            v = self._voltages(x)
            sf, st = self._flows(x)
            for ybr, end, s in ((self.yf, self.fpos, sf), (self.yt, self.tpos, st)):
                dva, dvm = dsbranch_dv(ybr, end, v)
                block = 2.0 * np.real(
                    np.conj(s)[:, None] * np.column_stack([dva, dvm])
                )
                dh[row : row + nr, : 2 * nb] = block
                row += nr
        return dh

    def lagrangian_hessian(self, x, lam, mu):
        nb = self.nb
        v = self._voltages(x)
        vm = x[self.ivm]
        h = np.zeros((self.nx, self.nx))
        np.fill_diagonal(h, self.cost_hess_diag())
        lam_p = lam[:nb]
        lam_q = lam[nb : 2 * nb]
        yconj = np.conj(self.adm.ybus)
        h += np.real(_assemble_quadform(lam_p[:, None] * yconj, v, vm, self.nx))
        h += np.imag(_assemble_quadform(lam_q[:, None] * yconj, v, vm, self.nx))
        nr = len(self.rated)
        if nr:
            sf, st = self._flows(x)
            off = 2 * nb + 4 * self.ng
            mu_f = mu[off : off + nr]
            mu_t = mu[off + nr : off + 2 * nr]
            for ybr, end, s, m in (
                (self.yf, self.fpos, sf, mu_f),
                (self.yt, self.tpos, st, mu_t),
            ):
                if not np.any(m):
                    continue
                eta = m * np.conj(s)
                cend = np.zeros((nr, self.nb))
                cend[np.arange(nr), end] = 1.0
                a = cend.T @ (eta[:, None] * np.conj(ybr))
                h += 2.0 * np.real(_assemble_quadform(a, v, vm, self.nx))
                dva, dvm = dsbranch_dv(ybr, end, v)
                j = np.column_stack([dva, dvm])
                block = 2.0 * np.real(j.T @ (m[:, None] * np.conj(j)))
                h[: 2 * nb, : 2 * nb] += block
        return 0.5 * (h + h.T)

    def default_x0(self):
        x = np.zeros(self.nx)
        x[self.ivm] = 1.0
        x[self.ipg] = 0.5 * (self.pmin + self.pmax)
        x[self.iqg] = 0.0
        return x

    def clip_interior(self, x, margin=0.05):
        x = x.copy()

        def squeeze(vals, lo, hi):
            span = np.maximum(hi - lo, 1e-12)
            return np.clip(vals, lo + margin * span, hi - margin * span)

        x[self.ivm] = squeeze(x[self.ivm], self.vmin, self.vmax)
        x[self.ipg] = squeeze(x[self.ipg], self.pmin, self.pmax)
        x[self.iqg] = squeeze(x[self.iqg], self.qmin, self.qmax)
        return x


def warm_start_from(case: PowerSystemCase, solution: OpfSolution | None = None) -> np.ndarray:
    """Initial OPF point from a previous solution or a nominal power flow."""
    prob = _OpfProblem(case)
    x = prob.default_x0()
    if solution is not None:
        x[prob.iva] = solution.va
        x[prob.ivm] = solution.vm
        x[prob.ipg] = solution.pg / case.base_mva
        x[prob.iqg] = solution.qg / case.base_mva
        return x
    pf = newton_power_flow(case)
    if pf.converged:
        x[prob.iva] = pf.va
        x[prob.ivm] = pf.vm
        # generator dispatch consistent with the flow solution
        v = pf.vm * np.exp(1j * pf.va)
        sinj = v * np.conj(prob.adm.ybus @ v)
        pg_bus = sinj.real + prob.pd
        qg_bus = sinj.imag + prob.qd
        share = 1.0 / np.bincount(prob.gen_bus, minlength=prob.nb)[prob.gen_bus]
        x[prob.ipg] = pg_bus[prob.gen_bus] * share
        x[prob.iqg] = qg_bus[prob.gen_bus] * share
    return x


def solve_ac_opf(
    case: PowerSystemCase,
    x0: np.ndarray | None = None,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> OpfSolution:
    """Minimize generation cost subject to AC power flow and operating limits."""
    prob = _OpfProblem(case)
    x = prob.clip_interior(prob.default_x0() if x0 is None else np.asarray(x0, dtype=float))
    ne, nh = prob.ne, prob.nh

    lam = np.zeros(ne)
    h = prob.inequalities(x)
    z = np.maximum(_Z0, -h)
    mu = _GAMMA0 / z

    f_old = prob.cost(x)
    kkt = np.inf
    iterations = 0
    converged = False
    for it in range(1, max_iter + 1):
        iterations = it
        g = prob.equalities(x)
        dg = prob.equality_jacobian(x)
        h = prob.inequalities(x)
        dh = prob.inequality_jacobian(x)
        df = prob.cost_grad(x)
        lx = df + dg.T @ lam + dh.T @ mu

        feascond = max(np.abs(g).max(), max(h.max(), 0.0)) / (
            1.0 + max(np.abs(x).max(), np.abs(z).max())
        )
        gradcond = np.abs(lx).max() / (
            1.0 + max(np.abs(lam).max() if ne else 0.0, np.abs(mu).max())
        )
        compcond = float(z @ mu) / (1.0 + np.abs(x).max())
        f_new = prob.cost(x)
        costcond = abs(f_new - f_old) / (1.0 + abs(f_old))
        f_old = f_new
        kkt = max(feascond, gradcond, compcond)
        if feascond < tol and gradcond < tol and compcond < tol and costcond < tol:
            converged = True
            break

        gamma = _SIGMA * float(z @ mu) / nh
        with np.errstate(over="ignore", invalid="ignore"):
            zinv = 1.0 / z
            lxx = prob.lagrangian_hessian(x, lam, mu)
            m = lxx + dh.T @ (dh * (mu * zinv)[:, None])
            n = lx + dh.T @ (zinv * (gamma + mu * h))
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(n))):
            break
        kktmat = np.zeros((prob.nx + ne, prob.nx + ne))
        kktmat[: prob.nx, : prob.nx] = m
        kktmat[: prob.nx, prob.nx :] = dg.T
        kktmat[prob.nx :, : prob.nx] = dg
        rhs = np.concatenate([-n, -g])
        try:
            step = np.linalg.solve(kktmat, rhs)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        dx = step[: prob.nx]
        dlam = step[prob.nx :]
        dz = -h - z - dh @ dx
        dmu = -mu + zinv * (gamma - mu * dz)

        neg_z = dz < 0
        alpha_p = min(1.0, _XI * np.min(-z[neg_z] / dz[neg_z])) if neg_z.any() else 1.0
        neg_m = dmu < 0
        alpha_d = min(1.0, _XI * np.min(-mu[neg_m] / dmu[neg_m])) if neg_m.any() else 1.0

        x = x + alpha_p * dx
        z = z + alpha_p * dz
        lam = lam + alpha_d * dlam
        mu = mu + alpha_d * dmu

    g = prob.equalities(x)
    h = prob.inequalities(x)
    max_mismatch = float(np.abs(g[: 2 * prob.nb]).max())
    max_violation = float(h.max()) if h.size else 0.0
    ok = converged and max_mismatch < 1e-6 and max_violation < 1e-6
    return OpfSolution(
        pg=x[prob.ipg] * prob.base,
        qg=x[prob.iqg] * prob.base,
        vm=x[prob.ivm].copy(),
        va=x[prob.iva].copy(),
        objective=prob.cost(x),
        status=OpfStatus.CONVERGED if ok else OpfStatus.INFEASIBLE_OR_MAX_ITER,
        kkt_residual=float(kkt),
        iterations=iterations,
        max_mismatch=max_mismatch,
        max_violation=max_violation,
    )
