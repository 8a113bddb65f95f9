"""Dense convex QP solver for box and affine inequality constraints.

Solves

    min  1/2 z' H z + f' z
    s.t. lb <= z <= ub,  G z <= g

with an operator-splitting (ADMM) first-order method with over-relaxation
and a fixed penalty that is periodically rescaled, followed by an
active-set polishing pass that refines the iterate to a KKT-certified
solution.  The method is deterministic: identical inputs and warm starts
produce identical iterates.

Internally the constraints are stacked as  l <= A z <= u  with
A = [I; G], which keeps one dual vector for boxes and inequalities alike
(box rows first).  Dual convention: lambda >= 0 on active upper rows,
lambda <= 0 on active lower rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ParameterError

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max-iterations"
STATUS_INFEASIBLE = "infeasible"


@dataclass
class QpProblem:
    """Problem data; validated on construction."""

    hessian: np.ndarray              # (n, n) symmetric PSD
    linear: np.ndarray               # (n,)
    lower: np.ndarray                # (n,) decision lower bounds
    upper: np.ndarray                # (n,) decision upper bounds
    ineq_matrix: np.ndarray | None = None   # (m, n)
    ineq_rhs: np.ndarray | None = None      # (m,)

    def __post_init__(self):
        self.hessian = np.atleast_2d(np.asarray(self.hessian, dtype=float))
        self.linear = np.asarray(self.linear, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        n = self.linear.size
        if self.hessian.shape != (n, n):
            raise ParameterError("hessian shape inconsistent with linear term")
        if self.lower.size != n or self.upper.size != n:
            raise ParameterError("bound vectors inconsistent with dimension")
        if not np.allclose(self.hessian, self.hessian.T, atol=1e-10):
            raise ParameterError("hessian must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (self.hessian + self.hessian.T))) < -1e-10:
            raise ParameterError("hessian must be positive semidefinite")
        if np.any(self.lower > self.upper):
            raise ParameterError("lower bounds exceed upper bounds")
        if self.ineq_matrix is not None:
            self.ineq_matrix = np.atleast_2d(np.asarray(self.ineq_matrix, dtype=float))
            self.ineq_rhs = np.asarray(self.ineq_rhs, dtype=float).ravel()
            if self.ineq_matrix.shape[1] != n:
                raise ParameterError("inequality matrix has wrong column count")
            if self.ineq_rhs.size != self.ineq_matrix.shape[0]:
                raise ParameterError("inequality rhs has wrong length")

    @property
    def n(self) -> int:
        return self.linear.size

    @property
    def m(self) -> int:
        return 0 if self.ineq_matrix is None else self.ineq_matrix.shape[0]

    def objective(self, z: np.ndarray) -> float:
        return float(0.5 * z @ self.hessian @ z + self.linear @ z)

    def dump_text(self, path):
        """Plain-text dump for offline debugging."""
        lines = ["# qp problem, plain-text format v1", f"n {self.n}", f"m {self.m}"]
        for name, arr in (("H", self.hessian.reshape(-1)), ("f", self.linear),
                          ("lb", self.lower), ("ub", self.upper)):
            lines.append(name)
            lines.extend(f"{v!r}" for v in arr)
        if self.m:
            lines.append("G")
            lines.extend(f"{v!r}" for v in self.ineq_matrix.reshape(-1))
            lines.append("g")
            lines.extend(f"{v!r}" for v in self.ineq_rhs)
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@classmethod
def _load_text(cls, path):
    with open(path) as fh:
        tokens = [t.strip() for t in fh if t.strip() and not t.startswith("#")]
    n = int(tokens[0].split()[1])
    m = int(tokens[1].split()[1])
    idx = 2
    arrays = {}
    sizes = {"H": n * n, "f": n, "lb": n, "ub": n, "G": m * n, "g": m}
    while idx < len(tokens):
        name = tokens[idx]
        count = sizes[name]
        arrays[name] = np.array([float(t) for t in tokens[idx + 1: idx + 1 + count]])
        idx += 1 + count
    return cls(hessian=arrays["H"].reshape(n, n), linear=arrays["f"],
               lower=arrays["lb"], upper=arrays["ub"],
               ineq_matrix=arrays["G"].reshape(m, n) if m else None,
               ineq_rhs=arrays.get("g"))


QpProblem.load_text = _load_text


@dataclass
class QpSolution:
    z: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    iterations: int
    objective: float
    duals: np.ndarray | None = None         # stacked [box; ineq] duals
    merit_history: list = field(default_factory=list)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 4000
    eps_abs: float = 1e-6
    eps_rel: float = 1e-8
    sigma: float = 1e-6
    rho: float = 0.1
    alpha: float = 1.6
    check_every: int = 10
    rescale_every: int = 100     # periodic penalty rescaling cadence
    adapt_rho: bool = True
    eps_infeasible: float = 1e-9
    polish_tol: float = 1e-9
    record_history: bool = False


class AdmmQpSolver:
    """Reusable solver bound to one problem structure.

    ``update(linear, ineq_rhs)`` swaps the cycle-dependent vectors without
    re-validating or re-factorizing, which is what the receding-horizon
    controller needs.
    """

    def __init__(self, problem: QpProblem, options: SolverOptions | None = None):
        self.problem = problem
        self.options = options or SolverOptions()
        n, m = problem.n, problem.m
        self._a = np.vstack([np.eye(n), problem.ineq_matrix]) if m else np.eye(n)
        self._l = np.concatenate([problem.lower, np.full(m, -np.inf)])
        self._u = np.concatenate([problem.upper, problem.ineq_rhs]) \
            if m else problem.upper.copy()
        self._ata = self._a.T @ self._a
        self._rho = self.options.rho
        self._factor = None

    def update(self, linear: np.ndarray | None = None,
               ineq_rhs: np.ndarray | None = None):
        if linear is not None:
            self.problem.linear = np.asarray(linear, dtype=float).ravel()
        if ineq_rhs is not None:
            rhs = np.asarray(ineq_rhs, dtype=float).ravel()
            self.problem.ineq_rhs = rhs
            self._u[self.problem.n:] = rhs

    def _factorize(self):
        p = self.problem
        mat = p.hessian + self.options.sigma * np.eye(p.n) + self._rho * self._ata
        self._factor = cho_factor(mat)

    def solve(self, warm_start: np.ndarray | None = None,
              warm_duals: np.ndarray | None = None) -> QpSolution:
        opt = self.options
        p = self.problem
        n = p.n
        n_rows = self._a.shape[0]
        q = p.linear

        z = np.zeros(n) if warm_start is None else np.asarray(warm_start, float).copy()
        lam = np.zeros(n_rows) if warm_duals is None \
            else np.asarray(warm_duals, float).copy()
        s = np.clip(self._a @ z, self._l, self._u)

        if self._factor is None:
            self._factorize()

        merit_history = []
        status = STATUS_MAX_ITER
        iterations = opt.max_iterations
        r_prim = r_dual = np.inf
        for k in range(1, opt.max_iterations + 1):
            rhs = opt.sigma * z - q + self._a.T @ (self._rho * s - lam)
            x_t = cho_solve(self._factor, rhs)
            ax_t = self._a @ x_t
            z_new = opt.alpha * x_t + (1.0 - opt.alpha) * z
            s_arg = opt.alpha * ax_t + (1.0 - opt.alpha) * s
            s_new = np.clip(s_arg + lam / self._rho, self._l, self._u)
            lam_new = lam + self._rho * (s_arg - s_new)

            if opt.record_history:
                w_old = s + lam / self._rho
                w_new = s_new + lam_new / self._rho
                merit_history.append(float(np.linalg.norm(w_new - w_old)))

            d_lam = lam_new - lam
            z, s, lam = z_new, s_new, lam_new

            if k % opt.check_every == 0:
                az = self._a @ z
                r_prim = float(np.max(np.abs(az - s))) if n_rows else 0.0
                grad = p.hessian @ z + q + self._a.T @ lam
                r_dual = float(np.max(np.abs(grad)))
                scale_p = max(1.0, float(np.max(np.abs(az))),
                              float(np.max(np.abs(s))))
                scale_d = max(1.0, float(np.max(np.abs(p.hessian @ z))),
                              float(np.max(np.abs(q))))
                if (r_prim <= opt.eps_abs + opt.eps_rel * scale_p
                        and r_dual <= opt.eps_abs + opt.eps_rel * scale_d):
                    status = STATUS_OPTIMAL
                    iterations = k
                    break
                if self._primal_infeasible(d_lam):
                    return QpSolution(z=z, status=STATUS_INFEASIBLE,
                                      primal_residual=r_prim, dual_residual=r_dual,
                                      iterations=k, objective=p.objective(z),
                                      duals=lam, merit_history=merit_history)
                if (opt.adapt_rho and k % opt.rescale_every == 0
                        and r_dual > 0.0 and r_prim > 0.0):
                    ratio = (r_prim / scale_p) / (r_dual / scale_d)
                    if ratio > 25.0 or ratio < 0.04:
                        self._rho = float(np.clip(
                            self._rho * np.sqrt(ratio), 1e-6, 1e6))
                        self._factorize()
                        if opt.record_history:
                            merit_history.append(-1.0)  # metric reset marker

        polished = self._polish(z, s, lam)
        if polished is not None:
            z, lam, r_prim, r_dual = polished
            status = STATUS_OPTIMAL
        elif status == STATUS_OPTIMAL:
            r_prim, r_dual = self._residuals(z, lam)
        return QpSolution(z=z, status=status, primal_residual=r_prim,
                          dual_residual=r_dual, iterations=iterations,
                          objective=p.objective(z), duals=lam,
                          merit_history=merit_history)

    # -- internals -----------------------------------------------------------

    def _residuals(self, z, lam):
        p = self.problem
        az = self._a @ z
        viol = np.maximum(az - self._u, 0.0)
        viol = np.maximum(viol, np.maximum(self._l - az, 0.0))
        r_prim = float(np.max(viol)) if viol.size else 0.0
        grad = p.hessian @ z + p.linear + self._a.T @ lam
        return r_prim, float(np.max(np.abs(grad)))

    def _primal_infeasible(self, d_lam) -> bool:
        opt = self.options
        norm = float(np.max(np.abs(d_lam))) if d_lam.size else 0.0
        if norm <= 1e-14:
            return False
        v = d_lam / norm
        pos = np.maximum(v, 0.0)
        neg = np.minimum(v, 0.0)
        # Rows with infinite bounds cannot participate in a certificate.
        if np.any(pos[np.isinf(self._u)] > opt.eps_infeasible):
            return False
        if np.any(-neg[np.isinf(self._l)] > opt.eps_infeasible):
            return False
        finite_u = np.where(np.isinf(self._u), 0.0, self._u)
        finite_l = np.where(np.isinf(self._l), 0.0, self._l)
        support = float(finite_u @ pos + finite_l @ neg)
        cert = float(np.max(np.abs(self._a.T @ v)))
        return cert <= opt.eps_infeasible and support < -opt.eps_infeasible

    def _polish(self, z, s, lam):
        """Solve the equality-constrained QP on the guessed active set."""
        opt = self.options
        p = self.problem
        az = self._a @ z
        tol_act = 1e-6 * max(1.0, float(np.max(np.abs(az))) if az.size else 1.0)
        low_act = np.where((az - self._l <= tol_act) | (lam < -1e-8))[0]
        upp_act = np.where((self._u - az <= tol_act) | (lam > 1e-8))[0]
        upp_act = np.setdiff1d(upp_act, low_act)
        active = np.concatenate([low_act, upp_act])
        if active.size > p.n:
            order = np.argsort(-np.abs(lam[active]), kind="stable")
            active = active[order[:p.n]]
            low_act = np.intersect1d(active, low_act)
            upp_act = np.intersect1d(active, upp_act)
            active = np.concatenate([low_act, upp_act])
        e = self._a[active]
        b = np.concatenate([self._l[low_act], self._u[upp_act]])

        n_act = active.size
        kkt = np.zeros((p.n + n_act, p.n + n_act))
        kkt[:p.n, :p.n] = p.hessian
        kkt[:p.n, p.n:] = e.T
        kkt[p.n:, :p.n] = e
        rhs = np.concatenate([-p.linear, b])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        z_p = sol[:p.n]
        nu = sol[p.n:]

        lam_p = np.zeros_like(lam)
        lam_p[active] = nu
        # Verification: primal feasibility, dual signs, stationarity.
        az_p = self._a @ z_p
        tol = opt.polish_tol * max(1.0, float(np.max(np.abs(az_p))) if az_p.size else 1.0)
        if np.any(az_p > self._u + tol) or np.any(az_p < self._l - tol):
            return None
        if np.any(lam_p[low_act] > 1e-9) or np.any(lam_p[upp_act] < -1e-9):
            return None
        grad = p.hessian @ z_p + p.linear + self._a.T @ lam_p
        r_dual = float(np.max(np.abs(grad)))
        if r_dual > opt.polish_tol * max(1.0, float(np.max(np.abs(p.linear)))):
            return None
        viol = np.maximum(az_p - self._u, 0.0)
        viol = np.maximum(viol, np.maximum(self._l - az_p, 0.0))
        r_prim = float(np.max(viol)) if viol.size else 0.0
        return z_p, lam_p, r_prim, r_dual


def solve(problem: QpProblem, warm_start: np.ndarray | None = None,
          options: SolverOptions | None = None) -> QpSolution:
    """One-shot solve of a QpProblem."""
    return AdmmQpSolver(problem, options).solve(warm_start=warm_start)
