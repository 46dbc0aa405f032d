"""Augmented-Lagrangian solver for equality constraints plus simple bounds.

Solves ::

    min f(z)   s.t.   c(z) = 0,   lb <= z <= ub

by approximately minimizing, for fixed multipliers ``lam`` and penalty ``mu``,
the bound-constrained subproblem ::

    L_A(z) = f(z) + lam' c(z) + mu/2 ||c(z)||^2

followed by the first-order update ``lam <- lam + mu c(z)`` whenever
feasibility improved enough and a penalty increase otherwise.  The tolerance
schedule follows the classic bound-constrained augmented Lagrangian recipe
(Conn, Gould and Toint).

Two inner minimizers are available.  ``"newton"`` is a two-metric projected
Newton method on the exact Hessian of ``L_A`` and needs the problem to expose
``objective_hessian(z)`` and ``constraint_hessian(z, v)``; ``"lbfgs"`` is a
projected limited-memory BFGS method that only needs gradients.  Problems
without Hessians always use the latter.

Everything runs in scaled variables ``z / x_scale`` with constraints divided
by ``c_scale`` and the objective multiplied by ``obj_scale``; problems that
do not define scales get unit scaling.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InfeasibleError

log = logging.getLogger(__name__)

CONVERGED = "converged"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class SolverOptions:
    max_outer: int = 50
    max_inner: int = 200
    tol_feas: float = 1e-6
    tol_stat: float = 1e-6
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e8
    memory: int = 10
    armijo: float = 1e-4
    obj_scale: float | None = None  # None: see obj_grad_target
    obj_grad_target: float = 1e-2
    inner: str = "newton"  # "newton" (exact Hessian, projected) or "lbfgs"

    def __post_init__(self):
        for name in ("max_outer", "max_inner", "tol_feas", "tol_stat", "penalty_init",
                     "penalty_max", "memory", "armijo"):
            if not getattr(self, name) > 0:
                raise ValueError(f"solver option {name} must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must be > 1")
        if self.inner not in ("newton", "lbfgs"):
            raise ValueError(f"unknown inner minimizer {self.inner!r}")
        if self.obj_scale is not None and not self.obj_scale > 0:
            raise ValueError("obj_scale must be positive")


@dataclass
class SolveResult:
    status: str
    z: np.ndarray
    multipliers: np.ndarray
    feas_norm: float
    stat_norm: float
    compl_norm: float
    objective: float
    outer_iters: int
    inner_iters: int
    penalty: float
    obj_scale: float
    n_clipped: int = 0
    history: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


class FunctionNlp:
    """Plain-callable NLP, handy for small problems and tests.

    ``hess(z)`` and ``chess(z, v)`` (objective Hessian and multiplier-weighted
    constraint Hessian) are optional; without them the L-BFGS inner
    minimizer is used.
    """

    def __init__(self, fun, grad, cons, jac, lb, ub, m, hess=None, chess=None):
        self.fun, self.grad, self.cons, self.jac = fun, grad, cons, jac
        self.lb = np.asarray(lb, dtype=float)
        self.ub = np.asarray(ub, dtype=float)
        self.n = self.lb.size
        self.m = m
        if hess is not None and chess is not None:
            self.objective_hessian = hess
            self.constraint_hessian = chess

    def objective(self, z):
        return float(self.fun(z))

    def objective_gradient(self, z):
        return np.asarray(self.grad(z), dtype=float)

    def constraints(self, z):
        return np.asarray(self.cons(z), dtype=float).reshape(self.m)

    def constraint_jacobian(self, z):
        return self.jac(z)


def _as_sparse(M, rows, cols):
    if sp.issparse(M):
        return sp.csr_matrix(M)
    return sp.csr_matrix(np.asarray(M, dtype=float).reshape(rows, cols))


class _Scaled:
    """View of an NLP in scaled variables."""

    def __init__(self, nlp, obj_scale):
        self.nlp = nlp
        self.xs = np.asarray(getattr(nlp, "x_scale", np.ones(nlp.n)), dtype=float)
        self.cs = np.asarray(getattr(nlp, "c_scale", np.ones(nlp.m)), dtype=float)
        self.sf = obj_scale
        self.lb = nlp.lb / self.xs
        self.ub = nlp.ub / self.xs

    def f(self, zs):
        return self.sf * self.nlp.objective(zs * self.xs)

    def g(self, zs):
        return self.sf * self.xs * self.nlp.objective_gradient(zs * self.xs)

    def c(self, zs):
        return self.nlp.constraints(zs * self.xs) / self.cs

    def jac(self, zs):
        J = _as_sparse(self.nlp.constraint_jacobian(zs * self.xs), self.nlp.m, self.nlp.n)
        return sp.diags(1.0 / self.cs) @ J @ sp.diags(self.xs)

    def hess_f(self, zs):
        h = getattr(self.nlp, "objective_hessian", None)
        if h is None:
            return sp.csr_matrix((self.nlp.n, self.nlp.n))
        D = sp.diags(self.xs)
        return self.sf * (D @ _as_sparse(h(zs * self.xs), self.nlp.n, self.nlp.n) @ D)

    def hess_c(self, zs, w):
        D = sp.diags(self.xs)
        H = _as_sparse(self.nlp.constraint_hessian(zs * self.xs, w / self.cs), self.nlp.n, self.nlp.n)
        return D @ H @ D

    def jt(self, zs, w):
        """``J_s' w`` for the scaled Jacobian."""
        J = _as_sparse(self.nlp.constraint_jacobian(zs * self.xs), self.nlp.m, self.nlp.n)
        return self.xs * (J.T @ (w / self.cs))


def _projected_gradient(x, g, lb, ub):
    return x - np.clip(x - g, lb, ub)


def _two_loop(g, pairs, free):
    q = np.where(free, g, 0.0)
    alphas = []
    for s, y, rho in reversed(pairs):
        s, y = s * free, y * free
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        s, y = s * free, y * free
        yy = y @ y
        gamma = (s @ y) / yy if yy > 0 else 1.0
        q *= gamma if gamma > 0 else 1.0
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        s, y = s * free, y * free
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def projected_lbfgs(fg, x, lb, ub, tol, max_iter, memory=10, c1=1e-4):
    """Minimize ``f`` over the box ``[lb, ub]`` with projected L-BFGS.

    ``fg(x)`` returns ``(f, grad)``.  Returns ``(x, f, g, iterations)``; the
    caller checks the projected gradient itself.
    """
    x = np.clip(x, lb, ub)
    f, g = fg(x)
    pairs: deque = deque(maxlen=memory)
    it = 0
    while it < max_iter:
        if np.max(np.abs(_projected_gradient(x, g, lb, ub)), initial=0.0) <= tol:
            break
        it += 1
        binding = ((x <= lb) & (g > 0)) | ((x >= ub) & (g < 0))
        free = ~binding
        if pairs:
            d = _two_loop(g, list(pairs), free)
        else:
            d = -np.where(free, g, 0.0) / max(np.linalg.norm(g), 1.0)
        if not g @ d < 0:
            pairs.clear()
            d = -np.where(free, g, 0.0) / max(np.linalg.norm(g), 1.0)

        step = _line_search(fg, x, f, g, d, lb, ub, c1)
        if step is None and pairs:
            # quasi-Newton direction failed; retry along steepest descent
            pairs.clear()
            d = -np.where(free, g, 0.0) / max(np.linalg.norm(g), 1.0)
            step = _line_search(fg, x, f, g, d, lb, ub, c1)
        if step is None:
            break
        x_new, f_new, g_new = step
        s, y = x_new - x, g_new - g
        sy = s @ y
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
    return x, f, g, it


def _modified_cholesky(H, shift0=1e-8, max_tries=60):
    """Cholesky factor of ``H + tau I`` for the smallest tau in a geometric ladder."""
    scale = max(1.0, float(np.max(np.abs(np.diag(H)), initial=0.0)))
    tau = 0.0
    eye = np.eye(H.shape[0])
    for _ in range(max_tries):
        try:
            return np.linalg.cholesky(H + tau * eye)
        except np.linalg.LinAlgError:
            tau = max(2.0 * tau, shift0 * scale)
    raise np.linalg.LinAlgError("Hessian modification failed")


def projected_newton(fg, hess, x, lb, ub, tol, max_iter, c1=1e-4, eps_active=1e-3):
    """Minimize ``f`` over a box with a two-metric projected Newton method.

    Variables within an epsilon of a bound whose gradient pushes outward are
    moved by a scaled gradient step; the remaining ones take a Newton step on
    a positive definite modification of their Hessian block.  ``hess(x)``
    returns the (sparse or dense) Hessian.
    """
    x = np.clip(x, lb, ub)
    f, g = fg(x)
    it = 0
    while it < max_iter:
        pg = _projected_gradient(x, g, lb, ub)
        pg_norm = np.max(np.abs(pg), initial=0.0)
        if pg_norm <= tol:
            break
        it += 1
        eps = min(eps_active, pg_norm)
        binding = ((x <= lb + eps) & (g > 0)) | ((x >= ub - eps) & (g < 0))
        free = np.flatnonzero(~binding)
        H = hess(x)
        H = H.toarray() if sp.issparse(H) else np.asarray(H)
        d = np.zeros_like(x)
        if binding.any():
            diag = np.maximum(np.abs(np.diag(H))[binding], 1e-12)
            d[binding] = -g[binding] / diag
        if free.size:
            L = _modified_cholesky(H[np.ix_(free, free)])
            d[free] = -np.linalg.solve(L.T, np.linalg.solve(L, g[free]))
        step = _line_search(fg, x, f, g, d, lb, ub, c1)
        if step is None:
            d = -pg
            step = _line_search(fg, x, f, g, d, lb, ub, c1)
        if step is None:
            break
        x, f, g = step
    return x, f, g, it


def _line_search(fg, x, f, g, d, lb, ub, c1, max_backtracks=60):
    # near a minimizer the Armijo decrease drops below the rounding level of
    # f; a step that leaves f unchanged to rounding but shrinks the projected
    # gradient is then accepted instead
    noise = 16 * np.finfo(float).eps * max(1.0, abs(f))
    pg = np.max(np.abs(_projected_gradient(x, g, lb, ub)), initial=0.0)
    alpha = 1.0
    for _ in range(max_backtracks):
        x_new = np.clip(x + alpha * d, lb, ub)
        dx = x_new - x
        slope = g @ dx
        if slope < 0:
            f_new, g_new = fg(x_new)
            if np.isfinite(f_new) and f_new <= f + c1 * slope:
                return x_new, f_new, g_new
            if (abs(f_new - f) <= noise and -slope <= noise
                    and np.max(np.abs(_projected_gradient(x_new, g_new, lb, ub))) < 0.5 * pg):
                return x_new, f_new, g_new
        elif not np.any(dx):
            return None
        alpha *= 0.5
    return None


def _complementarity(zs, gs, lb, ub):
    at_lower = np.minimum(np.maximum(gs, 0.0), zs - lb)
    at_upper = np.minimum(np.maximum(-gs, 0.0), ub - zs)
    return float(np.max(np.maximum(at_lower, at_upper), initial=0.0))


def kkt_residuals(nlp, z, multipliers, obj_scale=1.0):
    """``(stationarity, feasibility, complementarity)`` infinity norms.

    Measured in the same scaled space :func:`solve` uses; ``multipliers``
    are in the unscaled convention ``grad f + J' lam = 0``.
    """
    sc = _Scaled(nlp, obj_scale)
    z = np.asarray(z, dtype=float)
    zs = z / sc.xs
    J = _as_sparse(nlp.constraint_jacobian(z), nlp.m, nlp.n)
    grad_lag = nlp.objective_gradient(z) + J.T @ np.asarray(multipliers, dtype=float)
    gs = obj_scale * sc.xs * grad_lag
    stat = float(np.max(np.abs(_projected_gradient(zs, gs, sc.lb, sc.ub)), initial=0.0))
    feas = float(np.max(np.abs(nlp.constraints(z) / sc.cs), initial=0.0))
    return stat, feas, _complementarity(zs, gs, sc.lb, sc.ub)


def auto_obj_scale(nlp, z, target=1e-2):
    """Shrink the objective so its largest scaled gradient entry is at most ``target``.

    A small target lets the constraints dominate the early outer iterations,
    which keeps the penalty parameter low on the flight problems.
    """
    xs = np.asarray(getattr(nlp, "x_scale", np.ones(nlp.n)), dtype=float)
    gmax = float(np.max(np.abs(xs * nlp.objective_gradient(z)), initial=0.0))
    return min(1.0, target / gmax) if gmax > 0 else 1.0


def solve(nlp, z0, opts: SolverOptions | None = None, callback=None) -> SolveResult:
    """Solve ``nlp`` from the starting point ``z0``.

    ``callback(record)`` is called after every outer iteration with the
    dict that is also appended to ``SolveResult.history``.
    """
    opts = opts or SolverOptions()
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (nlp.n,):
        raise ValueError(f"z0 must have shape ({nlp.n},), got {z0.shape}")
    z_clipped = np.clip(z0, nlp.lb, nlp.ub)
    n_clipped = int(np.count_nonzero(z_clipped != z0))
    f0 = nlp.objective(z_clipped)
    c0 = nlp.constraints(z_clipped)
    if not (np.isfinite(f0) and np.all(np.isfinite(c0))):
        raise DomainError("objective or constraints are not finite at the starting point")

    sf = opts.obj_scale if opts.obj_scale is not None else auto_obj_scale(nlp, z_clipped, opts.obj_grad_target)
    sc = _Scaled(nlp, sf)
    zs = z_clipped / sc.xs
    lam = np.zeros(nlp.m)
    mu = opts.penalty_init
    omega = 1.0 / mu
    eta = 1.0 / mu**0.1
    history = []
    inner_total = 0
    status = ITERATION_LIMIT
    feas = stat = np.inf
    best_feas = np.inf
    outer = 0

    def fg(x):
        c = sc.c(x)
        w = lam + mu * c
        val = sc.f(x) + lam @ c + 0.5 * mu * (c @ c)
        return val, sc.g(x) + sc.jt(x, w)

    def hess(x):
        c = sc.c(x)
        J = sc.jac(x)
        return sc.hess_f(x) + sc.hess_c(x, lam + mu * c) + mu * (J.T @ J)

    use_newton = opts.inner == "newton" and hasattr(nlp, "constraint_hessian")
    for outer in range(1, opts.max_outer + 1):
        tol_inner = max(omega, opts.tol_stat)
        if use_newton:
            zs, _, grad, n_inner = projected_newton(
                fg, hess, zs, sc.lb, sc.ub, tol_inner, opts.max_inner, c1=opts.armijo)
        else:
            zs, _, grad, n_inner = projected_lbfgs(
                fg, zs, sc.lb, sc.ub, tol_inner, opts.max_inner,
                memory=opts.memory, c1=opts.armijo)
        inner_total += n_inner
        c = sc.c(zs)
        feas = float(np.max(np.abs(c), initial=0.0))
        stat = float(np.max(np.abs(_projected_gradient(zs, grad, sc.lb, sc.ub)), initial=0.0))
        best_feas = min(best_feas, feas)
        record = {
            "iter": outer,
            "objective": nlp.objective(zs * sc.xs),
            "feas_norm": feas,
            "stat_norm": stat,
            "penalty": mu,
            "inner": n_inner,
            "best_feas": best_feas,
        }
        history.append(record)
        if callback is not None:
            callback(record)

        if feas <= max(eta, opts.tol_feas):
            lam = lam + mu * c
            if feas <= opts.tol_feas and stat <= opts.tol_stat:
                status = CONVERGED
                break
            eta = max(eta / mu**0.9, opts.tol_feas)
            omega = max(omega / mu, opts.tol_stat)
        else:
            if mu >= opts.penalty_max:
                if feas > 10 * opts.tol_feas:
                    status = INFEASIBLE
                    break
            mu = min(mu * opts.penalty_growth, opts.penalty_max)
            eta = 1.0 / mu**0.1
            omega = 1.0 / mu

    z = zs * sc.xs
    multipliers = lam / (sc.cs * sf)
    grad_s = sc.g(zs) + sc.jt(zs, lam)
    compl = _complementarity(zs, grad_s, sc.lb, sc.ub)
    return SolveResult(
        status=status,
        z=z,
        multipliers=multipliers,
        feas_norm=feas,
        stat_norm=stat,
        compl_norm=compl,
        objective=nlp.objective(z),
        outer_iters=outer,
        inner_iters=inner_total,
        penalty=mu,
        obj_scale=sf,
        n_clipped=n_clipped,
        history=history,
    )


def format_log(history) -> str:
    """Tab-separated iteration log: iter, objective, feas_norm, stat_norm, penalty."""
    lines = ["iter\tobjective\tfeas_norm\tstat_norm\tpenalty"]
    for r in history:
        lines.append(
            f"{r['iter']}\t{r['objective']:.12e}\t{r['feas_norm']:.6e}\t"
            f"{r['stat_norm']:.6e}\t{r['penalty']:.3e}"
        )
    return "\n".join(lines) + "\n"


def horizon_grid(t_range, step) -> np.ndarray:
    """Horizons ``lo, lo + step, ...`` up to ``hi`` (inclusive), in hours."""
    lo, hi = (float(t) for t in t_range)
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    if not 0 < lo <= hi:
        raise ValueError(f"T_range must satisfy 0 < lo <= hi, got {t_range!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 10)


def solve_horizon(template, wind, params, hours, opts=None) -> SolveResult:
    """Solve ``template`` with its horizon stretched to ``hours`` (same ``n_steps``)."""
    from .transcription import build

    problem = replace(template, dt=float(hours) * 3600.0 / template.n_steps)
    inst = build(problem, wind, params)
    return solve(inst, inst.initial_guess(), opts)


def solve_min_time(template, wind, params, t_range, step=0.1, opts=None, jobs=1, trials=None):
    """Smallest grid horizon (hours) on which the problem converges.

    Feasibility is assumed monotone in the horizon.  The largest grid point
    is solved first; it only has to reach a feasible point, since long
    horizons force loiter manoeuvres that can stall stationarity.  The
    bracket is then narrowed by bisection, or by ``jobs``-way sectioning
    with a process pool when ``jobs > 1``.  Every solve that was run is
    appended to ``trials`` as ``(hours, result)``.

    Returns
    -------
    (float, SolveResult)
        Minimum horizon in hours and the converged solution there.

    Raises
    ------
    InfeasibleError
        If the largest horizon in the range is not even feasible, or no
        horizon converges.  The attached result is the attempt with the
        smallest constraint violation.
    """
    tol_feas = (opts or SolverOptions()).tol_feas
    grid = horizon_grid(t_range, step)
    seen: dict[int, SolveResult] = {}

    def run(indices):
        indices = [i for i in indices if i not in seen]
        if jobs > 1 and len(indices) > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, len(indices))) as pool:
                futures = [pool.submit(solve_horizon, template, wind, params, grid[i], opts)
                           for i in indices]
                results = [f.result() for f in futures]
        else:
            results = [solve_horizon(template, wind, params, grid[i], opts) for i in indices]
        for i, r in zip(indices, results):
            log.info("T = %.2f h: %s (feas %.2e)", grid[i], r.status, r.feas_norm)
            seen[i] = r
            if trials is not None:
                trials.append((float(grid[i]), r))

    hi = len(grid) - 1

    def give_up():
        best = min(seen.values(), key=lambda r: r.feas_norm)
        return InfeasibleError(
            f"no converged horizon in [{grid[0]:g}, {grid[-1]:g}] h "
            f"(best constraint violation {best.feas_norm:.3e})", best)

    run([hi, 0] if jobs > 1 else [hi])
    if not (seen[hi].converged or seen[hi].feas_norm <= tol_feas):
        raise give_up()
    run([0])
    if seen[0].converged:
        return float(grid[0]), seen[0]
    lo = 0
    while hi - lo > 1:
        k = max(1, min(jobs, hi - lo - 1))
        probes = sorted({lo + (hi - lo) * (j + 1) // (k + 1) for j in range(k)} - {lo, hi})
        run(probes)
        for i in probes:
            if seen[i].converged:
                hi = i
                break
            lo = i
    if not seen[hi].converged:
        raise give_up()
    return float(grid[hi]), seen[hi]
