"""Convex programs for error-probability-optimal receive beamforming.

Three programs over the lifted real weight vector w_bar in R^{2N}:

* MPE_FULL     -- minimize the exact Q-sum error probability subject to
                  ||w|| <= 1 and one nonnegativity constraint per interferer
                  tuple.
* MPE_REDUCED  -- same objective and feasible set, with the exponential
                  tuple constraints collapsed to the 2^(K-1) extreme sign
                  patterns of the largest interferer symbols (equivalent to
                  the single absolute-value margin constraint).
* SMINR_AMP    -- maximize the amplitude SMINR over the same feasible set.

All programs are solved on the lifted real vector where every quantity is a
function of Re{w h_j} and ||w||. The inner NLP solver is SLSQP, followed by
a tangent-space Newton polish on the unit sphere for the smooth MPE
objectives.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, nnls
from scipy.special import erfc

from .beamformers import lift_channel, unlift_weights
from .modem import enumerate_interferers

MPE_FULL = "MPE_FULL"
MPE_REDUCED = "MPE_REDUCED"
SMINR_AMP = "SMINR_AMP"

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
MAX_ITER = "MAX_ITER"

TOL_FEAS = 1e-9
MAX_FULL_TUPLES = 10**6

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class ConvexProgram:
    """One beamforming program instance for a single user.

    Precomputes the lifted data shared by objective, gradient, and
    constraints: the self direction ``a`` (d sqrt(E_g) htilde_k), the peak
    interferer directions ``U`` (rows s_j(L_j) htilde_j), and the per-tuple
    constraint matrix ``G`` appropriate for ``kind``.
    """

    kind: str
    H: np.ndarray
    user: int
    constellations: tuple
    sigma_z: float
    a: np.ndarray = field(init=False)
    U: np.ndarray = field(init=False)
    G_objective: np.ndarray = field(init=False)
    G_constraints: np.ndarray = field(init=False)
    prefactor: float = field(init=False)

    def __post_init__(self):
        if self.kind not in (MPE_FULL, MPE_REDUCED, SMINR_AMP):
            raise ValueError(f"unknown program kind {self.kind!r}")
        if self.sigma_z <= 0:
            raise ValueError("sigma_z must be positive")
        N, K = self.H.shape
        k = self.user
        lifted = np.stack([lift_channel(self.H[:, j]) for j in range(K)], axis=1)
        self.a = self.constellations[k].step * lifted[:, k]
        others = [j for j in range(K) if j != k]
        self.U = np.stack(
            [self.constellations[j].max_symbol * lifted[:, j] for j in others],
            axis=0,
        ) if others else np.zeros((0, 2 * N))

        tuple_set = enumerate_interferers(self.constellations, k)
        if self.kind == MPE_FULL and tuple_set.count > MAX_FULL_TUPLES:
            raise ValueError(
                f"{tuple_set.count} tuples exceed the MPE_FULL cap; use MPE_REDUCED"
            )
        # rows: a - sum_j sbar_b[j] htilde_j, one per interferer tuple
        self.G_objective = self.a[None, :] - tuple_set.tuples @ lifted[:, others].T
        if self.kind == MPE_FULL:
            self.G_constraints = self.G_objective
        else:
            self.G_constraints = _sign_pattern_margins(self.a, self.U)
        L = self.constellations[k].order
        self.prefactor = 2.0 * (L - 1) / (L * self.G_objective.shape[0])

    @property
    def dimension(self) -> int:
        return 2 * self.H.shape[0]

    @property
    def noise_scale(self) -> float:
        return self.sigma_z / math.sqrt(2.0)

    def reduced_margin(self, w_bar: np.ndarray) -> float:
        """Self term minus the worst-case coherent interference at w_bar."""
        return float(w_bar @ self.a) - float(np.sum(np.abs(self.U @ w_bar)))


@dataclass
class SolveReport:
    weights: np.ndarray
    objective_value: float
    margin: float
    status: str
    iterations: int
    kkt_residual: float


def _sign_pattern_margins(a: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Linear forms a - eps @ U over all sign patterns eps in {+-1}^(K-1).

    Their joint nonnegativity is exactly the absolute-value margin
    constraint; the minimum over rows equals the reduced margin.
    """
    m = U.shape[0]
    if m == 0:
        return a[None, :]
    signs = np.array(
        [[1 - 2 * ((i >> j) & 1) for j in range(m)] for i in range(2**m)],
        dtype=float,
    )
    return a[None, :] - signs @ U


def objective_and_gradient(program: ConvexProgram, w_bar: np.ndarray):
    """Objective value and (sub)gradient at the lifted point w_bar.

    MPE programs: the fixed-denominator Q-sum error probability and its exact
    gradient. SMINR_AMP: the amplitude SMINR (to be maximized) and a
    subgradient with the deterministic choice sign(0) = +1.
    """
    w_bar = np.asarray(w_bar, dtype=float)
    if program.kind == SMINR_AMP:
        proj = program.U @ w_bar
        signs = np.where(proj >= 0, 1.0, -1.0)
        value = (float(w_bar @ program.a) - float(np.sum(np.abs(proj)))) / program.noise_scale
        grad = (program.a - signs @ program.U) / program.noise_scale
        return value, grad
    args = (program.G_objective @ w_bar) / program.noise_scale
    phi = np.exp(-0.5 * args**2) / _SQRT_2PI
    value = program.prefactor * float(np.sum(0.5 * erfc(args / math.sqrt(2.0))))
    grad = -(program.prefactor / program.noise_scale) * (phi @ program.G_objective)
    return value, grad


def _mpe_hessian(program: ConvexProgram, w_bar: np.ndarray) -> np.ndarray:
    args = (program.G_objective @ w_bar) / program.noise_scale
    phi = np.exp(-0.5 * args**2) / _SQRT_2PI
    weights = args * phi * (program.prefactor / program.noise_scale**2)
    return (program.G_objective * weights[:, None]).T @ program.G_objective


def feasibility_phase(H: np.ndarray, k: int, constellations):
    """Maximize the reduced margin over the unit ball.

    Returns (max_margin, w_feas) where w_feas is the maximizing unit-norm
    complex weight vector, or (max_margin, None) when no direction attains a
    positive margin.
    """
    program = ConvexProgram(SMINR_AMP, H, k, tuple(constellations), sigma_z=1.0)
    margin, w_bar, _ = _maximize_margin(program)
    if margin < TOL_FEAS:
        return margin, None
    return margin, unlift_weights(w_bar)


def _maximize_margin(program: ConvexProgram):
    """Slack-variable SLSQP solve of max reduced margin s.t. ||w|| <= 1.

    Variables x = [w_bar, t] with t_j >= |w_bar . u_j|; maximize
    w_bar . a - sum t. Returns (margin, unit w_bar, iterations).
    """
    a, U = program.a, program.U
    dim, m = a.size, U.shape[0]

    def fun(x):
        return -(x[:dim] @ a) + np.sum(x[dim:])

    def jac(x):
        g = np.empty(dim + m)
        g[:dim] = -a
        g[dim:] = 1.0
        return g

    cons = [
        {
            "type": "ineq",
            "fun": lambda x: 1.0 - x[:dim] @ x[:dim],
            "jac": lambda x: np.concatenate([-2.0 * x[:dim], np.zeros(m)]),
        }
    ]
    if m:
        A = np.zeros((2 * m, dim + m))
        A[:m, :dim] = -U
        A[:m, dim:] = np.eye(m)
        A[m:, :dim] = U
        A[m:, dim:] = np.eye(m)
        cons.append({"type": "ineq", "fun": lambda x: A @ x, "jac": lambda x: A})

    x0 = np.zeros(dim + m)
    x0[:dim] = a / np.linalg.norm(a)
    if m:
        x0[dim:] = np.abs(U @ x0[:dim]) + 1e-12
    best = None
    for _ in range(2):
        res = minimize(
            fun,
            x0,
            jac=jac,
            method="SLSQP",
            constraints=cons,
            options={"maxiter": 500, "ftol": 1e-14},
        )
        if best is None or res.fun < best.fun:
            best = res
        x0 = res.x
    w_bar = best.x[:dim]
    norm = np.linalg.norm(w_bar)
    if norm > 0:
        w_bar = w_bar / norm
    return program.reduced_margin(w_bar), w_bar, int(best.nit)


def random_feasible_start(program: ConvexProgram, rng: np.random.Generator, w_feas=None):
    """Random unit vector with strictly positive reduced margin.

    Blends a random direction toward the maximum-margin point until the
    margin is positive. Used for solver-uniqueness checks.
    """
    if w_feas is None:
        margin, w_bar, _ = _maximize_margin(program)
        if margin < TOL_FEAS:
            raise ValueError("program is infeasible; no feasible start exists")
    else:
        w_bar = w_feas
    for _ in range(64):
        v = rng.standard_normal(program.dimension)
        v /= np.linalg.norm(v)
        for alpha in (1.0, 0.5, 0.25, 0.1, 0.03, 0.01):
            cand = alpha * v + (1.0 - alpha) * w_bar
            cand /= np.linalg.norm(cand)
            if program.reduced_margin(cand) > TOL_FEAS:
                return cand
    return w_bar


def _sphere_newton_polish(program: ConvexProgram, w_bar: np.ndarray, max_iter=60):
    """Riemannian Newton refinement of an MPE solution on the unit sphere.

    Only applied while all margin constraints stay strictly feasible; each
    step is Armijo-safeguarded against the objective.
    """
    w = w_bar / np.linalg.norm(w_bar)
    f, g = objective_and_gradient(program, w)
    for it in range(max_iter):
        P = np.eye(w.size) - np.outer(w, w)
        grad_r = P @ g
        gnorm = np.linalg.norm(grad_r)
        if gnorm <= 1e-15:
            break
        H = P @ _mpe_hessian(program, w) @ P - (g @ w) * P
        # regularize toward gradient descent if curvature is indefinite
        try:
            step = np.linalg.lstsq(H + 1e-14 * np.eye(w.size), -grad_r, rcond=None)[0]
        except np.linalg.LinAlgError:
            step = -grad_r
        step = P @ step
        if step @ grad_r > 0:
            step = -grad_r
        accepted = False
        scale = 1.0
        for _ in range(40):
            cand = w + scale * step
            cand /= np.linalg.norm(cand)
            if np.min(program.G_constraints @ cand) >= -1e-12:
                f_cand, g_cand = objective_and_gradient(program, cand)
                if f_cand <= f + 1e-4 * scale * (grad_r @ step):
                    w, f, g = cand, f_cand, g_cand
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            break
    return w, f, g


def _kkt_residual(program: ConvexProgram, w_bar: np.ndarray, grad: np.ndarray) -> float:
    """Distance of -grad from the cone spanned by active constraint normals."""
    columns = [-2.0 * w_bar] if np.linalg.norm(w_bar) >= 1.0 - 1e-7 else []
    margins = program.G_constraints @ w_bar
    for i in np.nonzero(margins <= 1e-7)[0]:
        columns.append(program.G_constraints[i])
    if not columns:
        return float(np.linalg.norm(grad))
    A = np.stack(columns, axis=1)
    _, resid = nnls(A, grad)
    return float(resid)


def solve(program: ConvexProgram, start: np.ndarray = None, trace_path: str = None) -> SolveReport:
    """Solve one convex beamforming program.

    Runs the feasibility phase first; an instance whose maximum reduced
    margin falls below ``TOL_FEAS`` is reported INFEASIBLE (error-floor
    regime) and the caller decides on a fallback. ``start`` optionally
    overrides the warm start with a lifted feasible point.
    """
    margin_max, w_feas, feas_iters = _maximize_margin(program)
    trace = []
    if margin_max < TOL_FEAS:
        value, grad = objective_and_gradient(program, w_feas)
        return SolveReport(
            weights=unlift_weights(w_feas),
            objective_value=value,
            margin=program.reduced_margin(w_feas),
            status=INFEASIBLE,
            iterations=feas_iters,
            kkt_residual=float("nan"),
        )

    if program.kind == SMINR_AMP:
        value, grad = objective_and_gradient(program, w_feas)
        report = SolveReport(
            weights=unlift_weights(w_feas),
            objective_value=value,
            margin=program.reduced_margin(w_feas),
            status=OPTIMAL,
            iterations=feas_iters,
            kkt_residual=_kkt_residual(program, w_feas, -grad),
        )
        _write_trace(trace_path, trace)
        return report

    cons = [
        {
            "type": "ineq",
            "fun": lambda x: 1.0 - x @ x,
            "jac": lambda x: -2.0 * x,
        },
        {
            "type": "ineq",
            "fun": lambda x: program.G_constraints @ x,
            "jac": lambda x: program.G_constraints,
        },
    ]

    def fun(x):
        v, g = objective_and_gradient(program, x)
        return v, g

    starts = [start] if start is not None else [w_feas]
    iterations = feas_iters
    best_w, best_f = None, np.inf
    for x0 in starts:
        x = np.asarray(x0, dtype=float)
        for _ in range(2):
            res = minimize(
                fun,
                x,
                jac=True,
                method="SLSQP",
                constraints=cons,
                options={"maxiter": 400, "ftol": 1e-16},
            )
            iterations += int(res.nit)
            x = res.x
            if trace_path is not None:
                v, _ = objective_and_gradient(program, x)
                trace.append((iterations, v, program.reduced_margin(x)))
            if res.nit <= 1:
                break
        norm = np.linalg.norm(x)
        if norm > 0:
            x = x / norm
        v, _ = objective_and_gradient(program, x)
        if v < best_f:
            best_w, best_f = x, v

    # the norm constraint is always active at the optimum; polish on the sphere
    if np.min(program.G_constraints @ best_w) > 1e-9:
        best_w, best_f, grad = _sphere_newton_polish(program, best_w)
    else:
        _, grad = objective_and_gradient(program, best_w)
    if trace_path is not None:
        trace.append((iterations, best_f, program.reduced_margin(best_w)))
        _write_trace(trace_path, trace)

    kkt = _kkt_residual(program, best_w, grad)
    status = OPTIMAL if kkt <= 1e-6 else MAX_ITER
    return SolveReport(
        weights=unlift_weights(best_w),
        objective_value=best_f,
        margin=program.reduced_margin(best_w),
        status=status,
        iterations=iterations,
        kkt_residual=kkt,
    )


def _write_trace(path, rows):
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "margin"])
        writer.writerows(rows)
