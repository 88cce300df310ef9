"""Newton and homotopy solvers for the lattice equation.

Everything here works on the fixed-point form of the problem.  With A the
shifted linear matrix and s the shift, a field solves the lattice equation
exactly when

    phi - A^-1 F(phi) - A^-1 (G(phi) - s*phi) = 0,

where F is the cubic term and G the forcing.  The solvers treat the family

    r_tau(phi) = phi - A^-1 F(phi) - tau * A^-1 (G(phi) - s*phi),

whose tau = 0 slice is the odd map driving the degree argument (its only
small zero is the origin, with identity Jacobian) and whose tau = 1 slice is
the full problem.  ``homotopy_solve`` tracks the zero curve from (0, 0) to
tau = 1 with a secant predictor and damped Newton corrector; ``newton_solve``
is the corrector run directly on the tau = 1 slice.

Complex fields are realified for the linear algebra: a vector in C^n becomes
a vector in R^(2n) with interleaved layout (Re z_0, Im z_0, Re z_1, ...), and
an R-linear map becomes a 2n x 2n real matrix built from 2x2 blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .certificate import ExistenceCertificate, build_certificate
from .errors import CertificateInvalid, MissingDerivative, SolveFailed
from .lattice import (
    LatticeField,
    LatticeParams,
    apply_cubic,
    apply_forcing,
    apply_linear,
    sup_norm,
)
from .operators import ShiftedOperator, build_shifted
from .potentials import Potential

__all__ = [
    "SolveReport",
    "realify",
    "complexify",
    "realified_matrix",
    "residual_direct",
    "residual_precond",
    "realified_jacobian",
    "newton_solve",
    "homotopy_solve",
    "multi_start",
    "steady_state_solve",
    "tile_steady",
]

#: default convergence tolerance on the sup norm of the direct residual
DEFAULT_TOL = 1e-10
#: maximum step halvings inside the damped Newton line search
MAX_HALVINGS = 30
#: homotopy step floor; shrinking past it is reported as divergence
STEP_FLOOR = 1e-6
#: Newton iteration budget of one homotopy corrector call
CORRECTOR_ITER = 25
#: base deduplication radius for distinct solutions (sup distance)
DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solver run.

    ``residual_direct`` is the sup norm of the lattice equation residual at
    the reported field; ``residual_precond`` is the sup norm of the
    fixed-point residual (the direct residual pushed through A^-1).  ``path``
    holds (tau, sup norm) pairs for homotopy runs, None otherwise.  ``status``
    is one of "converged", "diverged", "left_ball", "max_iter".
    """

    solution: LatticeField
    residual_direct: float
    residual_precond: float
    newton_iterations: int
    homotopy_steps: int
    path: tuple[tuple[float, float], ...] | None
    status: str
    method: str


# ---------------------------------------------------------------------------
# realification helpers


def realify(z: np.ndarray) -> np.ndarray:
    """C^n vector -> R^(2n) vector, interleaved (Re, Im) per entry."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def complexify(x: np.ndarray) -> np.ndarray:
    """Inverse of ``realify``."""
    x = np.asarray(x, dtype=float)
    return x[0::2] + 1j * x[1::2]


def realified_matrix(mat: np.ndarray) -> np.ndarray:
    """Complex n x n matrix -> real 2n x 2n matrix in the interleaved layout."""
    mat = np.asarray(mat, dtype=complex)
    n = mat.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[0::2, 0::2] = mat.real
    out[0::2, 1::2] = -mat.imag
    out[1::2, 0::2] = mat.imag
    out[1::2, 1::2] = mat.real
    return out


# ---------------------------------------------------------------------------
# residuals


def residual_direct(phi: LatticeField, params: LatticeParams, g: Potential) -> LatticeField:
    """Residual of the lattice equation itself, nodewise:
    linear part minus cubic term minus forcing."""
    return apply_linear(phi, params) - apply_cubic(phi, params) - apply_forcing(phi, g)


def _slice_residual(flat: np.ndarray, op: ShiftedOperator, g: Potential, tau: float) -> np.ndarray:
    """Fixed-point residual of the tau-slice on a flat vector."""
    params = op.params
    cubic = -params.gamma * (np.abs(flat) ** 2) * flat
    res = flat - op.solve(cubic)
    if tau != 0.0:
        grid = flat.reshape(params.T, params.K)
        forcing = np.empty_like(grid)
        for t in range(params.T):
            forcing[t, :] = np.asarray(g.evaluate(t, grid[t, :]), dtype=complex)
        res = res - tau * op.solve(forcing.ravel() - op.shift * flat)
    return res


def residual_precond(phi: LatticeField, op: ShiftedOperator, g: Potential) -> LatticeField:
    """Fixed-point residual phi - A^-1 F(phi) - A^-1 (G(phi) - s*phi).

    Equals the direct residual pushed through A^-1; the two routes agree to
    rounding, which the tests use as a consistency check.
    """
    flat = _slice_residual(phi.flatten(), op, g, 1.0)
    return LatticeField.from_flat(flat, phi.T, phi.K)


# ---------------------------------------------------------------------------
# Jacobians


def _cubic_jacobian_blocks(flat: np.ndarray, gamma: float) -> np.ndarray:
    """(n, 2, 2) realified Jacobian blocks of z -> -gamma |z|^2 z."""
    x = flat.real
    y = flat.imag
    blocks = np.empty((flat.size, 2, 2))
    blocks[:, 0, 0] = 3.0 * x * x + y * y
    blocks[:, 0, 1] = 2.0 * x * y
    blocks[:, 1, 0] = 2.0 * x * y
    blocks[:, 1, 1] = x * x + 3.0 * y * y
    return -gamma * blocks


def _forcing_jacobian_blocks(
    flat: np.ndarray, params: LatticeParams, g: Potential, mode: str
) -> np.ndarray:
    """(n, 2, 2) realified Jacobian blocks of the nodewise forcing."""
    grid = flat.reshape(params.T, params.K)
    blocks = np.empty((flat.size, 2, 2))
    if mode == "analytic":
        if g.derivative is None:
            raise MissingDerivative(f"potential kind {g.kind!r} carries no analytic derivative")
        for t in range(params.T):
            for k in range(params.K):
                blocks[t * params.K + k] = np.asarray(g.derivative(t, grid[t, k]), dtype=float)
    elif mode == "finite_diff":
        for t in range(params.T):
            row = grid[t, :]
            h = 1e-6 * (1.0 + np.abs(row))
            col_x = (
                np.asarray(g.evaluate(t, row + h), dtype=complex)
                - np.asarray(g.evaluate(t, row - h), dtype=complex)
            ) / (2.0 * h)
            col_y = (
                np.asarray(g.evaluate(t, row + 1j * h), dtype=complex)
                - np.asarray(g.evaluate(t, row - 1j * h), dtype=complex)
            ) / (2.0 * h)
            base = t * params.K
            blocks[base : base + params.K, 0, 0] = col_x.real
            blocks[base : base + params.K, 0, 1] = col_y.real
            blocks[base : base + params.K, 1, 0] = col_x.imag
            blocks[base : base + params.K, 1, 1] = col_y.imag
    else:
        raise ValueError(f"mode must be 'analytic' or 'finite_diff', got {mode!r}")
    return blocks


def _block_diagonal(blocks: np.ndarray) -> np.ndarray:
    """(n, 2, 2) stack -> (2n, 2n) block-diagonal matrix."""
    n = blocks.shape[0]
    out = np.zeros((2 * n, 2 * n))
    idx = 2 * np.arange(n)
    out[idx, idx] = blocks[:, 0, 0]
    out[idx, idx + 1] = blocks[:, 0, 1]
    out[idx + 1, idx] = blocks[:, 1, 0]
    out[idx + 1, idx + 1] = blocks[:, 1, 1]
    return out


def _slice_jacobian(
    flat: np.ndarray, op: ShiftedOperator, g: Potential, tau: float, mode: str
) -> np.ndarray:
    """Realified Jacobian of the tau-slice residual at a flat vector.

    The identity and A^-1 parts are exact; the cubic blocks are analytic; the
    forcing blocks follow ``mode``.
    """
    blocks = _cubic_jacobian_blocks(flat, op.params.gamma)
    if tau != 0.0:
        blocks = blocks + tau * _forcing_jacobian_blocks(flat, op.params, g, mode)
        blocks[:, 0, 0] -= tau * op.shift
        blocks[:, 1, 1] -= tau * op.shift
    n = flat.size
    return np.eye(2 * n) - op.inverse_realified @ _block_diagonal(blocks)


def realified_jacobian(
    phi: LatticeField, op: ShiftedOperator, g: Potential, mode: str = "analytic"
) -> np.ndarray:
    """Realified Jacobian of the full fixed-point residual at ``phi``.

    ``mode`` selects how the forcing blocks are obtained: "analytic" requires
    the potential to carry a derivative (MissingDerivative otherwise),
    "finite_diff" uses central differences with step 1e-6 * (1 + |z|).
    """
    return _slice_jacobian(phi.flatten(), op, g, tau=1.0, mode=mode)


def _pick_mode(g: Potential) -> str:
    return "analytic" if g.derivative is not None else "finite_diff"


# ---------------------------------------------------------------------------
# damped Newton core


def _sup(vec: np.ndarray) -> float:
    return float(np.abs(vec).max())


def _damped_newton(
    flat0: np.ndarray,
    op: ShiftedOperator,
    g: Potential,
    tau: float,
    tol: float,
    max_iter: int,
    mode: str,
    converge_on: str = "slice",
    shift_vec: np.ndarray | None = None,
) -> tuple[np.ndarray, int, str]:
    """Damped Newton on the (realified) tau-slice.

    Full steps first, halving up to MAX_HALVINGS times until the slice
    residual sup norm strictly decreases; a singular linear solve or a stalled
    line search counts as divergence.  ``converge_on`` picks the convergence
    measure: the slice residual itself or the direct lattice residual.
    ``shift_vec`` subtracts a constant from the slice map (used to solve
    r_tau(phi) = w when estimating local indices).
    """
    params = op.params
    x = np.array(flat0, dtype=complex)

    def slice_res(vec: np.ndarray) -> np.ndarray:
        r = _slice_residual(vec, op, g, tau)
        if shift_vec is not None:
            r = r - shift_vec
        return r

    def measure(vec: np.ndarray, r: np.ndarray) -> float:
        if converge_on == "slice":
            return _sup(r)
        field = LatticeField.from_flat(vec, params.T, params.K)
        return sup_norm(residual_direct(field, params, g))

    r = slice_res(x)
    for iteration in range(max_iter + 1):
        if measure(x, r) <= tol:
            return x, iteration, "converged"
        if iteration == max_iter:
            return x, iteration, "max_iter"
        try:
            jac = _slice_jacobian(x, op, g, tau, mode)
            step = complexify(np.linalg.solve(jac, -realify(r)))
        except np.linalg.LinAlgError:
            return x, iteration, "diverged"
        base = _sup(r)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            candidate = x + lam * step
            r_candidate = slice_res(candidate)
            if _sup(r_candidate) < base:
                x, r = candidate, r_candidate
                break
            lam *= 0.5
        else:
            return x, iteration, "diverged"
    return x, max_iter, "max_iter"  # pragma: no cover - loop always returns


def _report_at(
    flat: np.ndarray,
    op: ShiftedOperator,
    g: Potential,
    iterations: int,
    status: str,
    method: str,
    homotopy_steps: int = 0,
    path: tuple[tuple[float, float], ...] | None = None,
) -> SolveReport:
    field = LatticeField.from_flat(flat, op.params.T, op.params.K)
    return SolveReport(
        solution=field,
        residual_direct=sup_norm(residual_direct(field, op.params, g)),
        residual_precond=_sup(_slice_residual(flat, op, g, 1.0)),
        newton_iterations=iterations,
        homotopy_steps=homotopy_steps,
        path=path,
        status=status,
        method=method,
    )


def newton_solve(
    initial: LatticeField,
    op: ShiftedOperator,
    g: Potential,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100,
    mode: str | None = None,
) -> SolveReport:
    """Damped Newton on the full fixed-point system from a given start.

    Converged means the direct lattice residual has sup norm at most ``tol``
    at the reported field; the line search itself is driven by the
    fixed-point residual.  ``mode`` overrides the forcing-Jacobian route
    (default: analytic when the potential has a derivative, else finite
    differences).
    """
    mode = mode or _pick_mode(g)
    flat, iterations, status = _damped_newton(
        initial.flatten(), op, g, tau=1.0, tol=tol, max_iter=max_iter, mode=mode,
        converge_on="direct",
    )
    return _report_at(flat, op, g, iterations, status, method="newton")


# ---------------------------------------------------------------------------
# homotopy continuation


def homotopy_solve(
    op: ShiftedOperator,
    g: Potential,
    cert: ExistenceCertificate,
    step0: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100,
    seed: int = 0,
    mode: str | None = None,
) -> SolveReport:
    """Track the slice family from the origin at tau = 0 to the full problem.

    Secant predictor, damped Newton corrector, adaptive steps: halve on
    corrector failure (divergence when the step falls below STEP_FLOOR), grow
    by 1.5x after two consecutive successes.  Tracking aborts with status
    "left_ball" when an accepted iterate leaves the certified ball, since the
    certificate only controls the zero set inside it.  The tau = 1 endpoint
    is polished by ``newton_solve`` against the direct residual.

    ``seed`` only feeds determinism plumbing (the run itself is
    deterministic); it is accepted so call sites can thread one seed through
    every solver route uniformly.
    """
    del seed  # deterministic; accepted for interface uniformity
    if not cert.valid:
        raise CertificateInvalid("homotopy tracking requires a VALID certificate")
    mode = mode or _pick_mode(g)
    step = min(max(step0, STEP_FLOOR), 1.0)

    x = np.zeros(op.dim, dtype=complex)
    x_prev: np.ndarray | None = None
    tau, tau_prev = 0.0, 0.0
    path: list[tuple[float, float]] = [(0.0, 0.0)]
    macro_steps = 0
    total_iters = 0
    successes = 0
    attempts = 0

    while tau < 1.0:
        attempts += 1
        if attempts > 2000:
            return _report_at(
                x, op, g, total_iters, "diverged", "homotopy", macro_steps, tuple(path)
            )
        tau_try = min(1.0, tau + step)
        if x_prev is None or tau == tau_prev:
            predicted = x
        else:
            predicted = x + (x - x_prev) * ((tau_try - tau) / (tau - tau_prev))
        corrected, iters, status = _damped_newton(
            predicted, op, g, tau_try, tol=tol, max_iter=CORRECTOR_ITER, mode=mode,
        )
        total_iters += iters
        if status == "converged":
            x_prev, tau_prev = x, tau
            x, tau = corrected, tau_try
            macro_steps += 1
            norm = _sup(x)
            path.append((tau, norm))
            if norm > cert.radius:
                return _report_at(
                    x, op, g, total_iters, "left_ball", "homotopy", macro_steps, tuple(path)
                )
            successes += 1
            if successes >= 2:
                step = min(step * 1.5, 1.0)
                successes = 0
        else:
            successes = 0
            step *= 0.5
            if step < STEP_FLOOR:
                # StepUnderflow condition: reported as divergence, not raised
                return _report_at(
                    x, op, g, total_iters, "diverged", "homotopy", macro_steps, tuple(path)
                )

    polish = newton_solve(
        LatticeField.from_flat(x, op.params.T, op.params.K), op, g, tol, max_iter, mode
    )
    total_iters += polish.newton_iterations
    final_flat = polish.solution.flatten()
    status = polish.status
    if status == "converged" and _sup(final_flat) >= cert.radius:
        status = "left_ball"
    path[-1] = (1.0, _sup(final_flat))
    return _report_at(final_flat, op, g, total_iters, status, "homotopy", macro_steps, tuple(path))


# ---------------------------------------------------------------------------
# multi-start enumeration


def _ball_field(
    T: int, K: int, rng: np.random.Generator, radius: float
) -> LatticeField:
    """Field with entries independently uniform on the disk of the given radius."""
    moduli = radius * np.sqrt(rng.uniform(0.0, 1.0, size=(T, K)))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(T, K))
    return LatticeField(moduli * np.exp(1j * phases))


def _solution_uncertainty(
    flat: np.ndarray, op: ShiftedOperator, g: Potential, mode: str
) -> float:
    """Rough bound on how far a numerically converged point can sit from the
    true zero it approximates: fixed-point residual over the smallest singular
    value of the Jacobian there.  Near-degenerate zeros (singular Jacobian)
    get large values, which the clustering uses to merge their halo of
    pseudo-solutions."""
    res = _sup(_slice_residual(flat, op, g, 1.0))
    sigma = np.linalg.svd(_slice_jacobian(flat, op, g, 1.0, mode), compute_uv=False)
    smallest = float(sigma[-1])
    if smallest <= 0.0:
        return np.inf
    return res / smallest


def _cluster_representatives(
    flats: list[np.ndarray],
    residuals: list[float],
    uncertainties: list[float],
    base_tol: float,
    cap: float,
) -> list[int]:
    """Greedy clustering of candidate solutions.

    Two candidates merge when their sup distance is below the base radius or
    below ten times either one's location uncertainty (capped), whichever is
    larger.  Each cluster keeps its smallest-residual member, ties going to
    the earlier candidate; cluster order is first-found order.
    """
    reps: list[int] = []
    for i in range(len(flats)):
        merged = False
        for slot, j in enumerate(reps):
            unc = 10.0 * max(uncertainties[i], uncertainties[j])
            thresh = max(base_tol, min(cap, unc))
            if _sup(flats[i] - flats[j]) <= thresh:
                if residuals[i] < residuals[j]:
                    reps[slot] = i
                merged = True
                break
        if not merged:
            reps.append(i)
    return reps


def multi_start(
    op: ShiftedOperator,
    g: Potential,
    cert: ExistenceCertificate,
    n_starts: int = 32,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100,
) -> list[SolveReport]:
    """Enumerate distinct solutions inside the certified ball.

    Runs ``newton_solve`` from the homotopy endpoint (when that run converges)
    and from ``n_starts`` fields sampled uniformly in the ball, keeps the
    converged results that stayed inside the ball (Newton is free to wander
    out to zeros the certificate says nothing about), then deduplicates.
    Deterministic for a fixed seed.
    """
    if not cert.valid:
        raise CertificateInvalid("multi-start enumeration requires a VALID certificate")
    mode = _pick_mode(g)
    rng = np.random.default_rng(seed)

    starts: list[LatticeField] = []
    endpoint = homotopy_solve(op, g, cert, tol=tol, max_iter=max_iter, seed=seed, mode=mode)
    if endpoint.status == "converged":
        starts.append(endpoint.solution)
    T, K = op.params.T, op.params.K
    for _ in range(n_starts):
        starts.append(_ball_field(T, K, rng, cert.radius))

    converged: list[SolveReport] = []
    for start in starts:
        report = newton_solve(start, op, g, tol, max_iter, mode)
        if report.status == "converged" and sup_norm(report.solution) <= cert.radius:
            converged.append(report)

    flats = [r.solution.flatten() for r in converged]
    residuals = [r.residual_direct for r in converged]
    uncertainties = [_solution_uncertainty(f, op, g, mode) for f in flats]
    cap = 0.01 * max(1.0, cert.radius)
    keep = _cluster_representatives(flats, residuals, uncertainties, DEDUP_TOL, cap)
    return [replace(converged[i], method="multi_start") for i in keep]


# ---------------------------------------------------------------------------
# steady states


def tile_steady(u: np.ndarray, T: int) -> LatticeField:
    """Lift a K-entry spatial profile to a time-constant (T, K) field."""
    u = np.asarray(u, dtype=complex)
    return LatticeField(np.tile(u, (T, 1)))


def steady_state_solve(
    K: int,
    epsilon: float,
    gamma: float,
    h: Potential,
    tol: float = DEFAULT_TOL,
    beta: float = 1.0,
    shift_factor: float = 1.5,
    slack: float = 0.1,
    samples: int = 10000,
    n_starts: int = 16,
    seed: int = 0,
    max_iter: int = 100,
    full_output: bool = False,
):
    """Solve the time-independent lattice equation on K spatial nodes.

    Instantiates the full machinery with T = 1 (where the time-difference
    part of the operator vanishes identically) and projects the solution to
    its spatial row.  Tries homotopy continuation first and falls back to
    multi-start Newton when the tracked branch fails to reach tau = 1 (a real
    possibility for forcings with nonzero mean, whose constant-mode branch
    folds); raises SolveFailed when no route converges.

    Returns the K-entry complex profile, or ``(profile, report)`` when
    ``full_output`` is set.
    """
    if h.period != 1:
        raise ValueError(f"steady forcing must have period 1, got {h.period}")
    params = LatticeParams(T=1, K=K, beta=beta, epsilon=epsilon, gamma=gamma)
    op = build_shifted(params, shift_factor)
    cert = build_certificate(op, h, slack=slack, samples=samples, seed=seed)
    if not cert.valid:
        raise CertificateInvalid(
            "steady-state certificate failed its boundary check; cannot bound the search"
        )
    report = homotopy_solve(op, h, cert, tol=tol, max_iter=max_iter, seed=seed)
    if report.status != "converged":
        candidates = multi_start(op, h, cert, n_starts=n_starts, seed=seed, tol=tol,
                                 max_iter=max_iter)
        if not candidates:
            raise SolveFailed(
                f"neither homotopy (status {report.status!r}) nor {n_starts} Newton starts "
                "produced a converged steady state"
            )
        report = min(candidates, key=lambda r: r.residual_direct)
    profile = report.solution.values[0, :].copy()
    if full_output:
        return profile, report
    return profile
