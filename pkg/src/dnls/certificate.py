"""Existence certificates for periodic solutions of the lattice equation.

The certificate packages the constants of a degree-theoretic existence
argument.  With A the shifted linear matrix, s the shift, and gamma the cubic
coefficient, the pivotal coefficient is

    coef = |gamma| / (2 * ||A|| * ||A^-1||),

and the forcing must eventually be dominated by coef * |z|^3: beyond the
threshold radius, |g(t, z)| <= coef * |z|^3.  With M the sup of |g| inside
the threshold radius, the chain of constants is

    const_bound  = ||A^-1|| * M,
    linear_bound = ||A^-1|| * s,
    cubic_bound  = |gamma| / (2 * ||A||),

which bound the preconditioned forcing from above,

    ||A^-1 (G(phi) - s phi)|| <= const_bound + linear_bound*||phi|| + cubic_bound*||phi||^3,

while the odd part is bounded from below on every sphere,

    ||phi - A^-1 F(phi)|| >= 2*cubic_bound*||phi||^3 - ||phi||.

Any radius R that puts the lower envelope strictly above the upper one
certifies that the boundary of the ball of radius R is free of zeros of the
interpolating family, so the topological degree argument pins a solution
inside.  ``verify_boundary`` backs the inequality with randomized sphere
sampling and records the worst observed gap.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .errors import NoThresholdFound
from .operators import ShiftedOperator
from .potentials import Potential

__all__ = [
    "BoundaryEvidence",
    "ExistenceCertificate",
    "compute_threshold_radius",
    "compute_forcing_sup",
    "compute_ball_radius",
    "sphere_samples",
    "verify_boundary",
    "build_certificate",
]

#: phase resolution of the polar scans
SCAN_PHASES = 64
#: per-candidate radial span and resolution of the threshold scan
SCAN_SPAN = 16.0
SCAN_RADII = 48
#: safety factor demanded of the sampled ratio before accepting a threshold
SCAN_SAFETY = 1.25
#: largest candidate threshold radius tried before giving up
SCAN_MAX_RADIUS = 2.0**24
#: safety factor applied to the sampled forcing sup
SUP_SAFETY = 1.05
#: absolute bisection tolerance of the certified ball radius
RADIUS_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryEvidence:
    """Outcome of randomized boundary sampling: sample count, the smallest
    observed gap lower-envelope minus upper-envelope, and a short hash of the
    sample attaining it (None fields when no samples were drawn)."""

    count: int
    min_gap: float | None
    argmin_hash: str | None


@dataclass(frozen=True)
class ExistenceCertificate:
    """Constants of the existence argument plus the sampled boundary evidence.

    ``rigor`` records how the threshold radius and forcing sup were obtained:
    "closed_form" when the potential carried exact formulas, "sampled" when
    polar-grid scans stood in for them.  ``valid`` requires a strictly
    positive observed minimum gap over at least one boundary sample.
    """

    shift: float
    norm_linear: float
    norm_shifted: float
    norm_shifted_inv: float
    threshold_coef: float
    threshold_radius: float
    forcing_sup: float
    const_bound: float
    linear_bound: float
    cubic_bound: float
    radius: float
    margin: float
    rigor: str
    boundary: BoundaryEvidence | None
    valid: bool


def compute_threshold_radius(g: Potential, coef: float) -> tuple[float, str]:
    """Radius beyond which |g(t, z)| <= coef * |z|^3, with its rigor tag.

    Uses the potential's closed form when present.  Otherwise scans a ladder
    of candidate radii; a candidate R is accepted when the sampled ratio
    max |g| / |z|^3 over the polar grid [R, R*SCAN_SPAN] x SCAN_PHASES stays
    below coef / SCAN_SAFETY.  Raises NoThresholdFound when the ladder is
    exhausted, the signature of growth that is cubic or worse.
    """
    if not coef > 0.0:
        raise ValueError(f"threshold coefficient must be positive, got {coef}")
    if g.threshold_formula is not None:
        return float(g.threshold_formula(coef)), "closed_form"

    phases = np.exp(2j * np.pi * np.arange(SCAN_PHASES) / SCAN_PHASES)
    candidate = 2.0**-4
    while candidate <= SCAN_MAX_RADIUS:
        radii = np.geomspace(candidate, candidate * SCAN_SPAN, SCAN_RADII)
        grid = radii[:, None] * phases[None, :]
        worst = 0.0
        for t in range(g.period):
            vals = np.abs(np.asarray(g.evaluate(t, grid)))
            worst = max(worst, float((vals / radii[:, None] ** 3).max()))
        if worst < coef / SCAN_SAFETY:
            return float(candidate), "sampled"
        candidate *= 2.0
    raise NoThresholdFound(
        f"sampled growth ratio never dropped below {coef:.6g} for radii up to "
        f"{SCAN_MAX_RADIUS:.3g}; the forcing is not subcubic"
    )


def compute_forcing_sup(g: Potential, radius: float) -> float:
    """Sup of |g(t, z)| over t and the disk |z| <= radius.

    Closed form when available; otherwise a polar grid with one local
    refinement pass around the running maximum, inflated by SUP_SAFETY.
    """
    if radius < 0.0:
        raise ValueError(f"radius must be nonnegative, got {radius}")
    if g.sup_formula is not None:
        return float(g.sup_formula(radius))
    if radius == 0.0:
        return max(float(abs(np.asarray(g.evaluate(t, 0.0)))) for t in range(g.period))

    n_radii = 96
    phases = np.exp(2j * np.pi * np.arange(SCAN_PHASES) / SCAN_PHASES)
    radii = np.linspace(0.0, radius, n_radii)

    def grid_max(rads: np.ndarray) -> tuple[float, float]:
        grid = rads[:, None] * phases[None, :]
        best_val, best_rad = 0.0, rads[0]
        for t in range(g.period):
            vals = np.abs(np.asarray(g.evaluate(t, grid)))
            idx = int(np.argmax(vals))
            val = float(vals.flat[idx])
            if val > best_val:
                best_val, best_rad = val, float(rads[idx // vals.shape[1]])
        return best_val, best_rad

    coarse, at = grid_max(radii)
    step = radius / (n_radii - 1)
    lo = max(0.0, at - step)
    hi = min(radius, at + step)
    fine, _ = grid_max(np.linspace(lo, hi, 4 * SCAN_PHASES))
    return float(max(coarse, fine) * SUP_SAFETY)


def compute_ball_radius(
    const_bound: float, linear_bound: float, cubic_bound: float, slack: float = 0.1
) -> float:
    """Smallest radius R whose lower envelope clears the upper one with slack.

    Solves  2*cubic_bound*R^3 - R >= (1 + slack) * (const_bound +
    linear_bound*R + cubic_bound*R^3)  for the smallest such R, by doubling a
    bracket from the cubic's stationary point and bisecting to RADIUS_TOL.
    For slack < 1 the cubic terms leave a positive net coefficient, so a
    finite radius always exists.
    """
    if not 0.0 <= slack < 1.0:
        raise ValueError(f"slack must lie in [0, 1), got {slack}")
    if not cubic_bound > 0.0:
        raise ValueError(f"cubic bound must be positive, got {cubic_bound}")
    sigma = 1.0 + slack
    a = (2.0 - sigma) * cubic_bound
    b = 1.0 + sigma * linear_bound
    c = sigma * const_bound

    def excess(r: float) -> float:
        return a * r**3 - b * r - c

    lo = float(np.sqrt(b / (3.0 * a)))  # stationary point; excess(lo) < 0 always
    hi = lo
    while excess(hi) < 0.0:
        hi *= 2.0
    while hi - lo > RADIUS_TOL:
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi  # upper end of the bracket, so the inequality holds at the result


def sphere_samples(
    T: int, K: int, radius: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """(count, T, K) batch of fields with sup norm exactly ``radius``.

    Entries get moduli uniform in [0, radius] and uniform phases, then one
    uniformly chosen entry per sample is rescaled to modulus exactly
    ``radius`` (keeping its phase), which places the sample on the sphere.
    """
    moduli = rng.uniform(0.0, radius, size=(count, T, K))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(count, T, K))
    flat_idx = rng.integers(0, T * K, size=count)
    moduli.reshape(count, T * K)[np.arange(count), flat_idx] = radius
    return moduli * np.exp(1j * phases)


def verify_boundary(
    cert: ExistenceCertificate,
    op: ShiftedOperator,
    g: Potential,
    samples: int,
    seed: int,
) -> BoundaryEvidence:
    """Sample the certified sphere and record the worst inequality gap.

    For each sample phi with sup norm cert.radius the gap is

        ||phi - A^-1 F(phi)||  -  ||A^-1 (G(phi) - s*phi)||,

    which the certificate constants promise to be positive.  Evidence with a
    nonpositive minimum gap (or an empty sample set) marks the certificate
    invalid.  Deterministic for a fixed seed; evaluation is batched.
    """
    if samples <= 0:
        return BoundaryEvidence(count=0, min_gap=None, argmin_hash=None)
    T, K = op.params.T, op.params.K
    rng = np.random.default_rng(seed)
    batch = sphere_samples(T, K, cert.radius, samples, rng)
    flat = batch.reshape(samples, op.dim)

    gamma = op.params.gamma
    cubic = -gamma * (np.abs(flat) ** 2) * flat
    forcing = np.empty_like(batch)
    for t in range(T):
        forcing[:, t, :] = np.asarray(g.evaluate(t, batch[:, t, :]), dtype=complex)
    forcing_flat = forcing.reshape(samples, op.dim)

    odd_part = flat - op.solve(cubic.T).T
    precond_forcing = op.solve((forcing_flat - op.shift * flat).T).T
    gaps = np.abs(odd_part).max(axis=1) - np.abs(precond_forcing).max(axis=1)

    worst = int(np.argmin(gaps))
    digest = hashlib.sha256(np.ascontiguousarray(batch[worst]).tobytes()).hexdigest()[:16]
    return BoundaryEvidence(count=samples, min_gap=float(gaps[worst]), argmin_hash=digest)


def build_certificate(
    op: ShiftedOperator,
    g: Potential,
    slack: float = 0.1,
    samples: int = 10000,
    seed: int = 0,
) -> ExistenceCertificate:
    """Run the full constant chain and boundary check for one instance.

    Raises NoThresholdFound (via the threshold scan) when the forcing is not
    subcubic; otherwise always returns a certificate, whose ``valid`` flag
    reflects the sampled boundary evidence.
    """
    gamma = abs(op.params.gamma)
    coef = gamma / (2.0 * op.norm_shifted * op.norm_shifted_inv)
    threshold_radius, rigor = compute_threshold_radius(g, coef)
    forcing_sup = compute_forcing_sup(g, threshold_radius)
    const_bound = op.norm_shifted_inv * forcing_sup
    linear_bound = op.norm_shifted_inv * op.shift
    cubic_bound = gamma / (2.0 * op.norm_shifted)
    radius = compute_ball_radius(const_bound, linear_bound, cubic_bound, slack)
    upper = const_bound + linear_bound * radius + cubic_bound * radius**3
    margin = (2.0 * cubic_bound * radius**3 - radius) / upper - 1.0
    cert = ExistenceCertificate(
        shift=op.shift,
        norm_linear=op.norm_linear,
        norm_shifted=op.norm_shifted,
        norm_shifted_inv=op.norm_shifted_inv,
        threshold_coef=float(coef),
        threshold_radius=float(threshold_radius),
        forcing_sup=float(forcing_sup),
        const_bound=float(const_bound),
        linear_bound=float(linear_bound),
        cubic_bound=float(cubic_bound),
        radius=float(radius),
        margin=float(margin),
        rigor=rigor,
        boundary=None,
        valid=False,
    )
    evidence = verify_boundary(cert, op, g, samples, seed)
    is_valid = evidence.count > 0 and evidence.min_gap is not None and evidence.min_gap > 0.0
    return replace(cert, boundary=evidence, valid=is_valid)
