"""Brouwer degree estimates for the fixed-point maps on the certified ball.

The degree of a map on a ball (with no zeros on the boundary) equals the sum
of Jacobian determinant signs over its zeros inside, provided every zero is
regular.  This module estimates that sum by multi-start enumeration: Newton
from the origin and from random starts in the ball, deduplication of the
converged points, then sign evaluation at each representative.

Two wrinkles make the naive sum wrong and are handled explicitly:

* Phase equivariance.  Both maps commute with a global phase rotation, so
  any zero with a nonzero phase orbit sits on a whole circle of zeros; the
  Jacobian there is singular along the orbit direction and such circles
  contribute nothing countable.  They are reported in ``degenerate`` and
  excluded from the sum.

* A degenerate origin.  When the forcing has zero derivative at 0 the full
  map's Jacobian at the origin is singular (constants span its kernel), yet
  the origin is still an isolated zero with a well-defined local index.  That
  index is recovered by perturbation: solve map = w for a tiny generic w,
  enumerate the preimages in a small ball around the origin, and sum their
  regular signs.

The estimate is heuristic (random starts cannot certify completeness), which
``DegreeReport.completeness`` states outright.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificate import ExistenceCertificate, sphere_samples
from .errors import CertificateInvalid, DegenerateZero
from .lattice import LatticeField
from .operators import ShiftedOperator
from .potentials import Potential
from .solver import (
    _ball_field,
    _cluster_representatives,
    _damped_newton,
    _pick_mode,
    _slice_jacobian,
    _slice_residual,
    _sup,
    complexify,
)

__all__ = [
    "ZeroRecord",
    "DegenerateRecord",
    "DegreeReport",
    "zero_sign",
    "estimate_degree",
]

#: a zero counts as degenerate when sigma_min / sigma_max drops to this level
SIGMA_RATIO_DEGENERATE = 1e-8
#: Newton tolerance on the fixed-point residual during enumeration
ENUM_TOL = 1e-11
#: re-verification cap: candidates above this residual are dropped
RESIDUAL_CAP = 1e-9


@dataclass(frozen=True)
class ZeroRecord:
    """A regular zero: location, residual, Jacobian sign, singular value ratio."""

    field: LatticeField
    residual: float
    sign: int
    sigma_ratio: float


@dataclass(frozen=True)
class DegenerateRecord:
    """A zero whose Jacobian is numerically singular.

    ``local_index`` is the perturbation-recovered Brouwer index when one was
    computed (only attempted at the origin), None when the zero was excluded
    from the degree sum.
    """

    field: LatticeField
    residual: float
    sigma_ratio: float
    local_index: int | None


@dataclass(frozen=True)
class DegreeReport:
    """Degree estimate over the certified ball.

    ``target`` is "odd" (the map without forcing) or "full".  ``parity_ok``
    checks the odd-map constraint (degree of an odd map on a symmetric ball
    is odd); it is None for the full map, where no parity is forced.
    ``completeness`` is always "heuristic".
    """

    target: str
    radius: float
    zeros: tuple[ZeroRecord, ...]
    degenerate: tuple[DegenerateRecord, ...]
    degree_estimate: int
    parity_ok: bool | None
    completeness: str
    origin_perturbed: bool


def zero_sign(jacobian: np.ndarray) -> int:
    """Sign of the determinant of a realified Jacobian, as +1 or -1.

    Raises DegenerateZero on a numerically singular matrix, since a zero with
    vanishing determinant has no countable sign.
    """
    sign, _ = np.linalg.slogdet(jacobian)
    if sign == 0.0:
        raise DegenerateZero("Jacobian determinant vanished; the zero has no sign")
    return 1 if sign > 0 else -1


def _origin_local_index(
    op: ShiftedOperator,
    g: Potential,
    tau: float,
    mode: str,
    radius: float,
    seed: int,
) -> int | None:
    """Local Brouwer index at an isolated degenerate zero at the origin.

    Solves map = w for a small random target w, well below the map's minimum
    on a probe sphere (so the preimage count inside the probe ball is exactly
    the local index count), then sums regular signs over the deduplicated
    preimages.  The sphere minimum is attained along the Jacobian's null
    directions, where the map is only cubically small, so those directions
    are probed densely on top of random samples, and Newton runs start along
    them as well.  Returns None when the probe is inconclusive (zero sphere
    minimum, no preimages found, or a degenerate preimage).
    """
    params = op.params
    rng = np.random.default_rng(seed + 0x5EED)
    rho = 0.02 * min(1.0, radius)

    origin = np.zeros(op.dim, dtype=complex)
    svals_0, rows_0 = np.linalg.svd(_slice_jacobian(origin, op, g, tau, mode))[1:]
    null_dirs: list[np.ndarray] = []
    for idx in range(len(svals_0)):
        if svals_0[idx] <= 1e-6 * svals_0[0]:
            vec = complexify(rows_0[idx])
            norm = _sup(vec)
            if norm > 0.0:
                null_dirs.append(vec / norm)
    phases = np.exp(2j * np.pi * np.arange(16) / 16)

    probes = [sample.ravel() for sample in sphere_samples(params.T, params.K, rho, 256, rng)]
    for vec in null_dirs:
        for phase in phases:
            probes.append(rho * phase * vec)
    sphere_min = min(_sup(_slice_residual(flat, op, g, tau)) for flat in probes)
    if sphere_min <= 0.0:
        return None

    direction = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
    direction /= _sup(direction)
    w = (sphere_min / 30.0) * direction
    tol = max(1e-14, _sup(w) * 1e-3)

    starts: list[np.ndarray] = []
    for vec in null_dirs:
        for frac in (0.3, 0.6, 0.9):
            for phase in phases[::2]:
                starts.append(frac * rho * phase * vec)
    for _ in range(96):
        starts.append(_ball_field(params.T, params.K, rng, rho).flatten())

    flats: list[np.ndarray] = []
    residuals: list[float] = []
    uncertainties: list[float] = []
    sigma_pairs: list[tuple[float, float]] = []
    for start in starts:
        x, _, status = _damped_newton(
            start, op, g, tau, tol=tol, max_iter=60, mode=mode, shift_vec=w,
        )
        if status != "converged" or not _sup(x) < rho:
            continue
        res = _sup(_slice_residual(x, op, g, tau) - w)
        svals = np.linalg.svd(_slice_jacobian(x, op, g, tau, mode), compute_uv=False)
        smallest, largest = float(svals[-1]), float(svals[0])
        flats.append(x)
        residuals.append(res)
        uncertainties.append(res / smallest if smallest > 0.0 else np.inf)
        sigma_pairs.append((smallest, largest))
    if not flats:
        return None

    keep = _cluster_representatives(flats, residuals, uncertainties,
                                    base_tol=1e-9, cap=rho / 4.0)
    index = 0
    for i in keep:
        smallest, largest = sigma_pairs[i]
        if largest <= 0.0 or smallest / largest <= SIGMA_RATIO_DEGENERATE:
            return None
        index += zero_sign(_slice_jacobian(flats[i], op, g, tau, mode))
    return index


def estimate_degree(
    target: str,
    op: ShiftedOperator,
    g: Potential,
    cert: ExistenceCertificate,
    n_starts: int = 32,
    seed: int = 0,
    tol: float = ENUM_TOL,
    residual_cap: float = RESIDUAL_CAP,
) -> DegreeReport:
    """Estimate the Brouwer degree of a fixed-point map on the certified ball.

    ``target`` chooses the map: "odd" drops the forcing (the comparison map of
    the existence argument, odd by construction), "full" keeps it.  Candidate
    zeros come from Newton started at the origin and at ``n_starts`` random
    fields in the ball; converged candidates are kept when their re-verified
    residual stays below ``residual_cap`` and they sit strictly inside the
    ball, then deduplicated.  Regular zeros contribute their Jacobian sign;
    a degenerate origin contributes its perturbation-recovered local index;
    other degenerate zeros (phase circles) are reported but not counted.
    """
    if target not in ("odd", "full"):
        raise ValueError(f"target must be 'odd' or 'full', got {target!r}")
    if not cert.valid:
        raise CertificateInvalid("degree estimation requires a VALID certificate")
    tau = 0.0 if target == "odd" else 1.0
    mode = _pick_mode(g)
    params = op.params
    rng = np.random.default_rng(seed)

    starts = [np.zeros(op.dim, dtype=complex)]
    for _ in range(n_starts):
        starts.append(_ball_field(params.T, params.K, rng, cert.radius).flatten())

    flats: list[np.ndarray] = []
    residuals: list[float] = []
    uncertainties: list[float] = []
    sigma_pairs: list[tuple[float, float]] = []
    for start in starts:
        x, _, status = _damped_newton(
            start, op, g, tau, tol=tol, max_iter=100, mode=mode,
        )
        if status != "converged":
            continue
        res = _sup(_slice_residual(x, op, g, tau))
        if res > residual_cap or not _sup(x) < cert.radius:
            continue
        svals = np.linalg.svd(_slice_jacobian(x, op, g, tau, mode), compute_uv=False)
        smallest, largest = float(svals[-1]), float(svals[0])
        flats.append(x)
        residuals.append(res)
        uncertainties.append(res / smallest if smallest > 0.0 else np.inf)
        sigma_pairs.append((smallest, largest))

    keep = _cluster_representatives(
        flats, residuals, uncertainties,
        base_tol=1e-6, cap=0.01 * max(1.0, cert.radius),
    )

    zeros: list[ZeroRecord] = []
    degenerate: list[DegenerateRecord] = []
    degree = 0
    origin_perturbed = False
    origin_tol = 1e-6 * max(1.0, cert.radius)
    for i in keep:
        smallest, largest = sigma_pairs[i]
        ratio = smallest / largest if largest > 0.0 else 0.0
        field = LatticeField.from_flat(flats[i], params.T, params.K)
        if ratio > SIGMA_RATIO_DEGENERATE:
            sign = zero_sign(_slice_jacobian(flats[i], op, g, tau, mode))
            zeros.append(ZeroRecord(field, residuals[i], sign, ratio))
            degree += sign
            continue
        local_index: int | None = None
        if _sup(flats[i]) <= origin_tol:
            local_index = _origin_local_index(op, g, tau, mode, cert.radius, seed)
            if local_index is not None:
                degree += local_index
                origin_perturbed = True
        degenerate.append(DegenerateRecord(field, residuals[i], ratio, local_index))

    parity_ok: bool | None = None
    if target == "odd":
        parity_ok = degree % 2 == 1
    return DegreeReport(
        target=target,
        radius=cert.radius,
        zeros=tuple(zeros),
        degenerate=tuple(degenerate),
        degree_estimate=degree,
        parity_ok=parity_ok,
        completeness="heuristic",
        origin_perturbed=origin_perturbed,
    )
