"""Palm conditioning by iterated rank-one downdates.

Conditioning a rank-N projection model at a point q restricts it to the
functions of its range vanishing at q. In coefficient space that is one
Householder reflection: if w holds the basis values at q, the reflection
sending w to a multiple of e1 turns rows 2..N into an orthonormal basis of
the constrained span, which is exactly the subspace whose projection kernel
is K(x,y) - K(x,q)K(q,y)/K(q,q). Working with the orthonormal basis rather
than iterating that kernel formula keeps repeated downdates stable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConfigError, DegenerateInputError, DomainError
from .kernelspace import Domain, KernelModel

ANCHOR_MIN_SEPARATION = 1e-9
ZERO_DIAGONAL_REL = 1e-14


@dataclass(frozen=True)
class PalmAnchor:
    """An ordered tuple of distinct conditioning points."""
    points: tuple

    def __init__(self, points):
        pts = tuple(complex(p) for p in points)
        arr = np.asarray(pts, dtype=complex)
        if arr.size and not np.all(np.isfinite(arr.view(float))):
            raise ConfigError("anchor points must be finite")
        if arr.size > 1:
            sep = np.abs(arr[:, None] - arr[None, :])
            np.fill_diagonal(sep, np.inf)
            if sep.min() <= ANCHOR_MIN_SEPARATION:
                raise DegenerateInputError(
                    f"anchor points closer than {ANCHOR_MIN_SEPARATION:g}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def _as_anchor(anchor):
    if anchor is None:
        return PalmAnchor(())
    if isinstance(anchor, PalmAnchor):
        return anchor
    return PalmAnchor(anchor)


def _weighted_diag_scale(model):
    """Cached maximum of the full-family weighted diagonal on a radial probe
    grid; the reference scale for the numerically-zero-diagonal convention."""
    key = "diag_scale"
    if key not in model._cache:
        from .sampler import envelope_data
        model._cache[key] = envelope_data(model).diag_max
    return model._cache[key]


def householder_drop_row(coeffs, w):
    """Apply the reflection sending w to a multiple of e1 and drop row one.

    Rows of the result are orthonormal and span exactly the combinations a
    with sum_i a_i w_i = 0.
    """
    nw = np.linalg.norm(w)
    phase = w[0] / abs(w[0]) if abs(w[0]) > 0.0 else 1.0 + 0.0j
    u = w.astype(np.complex128, copy=True)
    u[0] -= -phase * nw
    un2 = np.vdot(u, u).real
    if un2 <= 0.0:
        return coeffs[1:].copy()
    reflected = coeffs - np.outer(u, (u.conj() @ coeffs)) * (2.0 / un2)
    return reflected[1:]


def palm_downdate_once(model: KernelModel, point) -> KernelModel:
    """Condition at a single point.

    If the weighted diagonal at the point is below ZERO_DIAGONAL_REL times
    the model's diagonal scale the model is returned unchanged (the
    conditioning functional is numerically zero, e.g. after conditioning at
    the same point twice).
    """
    q = complex(point)
    w = model.basis_at(np.array([q]), weighted=True)[:, 0]
    diag = np.vdot(w, w).real
    if diag < ZERO_DIAGONAL_REL * _weighted_diag_scale(model):
        return model
    coeffs = householder_drop_row(model.coeffs, w)
    return model.replace(rank=model.rank - 1, coeffs=coeffs)


def palm_downdate(model: KernelModel, anchor) -> KernelModel:
    """Condition at an anchor tuple; result does not depend on the order.

    The final basis is re-orthonormalized through a QR factorization so that
    long conditioning chains cannot accumulate drift.
    """
    anchor = _as_anchor(anchor)
    if len(anchor) == 0:
        return model
    if len(anchor) > model.rank:
        raise ConfigError(
            f"anchor of order {len(anchor)} exceeds model rank {model.rank}")
    out = model
    for q in anchor.points:
        out = palm_downdate_once(out, q)
    if out.rank > 0 and out is not model:
        qmat, _ = np.linalg.qr(out.coeffs.conj().T)
        out = out.replace(coeffs=np.ascontiguousarray(qmat.conj().T))
    return out


def vanishing_at_origin_subspace(model: KernelModel, order: int) -> KernelModel:
    """Drop the first `order` monomial basis functions, i.e. restrict to the
    functions with a zero of that order at the origin. Requires the fresh
    monomial basis of a radial build (not a conditioned model)."""
    if order < 0:
        raise ConfigError("order must be nonnegative")
    if order == 0:
        return model
    if order >= model.rank:
        raise ConfigError(f"order {order} must be below the rank {model.rank}")
    if model.coeffs.shape[0] != model.monomial_count or not np.array_equal(
            model.coeffs, np.eye(model.monomial_count)):
        raise ConfigError("requires the unconditioned monomial-basis model")
    coeffs = np.eye(model.monomial_count, dtype=np.complex128)[order:]
    return model.replace(rank=model.rank - order, coeffs=coeffs)


# -- membership residuals for the subspace multiplication relations ----------

def _plain_poly_coeffs(model):
    """Basis rows as plain monomial coefficients (ascending powers)."""
    scale = np.exp(-0.5 * model.log_norms_sq)
    return model.coeffs * scale[None, :]


def _tuples_equal(p, q):
    return len(p) == len(q) and all(a == b for a, b in zip(p, q))


def _check_no_overlap(p, q):
    for a in p:
        for b in q:
            if abs(a - b) <= ANCHOR_MIN_SEPARATION:
                raise DegenerateInputError(
                    "zero and pole anchors coincide; the ratio degenerates")


def relation_check_fock(model: KernelModel, p, q) -> float:
    """Finite-rank membership residual for the plane relation: every basis
    function of the p-conditioned model, multiplied by
    prod(z-q_j)/prod(z-p_j), must vanish at every q_j.

    The rational factor is applied in coefficient space (synthetic division
    by the p factors, then multiplication by the q factors), so the reported
    residual measures genuine cancellation error rather than a trivial zero
    factor. Returns the max absolute value over basis functions and targets.
    """
    if model.domain is not Domain.PLANE:
        raise ConfigError("fock relation check needs a plane model")
    p = tuple(complex(v) for v in p)
    q = tuple(complex(v) for v in q)
    if len(p) != len(q):
        raise ConfigError("plane relation compares anchors of equal order")
    if _tuples_equal(p, q):
        return 0.0
    _check_no_overlap(p, q)
    mp = palm_downdate(model, PalmAnchor(p))
    polys = _plain_poly_coeffs(mp)
    qfactor = npoly.polyfromroots(q)
    residual = 0.0
    for row in polys:
        h = row
        for root in p:
            h, rem = npoly.polydiv(h, np.array([-root, 1.0]))
            residual = max(residual, abs(rem[0]))
        h = npoly.polymul(h, qfactor)
        vals = npoly.polyval(np.asarray(q), h)
        residual = max(residual, float(np.abs(vals).max()))
    return residual


def relation_check_bergman(model: KernelModel, p, q) -> float:
    """Membership residual for the disc relation with Blaschke factors.

    Basis functions of the p-conditioned model are divided by the Blaschke
    product of p and multiplied by the one of q; the numerator denominators
    (1 - conj(a) z) are polynomial factors, so the computation stays in
    coefficient space. For k = 0 the residual is the division remainder
    (the removable-singularity content); otherwise the values at the q
    points are included.
    """
    if model.domain is not Domain.DISC:
        raise ConfigError("bergman relation check needs a disc model")
    p = tuple(complex(v) for v in p)
    q = tuple(complex(v) for v in q)
    if any(abs(v) >= 1 for v in p + q):
        raise DomainError("blaschke anchors must lie inside the unit disc")
    if _tuples_equal(p, q):
        return 0.0
    _check_no_overlap(p, q)
    mp = palm_downdate(model, PalmAnchor(p))
    polys = _plain_poly_coeffs(mp)
    # numerator polynomial factors of b_q / b_p after cancelling the p zeros:
    # prod(z - q_j) * prod(1 - conj(p_j) z)
    numer = npoly.polyfromroots(q) if q else np.array([1.0 + 0j])
    for a in p:
        numer = npoly.polymul(numer, np.array([1.0, -np.conj(a)]))
    qarr = np.asarray(q, dtype=complex)
    residual = 0.0
    for row in polys:
        h = row
        for root in p:
            h, rem = npoly.polydiv(h, np.array([-root, 1.0]))
            residual = max(residual, abs(rem[0]))
        if q:
            h = npoly.polymul(h, numer)
            vals = npoly.polyval(qarr, h)
            # divide the evaluated values by prod(1 - conj(q_i) q_j) != 0
            denom = np.prod(1.0 - np.conj(qarr)[None, :] * qarr[:, None], axis=1)
            residual = max(residual, float(np.abs(vals / denom).max()))
    return residual


def blaschke_ratio_probe(model: KernelModel, p, point, deltas=(1e-4, 1e-5)):
    """Values of (basis functions / Blaschke product of p) on small circles
    around one of the p points, from four directions per radius: a numerical
    limit probe for the removable singularity. Returns an array of shape
    (rank, len(deltas), 4)."""
    p = tuple(complex(v) for v in p)
    point = complex(point)
    mp = palm_downdate(model, PalmAnchor(p))
    out = np.empty((mp.rank, len(deltas), 4), dtype=complex)
    for di, d in enumerate(deltas):
        zs = point + d * np.exp(1j * np.pi / 2 * np.arange(4))
        vals = mp.basis_at(zs, weighted=False)
        b = np.ones(4, dtype=complex)
        for a in p:
            b *= (zs - a) / (1.0 - np.conj(a) * zs)
        out[:, di, :] = vals / b[None, :]
    return out
