"""Finite-rank reproducing kernels for weighted spaces of entire functions
on the plane and holomorphic functions on the unit disc.

A model is the orthogonal projection onto an N-dimensional subspace of
L^2(domain, w dlambda) spanned by linear combinations of monomials. For a
radial weight the monomials are orthogonal, so a freshly built model has the
orthonormal basis z^n / ||z^n||, n < N. Conditioning (Palm downdates) turns
the basis into a general coefficient matrix over the same normalized
monomials; the matrix rows stay orthonormal, which is the invariant every
routine here relies on.

Evaluation is done in "weighted" form where possible: the basis values are
multiplied by the square root of the radial density, which keeps every
intermediate bounded by the (finite) diagonal intensity even at ranks in the
hundreds.
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, gammaincc, gammainccinv, logsumexp

from . import quadrature as quad
from ._kernels import WCODE_BERGMAN, WCODE_FOCK_RADIAL, WCODE_TABULATED
from .errors import (ConfigError, DegenerateInputError, DomainError,
                     QuadratureError, UnsupportedWeightError)

TAIL_MASS_LIMIT = 1e-12
HERMITIAN_TOL = 1e-10


class Domain(enum.Enum):
    PLANE = "plane"
    DISC = "disc"


@dataclass(frozen=True)
class FockRadial:
    """Reference measure exp(-|z|^alpha) dlambda on the plane."""
    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ConfigError(f"fock radial exponent must be positive, got {self.alpha}")


@dataclass(frozen=True)
class FockGaussian:
    """The Gaussian case exp(-|z|^2) dlambda; truncations are the Ginibre
    orthogonal-polynomial ensembles."""


@dataclass(frozen=True)
class BergmanClassical:
    """Reference measure (1-|z|^2)^alpha dlambda on the unit disc."""
    alpha: float

    def __post_init__(self):
        if not (self.alpha > -1 and np.isfinite(self.alpha)):
            raise ConfigError(f"bergman exponent must exceed -1, got {self.alpha}")


class TabulatedRadial:
    """Radial weight given by log-density samples, interpolated log-linearly.

    Evaluation outside the table raises; no extrapolation.
    """

    def __init__(self, radii, log_weight, domain=Domain.PLANE):
        radii = np.asarray(radii, dtype=float)
        log_weight = np.asarray(log_weight, dtype=float)
        if radii.ndim != 1 or radii.shape != log_weight.shape:
            raise ConfigError("tabulated weight needs matching 1-d radii/log_weight")
        if radii.size < 2 or not np.all(np.diff(radii) > 0):
            raise ConfigError("tabulated radii must be strictly increasing")
        if radii[0] < 0:
            raise ConfigError("tabulated radii must be nonnegative")
        if not (np.all(np.isfinite(radii)) and np.all(np.isfinite(log_weight))):
            raise ConfigError("tabulated weight values must be finite")
        self.radii = radii
        self.radii.setflags(write=False)
        self.log_weight = log_weight
        self.log_weight.setflags(write=False)
        self.domain = Domain(domain)

    def __repr__(self):
        return (f"TabulatedRadial(n={self.radii.size}, "
                f"r=[{self.radii[0]:g},{self.radii[-1]:g}], {self.domain.value})")


Weight = FockRadial | FockGaussian | BergmanClassical | TabulatedRadial


def weight_domain(weight) -> Domain:
    if isinstance(weight, (FockRadial, FockGaussian)):
        return Domain.PLANE
    if isinstance(weight, BergmanClassical):
        return Domain.DISC
    if isinstance(weight, TabulatedRadial):
        return weight.domain
    raise UnsupportedWeightError(f"unknown weight {weight!r}")


def _fock_alpha(weight):
    return 2.0 if isinstance(weight, FockGaussian) else weight.alpha


def log_radial_density(weight, r):
    """log of the radial reference density w(r) (so w dlambda is the measure)."""
    r = np.asarray(r, dtype=float)
    if isinstance(weight, (FockRadial, FockGaussian)):
        return -r ** _fock_alpha(weight)
    if isinstance(weight, BergmanClassical):
        if np.any(r > 1.0):
            raise DomainError("bergman weight evaluated outside the closed disc")
        if weight.alpha == 0.0:
            return np.zeros_like(r)
        with np.errstate(divide="ignore"):
            out = weight.alpha * np.log1p(-np.minimum(r * r, 1.0))
        return out
    if isinstance(weight, TabulatedRadial):
        if np.any(r < weight.radii[0]) or np.any(r > weight.radii[-1]):
            raise DomainError("tabulated weight evaluated outside its table")
        return np.interp(r, weight.radii, weight.log_weight)
    raise UnsupportedWeightError(f"unknown weight {weight!r}")


def sqrt_weight(weight, r):
    out = np.exp(0.5 * log_radial_density(weight, r))
    return out


def weight_core_params(weight):
    """(wcode, wparam, table_r, table_logw) for the sampling cores."""
    empty = np.zeros(2)
    if isinstance(weight, (FockRadial, FockGaussian)):
        return WCODE_FOCK_RADIAL, _fock_alpha(weight), empty, empty
    if isinstance(weight, BergmanClassical):
        return WCODE_BERGMAN, weight.alpha, empty, empty
    if isinstance(weight, TabulatedRadial):
        return WCODE_TABULATED, 0.0, weight.radii, weight.log_weight
    raise UnsupportedWeightError(f"unknown weight {weight!r}")


# -- monomial norms -----------------------------------------------------------

def log_monomial_norms_sq(weight, n_max, method="auto"):
    """log ||z^n||^2 under the weight's measure, n = 0..n_max-1.

    Closed forms: 2 pi / a * Gamma((2n+2)/a) for the radial Fock family and
    pi * B(n+1, a+1) for the classical Bergman family. The quadrature path
    integrates 2 pi r^(2n+1) w(r) dr in log space and checks convergence by
    doubling the node count twice.
    """
    if n_max < 1:
        raise ConfigError("need at least one monomial")
    n = np.arange(n_max, dtype=float)
    if method not in ("auto", "closed_form", "quadrature"):
        raise ConfigError(f"unknown monomial-norm method {method!r}")
    if method in ("auto", "closed_form"):
        if isinstance(weight, (FockRadial, FockGaussian)):
            a = _fock_alpha(weight)
            return np.log(2 * np.pi / a) + gammaln((2 * n + 2) / a)
        if isinstance(weight, BergmanClassical):
            a = weight.alpha
            return (np.log(np.pi) + gammaln(n + 1) + gammaln(a + 1)
                    - gammaln(n + a + 2))
        if method == "closed_form":
            raise UnsupportedWeightError("no closed-form norms for this weight")
    return _log_norms_quadrature(weight, n_max)


def _norm_integration_range(weight, n_max):
    if isinstance(weight, TabulatedRadial):
        return weight.radii[0], weight.radii[-1]
    if isinstance(weight, BergmanClassical):
        return 0.0, 1.0
    a = _fock_alpha(weight)
    # top monomial dominates; pick the radius where its upper tail is dust
    r = float(gammainccinv(2.0 * n_max / a, 1e-16) ** (1.0 / a))
    return 0.0, max(r, 1.0)


def _log_norms_quadrature(weight, n_max, base_nodes=256, rel_tol=1e-9):
    lo, hi = _norm_integration_range(weight, n_max)
    n = np.arange(n_max, dtype=float)

    def compute(nodes):
        r, wr = quad.gl_nodes(nodes, lo, hi)
        logw = log_radial_density(weight, r)
        # log integrand per (n, node); weights wr > 0 on open GL nodes
        ln = (2 * n[:, None] + 1) * np.log(r)[None, :] + logw[None, :]
        return np.log(2 * np.pi) + logsumexp(ln + np.log(wr)[None, :], axis=1)

    coarse = compute(base_nodes)
    mid = compute(2 * base_nodes)
    fine = compute(4 * base_nodes)
    if np.max(np.abs(mid - fine)) > rel_tol:
        raise QuadratureError(
            "monomial-norm quadrature did not converge "
            f"(max log-discrepancy {np.max(np.abs(mid - fine)):.2e})")
    del coarse
    return fine


def monomial_norms(weight, n_max, method="auto"):
    """||z^n|| for n = 0..n_max-1. Values overflow to inf for very large n;
    internal code works with log_monomial_norms_sq instead."""
    return np.exp(0.5 * log_monomial_norms_sq(weight, n_max, method=method))


# -- quadrature spec and model ------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    radial_nodes: int | None = None
    angular_nodes: int | None = None
    outer_radius: float | None = None

    def __post_init__(self):
        for name in ("radial_nodes", "angular_nodes"):
            v = getattr(self, name)
            if v is not None and v < 8:
                raise ConfigError(f"{name} must be >= 8, got {v}")
        if self.outer_radius is not None and not (self.outer_radius > 0):
            raise ConfigError("outer_radius must be positive")

    def resolve(self, domain, weight, rank):
        """Fill defaults: node counts scaled to the rank, outer radius from
        the tail-mass requirement."""
        radial = self.radial_nodes or max(96, rank + 64)
        angular = self.angular_nodes or max(128, 2 * rank)
        outer = self.outer_radius
        if domain is Domain.DISC:
            if outer is not None and abs(outer - 1.0) > 1e-12:
                raise ConfigError("disc models integrate to radius 1")
            outer = 1.0
        elif outer is None:
            outer = default_outer_radius(weight, rank)
        return QuadratureSpec(radial, angular, float(outer))


def default_outer_radius(weight, rank):
    if isinstance(weight, (FockRadial, FockGaussian)):
        a = _fock_alpha(weight)
        return float(gammainccinv(2.0 * rank / a, 1e-13) ** (1.0 / a))
    if isinstance(weight, TabulatedRadial):
        return float(weight.radii[-1])
    raise UnsupportedWeightError("no outer radius rule for this weight")


def _tail_mass_fraction(weight, rank, outer):
    """Upper-tail mass fraction of the heaviest (top) monomial mode."""
    if isinstance(weight, (FockRadial, FockGaussian)):
        a = _fock_alpha(weight)
        return float(gammaincc(2.0 * rank / a, outer ** a))
    if isinstance(weight, TabulatedRadial):
        top = weight.radii[-1]
        if outer > top + 1e-12:
            raise ConfigError("outer radius beyond the weight table")
        if outer >= top * (1 - 1e-12):
            return 0.0
        n = rank - 1
        r_in, w_in = quad.gl_nodes(512, 0.0, outer)
        r_out, w_out = quad.gl_nodes(512, outer, top)

        def logmass(r, w):
            ln = (2 * n + 1) * np.log(np.maximum(r, 1e-300))
            return logsumexp(ln + log_radial_density(weight, r) + np.log(w))

        lo, hi = logmass(r_in, w_in), logmass(r_out, w_out)
        return float(np.exp(hi - np.logaddexp(lo, hi)))
    return 0.0


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Rank-N orthogonal projection given by orthonormal basis rows over
    normalized monomials. Immutable; downdates return new models."""
    domain: Domain
    weight: object
    rank: int
    log_norms_sq: np.ndarray         # (M,) log ||z^m||^2, M = monomial count
    coeffs: np.ndarray               # (rank, M) complex, orthonormal rows
    quadrature: QuadratureSpec
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def monomial_count(self):
        return self.log_norms_sq.shape[0]

    # ratios c_{m-1}/c_m used by the evaluation recurrences
    @property
    def norm_ratios(self):
        key = "norm_ratios"
        if key not in self._cache:
            half = 0.5 * self.log_norms_sq
            self._cache[key] = np.exp(half[:-1] - half[1:])
        return self._cache[key]

    @property
    def inv_c0(self):
        return float(np.exp(-0.5 * self.log_norms_sq[0]))

    def _check_domain(self, z):
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z.view(float))):
            raise DomainError("points must be finite")
        if self.domain is Domain.DISC and np.any(np.abs(z) >= 1.0):
            raise DomainError("point outside the unit disc")
        return z

    def monomial_matrix(self, z, weighted=True):
        """(M, P) values of the normalized monomials at z, optionally times
        the square-root weight (bounded, overflow-safe form)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        M = self.monomial_count
        U = np.empty((M, z.shape[0]), dtype=np.complex128)
        if weighted:
            start = sqrt_weight(self.weight, np.abs(z)) * self.inv_c0
        else:
            start = np.full(z.shape, self.inv_c0)
        U[0] = start
        ratios = self.norm_ratios
        for m in range(1, M):
            U[m] = U[m - 1] * z * ratios[m - 1]
        return U

    def basis_at(self, z, weighted=True):
        """(rank, P) values of the orthonormal basis functions."""
        z = self._check_domain(z)
        return self.coeffs @ self.monomial_matrix(z, weighted=weighted)

    def diag_at(self, z, weighted=True):
        W = self.basis_at(z, weighted=weighted)
        return np.einsum("ij,ij->j", W, W.conj()).real

    def grid(self):
        """Cached polar quadrature grid: (nodes z, area weights, sw(|z|))."""
        if "grid" not in self._cache:
            spec = self.quadrature
            lo = self.weight.radii[0] if isinstance(self.weight, TabulatedRadial) else 0.0
            z, a = quad.polar_grid(spec.radial_nodes, spec.angular_nodes,
                                   lo, spec.outer_radius)
            self._cache["grid"] = (z, a)
        return self._cache["grid"]

    def replace(self, **kw):
        kw.setdefault("_cache", {})
        return dataclasses.replace(self, **kw)


def build_kernel(domain, weight, rank, quadrature=None):
    """Construct the rank-N model with the orthonormal monomial basis.

    Radial weights only: the monomials are then orthogonal and assumed to
    span the space up to the truncation rank.
    """
    domain = Domain(domain)
    if rank < 1:
        raise ConfigError("rank must be >= 1")
    if weight_domain(weight) is not domain:
        raise ConfigError(
            f"weight {weight!r} lives on {weight_domain(weight).value}, "
            f"model requested on {domain.value}")
    spec = (quadrature or QuadratureSpec()).resolve(domain, weight, rank)
    if domain is Domain.PLANE:
        tail = _tail_mass_fraction(weight, rank, spec.outer_radius)
        if tail > TAIL_MASS_LIMIT:
            raise ConfigError(
                f"outer radius {spec.outer_radius:g} leaves tail mass {tail:.2e} "
                f"(limit {TAIL_MASS_LIMIT:g})")
    log_norms = log_monomial_norms_sq(weight, rank)
    coeffs = np.eye(rank, dtype=np.complex128)
    return KernelModel(domain, weight, rank, log_norms, coeffs, spec)


# -- kernel evaluation --------------------------------------------------------

def kernel_eval(model, z, w):
    """K(z, w) = sum_i phi_i(z) conj(phi_i(w)); Hermitian by construction."""
    vals = model.basis_at(np.array([z, w]), weighted=False)
    return complex(vals[:, 0] @ vals[:, 1].conj())


def weighted_kernel(model, z, w):
    """K(z, w) sqrt(w(z) w(w)); its diagonal is the intensity wrt Lebesgue."""
    vals = model.basis_at(np.array([z, w]), weighted=True)
    return complex(vals[:, 0] @ vals[:, 1].conj())


def trace_quadrature(model):
    """Numerical trace = integral of the weighted diagonal; equals the rank
    up to quadrature and tail error."""
    z, a = model.grid()
    return float(model.diag_at(z, weighted=True) @ a)


def gram_matrix(model, z, a):
    """G_ij = sum_p a_p w_i(z_p) conj(w_j(z_p)) over weighted basis values."""
    W = model.basis_at(z, weighted=True)
    return (W * a) @ W.conj().T


def k_correlation(model, points):
    """k-point correlation: det [weighted_kernel(z_i, z_j)]_{ij}."""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim != 1 or pts.size < 1:
        raise ConfigError("need a 1-d list of points")
    if pts.size > 1:
        sep = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(sep, np.inf)
        if sep.min() < 1e-12:
            raise DegenerateInputError("correlation points must be distinct")
    W = model.basis_at(pts, weighted=True)
    G = W.conj().T @ W
    det = np.linalg.det(G)
    return float(det.real)


def christ_bound_scan(model, r_max=None, radial=48, angular=64, n_pairs=400,
                      seed=0):
    """Diagnostic scan of the weighted kernel.

    Reports the sup of the weighted diagonal over a polar grid, the
    least-squares exponential decay rate of |K_w(z,w)|^2 in |z-w|, and the
    worst violation of the fitted envelope (positive = above the fit).
    """
    if model.domain is not Domain.PLANE:
        raise ConfigError("christ scan applies to plane models")
    if r_max is None:
        r_max = min(model.quadrature.outer_radius, 6.0)
    z, _ = quad.polar_grid(radial, angular, 0.0, r_max)
    z = np.concatenate([[0j], z])
    diag = model.diag_at(z, weighted=True)
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    idx = rng.integers(0, z.size, size=(n_pairs, 2))
    zi, zj = z[idx[:, 0]], z[idx[:, 1]]
    sep = np.abs(zi - zj)
    keep = sep > 1e-9
    zi, zj, sep = zi[keep], zj[keep], sep[keep]
    Wi = model.basis_at(zi, weighted=True)
    Wj = model.basis_at(zj, weighted=True)
    k2 = np.abs(np.einsum("ip,ip->p", Wi, Wj.conj())) ** 2
    good = k2 > 1e-280
    logk2 = np.log(k2[good])
    s = sep[good]
    A = np.column_stack([np.ones_like(s), -s])
    sol, *_ = np.linalg.lstsq(A, logk2, rcond=None)
    log_c, rate = float(sol[0]), float(sol[1])
    resid = logk2 - (log_c - rate * s)
    return {
        "max_diagonal": float(diag.max()),
        "decay_rate": rate,
        "log_prefactor": log_c,
        "max_envelope_violation": float(np.exp(resid.max()) - 1.0),
    }
