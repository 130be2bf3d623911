"""Additive and multiplicative functionals of configurations, their
expectations under a finite-rank model, and the regularized (centered)
log-multiplicative machinery used for Radon-Nikodym reweighting.

Conventions. All expectations integrate against the weighted diagonal
D(z) = sum_i |phi_i(z)|^2 w(z), the intensity with respect to Lebesgue
measure. The variance form

    Var(K, f) = 1/2 iint |f(x)-f(y)|^2 |K(x,y)|^2 dmu dmu

is computed in the basis (a Hilbert-Schmidt commutator norm), with a brute
double-quadrature twin kept as an independent oracle for tests.

The centered log functional of a ratio-type g subtracts, radius by radius,
the quadrature expectation of sum log g over the ball. log g has integrable
log singularities at the zeros and poles of g; each is integrated on its own
singularity-centered polar grid with geometrically refined radial panels,
while the remaining smooth part uses the model's global grid. The centering
constants cancel in normalized weights, so their role is diagnostic
(convergence of the partial sums across the radius schedule).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .errors import (ConfigError, DegenerateInputError, EvaluationError,
                     NumericalError)
from .kernelspace import Domain, TabulatedRadial

_PATCH_RADIUS = 1e-2


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    replicas: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ConfigError("stderr must be nonnegative")
        if self.replicas < 2:
            raise ConfigError("an estimate needs at least 2 replicas")


def mc_estimate(values, seed):
    """Mean and standard error with numpy's pairwise (deterministic) sums."""
    values = np.asarray(values, dtype=float)
    n = values.size
    return MCEstimate(float(values.mean()),
                      float(values.std(ddof=1) / math.sqrt(n)), n, seed)


def variance_with_se(values):
    """Sample variance and its standard error (moment-based, normal-free)."""
    x = np.asarray(values, dtype=float)
    n = x.size
    m = x.mean()
    d = x - m
    m2 = np.mean(d ** 2)
    m4 = np.mean(d ** 4)
    var = x.var(ddof=1)
    se = math.sqrt(max(m4 - (n - 3) / (n - 1) * m2 ** 2, 0.0) / n)
    return float(var), float(se)


@dataclass(frozen=True)
class RadialRegion:
    """Origin-centered disk or annulus |z| in [r_lo, r_hi)."""
    r_lo: float
    r_hi: float

    def __post_init__(self):
        if not (0 <= self.r_lo < self.r_hi):
            raise ConfigError("need 0 <= r_lo < r_hi")

    @staticmethod
    def disk(radius):
        return RadialRegion(0.0, float(radius))

    @staticmethod
    def annulus(r_lo, r_hi):
        return RadialRegion(float(r_lo), float(r_hi))

    def contains(self, z):
        r = np.abs(z)
        return (self.r_lo <= r) & (r < self.r_hi)


# -- multiplicative test functions g ------------------------------------------

@dataclass(frozen=True)
class GSpec:
    """Ratio-type multiplicative test function.

    kind "rational": |prod(z-p_j)|^2 / |prod(z-q_j)|^2 on the plane, equal
    tuple lengths so that g -> 1 at infinity. kind "blaschke": the squared
    modulus of a ratio of Blaschke products on the disc, g -> 1 at the
    boundary for any orders. kind "custom_radial": exp of a tabulated radial
    log g, equal to 1 outside the table. Evaluation at a pole returns +inf
    (never NaN); at a zero, 0.
    """
    kind: str
    p: tuple = ()
    q: tuple = ()
    table: tuple | None = None

    @property
    def zeros(self):
        return self.p

    @property
    def poles(self):
        return self.q

    def log_value(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape, dtype=float)
        with np.errstate(divide="ignore"):
            if self.kind in ("rational", "blaschke"):
                for a in self.p:
                    out += 2.0 * np.log(np.abs(z - a))
                for a in self.q:
                    out -= 2.0 * np.log(np.abs(z - a))
                if self.kind == "blaschke":
                    for a in self.p:
                        out -= 2.0 * np.log(np.abs(1.0 - np.conj(a) * z))
                    for a in self.q:
                        out += 2.0 * np.log(np.abs(1.0 - np.conj(a) * z))
            elif self.kind == "custom_radial":
                radii = np.asarray(self.table[0])
                logg = np.asarray(self.table[1])
                r = np.abs(z)
                out = np.interp(r, radii, logg)
                out[(r < radii[0]) | (r > radii[-1])] = 0.0
            else:
                raise ConfigError(f"unknown g kind {self.kind!r}")
        return out

    def value(self, z):
        return np.exp(self.log_value(z))

    def log_smooth_part(self, z):
        """log g minus its singular log terms; real-analytic on the domain."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape, dtype=float)
        if self.kind == "blaschke":
            for a in self.p:
                out -= 2.0 * np.log(np.abs(1.0 - np.conj(a) * z))
            for a in self.q:
                out += 2.0 * np.log(np.abs(1.0 - np.conj(a) * z))
        elif self.kind == "custom_radial":
            out = self.log_value(z)
        return out


def _distinct(points, label):
    arr = np.asarray(points, dtype=complex)
    if arr.size > 1:
        sep = np.abs(arr[:, None] - arr[None, :])
        np.fill_diagonal(sep, np.inf)
        if sep.min() <= 1e-9:
            raise DegenerateInputError(f"{label} points must be distinct")


def _same_multiset(p, q):
    key = lambda v: (v.real, v.imag)
    return sorted(p, key=key) == sorted(q, key=key)


def _check_ratio_anchors(p, q):
    _distinct(p, "zero")
    _distinct(q, "pole")
    if _same_multiset(p, q):
        return ()  # identical tuples: the ratio is identically 1
    for a in p:
        for b in q:
            if abs(a - b) <= 1e-9:
                raise DegenerateInputError("zero and pole coincide")
    return None


def rational_modulus_sq(p, q):
    p = tuple(complex(v) for v in p)
    q = tuple(complex(v) for v in q)
    if len(p) != len(q):
        raise ConfigError(
            "plane ratio needs equal orders for g -> 1 at infinity")
    if _check_ratio_anchors(p, q) is not None:
        return GSpec("rational")
    return GSpec("rational", p, q)


def blaschke_modulus_sq(p, q=()):
    p = tuple(complex(v) for v in p)
    q = tuple(complex(v) for v in q)
    if any(abs(v) >= 1 for v in p + q):
        raise ConfigError("blaschke anchors must lie inside the unit disc")
    if _check_ratio_anchors(p, q) is not None:
        return GSpec("blaschke")
    return GSpec("blaschke", p, q)


def custom_radial_g(radii, log_g):
    radii = tuple(float(r) for r in radii)
    log_g = tuple(float(v) for v in log_g)
    if len(radii) != len(log_g) or len(radii) < 2:
        raise ConfigError("custom g needs matching radii/log_g tables")
    if not all(b > a for a, b in zip(radii[:-1], radii[1:])):
        raise ConfigError("custom g radii must be strictly increasing")
    return GSpec("custom_radial", table=(radii, log_g))


# -- additive functionals ------------------------------------------------------

def additive_functional(config, f):
    """S_f = sum of f over the configuration (finite at finite rank)."""
    vals = np.asarray(f(config.points), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("f is not finite at a configuration point")
    return float(np.sum(vals))


def _radial_breaks(model, r_hi, breakpoints=()):
    lo = model.weight.radii[0] if isinstance(model.weight, TabulatedRadial) else 0.0
    pts = sorted({lo, r_hi, *[b for b in breakpoints if lo < b < r_hi]})
    return pts


def expected_additive(model, f, breakpoints=(), r_max=None):
    """E S_f = integral of f against the weighted diagonal.

    Radial discontinuities of f must be declared through `breakpoints`; the
    quadrature panels then align with them.
    """
    r_hi = r_max if r_max is not None else model.quadrature.outer_radius
    breaks = _radial_breaks(model, r_hi, breakpoints)
    nodes = max(48, model.quadrature.radial_nodes // max(len(breaks) - 1, 1) + 16)
    r, wr = quad.radial_panels(breaks, nodes)
    z, a = quad.polar_grid_panels(r, wr, model.quadrature.angular_nodes)
    vals = np.asarray(f(z), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("integrand is not finite on the grid")
    return float(np.sum(vals * model.diag_at(z) * a))


def expected_count(model, r_lo, r_hi):
    """Expected number of points in an origin-centered annulus."""
    hi = min(r_hi, model.quadrature.outer_radius)
    if hi <= r_lo:
        return 0.0
    r, wr = quad.gl_nodes(96, r_lo, hi)
    z, a = quad.polar_grid_panels(r, wr, model.quadrature.angular_nodes)
    return float(np.sum(model.diag_at(z) * a))


# -- variance form -------------------------------------------------------------

def var_pi_f(model, f, block=8192):
    """Var(K, f) computed in the basis: integral of f^2 against the diagonal
    minus the squared Frobenius norm of the f-compressed basis Gram."""
    z, a = model.grid()
    fv = np.asarray(f(z), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise NumericalError("f is not finite on the quadrature grid")
    n = model.rank
    F = np.zeros((n, n), dtype=complex)
    t1 = 0.0
    for s in range(0, z.size, block):
        sl = slice(s, s + block)
        W = model.basis_at(z[sl])
        d = np.einsum("ij,ij->j", W, W.conj()).real
        t1 += float(np.sum(fv[sl] ** 2 * d * a[sl]))
        F += (W * (fv[sl] * a[sl])) @ W.conj().T
    val = t1 - float(np.sum(np.abs(F) ** 2))
    return max(val, 0.0)


def var_pi_f_quadrature(model, f, radial=48, angular=96, block=512):
    """Oracle twin of var_pi_f: the double integral evaluated pairwise on an
    independent coarse grid."""
    lo = model.weight.radii[0] if isinstance(model.weight, TabulatedRadial) else 0.0
    z, a = quad.polar_grid(radial, angular, lo, model.quadrature.outer_radius)
    fv = np.asarray(f(z), dtype=float)
    W = model.basis_at(z)
    total = 0.0
    for s in range(0, z.size, block):
        sl = slice(s, s + block)
        K2 = np.abs(W[:, sl].conj().T @ W) ** 2
        diff2 = (fv[sl, None] - fv[None, :]) ** 2
        total += float(np.einsum("pq,pq,p,q->", diff2, K2, a[sl], a))
    return 0.5 * total


# -- multiplicative functionals ------------------------------------------------

def multiplicative_functional(config, g):
    """Product of g over the points; 0 and +inf are legitimate sentinel
    outcomes (a pole takes precedence over a zero)."""
    vals = np.asarray(g.value(config.points) if isinstance(g, GSpec)
                      else g(config.points), dtype=float)
    if np.any(np.isposinf(vals)):
        return math.inf
    if np.any(vals == 0.0):
        return 0.0
    return float(np.prod(vals))


def _as_scalar_fn(g):
    if isinstance(g, GSpec):
        return g.value
    if np.isscalar(g):
        return lambda z: np.full(np.shape(z), float(g))
    return g


def fredholm_expectation(model, g, region: RadialRegion):
    """det(I + M) with M the basis compression of (g-1) over the region.

    Equals the expectation of the multiplicative functional of g (extended
    by 1 outside the region) for any finite-rank projection model.
    """
    if isinstance(g, GSpec):
        for pole in g.poles:
            if region.contains(np.array([pole])):
                raise EvaluationError("g has a pole inside the region")
    gfn = _as_scalar_fn(g)
    hi = min(region.r_hi, model.quadrature.outer_radius)
    lo = model.weight.radii[0] if isinstance(model.weight, TabulatedRadial) else 0.0
    lo = max(lo, region.r_lo)
    if hi <= lo:
        return 1.0
    nr = max(64, model.monomial_count // 2 + 32)
    r, wr = quad.gl_nodes(nr, lo, hi)
    z, a = quad.polar_grid_panels(r, wr, max(128, 2 * model.monomial_count))
    gm1 = np.asarray(gfn(z), dtype=float) - 1.0
    if not np.all(np.isfinite(gm1)):
        raise EvaluationError("g must be finite on the region")
    W = model.basis_at(z)
    M = (W * (gm1 * a)) @ W.conj().T
    det = np.linalg.det(np.eye(model.rank) + M)
    if abs(det.imag) > 1e-8 * max(abs(det.real), 1.0):
        raise NumericalError(f"determinant unexpectedly complex: {det}")
    return float(det.real)


# -- radius schedules and centered log functionals ------------------------------

@dataclass(frozen=True)
class RadiusSchedule:
    radii: tuple

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        if len(r) < 3:
            raise ConfigError("schedule needs at least 3 radii")
        if r[0] <= 0 or not all(b > a for a, b in zip(r[:-1], r[1:])):
            raise ConfigError("schedule radii must be positive and increasing")
        object.__setattr__(self, "radii", r)

    @staticmethod
    def plane_geometric(first=3.0, ratio=1.5, count=6):
        return RadiusSchedule(tuple(first * ratio ** j for j in range(count)))

    @staticmethod
    def disc_dyadic(count=16):
        return RadiusSchedule(tuple(1.0 - 0.5 ** j for j in range(1, count + 1)))


def default_schedule(model):
    if model.domain is Domain.DISC:
        # expected points beyond 1 - delta grow like rank^2 * delta, so the
        # dyadic depth must scale with the rank to keep 99.9% coverage
        depth = 1 + math.ceil(math.log2(1000.0 * (model.rank + 1)))
        return RadiusSchedule.disc_dyadic(depth)
    # geometric radii, snapped to end just inside the quadrature domain so
    # the final ball always covers the model's bulk
    outer = model.quadrature.outer_radius
    last = 0.98 * outer
    radii, r = [], 3.0
    while r < 0.93 * last or len(radii) < 2:
        radii.append(r)
        r *= 1.5
    radii.append(last)
    return RadiusSchedule(tuple(radii))


def validate_schedule(model, schedule, coverage=0.999):
    """Schedule radii must fit the domain; when used as the exhaustion of a
    regularized limit the final radius must also cover (by default) 99.9% of
    the expected points. Cut-sequence diagnostics pass coverage=None."""
    key = ("schedule_ok", schedule, coverage)
    if key in model._cache:
        return
    last = schedule.radii[-1]
    if model.domain is Domain.DISC and last >= 1.0:
        raise ConfigError("disc schedule radii must stay below 1")
    if last > model.quadrature.outer_radius * (1 + 1e-9):
        raise ConfigError("schedule exceeds the quadrature outer radius")
    if coverage is not None:
        got = expected_count(model, 0.0, last)
        if got < coverage * model.rank:
            raise ConfigError(
                f"schedule covers {got:.4f} of {model.rank} expected points; "
                f"needs {coverage:.1%}")
    model._cache[key] = True


def _log_distance_integral(model, s, radius, n_ang=96, n_panels=20,
                           nodes_per_panel=10):
    """integral of log|z - s| times the weighted diagonal over |z| <= radius.

    Singularity-centered polar coordinates with geometric radial panels when
    s lies inside the ball; plain panels otherwise. The integrand's angular
    extent r_max(theta) is the chord length to the ball boundary.
    """
    rho, phi = abs(s), np.angle(complex(s)) if s != 0 else 0.0
    if abs(rho - radius) < 1e-9:
        raise ConfigError("singular point sits on a schedule radius")
    if rho < radius:
        theta, wt = quad.angle_nodes(n_ang)
        dtheta = theta - phi
        rmax = (-rho * np.cos(dtheta)
                + np.sqrt(radius ** 2 - (rho * np.sin(dtheta)) ** 2))
        rmax = rmax * (1.0 - 1e-12)
        # unit-interval geometric panels, scaled per angle to the chord
        ru, wu = quad.geometric_panels(1.0, n_panels, nodes_per_panel)
        r = rmax[:, None] * ru[None, :]
        z = (s + r * np.exp(1j * theta)[:, None]).ravel()
        d = model.diag_at(z).reshape(n_ang, ru.size)
        a = r * (rmax[:, None] * wu[None, :]) * wt[:, None]
        return float(np.sum(np.log(r) * d * a))
    lo = model.weight.radii[0] if isinstance(model.weight, TabulatedRadial) else 0.0
    breaks = _radial_breaks(model, radius)
    r, wr = quad.radial_panels(breaks, 64)
    z, a = quad.polar_grid_panels(r, wr, max(128, model.quadrature.angular_nodes))
    return float(np.sum(np.log(np.abs(z - s)) * model.diag_at(z) * a))


def log_g_centering(model, g: GSpec, schedule: RadiusSchedule):
    """Quadrature expectations of sum_{|x|<=R} log g(x) for each schedule
    radius, cached on the model."""
    key = ("centering", g, schedule)
    if key in model._cache:
        return model._cache[key]
    validate_schedule(model, schedule)
    out = np.empty(len(schedule.radii))
    smooth_needed = g.kind != "rational"
    knots = g.table[0] if g.kind == "custom_radial" else ()
    for j, radius in enumerate(schedule.radii):
        total = 0.0
        if smooth_needed:
            breaks = _radial_breaks(model, radius, knots)
            r, wr = quad.radial_panels(breaks, 64)
            z, a = quad.polar_grid_panels(r, wr, model.quadrature.angular_nodes)
            total += float(np.sum(g.log_smooth_part(z) * model.diag_at(z) * a))
        if g.kind in ("rational", "blaschke"):
            for a_pt in g.zeros:
                total += 2.0 * _log_distance_integral(model, a_pt, radius)
            for a_pt in g.poles:
                total -= 2.0 * _log_distance_integral(model, a_pt, radius)
        out[j] = total
    out.setflags(write=False)
    model._cache[key] = out
    return out


@dataclass(frozen=True)
class RegularizedLog:
    """Centered partial sums of log g across the radius schedule."""
    value: float
    partials: tuple
    increments: tuple
    radii: tuple

    @property
    def final_increment(self):
        return self.increments[-1] if self.increments else 0.0


def regularized_log_functional(model, config, g: GSpec,
                               schedule: RadiusSchedule) -> RegularizedLog:
    """Centered log-multiplicative functional evaluated along the schedule.

    The returned value is the last partial sum; the increment sequence is the
    convergence diagnostic. The model passed here is the measure whose
    expectation does the centering; for conditioned comparisons that is the
    conditioned model.
    """
    centering = log_g_centering(model, g, schedule)
    logs = g.log_value(config.points)
    if not np.all(np.isfinite(logs)):
        raise EvaluationError("configuration point hits a zero or pole of g")
    radii = np.asarray(schedule.radii)
    order = np.argsort(np.abs(config.points))
    sorted_r = np.abs(config.points)[order]
    csum = np.concatenate([[0.0], np.cumsum(logs[order])])
    idx = np.searchsorted(sorted_r, radii, side="right")
    partials = csum[idx] - centering
    increments = np.diff(partials)
    return RegularizedLog(float(partials[-1]), tuple(partials),
                          tuple(increments), tuple(schedule.radii))


def normalized_rn_weight(model, config, g, schedule,
                         normalizer: MCEstimate) -> float:
    """Normalized change-of-measure weight exp(value) / normalizer.mean.

    `value` is the centered sum of log g; since g is the squared modulus of
    the zero/pole ratio, exp(value) carries the factor-two exponent of the
    derivative formula (twice the centered sum of the ratio's log-modulus).
    """
    if normalizer.mean <= 0:
        raise ConfigError("normalizer mean must be positive")
    reg = regularized_log_functional(model, config, g, schedule)
    return math.exp(reg.value) / normalizer.mean


# -- condition integrals --------------------------------------------------------

@dataclass(frozen=True)
class ConditionIntegrals:
    """Numerical values of the integrability conditions for (g, model).

    Columns that are non-integrable at a pole of g against this model's
    diagonal (decided by the measured vanishing order) are reported as +inf
    rather than raising, so the finite columns (notably the flat-cut
    sequence) remain available.
    """
    cubic: float                  # integral of |g-1|^3 against the diagonal
    variance: float               # double integral of |g(x)-g(y)|^2 |K|^2
    singularity: tuple            # per radius: integral of |g-1| inside
    decay: tuple                  # per radius: integral of |g-1|^3 outside
    flatcut: tuple                # per radius: the inside/outside HS cut
    vanishing_orders: tuple       # measured diagonal order at each pole


def estimate_vanishing_order(model, s, deltas=(1e-3, 1e-4)):
    """Power of the weighted diagonal's vanishing at s, from two probe radii
    (angle-averaged). Caps at 20 when the diagonal is numerically zero."""
    means = []
    for d in deltas:
        z = s + d * np.exp(1j * 2 * np.pi * np.arange(8) / 8)
        means.append(max(float(model.diag_at(z).mean()), 1e-300))
    if means[-1] < 1e-250:
        return 20.0
    slope = (math.log(means[0]) - math.log(means[1])) / (
        math.log(deltas[0]) - math.log(deltas[1]))
    return float(slope)


def _masked_disk_integral(model, fn, r_hi, singular_pts, patch_radius):
    """integral of fn * diagonal over |z| <= r_hi, with singularity patches
    cut out of the global grid and integrated on their own centered grids."""
    breakpoints = []
    for s in singular_pts:
        breakpoints += [abs(s) - patch_radius, abs(s) + patch_radius]
    breaks = _radial_breaks(model, r_hi, breakpoints)
    r, wr = quad.radial_panels(breaks, 48)
    z, a = quad.polar_grid_panels(r, wr, max(256, model.quadrature.angular_nodes))
    mask = np.ones(z.shape, dtype=bool)
    for s in singular_pts:
        mask &= np.abs(z - s) > patch_radius
    vals = np.where(mask, np.nan_to_num(fn(z), posinf=0.0), 0.0)
    total = float(np.sum(vals * model.diag_at(z) * a))
    for s in singular_pts:
        theta, wt = quad.angle_nodes(64)
        rr, wrr = quad.geometric_panels(patch_radius, 20, 10)
        zz = s + np.outer(rr, np.exp(1j * theta)).ravel()
        aa = np.outer(rr * wrr, wt).ravel()
        total += float(np.sum(fn(zz) * model.diag_at(zz) * aa))
    return total


def condition_integrals(model, g: GSpec, schedule: RadiusSchedule,
                        patch_radius=_PATCH_RADIUS) -> ConditionIntegrals:
    # the radii here are inside/outside cut locations, not an exhaustion of
    # the whole domain, so no coverage requirement applies
    validate_schedule(model, schedule, coverage=None)
    radii = schedule.radii
    if g.kind in ("rational", "blaschke") and not g.p and not g.q:
        zeros = (0.0,) * len(radii)
        return ConditionIntegrals(0.0, 0.0, zeros, zeros, zeros, ())
    anchors = g.zeros + g.poles
    if anchors:
        closest = min(radii[0] - abs(s) for s in anchors)
        if closest <= patch_radius:
            raise ConfigError(
                "all zeros and poles of g must lie inside the first "
                "schedule radius (by more than the patch radius)")
    orders = tuple(estimate_vanishing_order(model, s) for s in g.poles)
    # local integrability of |g-1|^k r dr near a simple pole of g needs the
    # diagonal to vanish faster than r^(2k - 2)
    def integrable(k):
        return all(beta > 2 * k - 2 + 0.5 for beta in orders)

    gm1 = lambda z: np.abs(g.value(z) - 1.0)
    outer = model.quadrature.outer_radius

    if integrable(3):
        cubic = _masked_disk_integral(model, lambda z: gm1(z) ** 3, outer,
                                      anchors, patch_radius)
    else:
        cubic = math.inf

    if g.poles and not integrable(2):
        variance = math.inf
    else:
        variance = 2.0 * var_pi_f(model, g.value)

    singularity = []
    for radius in radii:
        if integrable(1):
            singularity.append(_masked_disk_integral(
                model, gm1, radius, anchors, patch_radius))
        else:
            singularity.append(math.inf)

    decay = []
    for radius in radii:
        r, wr = quad.gl_nodes(96, radius, outer)
        z, a = quad.polar_grid_panels(r, wr, model.quadrature.angular_nodes)
        decay.append(float(np.sum(gm1(z) ** 3 * model.diag_at(z) * a)))

    flatcut = []
    for radius in radii:
        r, wr = quad.gl_nodes(max(96, model.monomial_count // 2 + 32),
                              0.0 if not isinstance(model.weight, TabulatedRadial)
                              else model.weight.radii[0], radius)
        z_in, a_in = quad.polar_grid_panels(
            r, wr, max(128, 2 * model.monomial_count))
        W_in = model.basis_at(z_in)
        gram = (W_in * a_in) @ W_in.conj().T
        r2, wr2 = quad.gl_nodes(96, radius, outer)
        z_out, a_out = quad.polar_grid_panels(
            r2, wr2, model.quadrature.angular_nodes)
        W_out = model.basis_at(z_out)
        quad_form = np.einsum("ip,ij,jp->p", W_out.conj(), gram, W_out).real
        flatcut.append(float(np.sum(gm1(z_out) ** 2 * quad_form * a_out)))

    return ConditionIntegrals(cubic, float(variance), tuple(singularity),
                              tuple(decay), tuple(flatcut), orders)
