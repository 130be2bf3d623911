"""Polar quadrature helpers.

All area integrals use tensor grids: Gauss-Legendre in the radius times a
uniform (trapezoid) rule in the angle, which is exact for trigonometric
polynomials up to the node count. Radial integrands with an integrable
log or power singularity are handled with geometrically refined panels.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss


def gl_nodes(n, a, b):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = leggauss(int(n))
    xm = 0.5 * (b - a)
    return xm * (x + 1.0) + a, xm * w


def radial_panels(breaks, nodes_per_panel):
    """Composite Gauss-Legendre over consecutive [breaks[i], breaks[i+1]]."""
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        x, w = gl_nodes(nodes_per_panel, a, b)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def geometric_panels(r_outer, n_panels=24, nodes_per_panel=12, shrink=0.5):
    """Panels accumulating geometrically toward 0, for log-singular radial
    integrands; the innermost panel starts at r_outer * shrink**n_panels."""
    edges = r_outer * shrink ** np.arange(n_panels + 1)
    edges = np.concatenate([[0.0], edges[::-1]])
    return radial_panels(edges, nodes_per_panel)


def angle_nodes(n):
    theta = 2.0 * np.pi * np.arange(int(n)) / int(n)
    return theta, np.full(int(n), 2.0 * np.pi / int(n))


def polar_grid(radial_nodes, angular_nodes, r_lo, r_hi, center=0j):
    """Complex nodes and Lebesgue area weights on an annulus (or disk)."""
    r, wr = gl_nodes(radial_nodes, r_lo, r_hi)
    theta, wt = angle_nodes(angular_nodes)
    z = center + np.outer(r, np.exp(1j * theta)).ravel()
    a = np.outer(r * wr, wt).ravel()
    return z, a


def polar_grid_panels(radii, wr, angular_nodes, center=0j):
    """Polar grid from precomputed radial nodes/weights."""
    theta, wt = angle_nodes(angular_nodes)
    z = center + np.outer(radii, np.exp(1j * theta)).ravel()
    a = np.outer(radii * wr, wt).ravel()
    return z, a
