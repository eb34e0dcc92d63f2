"""Low-level quadrature primitives shared across the toolkit.

Conventions used throughout:

* finite-window Fourier transform: ``F_T phi(tau) = int_0^T e^{-i tau x} phi(x) dx``
* weighted line integrals carry an ``|tau|^{-p}`` factor with ``p in [0, 1)``,
  integrable at the origin and handled by the exact power substitution
  ``y = tau^{1-p}``.
"""

from __future__ import annotations

import math
import warnings
from contextlib import contextmanager

import numpy as np
from scipy import integrate

# scipy.integrate.quad keyword budgets; generous because several integrands
# oscillate over hundreds of periods before the tail handlers take over.
_QUAD_LIMIT = 800


@contextmanager
def _quiet():
    # QUADPACK's subdivision warning is advisory; the returned abserr is what
    # callers propagate into their error estimates.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        yield


def cexp_int(y, T):
    """int_0^T e^{i y x} dx, stable for all real y (vectorized).

    Uses sin/cos forms directly so there is no cancellation near y = 0 or
    near y*T = 2*pi*k.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    out = np.empty(y.shape, dtype=complex)
    tiny = y == 0.0
    ys = np.where(tiny, 1.0, y)
    out = np.sin(ys * T) / ys + 1j * (2.0 * np.sin(ys * T / 2.0) ** 2) / ys
    out[tiny] = T
    return out[0] if scalar else out


def finite_window_exp_ft(a, b, T, tau):
    """F_T of phi(x) = e^{-x(a+ib)} evaluated at tau (vectorized, stable).

    Equals (1 - e^{-T(a + i(tau+b))}) / (a + i(tau+b)); the numerator is formed
    from expm1/sin pieces so no catastrophic cancellation occurs for small
    a*T or (tau+b)*T near multiples of 2*pi.
    """
    if a < 0:
        raise ValueError("exponential growth (a < 0) is not supported")
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    tau = np.atleast_1d(tau)
    if a == 0.0:
        out = cexp_int(-(tau + b), T)
    else:
        theta = (tau + b) * T
        eaT = math.exp(-a * T)
        # e^{zT} - 1 with z = -(a + i(tau+b)), split into stable parts
        re = -(2.0 * eaT * np.sin(theta / 2.0) ** 2 - math.expm1(-a * T))
        im = -eaT * np.sin(theta)
        z = -(a + 1j * (tau + b))
        out = (re + 1j * im) / z
    return out[0] if scalar else out


def finite_window_sin_ft(T, tau):
    """F_T of sin evaluated at tau (vectorized, stable at tau = +-1)."""
    tau = np.asarray(tau, dtype=float)
    e1 = cexp_int(1.0 - tau, T)
    e2 = cexp_int(-(1.0 + tau), T)
    return (e1 - e2) / 2j


def origin_power_integral(q, p, hi, rtol=1e-10):
    """int_0^hi tau^{-p} q(tau) dtau for p in [0, 1), q smooth and bounded.

    Substitution y = tau^{1-p} turns the weight into Lebesgue measure; the
    transformed integrand is C^1 at 0.
    """
    if hi <= 0.0:
        return 0.0, 0.0
    with _quiet():
        if p == 0.0:
            return integrate.quad(q, 0.0, hi, epsabs=0.0, epsrel=rtol,
                                  limit=_QUAD_LIMIT)
        e = 1.0 - p
        val, err = integrate.quad(lambda y: q(y ** (1.0 / e)), 0.0, hi ** e,
                                  epsabs=0.0, epsrel=rtol, limit=_QUAD_LIMIT)
    return val / e, err / e


def quad_segment(f, lo, hi, rtol=1e-10, points=None):
    """Adaptive quadrature on [lo, hi] returning (value, abserr)."""
    with _quiet():
        if points:
            pts = sorted(p for p in points if lo < p < hi)
            if pts:
                return integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol,
                                      limit=_QUAD_LIMIT, points=pts)
        return integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol,
                              limit=_QUAD_LIMIT)


def quad_to_inf(f, lo, rtol=1e-10):
    with _quiet():
        val, err = integrate.quad(f, lo, np.inf, epsabs=1e-13, epsrel=rtol,
                                  limit=_QUAD_LIMIT)
    return val, err


def oscillatory_tail(g, freq, lo, kind):
    """int_lo^inf g(tau) * {cos|sin}(freq*tau) dtau via QUADPACK's QAWF.

    g must decay monotonically to 0; freq > 0.
    """
    with _quiet():
        val, err = integrate.quad(g, lo, np.inf, weight=kind, wvar=freq,
                                  epsabs=1e-13, limlst=120)
    return val, err


def gauss_legendre_panels(f, edges, order=16):
    """Composite fixed-order Gauss-Legendre rule over panel edges (vectorized f)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    lo = edges[:-1]
    hi = edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(f(x.ravel())).reshape(x.shape)
    return np.sum(half[:, None] * weights[None, :] * vals)


def geometric_edges(lo, hi, n):
    """Panel edges 0, lo, ..., hi with geometric growth away from 0."""
    if lo <= 0:
        return np.linspace(0.0, hi, n + 1)
    return np.concatenate(([0.0], np.geomspace(lo, hi, n)))
