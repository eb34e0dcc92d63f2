"""Characteristic exponents of Levy processes and structural checks.

An exponent is the function Psi with E[e^{-i xi . X_t}] = e^{-t Psi(xi)};
Re Psi >= 0 always.  Only the exponent itself is represented (no generating
triplets): every downstream formula consumes Psi alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CharacteristicExponent",
    "ImReBound",
    "DegenerateGridError",
    "eval_psi",
    "symmetrized_exponent",
    "estimate_im_re_ratio",
]


class DegenerateGridError(ValueError):
    """Every grid point had Re Psi = 0, so no Im/Re ratio is defined."""


@dataclass(frozen=True)
class CharacteristicExponent:
    """Exponent of a d-dimensional Levy process.

    kind is one of:
      "stable"   : Psi(xi) = c * |xi|^beta.  beta in (0, 2] corresponds to a
                   rotation-invariant strictly stable process; beta > 2 is
                   accepted for the fractional-Laplacian extension (kernel
                   formulas only, no path simulation).
      "brownian" : Psi(xi) = scale * |xi|^2.
      "custom"   : user callable xi -> (re, im).
    """

    dim: int
    kind: str
    beta: float | None = None
    c: float | None = None
    scale: float | None = None
    fn: Callable[[np.ndarray], tuple[float, float]] | None = None

    @classmethod
    def stable(cls, beta: float, c: float = 1.0, dim: int = 1) -> "CharacteristicExponent":
        if beta <= 0:
            raise ValueError("beta must be positive")
        if c <= 0:
            raise ValueError("c must be positive")
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        return cls(dim=dim, kind="stable", beta=float(beta), c=float(c))

    @classmethod
    def brownian(cls, scale: float = 1.0, dim: int = 1) -> "CharacteristicExponent":
        if scale <= 0:
            raise ValueError("scale must be positive")
        return cls(dim=dim, kind="brownian", scale=float(scale))

    @classmethod
    def custom(cls, fn, dim: int = 1) -> "CharacteristicExponent":
        return cls(dim=dim, kind="custom", fn=fn)

    # -- evaluation -------------------------------------------------------

    def __call__(self, xi) -> complex:
        return eval_psi(self, xi)

    def re_radial(self, rho):
        """Re Psi along the first coordinate axis (vectorized in |xi|).

        For stable/brownian forms this is the full radial profile; custom
        exponents are probed along e_1.
        """
        rho = np.asarray(rho, dtype=float)
        if self.kind == "stable":
            return self.c * rho ** self.beta
        if self.kind == "brownian":
            return self.scale * rho ** 2
        out = np.empty(rho.shape)
        flat = out.reshape(-1)
        for i, r in enumerate(np.atleast_1d(rho).reshape(-1)):
            xi = np.zeros(self.dim)
            xi[0] = r
            flat[i] = self.fn(xi)[0]
        return out if rho.ndim else float(out)

    @property
    def is_symmetric(self) -> bool:
        """True when Im Psi is identically zero by construction."""
        return self.kind in ("stable", "brownian")


def eval_psi(exp: CharacteristicExponent, xi) -> complex:
    """Psi(xi) for a point xi of dimension exp.dim."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if xi.shape != (exp.dim,):
        raise ValueError(f"xi has shape {xi.shape}, expected ({exp.dim},)")
    if exp.kind == "stable":
        return complex(exp.c * float(np.linalg.norm(xi)) ** exp.beta)
    if exp.kind == "brownian":
        return complex(exp.scale * float(xi @ xi))
    re, im = exp.fn(xi)
    if re < 0:
        raise ValueError(f"custom exponent returned Re Psi = {re} < 0 at xi={xi}")
    return complex(re, im)


def symmetrized_exponent(exp: CharacteristicExponent) -> CharacteristicExponent:
    """Exponent of the symmetrization X - X~ (an independent copy): 2 Re Psi."""
    if exp.kind == "stable":
        return CharacteristicExponent.stable(exp.beta, 2.0 * exp.c, exp.dim)
    if exp.kind == "brownian":
        return CharacteristicExponent.brownian(2.0 * exp.scale, exp.dim)
    fn = exp.fn

    def sym(xi):
        return 2.0 * fn(xi)[0], 0.0

    return CharacteristicExponent.custom(sym, exp.dim)


@dataclass(frozen=True)
class ImReBound:
    """Observed bound on |Im Psi| / Re Psi over an evaluation grid.

    K is the smallest constant consistent with the grid (equal to
    grid_max_ratio); math.inf stands for "unbounded".  Points with
    Re Psi = 0 are skipped and counted, not treated as infinite ratios.
    """

    K: float
    grid_max_ratio: float
    skipped_points: int = 0

    def __post_init__(self):
        if math.isfinite(self.K) and self.grid_max_ratio > self.K * (1 + 1e-12):
            raise ValueError("grid_max_ratio exceeds the declared K")


def estimate_im_re_ratio(exp: CharacteristicExponent,
                         grid: Sequence) -> ImReBound:
    """Max of |Im Psi| / Re Psi over the grid points with Re Psi > 0."""
    if len(grid) == 0:
        raise ValueError("grid must be nonempty")
    best = 0.0
    skipped = 0
    used = 0
    for xi in grid:
        psi = eval_psi(exp, xi)
        if psi.real == 0.0:
            skipped += 1
            continue
        used += 1
        best = max(best, abs(psi.imag) / psi.real)
    if used == 0:
        raise DegenerateGridError(
            "Re Psi vanished at every grid point; Im/Re ratio undefined")
    return ImReBound(K=best, grid_max_ratio=best, skipped_points=skipped)
