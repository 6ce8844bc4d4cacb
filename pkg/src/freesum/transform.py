"""Cauchy transform evaluation, Stieltjes inversion, and the R-transform.

The transform of a grid-plus-atoms measure has a closed form: each constant
density cell contributes c*(Log(z-l) - Log(z-r)) and each atom w/(z-a), so no
quadrature error enters beyond the staircase representation itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, InversionQualityError, ParameterError
from .measure import Measure, moment


@dataclass(frozen=True)
class CauchyEvaluation:
    """One evaluation G(point) = value with the Herglotz sign recorded."""

    point: complex
    value: complex

    def __post_init__(self):
        if self.point.imag > 0 and not self.value.imag < 0:
            raise ParameterError(
                "transform of a probability measure must map the upper "
                "half-plane to the lower one"
            )


@dataclass(frozen=True)
class NewtonConfig:
    max_iter: int = 200
    tol: float = 1e-12

    def __post_init__(self):
        if self.max_iter < 1 or not (0 < self.tol < 1):
            raise ParameterError("need max_iter >= 1 and tol in (0, 1)")


class StaircaseTransform:
    """Evaluator for G and G' of a fixed measure, valid off the real axis.

    Values in the lower half-plane follow the same closed form, which is the
    Schwarz reflection of the upper-half-plane branch; both are needed when
    inverting G (the functional inverse lands in the opposite half-plane).
    """

    def __init__(self, mu: Measure):
        edges = mu.edges()
        nz = np.nonzero(mu.density > 0)[0]
        self.left = edges[nz]
        self.right = edges[nz + 1]
        self.coef = mu.density[nz]
        self.atom_loc = np.array([a for a, _ in mu.atoms])
        self.atom_w = np.array([w for _, w in mu.atoms])
        self.support = mu.support() if (nz.size or mu.atoms) else (0.0, 0.0)
        self.mean = moment(mu, 1)

    def g(self, z):
        z = np.asarray(z, dtype=complex)
        zz = z[..., None]
        out = np.sum(
            self.coef * (np.log(zz - self.left) - np.log(zz - self.right)), axis=-1
        )
        if self.atom_loc.size:
            out = out + np.sum(self.atom_w / (zz - self.atom_loc), axis=-1)
        return out if out.shape else complex(out)

    def g_and_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        zz = z[..., None]
        dl = zz - self.left
        dr = zz - self.right
        g = np.sum(self.coef * (np.log(dl) - np.log(dr)), axis=-1)
        gp = np.sum(self.coef * (1.0 / dl - 1.0 / dr), axis=-1)
        if self.atom_loc.size:
            da = zz - self.atom_loc
            g = g + np.sum(self.atom_w / da, axis=-1)
            gp = gp - np.sum(self.atom_w / da**2, axis=-1)
        if g.shape:
            return g, gp
        return complex(g), complex(gp)


def cauchy_transform(mu: Measure, z: complex) -> complex:
    """G(z) = integral of 1/(z-t) dmu(t), exact for the staircase density.

    Either half-plane is accepted; only real z is rejected since G has its
    cut on the support there.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("z must not be real")
    return StaircaseTransform(mu).g(z)


def cauchy_derivative(mu: Measure, z: complex) -> complex:
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("z must not be real")
    return StaircaseTransform(mu).g_and_deriv(z)[1]


def evaluate_cauchy(mu: Measure, z: complex) -> CauchyEvaluation:
    """Bundle point and value, enforcing the half-plane sign invariant."""
    return CauchyEvaluation(point=complex(z), value=cauchy_transform(mu, z))


def stieltjes_invert(g, window, n_cells: int, eta: float | None = None) -> Measure:
    """Recover a measure from a transform via the Poisson-kernel boundary limit.

    density(x) ~ -Im g(x + i*eta)/pi on the window grid, clipped at zero and
    renormalized; the pre-normalization mass and the factor applied are kept
    in the result's meta entry.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ParameterError("window must satisfy hi > lo")
    if n_cells < 2:
        raise ParameterError("n_cells must be >= 2")
    h = (hi - lo) / n_cells
    if eta is None:
        eta = 4.0 * h
    if not eta > 0:
        raise ParameterError("eta must be positive")
    x = lo + h * (np.arange(n_cells) + 0.5)
    try:
        vals = np.asarray(g(x + 1j * eta), dtype=complex)
        if vals.shape != x.shape:
            raise TypeError
    except TypeError:
        vals = np.array([g(complex(xi, eta)) for xi in x], dtype=complex)
    dens = np.clip(-vals.imag / math.pi, 0.0, None)
    raw_mass = float(np.sum(dens) * h)
    if not 0.9 <= raw_mass <= 1.1:
        raise InversionQualityError(
            f"mass before renormalization is {raw_mass:.6f}, outside [0.9, 1.1]",
            raw_mass=raw_mass,
        )
    return Measure(
        lo,
        hi,
        dens / raw_mass,
        meta={"raw_mass": raw_mass, "renormalization": 1.0 / raw_mass},
    )


def r_transform(mu: Measure, w: complex, cfg: NewtonConfig | None = None) -> complex:
    """R(w) = K(w) - 1/w with K the functional inverse of G near infinity.

    Newton iteration on G(z) = w seeded at z = 1/w + mean; the seed is the
    two-term Laurent expansion of K, so for small |w| the iteration starts
    inside the basin.
    """
    cfg = cfg or NewtonConfig()
    w = complex(w)
    if w == 0:
        raise ParameterError("w must be nonzero")
    ev = StaircaseTransform(mu)
    s_lo, s_hi = ev.support
    z = 1.0 / w + ev.mean
    resid = math.inf
    for _ in range(cfg.max_iter):
        if z.imag == 0.0 and s_lo <= z.real <= s_hi:
            # G has its cut here; step off the axis to keep values finite
            z = complex(z.real, 1e-9)
        gval, gp = ev.g_and_deriv(z)
        f = gval - w
        resid = abs(f)
        if resid <= cfg.tol:
            return z - 1.0 / w
        if gp == 0:
            break
        step = f / gp
        # trust region: K is locally smooth, huge steps signal divergence
        cap = 1.0 + 0.5 * abs(z)
        if abs(step) > cap:
            step *= cap / abs(step)
        z = z - step
    raise ConvergenceError(
        f"Newton on G(z) = w did not converge (residual {resid:.3e})",
        residual=resid,
    )
