"""Metric dimension, complex dimensions and Dixmier-trace values."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .spectrum import GeometricLengthFamily, SpectrumStream, counting_function
from .zeta import MeromorphicForm, ZetaDomainError, riemann_zeta

ROOT_TOL = 1e-12


class DimensionError(ValueError):
    pass


class PoleRecord(NamedTuple):
    location: complex
    order: int
    residue: complex | None


@dataclass(frozen=True)
class Window:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        vals = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(math.isfinite(v) for v in vals):
            raise DimensionError("window must be bounded")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise DimensionError("window needs re_min < re_max and im_min < im_max")

    def contains(self, z: complex, tol: float = 1e-12) -> bool:
        return (self.re_min - tol <= z.real <= self.re_max + tol
                and self.im_min - tol <= z.imag <= self.im_max + tol)


# --- metric dimension ----------------------------------------------------------

def metric_dimension_analytic(fam: GeometricLengthFamily) -> float:
    """Abscissa of convergence of sum counts * lengths^s, i.e. log m / log(1/rho)."""
    if fam.count_ratio <= 1:
        raise DimensionError("count ratio <= 1: the length sum converges for every s > 0")
    return math.log(fam.count_ratio) / math.log(1.0 / fam.length_ratio)


class EmpiricalDimension(NamedTuple):
    slope: float
    stderr: float
    max_residual: float
    n_points: int


def metric_dimension_empirical(s: SpectrumStream, lam_max: float, lam_min: float | None = None,
                               points_per_decade: int = 24) -> EmpiricalDimension:
    """Least-squares slope of log N(Lambda) against log Lambda on a geometric grid.

    The default range is the top two decades ``[lam_max / 100, lam_max]``.
    """
    if lam_min is None:
        lam_min = lam_max / 100.0
    if not 0 < lam_min < lam_max:
        raise DimensionError("need 0 < lam_min < lam_max")
    n = int(round(points_per_decade * math.log10(lam_max / lam_min))) + 1
    if n < 8:
        raise DimensionError(f"only {n} sample points; need at least 8")
    lams = np.geomspace(lam_min, lam_max, n)
    counts = np.array([counting_function(s, float(lam)) for lam in lams], dtype=float)
    if np.any(counts <= 0):
        raise DimensionError("counting function vanishes inside the sampling range")
    x, y = np.log(lams), np.log(counts)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(n - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / float(((x - x.mean()) ** 2).sum()))
    return EmpiricalDimension(float(coef[0]), stderr, float(np.abs(resid).max()), n)


# --- complex dimensions ----------------------------------------------------

def _factor_order(polys, z: complex) -> int:
    order = 0
    for p in polys:
        w = p.w(z)
        order += p.root_multiplicity(w)
    return order


def _candidate_poles(form: MeromorphicForm, w: Window) -> list[complex]:
    found: list[complex] = []
    for p in form.denominator:
        lb = p.log_base
        period = 2 * math.pi / lb
        for wr in p.w_roots():
            if abs(wr) < ROOT_TOL:
                continue
            z0 = -cmath.log(wr) / lb
            k_lo = math.ceil((w.im_min - z0.imag) / period - 1e-12)
            k_hi = math.floor((w.im_max - z0.imag) / period + 1e-12)
            for k in range(k_lo, k_hi + 1):
                z = complex(z0.real, z0.imag + k * period)
                if w.contains(z):
                    found.append(z)
    if form.riemann_factor and w.contains(1 + 0j):
        found.append(1 + 0j)
    unique: list[complex] = []
    for z in found:
        if all(abs(z - u) > 1e-9 for u in unique):
            unique.append(z)
    return sorted(unique, key=lambda c: (c.real, c.imag))


def complex_dimensions(form: MeromorphicForm, w: Window, residues: bool = True) -> list[PoleRecord]:
    """Poles of ``form`` inside the window, from the exact structure in ``base^(-z)``.

    Denominator roots give vertical progressions with spacing ``2 pi / log base``;
    a Riemann factor adds ``z = 1``. Numerator zeros cancel poles order by order.
    Possible cancellations by zeros of the Riemann zeta function itself are not
    considered.
    """
    if not form.denominator or all(len(p.coeffs) <= 1 for p in form.denominator):
        raise DimensionError("denominator is constant; the form has no poles from it")
    if form.riemann_factor and w.re_min <= 0:
        raise DimensionError("Riemann factor is only available for Re z > 0; raise re_min")
    out = []
    for z in _candidate_poles(form, w):
        den_order = _factor_order(form.denominator, z)
        num_order = _factor_order(form.numerator, z)
        order = den_order - num_order
        if form.riemann_factor and abs(z - 1) < 1e-12:
            order += 1
        if order <= 0:
            continue
        res = None
        if residues:
            plain = order == 1 and num_order == 0
            res = analytic_residue(form, z) if plain else contour_residue(form, z)
        out.append(PoleRecord(z, order, res))
    return out


def analytic_residue(form: MeromorphicForm, z0: complex) -> complex:
    """Residue at a simple pole, from the derivative of the vanishing factor."""
    z0 = complex(z0)
    top = form.entire_part(z0)
    vanishing = [p for p in form.denominator if abs(p(z0)) < 1e-9]
    others = [p for p in form.denominator if abs(p(z0)) >= 1e-9]
    for p in others:
        top /= p(z0)
    if form.riemann_factor and abs(z0 - 1) < 1e-12:
        if vanishing:
            raise DimensionError("pole at z = 1 is not simple")
        return complex(top)  # Res_{z=1} zeta = 1
    if len(vanishing) != 1:
        raise DimensionError(f"no simple denominator zero at {z0}")
    if form.riemann_factor:
        top *= riemann_zeta(z0)
    return complex(top / vanishing[0].dz(z0))


def _circle(center: complex, radius: float, samples: int):
    theta = 2 * np.pi * np.arange(samples) / samples
    return center + radius * np.exp(1j * theta), theta


def contour_residue(f: Callable[[complex], complex], center: complex, radius: float = 0.05,
                    samples: int = 256) -> complex:
    """(1 / 2 pi i) times the contour integral of f on a circle (trapezoidal, spectrally accurate)."""
    zs, theta = _circle(complex(center), radius, samples)
    vals = np.array([f(complex(z)) for z in zs])
    return complex(radius * np.mean(vals * np.exp(1j * theta)))


def argument_principle_count(f: Callable[[complex], complex], center: complex, radius: float = 0.1,
                             samples: int = 512) -> int:
    """Number of poles minus number of zeros of f inside the circle (minus the winding number)."""
    zs, _ = _circle(complex(center), radius, samples)
    vals = np.array([f(complex(z)) for z in zs] + [f(complex(zs[0]))])
    dphi = np.angle(vals[1:] / vals[:-1])
    if np.max(np.abs(dphi)) > 1.0:
        raise DimensionError("contour too coarse for a reliable winding number")
    return -int(round(float(dphi.sum()) / (2 * math.pi)))


# --- Dixmier trace -----------------------------------------------------------

def dixmier_residue(form: MeromorphicForm, d: float) -> float:
    """lim_{x -> 1+} (x - 1) form(d x) = Res_{z=d} form / d, for a simple real pole ``d``."""
    w = Window(d - 1e-6, d + 1e-6, -1e-6, 1e-6)
    poles = complex_dimensions(form, w)
    if len(poles) != 1 or poles[0].order != 1:
        raise DimensionError(f"{d} is not a simple pole of the form")
    return float(poles[0].residue.real) / d


def richardson_limit(g: Callable[[float], complex], hs: Sequence[float]) -> complex:
    """Polynomial (Neville) extrapolation of g(h) to h = 0."""
    hs = [float(h) for h in hs]
    table = [complex(g(h)) for h in hs]
    n = len(hs)
    for m in range(1, n):
        for i in range(n - m):
            table[i] = (hs[i] * table[i + 1] - hs[i + m] * table[i]) / (hs[i] - hs[i + m])
    return table[0]


def dixmier_limit_numeric(form: Callable[[complex], complex], d: float,
                          ks: Sequence[int] = (3, 4, 5, 6)) -> float:
    """Richardson-extrapolated (x - 1) form(d x) at x = 1 + 10^(-k)."""
    val = richardson_limit(lambda h: h * form(d * (1 + h)), [10.0**-k for k in ks])
    return float(val.real)


def dixmier_partial_sums(s: SpectrumStream, d: float, n_list: Sequence[int],
                         max_count: int = 10**9) -> list[float]:
    """(1 / log N) * sum over the first N magnitudes (with multiplicity) of magnitude^(-d)."""
    ns = [int(n) for n in n_list]
    if not ns:
        return []
    if any(n < 2 for n in ns):
        raise DimensionError("N must be at least 2 (log 1 = 0)")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise DimensionError("N values must be strictly increasing")
    if ns[-1] > max_count:
        raise DimensionError(f"N = {ns[-1]} exceeds the enumeration cap {max_count}")
    if s.zero_multiplicity:
        raise DimensionError("spectrum has a kernel; magnitude^(-d) is undefined")
    out = []
    idx = 0
    taken = 0
    acc = 0.0
    for mag, mult in s:
        while idx < len(ns) and taken + mult >= ns[idx]:
            need = ns[idx] - taken
            out.append((acc + need * mag ** (-d)) / math.log(ns[idx]))
            idx += 1
        if idx == len(ns):
            break
        acc += mult * mag ** (-d)
        taken += mult
    if idx < len(ns):
        raise DimensionError("spectrum exhausted before the requested N")
    return out


def gasket_dixmier_value() -> float:
    """(4 / log 3) zeta(log 3 / log 2)."""
    return 4.0 / math.log(3.0) * riemann_zeta(math.log(3.0) / math.log(2.0)).real


__all__ = [
    "DimensionError", "PoleRecord", "Window", "EmpiricalDimension", "metric_dimension_analytic",
    "metric_dimension_empirical", "complex_dimensions", "analytic_residue", "contour_residue",
    "argument_principle_count", "dixmier_residue", "dixmier_limit_numeric", "richardson_limit",
    "dixmier_partial_sums", "gasket_dixmier_value", "ZetaDomainError",
]
