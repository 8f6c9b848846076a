"""
Géométrie des valeurs au bord des fonctions de Herglotz: angles sous-tendus,
poids omega et borne de l'écart entre valeurs au bord et valeurs à lambda + i eps.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from app.core.errors import DomainError

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


def check_interval(interval: Sequence[float], bounded: bool = True) -> Interval:
    lo, hi = (float(v) for v in interval)
    if not lo < hi:
        raise DomainError(f"Intervalle vide ou inversé: ({lo}, {hi})")
    if bounded and not (np.isfinite(lo) and np.isfinite(hi)):
        raise DomainError(f"Intervalle non borné: ({lo}, {hi})")
    return lo, hi


def midpoint_grid(interval: Sequence[float], n: int) -> Tuple[np.ndarray, float]:
    """Points milieux de n cellules uniformes et leur pas h."""
    lo, hi = check_interval(interval)
    if n < 2:
        raise DomainError(f"grid_n doit être >= 2 (reçu {n})")
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5), h


@dataclass(frozen=True)
class IntervalUnion:
    """Union finie d'intervalles ouverts disjoints, triés, éventuellement infinis."""

    intervals: Tuple[Interval, ...] = ()

    def __post_init__(self):
        cleaned = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in cleaned:
            if not lo < hi:
                raise DomainError(f"Intervalle invalide ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(cleaned, cleaned[1:]):
            if not hi <= lo:
                raise DomainError("Les intervalles doivent être triés et disjoints")
        object.__setattr__(self, "intervals", cleaned)

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def full_line(cls) -> "IntervalUnion":
        return cls(((-np.inf, np.inf),))

    @classmethod
    def of(cls, *pairs: Sequence[float]) -> "IntervalUnion":
        return cls(tuple(tuple(p) for p in pairs))

    def complement(self) -> "IntervalUnion":
        edges = [-np.inf]
        for lo, hi in self.intervals:
            edges.extend([lo, hi])
        edges.append(np.inf)
        pairs = [(lo, hi) for lo, hi in zip(edges[::2], edges[1::2]) if lo < hi]
        return IntervalUnion(tuple(pairs))

    def contains(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        inside = np.zeros(X.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (X > lo) & (X < hi)
        return inside

    def is_endpoint(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        hit = np.zeros(X.shape, dtype=bool)
        for lo, hi in self.intervals:
            hit |= (X == lo) | (X == hi)
        return hit

    def __len__(self) -> int:
        return len(self.intervals)


def angle(S: IntervalUnion, z) -> Union[float, np.ndarray]:
    """
    Angle theta(S, z) = int_S Im(1/(t - z)) dt >= 0, sous-tendu par S vu depuis z.

    Args:
        S: Union d'intervalles
        z: Point(s) du demi-plan supérieur, Im z > 0

    Returns:
        L'angle en radians, dans [0, pi]
    """
    z = np.asarray(z, dtype=complex)
    if np.any(~(z.imag > 0)):
        raise DomainError("angle exige Im z > 0; utiliser angle_boundary sur l'axe réel")
    x, y = z.real, z.imag
    total = np.zeros(z.shape)
    for lo, hi in S.intervals:
        total += np.arctan((hi - x) / y) - np.arctan((lo - x) / y)
    return total[()] if total.ndim == 0 else total


def angle_boundary(S: IntervalUnion, X) -> Union[float, np.ndarray]:
    """pi si X est dans S, 0 sinon; NaN (indéterminé) aux extrémités des intervalles."""
    X = np.asarray(X, dtype=float)
    result = np.where(S.contains(X), np.pi, 0.0)
    result = np.where(S.is_endpoint(X), np.nan, result)
    return result[()] if result.ndim == 0 else result


def omega(S: IntervalUnion, value) -> Union[float, np.ndarray]:
    """
    Poids de distribution des valeurs omega = theta(S, value)/pi, dans [0, 1].

    Les valeurs réelles (ou de partie imaginaire nulle) utilisent la fonction
    caractéristique; les extrémités de S renvoient NaN, un pôle (NaN) renvoie 0
    et n'est donc jamais compté dans S.
    """
    value = np.asarray(value)
    if not np.iscomplexobj(value):
        return angle_boundary(S, value) / np.pi
    if np.any(value.imag < 0):
        raise DomainError("omega exige Im value >= 0")
    upper = value.imag > 0
    result = np.empty(value.shape)
    if np.any(upper):
        result[upper] = angle(S, value[upper]) / np.pi
    if np.any(~upper):
        result[~upper] = angle_boundary(S, value[~upper].real) / np.pi
    return result[()] if result.ndim == 0 else result


def omega_between(lo, hi, value) -> np.ndarray:
    """omega pour la cible mobile S_lambda = (lo(lambda), hi(lambda)), point par point."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    value = np.asarray(value, dtype=complex)
    x, y = value.real, value.imag
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = (np.arctan((hi - x) / y) - np.arctan((lo - x) / y)) / np.pi
    boundary = np.where((x > lo) & (x < hi), 1.0, 0.0)
    boundary = np.where((x == lo) | (x == hi), np.nan, boundary)
    return np.where(y > 0, smooth, boundary)


def midpoint_integral(values: np.ndarray, h: float) -> float:
    """Règle du point milieu; les points indéterminés (NaN) sont exclus."""
    values = np.asarray(values, dtype=float)
    return float(h * np.sum(np.where(np.isnan(values), 0.0, values)))


class HerglotzFunction(ABC):
    @abstractmethod
    def __call__(self, z) -> np.ndarray:
        """Valeur en z, Im z > 0."""

    @abstractmethod
    def boundary(self, lam) -> np.ndarray:
        """Valeur au bord f+(lambda) sur l'axe réel."""


@dataclass(frozen=True)
class RationalHerglotz(HerglotzFunction):
    """f(z) = alpha z + beta + i gamma + sum_k w_k / (lambda_k - z), w_k > 0, alpha >= 0, gamma >= 0."""

    poles: Tuple[Tuple[float, float], ...] = ()
    slope: float = 0.0
    offset: float = 0.0
    imag_offset: float = 0.0

    def __post_init__(self):
        if self.slope < 0:
            raise DomainError(f"Pente négative: {self.slope}")
        if self.imag_offset < 0:
            raise DomainError(f"Partie imaginaire constante négative: {self.imag_offset}")
        for location, weight in self.poles:
            if not weight > 0:
                raise DomainError(f"Poids de pôle non positif en {location}: {weight}")
        object.__setattr__(self, "poles", tuple((float(l), float(w)) for l, w in self.poles))

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        total = self.slope * z + self.offset + 1j * self.imag_offset
        for location, weight in self.poles:
            total = total + weight / (location - z)
        return total

    def boundary(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        total = self.slope * lam + self.offset + 0.0 * lam
        with np.errstate(divide="ignore"):
            for location, weight in self.poles:
                total = total + weight / (location - lam)
        if self.imag_offset > 0:
            return total + 1j * self.imag_offset
        return total


class BoundaryM:
    """
    Fournisseur de (A(lambda), B(lambda)) = (Re m+, Im m+) sur un intervalle I.

    Args:
        fn: lambda -> (A, B), vectorisée
        interval: L'intervalle déclaré (a.c.) I
        provenance: "closed-form", "appell-derived" ou "grid-interpolated"
    """

    PROVENANCES = ("closed-form", "appell-derived", "grid-interpolated")

    def __init__(self, fn: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]], interval: Sequence[float], provenance: str):
        if provenance not in self.PROVENANCES:
            raise DomainError(f"Provenance inconnue: {provenance}")
        self._fn = fn
        self.interval = check_interval(interval, bounded=False)
        self.provenance = provenance

    def __call__(self, lam) -> Tuple[np.ndarray, np.ndarray]:
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.interval
        if np.any((lam < lo) | (lam > hi)):
            raise DomainError(f"Modèle défini seulement sur [{lo:g}, {hi:g}]")
        A, B = self._fn(lam)
        return np.asarray(A, dtype=float) + 0.0 * lam, np.asarray(B, dtype=float) + 0.0 * lam

    def m_plus(self, lam) -> np.ndarray:
        A, B = self(lam)
        return A + 1j * B

    def require_positive(self, lam) -> Tuple[np.ndarray, np.ndarray]:
        A, B = self(lam)
        bad = np.atleast_1d(~(B > 0))
        if np.any(bad):
            first = np.atleast_1d(np.asarray(lam, dtype=float))[bad][0]
            raise DomainError(f"B(lambda) <= 0 hors du spectre a.c. (lambda={first:g})")
        return A, B

    @classmethod
    def from_samples(cls, lam_grid, A, B, provenance: str = "grid-interpolated") -> "BoundaryM":
        lam_grid = np.asarray(lam_grid, dtype=float)
        spline_a = CubicSpline(lam_grid, np.asarray(A, dtype=float))
        spline_b = CubicSpline(lam_grid, np.asarray(B, dtype=float))
        return cls(lambda lam: (spline_a(lam), spline_b(lam)), (lam_grid[0], lam_grid[-1]), provenance)

    def resampled(self, interval: Sequence[float], n: int = 257) -> "BoundaryM":
        """Échantillonne le modèle sur une grille grossière et l'interpole (splines cubiques)."""
        lo, hi = check_interval(interval)
        grid = np.linspace(lo, hi, n)
        A, B = self(grid)
        return BoundaryM.from_samples(grid, A, B)


def free_boundary_m(interval: Sequence[float] = (-np.inf, np.inf)) -> BoundaryM:
    """m+(lambda) = i sqrt(lambda) du potentiel nul (branche principale)."""

    def fn(lam):
        root = np.sqrt(np.abs(lam))
        return np.where(lam < 0, -root, 0.0), np.where(lam > 0, root, 0.0)

    return BoundaryM(fn, interval, "closed-form")


def theorem1_gap(
    f: HerglotzFunction,
    S: IntervalUnion,
    Lambda: Sequence[float],
    eps: float,
    grid_n: int,
) -> Tuple[float, float]:
    """
    Compare int_Lambda omega(S, f+) et int_Lambda omega(S, f(lambda + i eps)).

    Returns:
        (lhs, rhs) avec lhs l'écart absolu et rhs = (1/pi) int_Lambda theta(Lambda^c, lambda + i eps)
    """
    if not eps > 0:
        raise DomainError(f"eps doit être positif: {eps}")
    Lambda = check_interval(Lambda)
    grid, h = midpoint_grid(Lambda, grid_n)
    z = grid + 1j * eps
    on_axis = omega(S, f.boundary(grid))
    off_axis = omega(S, f(z))
    lhs = abs(midpoint_integral(on_axis, h) - midpoint_integral(off_axis, h))
    rhs = midpoint_integral(angle(IntervalUnion.of(Lambda).complement(), z), h) / np.pi
    logger.debug(f"theorem1_gap eps={eps:g}: lhs={lhs:.6g}, rhs={rhs:.6g}")
    return lhs, rhs
