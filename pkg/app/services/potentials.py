"""Potentiels q(x) sur [a, oo) pour -y'' + q y = lambda y."""
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator

from app.core.errors import ConfigurationError, DomainError, PotentialError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


class Potential(ABC):
    kind: str = ""

    def __init__(self, a: float):
        if not np.isfinite(a):
            raise DomainError(f"Extrémité gauche non finie: a={a}")
        self.a = float(a)

    @abstractmethod
    def q(self, x: ArrayLike):
        ...

    @abstractmethod
    def derivative(self, x: ArrayLike, order: int = 1):
        """Dérivée d'ordre 1 ou 2 de q."""

    def decay_point(self, threshold: float) -> float:
        """
        Plus petit x >= a au-delà duquel |q| <= threshold.

        Args:
            threshold: Seuil positif sur |q|

        Returns:
            Le point x; inf si q ne décroît pas sous le seuil
        """
        x = max(self.a, 1.0)
        for _ in range(60):
            if abs(float(self.q(x))) <= threshold:
                return x
            x *= 2.0
        return float("inf")

    def describe(self) -> str:
        return f"{self.kind}(a={self.a:g})"

    def __repr__(self) -> str:
        return self.describe()


class Zero(Potential):
    kind = "zero"

    def q(self, x: ArrayLike):
        return np.zeros_like(np.asarray(x, dtype=float)) + 0.0

    def derivative(self, x: ArrayLike, order: int = 1):
        _check_order(order)
        return self.q(x)

    def decay_point(self, threshold: float) -> float:
        return self.a


class InverseSquare(Potential):
    """q(x) = (nu^2 - 1/4)/x^2, l'équation de Bessel d'ordre nu."""

    kind = "inverse_square"

    def __init__(self, nu: float, a: float):
        if a <= 0:
            raise DomainError(f"InverseSquare exige a > 0 (a={a})")
        if nu < 0:
            raise DomainError(f"Ordre nu négatif: {nu}")
        super().__init__(a)
        self.nu = float(nu)
        self.strength = self.nu ** 2 - 0.25

    def q(self, x: ArrayLike):
        x = np.asarray(x, dtype=float)
        return self.strength / x ** 2

    def derivative(self, x: ArrayLike, order: int = 1):
        _check_order(order)
        x = np.asarray(x, dtype=float)
        if order == 1:
            return -2.0 * self.strength / x ** 3
        return 6.0 * self.strength / x ** 4

    def decay_point(self, threshold: float) -> float:
        if self.strength == 0.0:
            return self.a
        return max(self.a, float(np.sqrt(abs(self.strength) / threshold)))

    def describe(self) -> str:
        return f"{self.kind}(nu={self.nu:g}, a={self.a:g})"


class Tabulated(Potential):
    """
    Potentiel tabulé: interpolation monotone (PCHIP) ou linéaire entre les points,
    prolongé par la dernière valeur au-delà du dernier point.
    """

    kind = "tabulated"

    def __init__(self, breakpoints: ArrayLike, values: ArrayLike, a: float, interpolation: str = "pchip"):
        super().__init__(a)
        xs = np.asarray(breakpoints, dtype=float)
        qs = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != qs.shape:
            raise DomainError("La table doit contenir au moins deux points (x, q) de même longueur")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("Les points de la table doivent être strictement croissants")
        if xs[0] > self.a:
            raise DomainError(f"Premier point {xs[0]:g} au-delà de a={self.a:g}")
        if not np.all(np.isfinite(qs)):
            raise DomainError("Valeurs de q non finies dans la table")
        if interpolation not in ("pchip", "linear"):
            raise DomainError(f"Règle d'interpolation inconnue: {interpolation}")
        self.breakpoints = xs
        self.values = qs
        self.interpolation = interpolation
        self._pchip = PchipInterpolator(xs, qs, extrapolate=False) if interpolation == "pchip" else None

    @classmethod
    def from_csv(cls, path: Union[str, Path], a: float, interpolation: str = "pchip") -> "Tabulated":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Table de potentiel introuvable: {path}")
        try:
            frame = pd.read_csv(path)
        except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
            raise ConfigurationError(f"Table de potentiel illisible: {path} ({e})") from e
        if not {"x", "q"} <= set(frame.columns):
            raise ConfigurationError(f"La table {path} doit avoir les colonnes x et q")
        try:
            xs = frame["x"].to_numpy(dtype=float)
            qs = frame["q"].to_numpy(dtype=float)
        except ValueError as e:
            raise ConfigurationError(f"Valeurs non numériques dans la table {path}") from e
        logger.info(f"Table de potentiel chargée: {path} ({len(frame)} points)")
        return cls(xs, qs, a=a, interpolation=interpolation)

    def q(self, x: ArrayLike):
        x = np.clip(np.asarray(x, dtype=float), self.breakpoints[0], self.breakpoints[-1])
        if self._pchip is None:
            return np.interp(x, self.breakpoints, self.values)
        return self._pchip(x)

    def derivative(self, x: ArrayLike, order: int = 1):
        _check_order(order)
        if self._pchip is None:
            raise PotentialError("q' indisponible pour une table à interpolation linéaire")
        x = np.asarray(x, dtype=float)
        inside = np.clip(x, self.breakpoints[0], self.breakpoints[-1])
        return np.where(x > self.breakpoints[-1], 0.0, self._pchip.derivative(order)(inside))

    def decay_point(self, threshold: float) -> float:
        above = np.nonzero(np.abs(self.values) > threshold)[0]
        if above.size == 0:
            return self.a
        if above[-1] == self.values.size - 1:
            return float("inf")
        return max(self.a, float(self.breakpoints[above[-1] + 1]))

    def describe(self) -> str:
        return f"{self.kind}(n={self.breakpoints.size}, a={self.a:g}, {self.interpolation})"


def _check_order(order: int) -> None:
    if order not in (1, 2):
        raise DomainError(f"Ordre de dérivée non supporté: {order}")
