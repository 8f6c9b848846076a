"""
Distribution des valeurs des fonctions de bord tronquées F(x, lambda) = -u/v: mesures des
préimages, phase theta0 réduite modulo pi, condition A et cercles de Weyl.

Toutes les vérifications sur une grille de lambda intègrent la grille entière en un seul
système et évaluent tous les x du calendrier à partir de la même intégration.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.errors import DomainError
from app.services.herglotz import (
    BoundaryM,
    HerglotzFunction,
    IntervalUnion,
    midpoint_grid,
    midpoint_integral,
    omega,
    omega_between,
)
from app.services.ode_engine import IntegratorConfig, accumulate_theta0, propagate_schedule, theta0_integrand
from app.services.potentials import Potential

logger = logging.getLogger(__name__)

# Sentinelle des pôles (lambda valeur propre du problème tronqué) et des valeurs indéterminées
POLE = float("nan")

TABLE_COLUMNS = ["x", "empirical", "limit", "abs_error"]


@dataclass(frozen=True)
class GridFunction:
    """Valeurs aux points milieux d'une grille uniforme de Lambda, support des intégrales et des mesures."""

    lambda_grid: np.ndarray
    values: np.ndarray
    h: float

    def __post_init__(self):
        grid = np.asarray(self.lambda_grid, dtype=float)
        values = np.asarray(self.values)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
            raise DomainError("La grille de lambda doit être strictement croissante")
        if values.shape != grid.shape:
            raise DomainError(f"Valeurs de taille {values.shape} pour une grille de taille {grid.shape}")
        object.__setattr__(self, "lambda_grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def on_midpoints(cls, Lambda: Sequence[float], n: int, values=None) -> "GridFunction":
        grid, h = midpoint_grid(Lambda, n)
        return cls(grid, np.zeros(n) if values is None else values, h)

    @property
    def interval(self):
        return self.lambda_grid[0] - self.h / 2, self.lambda_grid[-1] + self.h / 2

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.lambda_grid, values, self.h)

    def integral(self) -> float:
        return midpoint_integral(self.values, self.h)

    def measure(self) -> float:
        """h * #{points où values est vrai}; NaN compte comme faux."""
        return float(self.h * np.count_nonzero(np.asarray(self.values, dtype=bool) & ~np.isnan(np.asarray(self.values, dtype=float))))


@dataclass(frozen=True)
class PiecewiseConstant:
    """Fonction en escalier: values[i] sur (breaks[i-1], breaks[i]], continue à gauche."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise DomainError("Il faut exactement une valeur de plus que de points de rupture")
        if np.any(np.diff(self.breaks) <= 0):
            raise DomainError("Points de rupture non croissants")

    def __call__(self, lam) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.breaks, dtype=float), np.asarray(lam, dtype=float), side="left")
        return np.asarray(self.values, dtype=float)[idx]


PerLambda = Union[float, PiecewiseConstant, GridFunction, Callable[[np.ndarray], np.ndarray]]


def evaluate_per_lambda(fn: PerLambda, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if isinstance(fn, GridFunction):
        return np.interp(lam, fn.lambda_grid, np.asarray(fn.values, dtype=float))
    if callable(fn):
        return np.asarray(fn(lam), dtype=float) + 0.0 * lam
    return np.full(lam.shape, float(fn))


@dataclass(frozen=True)
class BandSpec:
    C: PerLambda
    D: PerLambda

    def bounds(self, lam):
        C = evaluate_per_lambda(self.C, lam)
        D = evaluate_per_lambda(self.D, lam)
        if np.any(C < 0) or np.any(D > np.pi) or np.any(~(C < D)):
            raise DomainError("La bande doit vérifier 0 <= C(lambda) < D(lambda) <= pi sur Lambda")
        return C, D


@dataclass(frozen=True)
class MovingTarget:
    """Cible mobile S_lambda = (alpha(lambda), beta(lambda)), bornée."""

    alpha: PerLambda
    beta: PerLambda

    def bounds(self, lam):
        lo = evaluate_per_lambda(self.alpha, lam)
        hi = evaluate_per_lambda(self.beta, lam)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("alpha et beta doivent être bornées")
        if np.any(~(lo < hi)):
            raise DomainError("La cible mobile exige alpha(lambda) < beta(lambda)")
        return lo, hi


Target = Union[IntervalUnion, MovingTarget]


def _sweep_config(cfg: Optional[IntegratorConfig]) -> IntegratorConfig:
    return cfg or IntegratorConfig.from_settings(sweep=True)


def pole_threshold(p: Potential, x, cfg: IntegratorConfig):
    """Seuil relatif sur |v|/(|u|+|v|): POLE_TOL, élargi à l'enveloppe d'erreur de l'intégrateur."""
    return np.maximum(settings.POLE_TOL, 10.0 * cfg.rel_tol * np.maximum(1.0, np.asarray(x) - p.a))


def _boundary_ratio(u, v, threshold):
    """-u/v, POLE là où |v| < threshold*(|u| + |v|)."""
    pole = np.abs(v) < threshold * (np.abs(u) + np.abs(v))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(pole, POLE, -u / np.where(pole, 1.0, v))


def _in_target(S: Target, F, grid) -> np.ndarray:
    if isinstance(S, MovingTarget):
        lo, hi = S.bounds(grid)
        return (F > lo) & (F < hi)
    return S.contains(F)


def big_f(p: Potential, x: float, lam, cfg: Optional[IntegratorConfig] = None):
    """
    F(x, lambda) = -u(x, lambda)/v(x, lambda), ou POLE si lambda est valeur propre du problème tronqué en x.

    Args:
        p: Le potentiel
        x: Point de troncature, x > a
        lam: lambda réel, scalaire ou tableau
        cfg: Configuration de l'intégrateur

    Returns:
        F (scalaire si lam est scalaire)
    """
    if not x > p.a:
        raise DomainError(f"big_f exige x > a (x={x}, a={p.a})")
    if np.iscomplexobj(lam) and np.any(np.imag(lam) != 0):
        raise DomainError("big_f exige lambda réel; utiliser m_truncated")
    cfg = cfg or IntegratorConfig.from_settings()
    sweep = propagate_schedule(p, np.real(lam), [x], cfg)
    F = _boundary_ratio(sweep.states[0, 0], sweep.states[0, 2], pole_threshold(p, x, cfg))
    return F[0] if np.ndim(lam) == 0 else F


def m_truncated(p: Potential, b: float, z, cfg: Optional[IntegratorConfig] = None):
    """m_b(z) = -u(b, z)/v(b, z); identique à big_f pour z réel."""
    if not b > p.a:
        raise DomainError(f"m_truncated exige b > a (b={b}, a={p.a})")
    z_arr = np.asarray(z)
    if np.any(np.imag(z_arr) < 0):
        raise DomainError("m_truncated exige Im z >= 0")
    if not np.iscomplexobj(z_arr) or np.all(np.imag(z_arr) == 0):
        return big_f(p, b, np.real(z), cfg)
    cfg = cfg or IntegratorConfig.from_settings()
    sweep = propagate_schedule(p, z_arr, [b], cfg)
    m = _boundary_ratio(sweep.states[0, 0], sweep.states[0, 2], pole_threshold(p, b, cfg))
    return m[0] if z_arr.ndim == 0 else m


def weyl_radius(p: Potential, b: float, z, cfg: Optional[IntegratorConfig] = None):
    """Rayon 1/(2 Im z int_a^b |v|^2) du cercle de Weyl contenant m_b(z)."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(~(z_arr.imag > 0)):
        raise DomainError("weyl_radius exige Im z > 0")
    sweep = propagate_schedule(p, z_arr, [b], cfg, [_abs_v_squared])
    radius = 1.0 / (2.0 * z_arr.imag * sweep.quadratures[0, 0])
    return radius[0] if z_arr.ndim == 0 else radius


def _abs_v_squared(x, w):
    return np.abs(w[2]) ** 2


def m_function_table(
    p: Potential,
    lam: float,
    b_list: Sequence[float],
    eps_list: Sequence[float],
    cfg: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """m_b(lambda + i eps) et le rayon de Weyl pour chaque eps du calendrier et chaque b."""
    b_arr = np.asarray(b_list, dtype=float)
    if np.any(b_arr <= p.a):
        raise DomainError("Tous les b doivent dépasser a")
    cfg = cfg or IntegratorConfig.from_settings()
    rows = []
    for eps in eps_list:
        if not eps > 0:
            raise DomainError(f"eps doit être positif: {eps}")
        z = complex(lam, eps)
        sweep = propagate_schedule(p, z, b_arr, cfg, [_abs_v_squared])
        m = _boundary_ratio(sweep.states[:, 0, 0], sweep.states[:, 2, 0], pole_threshold(p, b_arr, cfg))
        radius = 1.0 / (2.0 * eps * sweep.quadratures[:, 0, 0])
        for b, value, r in zip(b_arr, m, radius):
            rows.append({"eps": eps, "b": b, "re_m": value.real, "im_m": value.imag, "weyl_radius": r})
    return pd.DataFrame(rows, columns=["eps", "b", "re_m", "im_m", "weyl_radius"])


@dataclass(frozen=True)
class WeylHerglotz(HerglotzFunction):
    """m+ comme fonction de Herglotz: m_b(z) hors de l'axe, valeurs au bord fournies par un BoundaryM."""

    p: Potential
    model: BoundaryM
    b: float
    cfg: Optional[IntegratorConfig] = field(default=None, compare=False)

    def __call__(self, z) -> np.ndarray:
        return m_truncated(self.p, self.b, np.asarray(z, dtype=complex), self.cfg)

    def boundary(self, lam) -> np.ndarray:
        return self.model.m_plus(lam)


def preimage_measure(
    p: Potential,
    x: float,
    Lambda: Sequence[float],
    S: Target,
    grid_n: int,
    cfg: Optional[IntegratorConfig] = None,
) -> float:
    """
    Estimation par points milieux de mu(Lambda inter F_x^{-1}(S)).

    Les pôles ne sont jamais comptés dans S.
    """
    gf = GridFunction.on_midpoints(Lambda, grid_n)
    F = big_f(p, x, gf.lambda_grid, _sweep_config(cfg))
    return gf.with_values(_in_target(S, F, gf.lambda_grid)).measure()


def _target_limit(S: Target, gf: GridFunction, A, B) -> float:
    value = A + 1j * B
    if isinstance(S, MovingTarget):
        lo, hi = S.bounds(gf.lambda_grid)
        return gf.with_values(omega_between(lo, hi, value)).integral()
    return gf.with_values(omega(S, value)).integral()


def theorem2_table(
    p: Potential,
    model: BoundaryM,
    S: Target,
    Lambda: Sequence[float],
    x_list: Optional[Sequence[float]] = None,
    grid_n: int = 10_000,
    cfg: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """
    Compare mu(Lambda inter F_x^{-1}(S)) à sa limite int_Lambda omega(S, m+(lambda)) dlambda.

    Returns:
        Un DataFrame (x, empirical, limit, abs_error), une ligne par x
    """
    x_list = list(x_list or settings.X_SCHEDULE)
    gf = GridFunction.on_midpoints(Lambda, grid_n)
    A, B = model.require_positive(gf.lambda_grid)
    limit = _target_limit(S, gf, A, B)

    cfg = _sweep_config(cfg)
    sweep = propagate_schedule(p, gf.lambda_grid, x_list, cfg)
    rows = []
    for i, x in enumerate(x_list):
        F = _boundary_ratio(sweep.states[i, 0], sweep.states[i, 2], pole_threshold(p, x, cfg))
        empirical = gf.with_values(_in_target(S, F, gf.lambda_grid)).measure()
        rows.append({"x": x, "empirical": empirical, "limit": limit, "abs_error": abs(empirical - limit)})
    logger.info(f"theorem2: {p.describe()}, Lambda={tuple(Lambda)}, {len(rows)} points x, limite={limit:.6g}")
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def reduce_mod_pi(theta):
    reduced = np.asarray(theta, dtype=float) - np.pi * np.floor(np.asarray(theta, dtype=float) / np.pi)
    return np.clip(reduced, 0.0, np.nextafter(np.pi, 0.0))[()]


def theta0_mod_pi(p: Potential, lam, model: BoundaryM, x: float, cfg: Optional[IntegratorConfig] = None):
    """theta0~(x, lambda) = theta0 - n pi, n = floor(theta0/pi), dans [0, pi)."""
    A, B = model.require_positive(lam)
    return reduce_mod_pi(accumulate_theta0(p, lam, A, B, x, cfg))


def uad_check(
    p: Potential,
    model: BoundaryM,
    Lambda: Sequence[float],
    band: BandSpec,
    x_list: Optional[Sequence[float]] = None,
    grid_n: int = 10_000,
    cfg: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """
    Équirépartition de theta0~ modulo pi: h * #{C < theta0~ < D} comparé à (1/pi) int_Lambda (D - C).

    Returns:
        Un DataFrame (x, empirical, limit, abs_error) ordonné par x
    """
    x_list = sorted(x_list or settings.X_SCHEDULE)
    gf = GridFunction.on_midpoints(Lambda, grid_n)
    C, D = band.bounds(gf.lambda_grid)
    A, B = model.require_positive(gf.lambda_grid)
    limit = gf.with_values(D - C).integral() / np.pi

    sweep = propagate_schedule(p, gf.lambda_grid, x_list, _sweep_config(cfg), [theta0_integrand(A, B)])
    rows = []
    for i, x in enumerate(x_list):
        reduced = reduce_mod_pi(sweep.quadratures[i, 0])
        empirical = gf.with_values((reduced > C) & (reduced < D)).measure()
        rows.append({"x": x, "empirical": empirical, "limit": limit, "abs_error": abs(empirical - limit)})
    logger.info(f"uad_check: {p.describe()}, Lambda={tuple(Lambda)}, limite={limit:.6g}")
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def _condition_a_integrands(M: complex):
    def re_square(x, w):
        return ((w[0] + M * w[2]) ** 2).real

    def im_square(x, w):
        return ((w[0] + M * w[2]) ** 2).imag

    def modulus(x, w):
        return np.abs(w[0] + M * w[2]) ** 2

    return [re_square, im_square, modulus]


def condition_a_table(
    p: Potential,
    lam: float,
    M: complex,
    n_list: Sequence[float],
    cfg: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """Rapport int_a^N y^2 / int_a^N |y|^2, y = u + M v, pour chaque N (une seule intégration)."""
    M = complex(M)
    if not M.imag > 0:
        raise DomainError(f"La condition A exige Im M > 0 (M={M})")
    N = np.asarray(n_list, dtype=float)
    if np.any(N <= p.a):
        raise DomainError("Tous les N doivent dépasser a")
    sweep = propagate_schedule(p, float(lam), N, cfg, _condition_a_integrands(M))
    re_sq, im_sq, mod = (sweep.quadratures[:, j, 0] for j in range(3))
    ratio = (re_sq + 1j * im_sq) / mod
    return pd.DataFrame(
        {"N": N, "re_ratio": ratio.real, "im_ratio": ratio.imag, "abs_ratio": np.abs(ratio)},
        columns=["N", "re_ratio", "im_ratio", "abs_ratio"],
    )


def condition_a_ratio(p: Potential, lam: float, M: complex, N: float, cfg: Optional[IntegratorConfig] = None) -> complex:
    row = condition_a_table(p, lam, M, [N], cfg).iloc[0]
    return complex(row["re_ratio"], row["im_ratio"])
