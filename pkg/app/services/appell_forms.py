"""
Espace des formes quadratiques R = a u^2 + b uv + c v^2: produit scalaire indéfini,
coefficients de connexion à l'infini par raccordement du système d'Appell, densité spectrale.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.errors import DomainError, MatchingError, PotentialError
from app.services.herglotz import BoundaryM, check_interval
from app.services.ode_engine import Integrand, IntegratorConfig, appell_schedule, propagate_schedule
from app.services.potentials import Potential

logger = logging.getLogger(__name__)

Number = Union[float, np.ndarray]

# Différences centrées d'ordre 6 aux décalages -4..4 (R''') et -3..3 (R')
THIRD_DERIVATIVE_STENCIL = np.array([-7 / 240, 3 / 10, -169 / 120, 61 / 30, 0.0, -61 / 30, 169 / 120, -3 / 10, 7 / 240])
FIRST_DERIVATIVE_STENCIL = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class FormCoefficients:
    a: Number
    b: Number
    c: Number
    error_estimate: Number = 0.0

    @property
    def discriminant(self) -> Number:
        return 4.0 * self.a * self.c - self.b ** 2

    @property
    def low_confidence(self):
        return np.asarray(self.error_estimate) > settings.LOW_CONFIDENCE

    def is_zero(self) -> bool:
        return bool(np.all(np.asarray(self.a) == 0) and np.all(np.asarray(self.b) == 0) and np.all(np.asarray(self.c) == 0))


@dataclass(frozen=True)
class DensityResult:
    lam: Number
    a_tilde: Number
    b_tilde: Number
    c_tilde: Number
    f: Number
    A: Number
    B: Number
    error_estimate: Number = 0.0


def inner_product(U, V):
    """<U, V> = 2(P_U R_V + P_V R_U) - Q_U Q_V pour des triplets (P, Q, R) au même x."""
    PU, QU, RU = U
    PV, QV, RV = V
    return 2.0 * (PU * RV + PV * RU) - QU * QV


def inner_product_coeffs(F1: FormCoefficients, F2: FormCoefficients):
    return 2.0 * (F1.a * F2.c + F1.c * F2.a) - F1.b * F2.b


def r0_coefficients(A, B) -> FormCoefficients:
    """Coefficients de R0 = |u + m+ v|^2 / Im m+, de discriminant 4."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.any(~(B > 0)):
        raise DomainError("r0_coefficients exige B > 0")
    coeffs = (1.0 / B, 2.0 * A / B, (A ** 2 + B ** 2) / B)
    return FormCoefficients(*(v[()] for v in coeffs))


def density_from_coeffs(coeffs: FormCoefficients, lam: Number = float("nan")) -> DensityResult:
    """
    f = 1/(pi a~), B = 1/a~, A = b~/(2 a~).

    Raises:
        MatchingError: si a~ <= 0 (échec du raccordement, m+ ne serait pas de Herglotz)
    """
    a = np.asarray(coeffs.a, dtype=float)
    if np.any(~(a > 0)):
        bad = np.atleast_1d(np.asarray(lam, dtype=float) + 0.0 * a)[np.atleast_1d(~(a > 0))]
        raise MatchingError("Coefficient a~ non positif", lam=float(bad[0]) if bad.size else None)
    return DensityResult(
        lam=lam,
        a_tilde=coeffs.a,
        b_tilde=coeffs.b,
        c_tilde=coeffs.c,
        f=(1.0 / (np.pi * a))[()],
        A=(np.asarray(coeffs.b) / (2.0 * a))[()],
        B=(1.0 / a)[()],
        error_estimate=coeffs.error_estimate,
    )


def default_match_points(p: Potential, lam_min: float) -> np.ndarray:
    """Points {X, 2X, 4X} (distances à a) au-delà desquels |q| <= MATCH_DECAY_RATIO * lambda."""
    decay = p.decay_point(settings.MATCH_DECAY_RATIO * lam_min)
    if not np.isfinite(decay):
        raise DomainError(f"{p.describe()} ne décroît pas sous {settings.MATCH_DECAY_RATIO:g}*lambda")
    distance = max(decay - p.a, settings.MATCH_BASE)
    return p.a + distance * np.array([1.0, 2.0, 4.0])


def _wkb_target(p: Potential, X: float, lam: np.ndarray) -> np.ndarray:
    """Solution d'Appell locale ((l-q)^1/2 + R''/2, -R', (l-q)^-1/2), égale à (sqrt(l), 0, 1/sqrt(l)) si q = 0."""
    k = lam - float(p.q(X))
    try:
        q1 = float(p.derivative(X, 1))
        q2 = float(p.derivative(X, 2))
    except PotentialError:
        q1 = q2 = 0.0
    R = k ** -0.5
    R1 = 0.5 * q1 * k ** -1.5
    R2 = 0.5 * q2 * k ** -1.5 + 0.75 * q1 ** 2 * k ** -2.5
    return np.stack([k ** 0.5 + 0.5 * R2, -R1, R])


def connection_coefficients(
    p: Potential,
    lam,
    match_points: Optional[Sequence[float]] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> FormCoefficients:
    """
    Coefficients (a~, b~, c~) de la solution d'Appell qui se comporte comme (sqrt(l), 0, 1/sqrt(l)) à l'infini.

    Args:
        p: Potentiel décroissant vers 0
        lam: lambda > 0, scalaire ou tableau (un seul système vectorisé)
        match_points: Points de raccordement; par défaut {X, 2X, 4X}
        cfg: Configuration de l'intégrateur

    Returns:
        Les coefficients extrapolés en 1/X -> 0, avec une estimation d'erreur relative

    Raises:
        DomainError: lambda <= 0 ou points de raccordement dans la zone où q n'est pas petit
        MatchingError: repère singulier
    """
    scalar = np.ndim(lam) == 0
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(~(lam_arr > 0)):
        raise DomainError(f"connection_coefficients exige lambda > 0 (reçu {lam_arr[~(lam_arr > 0)][0]})")
    if match_points is None:
        X = default_match_points(p, float(lam_arr.min()))
    else:
        X = np.sort(np.asarray(match_points, dtype=float))
    too_close = np.abs(p.q(X)) > settings.MATCH_DECAY_RATIO * lam_arr.min()
    if np.any(too_close):
        raise DomainError(f"Point de raccordement X={X[too_close][0]:g} dans la zone de décroissance de {p.describe()}")

    n = lam_arr.size
    estimates = np.empty((X.size, 3, n))
    for i, frame in enumerate(appell_schedule(p, lam_arr, X, cfg)):
        mats = np.moveaxis(frame.matrix, -1, 0)
        target = _wkb_target(p, frame.x, lam_arr).T
        try:
            estimates[i] = np.linalg.solve(mats, target[..., None])[..., 0].T
        except np.linalg.LinAlgError as e:
            raise MatchingError(f"Repère d'Appell singulier en X={frame.x:g}", lam=float(lam_arr[0])) from e

    if X.size == 1:
        c0 = estimates[0]
        error = np.zeros(n)
    else:
        inv = 1.0 / X
        c0 = np.polyfit(inv, estimates.reshape(X.size, -1), 1)[1].reshape(3, n)
        if X.size > 2:
            tail = np.polyfit(inv[1:], estimates[1:].reshape(X.size - 1, -1), 1)[1].reshape(3, n)
        else:
            tail = estimates[-1]
        error = np.max(np.abs(c0 - tail), axis=0) / np.abs(c0[0])

    coeffs = FormCoefficients(*(v[0] if scalar else v for v in c0), error_estimate=error[0] if scalar else error)
    drift = np.abs(np.asarray(coeffs.discriminant) - 4.0)
    if np.any(drift > NORMALIZATION_TOL):
        logger.warning(f"Normalisation 4ac - b^2 = 4 violée de {np.max(drift):.3e} ({p.describe()})")
    flagged = np.atleast_1d(coeffs.low_confidence)
    if np.any(flagged):
        logger.warning(f"{int(flagged.sum())} valeur(s) de lambda à faible confiance (erreur > {settings.LOW_CONFIDENCE:g})")
    return coeffs


def form_integrand(coeffs: FormCoefficients) -> Integrand:
    """theta0' = 1/R avec R = a u^2 + b uv + c v^2 (R = R0 pour r0_coefficients(A, B))."""

    def integrand(x, w):
        u, v = w[0], w[2]
        return 1.0 / (coeffs.a * u ** 2 + coeffs.b * u * v + coeffs.c * v ** 2)

    return integrand


def third_order_residual(
    p: Potential,
    lam: float,
    coeffs: FormCoefficients,
    x_samples: Sequence[float],
    cfg: Optional[IntegratorConfig] = None,
) -> float:
    """
    Résidu normalisé max |R''' + 4(l - q)R' - 2q'R| / max(|R'''|, 4|l - q||R'|, (4|l - q|)^(3/2)|R|)
    aux points x_samples.

    Les dérivées de R sont obtenues par différences finies centrées d'ordre 6 sur le système
    fondamental intégré (pas h = 0.05/sqrt(lambda)).

    Raises:
        PotentialError: q' indisponible (table à interpolation linéaire)
    """
    if coeffs.is_zero():
        return 0.0
    if not lam > 0:
        raise DomainError(f"third_order_residual exige lambda > 0 (reçu {lam})")
    xs = np.atleast_1d(np.asarray(x_samples, dtype=float))
    h = 0.05 / np.sqrt(lam)
    if np.any(xs - 4 * h < p.a):
        raise DomainError(f"Points trop proches de a={p.a:g} pour le gabarit de différences finies")
    q1 = p.derivative(xs, 1)
    cfg = cfg or IntegratorConfig.from_settings(rel_tol=1e-12, abs_tol=1e-14)

    offsets = np.arange(-4, 5)
    grid = xs[:, None] + h * offsets[None, :]
    sweep = propagate_schedule(p, float(lam), grid.ravel(), cfg)
    u = sweep.states[:, 0, 0].reshape(grid.shape)
    v = sweep.states[:, 2, 0].reshape(grid.shape)
    R = coeffs.a * u ** 2 + coeffs.b * u * v + coeffs.c * v ** 2

    R3 = R @ THIRD_DERIVATIVE_STENCIL / h ** 3
    R1 = R[:, 1:-1] @ FIRST_DERIVATIVE_STENCIL / h
    k = lam - p.q(xs)
    residual = R3 + 4.0 * k * R1 - 2.0 * q1 * R[:, 4]
    # (4|l - q|)^(3/2) |R| borne l'échelle par en dessous quand R est (presque) constante
    scale = np.maximum.reduce([np.abs(R3), 4.0 * np.abs(k) * np.abs(R1), (4.0 * np.abs(k)) ** 1.5 * np.abs(R[:, 4])])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(scale > 0, np.abs(residual) / scale, 0.0)
    return float(np.max(ratio))


def appell_boundary_m(
    p: Potential,
    interval: Sequence[float],
    samples: int = 65,
    match_points: Optional[Sequence[float]] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> BoundaryM:
    """m+(lambda) = b~/(2a~) + i/a~ échantillonné par raccordement d'Appell puis interpolé."""
    lo, hi = check_interval(interval)
    if lo <= 0:
        raise DomainError(f"Le raccordement exige lambda > 0 (intervalle [{lo:g}, {hi:g}])")
    grid = np.linspace(lo, hi, samples)
    density = density_from_coeffs(connection_coefficients(p, grid, match_points, cfg), grid)
    logger.info(f"m+ dérivé du système d'Appell sur [{lo:g}, {hi:g}] ({samples} points, {p.describe()})")
    return BoundaryM.from_samples(grid, density.A, density.B, provenance="appell-derived")
