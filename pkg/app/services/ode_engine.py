"""
Intégration de -y'' + q y = lambda y et du système d'Appell depuis l'extrémité régulière x=a.

Toutes les opérations acceptent un lambda scalaire ou un tableau de valeurs; un tableau
est intégré comme un seul système vectorisé (un pas commun pour toute la grille).
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from app.core.config import settings
from app.core.errors import ConfigurationError, DomainError, IntegrationError
from app.services.potentials import Potential

logger = logging.getLogger(__name__)

# Matrice du produit scalaire indéfini <U, V> = U^T G V en coordonnées (P, Q, R)
GRAM = np.array([[0.0, 0.0, 2.0], [0.0, -1.0, 0.0], [2.0, 0.0, 0.0]])

# Intégrande de quadrature: (x, w) -> tableau réel, w = lignes (u, u', v, v')
Integrand = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    dense_output: bool = False
    segment_length: float = 100.0
    method: str = "DOP853"

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise ConfigurationError(f"Tolérances non positives: rel_tol={self.rel_tol}, abs_tol={self.abs_tol}")
        if not self.max_step > 0:
            raise ConfigurationError(f"max_step doit être positif: {self.max_step}")
        if not self.segment_length > 0:
            raise ConfigurationError(f"segment_length doit être positif: {self.segment_length}")

    @classmethod
    def from_settings(cls, sweep: bool = False, **overrides) -> "IntegratorConfig":
        base = cls(
            rel_tol=settings.SWEEP_REL_TOL if sweep else settings.REL_TOL,
            abs_tol=settings.SWEEP_ABS_TOL if sweep else settings.ABS_TOL,
            max_step=settings.MAX_STEP,
            segment_length=settings.SEGMENT_LENGTH,
        )
        return replace(base, **overrides) if overrides else base


@dataclass
class SchrodingerState:
    x: float
    u: np.ndarray
    uprime: np.ndarray
    v: np.ndarray
    vprime: np.ndarray

    @property
    def wronskian(self):
        return self.u * self.vprime - self.uprime * self.v


@dataclass
class AppellFrame:
    """Repère [U1 U2 U3]: matrix[i, j] = composante i (P, Q, R) de la colonne U_{j+1}."""

    x: float
    matrix: np.ndarray

    @property
    def U1(self) -> np.ndarray:
        return self.matrix[:, 0]

    @property
    def U2(self) -> np.ndarray:
        return self.matrix[:, 1]

    @property
    def U3(self) -> np.ndarray:
        return self.matrix[:, 2]

    def gram(self) -> np.ndarray:
        return np.einsum("ij...,ik,kl...->jl...", self.matrix, GRAM, self.matrix)


@dataclass
class Sweep:
    """Résultat d'une propagation sur un calendrier de points x."""

    x: np.ndarray
    states: np.ndarray  # (len(x), 4, n): u, u', v, v'
    quadratures: np.ndarray  # (len(x), m, n)
    segments: List[Tuple[float, float, Callable]]

    def state(self, i: int) -> SchrodingerState:
        u, up, v, vp = self.states[i]
        return SchrodingerState(float(self.x[i]), u, up, v, vp)

    def dense(self, x: np.ndarray) -> np.ndarray:
        """Évalue (u, u', v, v') via la sortie dense; exige dense_output=True."""
        if not self.segments:
            raise DomainError("Sortie dense non disponible: relancer avec dense_output=True")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = None
        for lo, hi, sol in self.segments:
            mask = (x >= lo) & (x <= hi)
            if not np.any(mask):
                continue
            values = sol(x[mask])
            if out is None:
                out = np.empty((values.shape[0], x.size), dtype=values.dtype)
            out[:, mask] = values
        if out is None:
            raise DomainError("Points hors de l'intervalle intégré")
        return out


def _as_lambda(lam) -> Tuple[np.ndarray, bool, bool]:
    arr = np.atleast_1d(np.asarray(lam))
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"lambda non fini: {lam}")
    is_complex = np.iscomplexobj(arr) and bool(np.any(arr.imag != 0))
    arr = arr.astype(complex) if is_complex else arr.real.astype(float)
    return arr, is_complex, np.ndim(lam) == 0


def _integrate(rhs, y0: np.ndarray, a: float, x_targets: np.ndarray, cfg: IntegratorConfig):
    """
    Propagation par segments d'au plus cfg.segment_length, réinitialisée à la fin de chaque segment.

    Returns:
        (états aux points x_targets dans l'ordre donné, segments denses)
    """
    order = np.argsort(x_targets, kind="stable")
    ordered = x_targets[order]
    out = np.empty((y0.size, x_targets.size))
    segments = []
    y = y0.copy()
    x = a
    i = 0
    while i < ordered.size and ordered[i] <= a:
        out[:, order[i]] = y
        i += 1
    end = ordered[-1] if ordered.size else a
    while x < end:
        x_next = min(x + cfg.segment_length, end)
        j = i
        while j < ordered.size and ordered[j] <= x_next:
            j += 1
        t_eval = np.unique(np.append(ordered[i:j], x_next))
        sol = solve_ivp(
            rhs,
            (x, x_next),
            y,
            method=cfg.method,
            t_eval=t_eval,
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
            max_step=cfg.max_step,
            dense_output=cfg.dense_output,
        )
        if not sol.success:
            raise IntegrationError(f"Échec de l'intégration sur [{x:g}, {x_next:g}]: {sol.message}")
        cols = np.searchsorted(sol.t, ordered[i:j])
        out[:, order[i:j]] = sol.y[:, cols]
        if cfg.dense_output:
            segments.append((x, x_next, sol.sol))
        y = sol.y[:, -1]
        x = x_next
        i = j
    return out, segments


def propagate_schedule(
    p: Potential,
    lam,
    x_targets: Sequence[float],
    cfg: Optional[IntegratorConfig] = None,
    integrands: Sequence[Integrand] = (),
) -> Sweep:
    """
    Propage le système fondamental (u(a)=1, u'(a)=0, v(a)=0, v'(a)=1) et des quadratures
    additionnelles jusqu'à chaque point de x_targets.

    Args:
        p: Le potentiel
        lam: lambda scalaire ou tableau (réel ou complexe)
        x_targets: Points x >= a où les états sont demandés
        cfg: Configuration de l'intégrateur
        integrands: Fonctions (x, w) -> valeurs réelles intégrées depuis a

    Returns:
        Un Sweep avec les états et les quadratures à chaque point
    """
    cfg = cfg or IntegratorConfig.from_settings()
    lam_arr, is_complex, _ = _as_lambda(lam)
    xs = np.atleast_1d(np.asarray(x_targets, dtype=float))
    if np.any(xs < p.a):
        raise DomainError(f"x_target < a={p.a:g}: {xs[xs < p.a]}")
    n = lam_arr.size
    m = len(integrands)
    core = np.zeros((4, n), dtype=complex if is_complex else float)
    core[0] = 1.0
    core[3] = 1.0
    if is_complex:
        y0 = np.concatenate([core.real.ravel(), core.imag.ravel(), np.zeros(m * n)])
    else:
        y0 = np.concatenate([core.ravel(), np.zeros(m * n)])
    width = (8 if is_complex else 4) * n

    def rhs(x, y):
        if is_complex:
            block = y[:width].reshape(2, 4, n)
            w = block[0] + 1j * block[1]
        else:
            w = y[:width].reshape(4, n)
        k = p.q(x) - lam_arr
        dw = np.stack((w[1], k * w[0], w[3], k * w[2]))
        parts = [dw.real.ravel(), dw.imag.ravel()] if is_complex else [dw.ravel()]
        parts.extend(np.broadcast_to(g(x, w), (n,)) for g in integrands)
        return np.concatenate(parts)

    raw, segments = _integrate(rhs, y0, p.a, xs, cfg)
    raw = raw.T
    if is_complex:
        block = raw[:, :width].reshape(xs.size, 2, 4, n)
        states = block[:, 0] + 1j * block[:, 1]
    else:
        states = raw[:, :width].reshape(xs.size, 4, n)
    quads = raw[:, width:].reshape(xs.size, m, n)

    if is_complex and cfg.dense_output:
        segments = [(lo, hi, _complex_dense(sol, n)) for lo, hi, sol in segments]
    elif cfg.dense_output:
        segments = [(lo, hi, _real_dense(sol, width)) for lo, hi, sol in segments]
    sweep = Sweep(x=xs, states=states, quadratures=quads, segments=segments)
    _monitor_wronskian(p, sweep, cfg, lam_arr)
    return sweep


def _real_dense(sol, width):
    return lambda x: sol(x)[:width]


def _complex_dense(sol, n):
    def evaluate(x):
        raw = sol(x)
        return raw[: 4 * n] + 1j * raw[4 * n : 8 * n]

    return evaluate


def _monitor_wronskian(p: Potential, sweep: Sweep, cfg: IntegratorConfig, lam_arr: np.ndarray) -> None:
    u, up, v, vp = np.moveaxis(sweep.states, 1, 0)
    drift = np.abs(u * vp - up * v - 1.0)
    envelope = 10.0 * cfg.rel_tol * np.maximum(1.0, sweep.x - p.a)[:, None]
    ratio = drift / envelope
    if ratio.size and np.max(ratio) > 1.0:
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        logger.warning(
            f"Dérive du wronskien {drift[i, j]:.3e} au-delà de l'enveloppe {envelope[i, 0]:.3e} "
            f"(x={sweep.x[i]:g}, lambda={lam_arr[j]}, {p.describe()})"
        )


def _squeeze(value, scalar: bool):
    return value[0] if scalar else value


def propagate_fundamental(p: Potential, lam, x_target: float, cfg: Optional[IntegratorConfig] = None) -> SchrodingerState:
    """(u, u', v, v') en x_target pour le système fondamental issu de x=a."""
    _, _, scalar = _as_lambda(lam)
    state = propagate_schedule(p, lam, [x_target], cfg).state(0)
    return SchrodingerState(
        state.x,
        _squeeze(state.u, scalar),
        _squeeze(state.uprime, scalar),
        _squeeze(state.v, scalar),
        _squeeze(state.vprime, scalar),
    )


def appell_schedule(p: Potential, lam, x_targets: Sequence[float], cfg: Optional[IntegratorConfig] = None) -> List[AppellFrame]:
    """
    Intègre le système d'Appell dU/dx = [[0, l-q, 0], [-2, 0, 2(l-q)], [0, -1, 0]] U
    depuis le repère U1=(0,0,1), U2=(0,-1,0), U3=(1,0,0) en x=a.
    """
    cfg = cfg or IntegratorConfig.from_settings()
    lam_arr, is_complex, scalar = _as_lambda(lam)
    if is_complex:
        raise DomainError("Le système d'Appell exige lambda réel")
    xs = np.atleast_1d(np.asarray(x_targets, dtype=float))
    if np.any(xs < p.a):
        raise DomainError(f"x_target < a={p.a:g}")
    n = lam_arr.size
    frame0 = np.zeros((3, 3, n))
    frame0[2, 0] = 1.0
    frame0[1, 1] = -1.0
    frame0[0, 2] = 1.0

    def rhs(x, y):
        P, Q, R = y.reshape(3, 3, n)
        k = lam_arr - p.q(x)
        return np.concatenate([(k * Q).ravel(), (2.0 * k * R - 2.0 * P).ravel(), (-Q).ravel()])

    raw, _ = _integrate(rhs, frame0.ravel(), p.a, xs, cfg)
    frames = []
    for i, x in enumerate(xs):
        matrix = raw[:, i].reshape(3, 3, n)
        frame = AppellFrame(float(x), matrix[:, :, 0] if scalar else matrix)
        _monitor_gram(p, frame, cfg)
        frames.append(frame)
    return frames


def _monitor_gram(p: Potential, frame: AppellFrame, cfg: IntegratorConfig) -> None:
    gram = frame.gram()
    expected = GRAM if gram.ndim == 2 else GRAM[:, :, None]
    drift = float(np.max(np.abs(gram - expected)))
    envelope = 10.0 * cfg.rel_tol * max(1.0, frame.x - p.a)
    if drift > envelope:
        logger.warning(f"Dérive de la matrice de Gram {drift:.3e} en x={frame.x:g} ({p.describe()})")


def propagate_appell(p: Potential, lam, x_target: float, cfg: Optional[IntegratorConfig] = None) -> AppellFrame:
    return appell_schedule(p, lam, [x_target], cfg)[0]


def theta0_integrand(A, B) -> Integrand:
    """theta0' = B / ((u + A v)^2 + B^2 v^2)."""

    def integrand(x, w):
        u, v = w[0], w[2]
        return B / ((u + A * v) ** 2 + (B * v) ** 2)

    return integrand


def accumulate_theta0(p: Potential, lam, A, B, x_target: float, cfg: Optional[IntegratorConfig] = None):
    """
    Phase monotone theta0(x, lambda) = int_a^x B / ((u + A v)^2 + B^2 v^2) dt.

    Args:
        p: Le potentiel
        lam: lambda réel (scalaire ou tableau)
        A: Partie réelle de m+ (scalaire ou tableau)
        B: Partie imaginaire de m+, strictement positive
        x_target: Point final
        cfg: Configuration de l'intégrateur

    Returns:
        theta0 en radians (scalaire si lam est scalaire)
    """
    lam_arr, is_complex, scalar = _as_lambda(lam)
    if is_complex:
        raise DomainError("theta0 exige lambda réel")
    B = np.asarray(B, dtype=float)
    if np.any(B <= 0):
        raise DomainError("theta0 exige B > 0")
    sweep = propagate_schedule(p, lam_arr, [x_target], cfg, [theta0_integrand(np.asarray(A, dtype=float), B)])
    return _squeeze(sweep.quadratures[0, 0], scalar)
