"""
Fonctions de Bessel J_nu, Y_nu d'ordre réel et formules fermées de l'équation de Bessel
-y'' + ((nu^2 - 1/4)/x^2) y = lambda y sur [a, oo).

Série ascendante sommée en précision étendue (mpmath) pour x < BESSEL_SWITCH_X,
développement asymptotique de Hankel au-delà; dérivées par
J'_nu = (nu/x) J_nu - J_{nu+1} (idem pour Y).
"""
import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Tuple

from mpmath.ctx_mp import MPContext
import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.errors import DomainError
from app.services.appell_forms import FormCoefficients, density_from_coeffs
from app.services.herglotz import BoundaryM, check_interval
from app.services.ode_engine import SchrodingerState

logger = logging.getLogger(__name__)

MAX_ORDER = 5.0
MAX_TERMS = 2000


@dataclass(frozen=True)
class BesselEval:
    nu: float
    x: float
    J: float
    Y: float
    Jprime: float
    Yprime: float

    @property
    def wronskian(self) -> float:
        return self.J * self.Yprime - self.Jprime * self.Y


_contexts = threading.local()


def _context() -> MPContext:
    """Contexte mpmath propre au thread, à BESSEL_DPS chiffres; le contexte global mpmath.mp n'est jamais modifié."""
    ctx = getattr(_contexts, "ctx", None)
    if ctx is None:
        ctx = MPContext()
        ctx.dps = settings.BESSEL_DPS
        _contexts.ctx = ctx
    return ctx


def _series_j(ctx: MPContext, nu, x):
    half = x / 2
    step = -half * half
    term = ctx.power(half, nu) * ctx.rgamma(nu + 1)
    total = term
    k = 0
    while k < MAX_TERMS:
        k += 1
        term *= step / (k * (k + nu))
        total += term
        if k > half and abs(term) <= ctx.eps * abs(total):
            break
    return total


def _series_y_integer(ctx: MPContext, n: int, x, J):
    half = x / 2
    h2 = half * half
    finite = ctx.mpf(0)
    for k in range(n):
        finite += ctx.factorial(n - k - 1) / ctx.factorial(k) * h2 ** k
    finite *= ctx.power(half, -n)

    psi_k = -ctx.euler
    psi_nk = -ctx.euler + ctx.harmonic(n)
    term = ctx.power(half, n) / ctx.factorial(n)
    total = (psi_k + psi_nk) * term
    k = 0
    while k < MAX_TERMS:
        k += 1
        term *= -h2 / (k * (n + k))
        psi_k += ctx.mpf(1) / k
        psi_nk += ctx.mpf(1) / (n + k)
        increment = (psi_k + psi_nk) * term
        total += increment
        if k > half and abs(increment) <= ctx.eps * abs(total):
            break
    return (2 * ctx.log(half) * J - finite - total) / ctx.pi


@lru_cache(maxsize=65536)
def _series_pair(nu: float, x: float) -> Tuple[float, float]:
    ctx = _context()
    nu_m = ctx.mpf(nu)
    x_m = ctx.mpf(x)
    J = _series_j(ctx, nu_m, x_m)
    if float(nu).is_integer():
        Y = _series_y_integer(ctx, int(nu), x_m, J)
    else:
        Y = (J * ctx.cospi(nu_m) - _series_j(ctx, -nu_m, x_m)) / ctx.sinpi(nu_m)
    return float(J), float(Y)


@lru_cache(maxsize=65536)
def _asymptotic_pair(nu: float, x: float) -> Tuple[float, float]:
    mu = 4.0 * nu * nu
    P, Q = 1.0, 0.0
    term = 1.0
    for k in range(1, MAX_TERMS):
        nxt = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        # les premiers termes croissent tant que (2k - 1)^2 < 4 nu^2
        if nxt == 0.0 or (k > nu + 1 and abs(nxt) > abs(term)):
            break
        term = nxt
        if k % 2 == 0:
            P += (-1) ** (k // 2) * term
        else:
            Q += (-1) ** ((k - 1) // 2) * term
        if abs(term) < 1e-17 * (abs(P) + abs(Q)):
            break
    phase = (0.5 * nu + 0.25) * math.pi
    cos_chi = math.cos(x) * math.cos(phase) + math.sin(x) * math.sin(phase)
    sin_chi = math.sin(x) * math.cos(phase) - math.cos(x) * math.sin(phase)
    scale = math.sqrt(2.0 / (math.pi * x))
    return scale * (P * cos_chi - Q * sin_chi), scale * (P * sin_chi + Q * cos_chi)


def _check(nu: float, x: float) -> None:
    if not x > 0:
        raise DomainError(f"bessel_eval exige x > 0 (x={x})")
    if not 0 <= nu <= MAX_ORDER:
        raise DomainError(f"Ordre nu={nu} hors de [0, {MAX_ORDER:g}]")


def _pair(nu: float, x: float, branch: Optional[str]) -> Tuple[float, float]:
    branch = branch or ("series" if x < settings.BESSEL_SWITCH_X else "asymptotic")
    if branch == "series":
        return _series_pair(nu, x)
    if branch == "asymptotic":
        return _asymptotic_pair(nu, x)
    raise DomainError(f"Branche inconnue: {branch}")


def bessel_eval(nu: float, x: float, branch: Optional[str] = None) -> BesselEval:
    """
    J_nu(x), Y_nu(x) et leurs dérivées.

    Args:
        nu: Ordre dans [0, 5]
        x: Argument strictement positif
        branch: Force "series" ou "asymptotic" (sinon choix selon BESSEL_SWITCH_X)

    Returns:
        Un BesselEval
    """
    nu, x = float(nu), float(x)
    _check(nu, x)
    J, Y = _pair(nu, x, branch)
    J1, Y1 = _pair(nu + 1.0, x, branch)
    return BesselEval(nu, x, J, Y, nu / x * J - J1, nu / x * Y - Y1)


def _d_coefficients(nu: float, a: float, lam: float) -> Tuple[float, float, float, float]:
    k = math.sqrt(lam)
    e = bessel_eval(nu, a * k)
    ra = math.sqrt(a)
    d1 = -0.5 * math.pi * ra * e.Y
    d2 = 0.5 * math.pi * ra * e.J
    d3 = 0.25 * math.pi / ra * e.Y + 0.5 * math.pi * ra * k * e.Yprime
    d4 = -0.25 * math.pi / ra * e.J - 0.5 * math.pi * ra * k * e.Jprime
    return d1, d2, d3, d4


def _check_problem(a: float, lam: float) -> None:
    if not a > 0:
        raise DomainError(f"L'équation de Bessel exige a > 0 (a={a})")
    if not lam > 0:
        raise DomainError(f"Formules de Bessel valables pour lambda > 0 (lambda={lam})")


def bessel_fundamental(nu: float, a: float, lam: float, x: float) -> SchrodingerState:
    """
    Système fondamental (u, v) de l'équation de Bessel, normalisé en x=a.

    (D1, D2) donnent la solution nulle en a (v), (D3, D4) celle de pente nulle (u).
    """
    _check_problem(a, lam)
    if x < a:
        raise DomainError(f"x={x} < a={a}")
    d1, d2, d3, d4 = _d_coefficients(nu, a, lam)
    k = math.sqrt(lam)
    e = bessel_eval(nu, x * k)
    rx = math.sqrt(x)
    # sqrt(x) Z(kx) et sa dérivée pour Z = J, Y
    fj, fy = rx * e.J, rx * e.Y
    dfj = e.J / (2 * rx) + rx * k * e.Jprime
    dfy = e.Y / (2 * rx) + rx * k * e.Yprime
    return SchrodingerState(
        x=float(x),
        u=d3 * fj + d4 * fy,
        uprime=d3 * dfj + d4 * dfy,
        v=d1 * fj + d2 * fy,
        vprime=d1 * dfj + d2 * dfy,
    )


def _modulus_terms(nu: float, a: float, lam: float) -> Tuple[float, float, float]:
    e = bessel_eval(nu, a * math.sqrt(lam))
    return e.J ** 2 + e.Y ** 2, e.J * e.Jprime + e.Y * e.Yprime, e.Jprime ** 2 + e.Yprime ** 2


def bessel_connection(nu: float, a: float, lam: float) -> FormCoefficients:
    """Coefficients de connexion (a~, b~, c~) sous forme fermée."""
    _check_problem(a, lam)
    S, T, U = _modulus_terms(nu, a, lam)
    k = math.sqrt(lam)
    a_t = 0.5 * math.pi * a * S
    b_t = 0.5 * math.pi * S + math.pi * a * k * T
    c_t = math.pi / (8 * a) * S + 0.5 * math.pi * a * lam * U + 0.5 * math.pi * k * T
    return FormCoefficients(a_t, b_t, c_t)


def bessel_density(nu: float, a: float, lam: float) -> float:
    """f(lambda) = 2 / (pi^2 a (J_nu^2 + Y_nu^2)(a sqrt(lambda)))."""
    _check_problem(a, lam)
    S, _, _ = _modulus_terms(nu, a, lam)
    return 2.0 / (math.pi ** 2 * a * S)


def bessel_boundary_m(nu: float, a: float, interval: Sequence[float], samples: Optional[int] = 257) -> BoundaryM:
    """
    m+(lambda) = b~/(2 a~) + i/a~ de l'équation de Bessel sur un intervalle de (0, oo).

    Avec samples=None chaque lambda est évalué exactement; sinon le modèle est
    échantillonné sur une grille et interpolé.
    """
    lo, hi = check_interval(interval)
    if lo <= 0:
        raise DomainError(f"Le modèle de Bessel exige lambda > 0 (intervalle [{lo:g}, {hi:g}])")

    def fn(lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        pairs = [density_from_coeffs(bessel_connection(nu, a, float(l))) for l in lam]
        return np.array([d.A for d in pairs]), np.array([d.B for d in pairs])

    exact = BoundaryM(fn, (lo, hi), "closed-form")
    return exact if samples is None else exact.resampled((lo, hi), samples)


def bessel_table(nus: Iterable[float], xs: Iterable[float]) -> pd.DataFrame:
    rows = []
    for nu in nus:
        for x in xs:
            e = bessel_eval(nu, x)
            target = 2.0 / (math.pi * x)
            rows.append(
                {
                    "nu": nu,
                    "x": x,
                    "J": e.J,
                    "Y": e.Y,
                    "Jprime": e.Jprime,
                    "Yprime": e.Yprime,
                    "wronskian_rel_error": abs(e.wronskian - target) / target,
                }
            )
    return pd.DataFrame(rows, columns=["nu", "x", "J", "Y", "Jprime", "Yprime", "wronskian_rel_error"])
