import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Optional, TextIO, Union

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.errors import ConfigurationError, DomainError, NumericalError, ValDistError
from app.schemas.run_config import ModelKind, PotentialKind, RunConfig
from app.services.appell_forms import appell_boundary_m, connection_coefficients, density_from_coeffs
from app.services.bessel_oracle import bessel_boundary_m, bessel_density, bessel_table
from app.services.herglotz import BoundaryM, free_boundary_m, theorem1_gap
from app.services.ode_engine import IntegratorConfig
from app.services.potentials import InverseSquare, Potential, Zero
from app.services.value_distribution import (
    WeylHerglotz,
    condition_a_table,
    m_function_table,
    theorem2_table,
    uad_check,
)

logger = logging.getLogger(__name__)

DENSITY_COLUMNS = ["lambda", "a_tilde", "b_tilde", "c_tilde", "f_numeric", "f_closed_form", "rel_error", "error_estimate"]


class RunService:
    """
    Orchestration des commandes: construit potentiel et modèle m+ depuis un RunConfig
    et renvoie un DataFrame par commande.
    """

    def __init__(self, threads: int = 0):
        self.threads = threads or settings.THREADS or os.cpu_count() or 1
        self.commands: Dict[str, Callable[[RunConfig], pd.DataFrame]] = {
            "density": self.density,
            "distcheck": self.distcheck,
            "herglotz": self.herglotz,
            "theorem2": self.theorem2,
            "condition-a": self.condition_a,
            "bessel": self.bessel,
            "mfunction": self.mfunction,
        }

    def run(self, command: str, config: RunConfig) -> pd.DataFrame:
        if command not in self.commands:
            raise ConfigurationError(f"Commande inconnue: {command}")
        logger.info(f"Run '{command}' ({config.potential.kind.value}, Lambda={config.lambda_interval})")
        try:
            table = self.commands[command](config)
        except ValDistError as e:
            logger.error(f"Échec du run '{command}': {e}", exc_info=True)
            raise
        logger.info(f"Run '{command}' terminé: {len(table)} lignes")
        return table

    def _integrator(self, config: RunConfig, sweep: bool = False) -> IntegratorConfig:
        overrides = {}
        if config.rel_tol is not None:
            overrides["rel_tol"] = config.rel_tol
        if config.abs_tol is not None:
            overrides["abs_tol"] = config.abs_tol
        return IntegratorConfig.from_settings(sweep=sweep, **overrides)

    def _model(self, config: RunConfig, p: Potential) -> BoundaryM:
        kind = config.model or {
            PotentialKind.ZERO: ModelKind.FREE,
            PotentialKind.INVERSE_SQUARE: ModelKind.BESSEL,
            PotentialKind.TABULATED: ModelKind.APPELL,
        }[config.potential.kind]
        if kind == ModelKind.FREE:
            if not isinstance(p, Zero):
                raise ConfigurationError("Le modèle 'free' n'est valable que pour le potentiel nul")
            return free_boundary_m()
        if kind == ModelKind.BESSEL:
            if not isinstance(p, InverseSquare):
                raise ConfigurationError("Le modèle 'bessel' exige un potentiel inverse_square")
            return bessel_boundary_m(p.nu, p.a, config.lambda_interval, config.model_samples)
        return appell_boundary_m(
            p, config.lambda_interval, config.model_samples, config.match_points, self._integrator(config)
        )

    def _closed_form_density(self, p: Potential, lam: float) -> float:
        if isinstance(p, Zero):
            return float(np.sqrt(lam) / np.pi)
        if isinstance(p, InverseSquare):
            return bessel_density(p.nu, p.a, lam)
        return float("nan")

    def density(self, config: RunConfig) -> pd.DataFrame:
        """Densité spectrale f = 1/(pi a~) par raccordement d'Appell, comparée à la forme fermée."""
        p = config.potential.build()
        cfg = self._integrator(config)

        def row(lam: float) -> dict:
            try:
                result = density_from_coeffs(connection_coefficients(p, lam, config.match_points, cfg), lam)
            except NumericalError as e:
                if e.lam is None:
                    e.lam = lam
                raise
            closed = self._closed_form_density(p, lam)
            return {
                "lambda": lam,
                "a_tilde": result.a_tilde,
                "b_tilde": result.b_tilde,
                "c_tilde": result.c_tilde,
                "f_numeric": result.f,
                "f_closed_form": closed,
                "rel_error": abs(result.f - closed) / closed,
                "error_estimate": result.error_estimate,
            }

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            rows = list(pool.map(row, config.lambdas()))
        return pd.DataFrame(rows, columns=DENSITY_COLUMNS)

    def distcheck(self, config: RunConfig) -> pd.DataFrame:
        if config.band is None:
            raise ConfigurationError("distcheck exige une bande 'band' (C, D)")
        p = config.potential.build()
        return uad_check(
            p,
            self._model(config, p),
            config.lambda_interval,
            config.band.build(),
            config.x_list,
            config.grid_n,
            self._integrator(config, sweep=True),
        )

    def herglotz(self, config: RunConfig) -> pd.DataFrame:
        spec = config.herglotz
        if spec is None:
            raise ConfigurationError("herglotz exige une section 'herglotz'")
        if spec.kind == "rational":
            f = spec.build_rational()
        else:
            p = config.potential.build()
            f = WeylHerglotz(p, self._model(config, p), spec.b, self._integrator(config, sweep=True))
        S = config.target_set()
        rows = []
        for eps in config.eps_list:
            lhs, rhs = theorem1_gap(f, S, config.lambda_interval, eps, config.grid_n)
            rows.append({"eps": eps, "lhs": lhs, "rhs": rhs, "bound_holds": lhs <= rhs})
        return pd.DataFrame(rows, columns=["eps", "lhs", "rhs", "bound_holds"])

    def theorem2(self, config: RunConfig) -> pd.DataFrame:
        p = config.potential.build()
        S = config.moving_target.build() if config.moving_target is not None else config.target_set()
        return theorem2_table(
            p,
            self._model(config, p),
            S,
            config.lambda_interval,
            config.x_list,
            config.grid_n,
            self._integrator(config, sweep=True),
        )

    def condition_a(self, config: RunConfig) -> pd.DataFrame:
        """Condition A pour chaque lambda; M = m+(lambda) du modèle sauf si condition_m est donné."""
        p = config.potential.build()
        model = None if config.condition_m is not None else self._model(config, p)
        cfg = self._integrator(config)
        tables = []
        for lam in config.lambdas():
            if model is None:
                M = complex(*config.condition_m)
            else:
                M = complex(model.m_plus(lam))
            if not M.imag > 0:
                raise DomainError(f"Im m+ <= 0 en lambda={lam:g}: hors du spectre a.c.")
            table = condition_a_table(p, lam, M, config.n_list, cfg)
            table.insert(0, "lambda", lam)
            tables.append(table)
        return pd.concat(tables, ignore_index=True)

    def bessel(self, config: RunConfig) -> pd.DataFrame:
        return bessel_table(config.nu_list, config.bessel_x)

    def mfunction(self, config: RunConfig) -> pd.DataFrame:
        p = config.potential.build()
        cfg = self._integrator(config)
        tables = []
        for lam in config.lambdas():
            table = m_function_table(p, lam, config.b_list, config.eps_list, cfg)
            table.insert(0, "lambda", lam)
            tables.append(table)
        return pd.concat(tables, ignore_index=True)


def write_table(table: pd.DataFrame, out: Optional[Union[str, Path, TextIO]] = None) -> None:
    """CSV avec en-tête, CSV_DIGITS chiffres significatifs, indépendant de la locale."""
    target = sys.stdout if out is None else out
    table.to_csv(target, index=False, float_format=f"%.{settings.CSV_DIGITS}g", lineterminator="\n")
