import json
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.core.config import settings
from app.core.errors import ConfigurationError
from app.services.herglotz import IntervalUnion, RationalHerglotz
from app.services.potentials import InverseSquare, Potential, Tabulated, Zero
from app.services.value_distribution import BandSpec, MovingTarget, PiecewiseConstant


class PotentialKind(str, Enum):
    ZERO = "zero"
    INVERSE_SQUARE = "inverse_square"
    TABULATED = "tabulated"


class ModelKind(str, Enum):
    FREE = "free"
    BESSEL = "bessel"
    APPELL = "appell"


class PotentialSpec(BaseModel):
    kind: PotentialKind = PotentialKind.ZERO
    a: float = 0.0
    nu: float = 0.5
    table_path: Optional[str] = None
    breakpoints: Optional[List[float]] = None
    values: Optional[List[float]] = None
    interpolation: Literal["pchip", "linear"] = "pchip"

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == PotentialKind.INVERSE_SQUARE and self.a <= 0:
            raise ValueError("inverse_square exige a > 0")
        if self.kind == PotentialKind.TABULATED and self.table_path is None and self.breakpoints is None:
            raise ValueError("tabulated exige table_path ou breakpoints/values")
        return self

    def build(self) -> Potential:
        if self.kind == PotentialKind.ZERO:
            return Zero(self.a)
        if self.kind == PotentialKind.INVERSE_SQUARE:
            return InverseSquare(self.nu, self.a)
        if self.table_path is not None:
            return Tabulated.from_csv(self.table_path, self.a, self.interpolation)
        return Tabulated(self.breakpoints, self.values or [], self.a, self.interpolation)


class StepFunction(BaseModel):
    """Fonction en escalier continue à gauche: values[i] sur (breaks[i-1], breaks[i]]."""

    breaks: List[float]
    values: List[float]

    def build(self) -> PiecewiseConstant:
        return PiecewiseConstant(tuple(self.breaks), tuple(self.values))


PerLambdaSpec = Union[float, StepFunction]


def _per_lambda(spec: PerLambdaSpec):
    return spec.build() if isinstance(spec, StepFunction) else float(spec)


class BandConfig(BaseModel):
    C: PerLambdaSpec
    D: PerLambdaSpec

    def build(self) -> BandSpec:
        return BandSpec(_per_lambda(self.C), _per_lambda(self.D))


class MovingTargetConfig(BaseModel):
    alpha: PerLambdaSpec
    beta: PerLambdaSpec

    def build(self) -> MovingTarget:
        return MovingTarget(_per_lambda(self.alpha), _per_lambda(self.beta))


class HerglotzSpec(BaseModel):
    kind: Literal["rational", "m_function"] = "rational"
    poles: List[Tuple[float, float]] = []
    slope: float = 0.0
    offset: float = 0.0
    imag_offset: float = 0.0
    b: float = 500.0

    def build_rational(self) -> RationalHerglotz:
        return RationalHerglotz(tuple(self.poles), self.slope, self.offset, self.imag_offset)


def _increasing(values: List[float], name: str) -> List[float]:
    if any(v <= 0 for v in values):
        raise ValueError(f"{name}: toutes les valeurs doivent être positives")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name}: valeurs strictement croissantes attendues")
    return values


class RunConfig(BaseModel):
    """Document JSON décrivant un run; les invariants sont vérifiés à la validation."""

    potential: PotentialSpec = PotentialSpec()
    model: Optional[ModelKind] = None
    lambda_interval: Tuple[float, float] = (1.0, 4.0)
    grid_n: int = Field(10_000, ge=2)
    lambda_list: Optional[List[float]] = None
    density_n: int = Field(9, ge=1)
    x_list: List[float] = list(settings.X_SCHEDULE)
    eps_list: List[float] = list(settings.EPS_SCHEDULE)
    S: Optional[List[Tuple[float, float]]] = None
    moving_target: Optional[MovingTargetConfig] = None
    band: Optional[BandConfig] = None
    herglotz: Optional[HerglotzSpec] = None
    condition_m: Optional[Tuple[float, float]] = None
    n_list: List[float] = [10.0, 100.0, 1000.0]
    b_list: List[float] = [100.0, 200.0, 400.0]
    nu_list: List[float] = [0.0, 0.5, 1.0]
    bessel_x: List[float] = [0.1, 1.0, 10.0, 100.0, 1000.0]
    match_points: Optional[List[float]] = None
    model_samples: int = Field(257, ge=4)
    rel_tol: Optional[float] = Field(None, gt=0)
    abs_tol: Optional[float] = Field(None, gt=0)
    output: Optional[str] = None
    threads: int = Field(0, ge=0)

    @field_validator("lambda_interval")
    @classmethod
    def check_interval(cls, v):
        if not v[0] < v[1]:
            raise ValueError("lambda_interval: lambda_lo < lambda_hi attendu")
        return v

    @field_validator("x_list", "n_list", "b_list", "bessel_x")
    @classmethod
    def check_schedule(cls, v, info):
        return _increasing(v, info.field_name)

    @field_validator("eps_list")
    @classmethod
    def check_eps(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("eps_list: valeurs positives attendues")
        if len(set(v)) != len(v):
            raise ValueError("eps_list: valeurs distinctes attendues")
        return v

    @field_validator("condition_m")
    @classmethod
    def check_m(cls, v):
        if v is not None and not v[1] > 0:
            raise ValueError("condition_m: Im M > 0 attendu")
        return v

    def target_set(self) -> IntervalUnion:
        return IntervalUnion.of(*self.S) if self.S else IntervalUnion.empty()

    def lambdas(self) -> List[float]:
        if self.lambda_list is not None:
            return list(self.lambda_list)
        lo, hi = self.lambda_interval
        if self.density_n == 1:
            return [lo]
        step = (hi - lo) / (self.density_n - 1)
        return [lo + i * step for i in range(self.density_n)]

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Fichier de configuration introuvable: {path}")
        try:
            return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"JSON invalide dans {path}: {e}") from e
        except ValidationError as e:
            raise ConfigurationError(f"Configuration invalide ({path}): {e}") from e
