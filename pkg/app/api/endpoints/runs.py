import logging

import pandas as pd
from fastapi import APIRouter, HTTPException

from app.core.config import settings
from app.core.errors import ConfigurationError, DomainError, NumericalError
from app.schemas.run_config import RunConfig
from app.schemas.tables import TableResponse
from app.services.run_service import RunService

logger = logging.getLogger(__name__)

router = APIRouter(prefix=f"{settings.API_PREFIX}/runs", tags=["runs"])
run_service = RunService()


def _to_response(command: str, table: pd.DataFrame) -> TableResponse:
    # NaN (pôles, valeurs indéterminées) -> null
    cells = table.astype(object).where(pd.notna(table), None)
    return TableResponse(command=command, columns=list(table.columns), rows=cells.values.tolist())


@router.get("/")
def list_commands():
    """
    Liste les commandes disponibles.
    """
    return {"commands": list(run_service.commands)}


@router.post("/{command}", response_model=TableResponse)
def run_command(command: str, config: RunConfig):
    """
    Exécute une commande sur la configuration fournie et renvoie la table résultat.
    """
    if command not in run_service.commands:
        raise HTTPException(status_code=404, detail=f"Commande inconnue: {command}")
    try:
        table = run_service.run(command, config)
    except (ConfigurationError, DomainError) as e:
        raise HTTPException(status_code=422, detail=str(e))
    except NumericalError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return _to_response(command, table)
