from typing import List, Optional, Union

from pydantic import BaseModel

Cell = Optional[Union[bool, float, str]]


class TableResponse(BaseModel):
    command: str
    columns: List[str]
    rows: List[List[Cell]]
