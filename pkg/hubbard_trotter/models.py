"""Pydantic models for command-line run configuration."""

from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from hubbard_trotter.config import DEFAULT_T_GRID, OUTPUT_DIR, SHIFT_WINDOW
from hubbard_trotter.services.bounds import MODE_ALIASES
from hubbard_trotter.services.lattice import GEOMETRIES

DEFAULT_EXTENTS = {
    "1d": (4,),
    "square": (4, 4),
    "triangular": (3, 3),
}


class TGridSpec(BaseModel):
    """Either "start:stop:count" (log-spaced) or an explicit comma list."""

    points: list[float]

    @classmethod
    def parse(cls, text: str) -> "TGridSpec":
        text = text.strip()
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError(f"t-grid {text!r} must look like start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if start <= 0 or stop < start or count < 1:
                raise ValueError(f"t-grid {text!r} needs 0 < start <= stop and count >= 1")
            return cls(points=list(np.geomspace(start, stop, count)))
        return cls(points=[float(x) for x in text.split(",") if x.strip()])

    @field_validator("points")
    @classmethod
    def non_empty(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("t-grid is empty")
        if any(t < 0 for t in v):
            raise ValueError("times must be non-negative")
        return v


class RunConfig(BaseModel):
    command: Literal["bound", "empirical", "commutator"]
    geometry: str = "1d"
    formula: str = "strang"  # strang | suzuki4 | suzuki6 | lie-trotter | custom:<path>
    s: int | Literal["auto", "scan"] = "auto"
    mode: Literal["general", "tight", "auto"] = "auto"
    v: float = -1.0
    u: float = 1.0
    t_grid: str | None = None
    extents: tuple[int, ...] | None = None
    window: int = SHIFT_WINDOW
    output: Path = OUTPUT_DIR
    formats: list[Literal["csv", "text", "xlsx"]] = ["csv", "text"]
    expression: str | None = None

    @field_validator("geometry")
    @classmethod
    def known_geometry(cls, v: str) -> str:
        key = v.strip().lower()
        if key not in GEOMETRIES:
            raise ValueError(f"unknown geometry {v!r}; choose from {', '.join(GEOMETRIES)}")
        return key

    @field_validator("mode", mode="before")
    @classmethod
    def mode_alias(cls, v):
        if isinstance(v, str):
            key = v.strip().lower()
            return MODE_ALIASES.get(key, key)
        return v

    @field_validator("s")
    @classmethod
    def positive_s(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("s must be a positive integer, 'auto' or 'scan'")
        return v

    @field_validator("window")
    @classmethod
    def non_negative_window(cls, v: int) -> int:
        if v < 0:
            raise ValueError("shift window must be non-negative")
        return v

    @model_validator(mode="after")
    def check_command(self) -> "RunConfig":
        if self.command == "commutator" and not self.expression:
            raise ValueError("the commutator command needs an expression like [H1,[H2,H1]]")
        if self.t_grid is not None:
            TGridSpec.parse(self.t_grid)
        return self

    def resolved_extents(self) -> tuple[int, ...]:
        return tuple(self.extents) if self.extents else DEFAULT_EXTENTS[self.geometry]

    def times(self) -> list[float]:
        if self.t_grid is None:
            start, stop, count = DEFAULT_T_GRID
            return list(np.geomspace(start, stop, count))
        return TGridSpec.parse(self.t_grid).points

    def fixed_s(self) -> int | None:
        return self.s if isinstance(self.s, int) else None

    def stem(self, formula_name: str) -> str:
        """Base name for output files of this run."""
        return f"{self.command}_{self.geometry}_{formula_name}"
