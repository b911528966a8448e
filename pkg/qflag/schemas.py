"""Pydantic schemas for reports and for the JSON files read and written by the CLI."""

import time
from contextlib import contextmanager
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, computed_field, field_validator, model_validator

SCHEMA_VERSION = "1.0"


# --- Reports ---
class RelationReport(BaseModel):
    """
    Outcome of checking one relation family.
    """

    relation: str = Field(description="Identifier of the relation family, e.g. 'qq.node2'.")
    anchor: str = Field(description="Human-readable statement of the relation being checked.")
    max_residual: float = Field(description="Largest relative residual over all instances.")
    samples: int = Field(description="Number of (instance, sample point) pairs evaluated.")
    passed: bool
    tolerance: float
    elapsed: float = Field(default=0.0, description="Wall time in seconds.")
    details: Dict[str, Any] = Field(
        default_factory=dict,
        description="Fitted constants, recorded signs or counts attached to the check.",
    )

    @classmethod
    def from_residuals(
        cls,
        relation: str,
        anchor: str,
        residuals: Iterable[float],
        tolerance: float,
        elapsed: float = 0.0,
        details: Optional[Dict[str, Any]] = None,
    ) -> "RelationReport":
        values = np.asarray(list(residuals), dtype=float)
        worst = float(values.max()) if values.size else 0.0
        if np.isnan(worst):
            worst = float("inf")
        return cls(
            relation=relation,
            anchor=anchor,
            max_residual=worst,
            samples=int(values.size),
            passed=bool(worst < tolerance),
            tolerance=tolerance,
            elapsed=elapsed,
            details=details or {},
        )


@contextmanager
def stopwatch():
    """Yield a one-element list that receives the elapsed seconds on exit."""
    box = [0.0]
    start = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = time.perf_counter() - start


class SuiteReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    command: str
    seed: int
    reports: List[RelationReport] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def failing(self) -> List[str]:
        return [r.relation for r in self.reports if not r.passed]

    def deterministic_dump(self) -> str:
        """JSON dump with timing fields zeroed, for reproducibility comparisons."""
        clone = self.model_copy(deep=True)
        for r in clone.reports:
            r.elapsed = 0.0
        return clone.model_dump_json(indent=2)


# --- Spectral functions ---
class TwistedPolyModel(BaseModel):
    """
    JSON form of a twisted polynomial: twist weights, ascending coefficients, shift unit.
    """

    twist_weights: List[float]
    coeffs: List[Tuple[float, float]] = Field(description="Ascending [re, im] coefficient pairs.")
    hbar: Tuple[float, float] = (1.0, 0.0)

    @field_validator("twist_weights")
    @classmethod
    def _half_integers(cls, v: List[float]) -> List[float]:
        for w in v:
            if abs(2 * w - round(2 * w)) > 1e-12:
                raise ValueError(f"twist weight {w} is not a half-integer")
        return v


# --- Chains and systems ---
class ChainSpecModel(BaseModel):
    """
    Contents of a chain.json file.
    """

    series: str
    rank: int
    L: int = Field(ge=1, description="Number of sites.")
    site_labels: List[List[int]] = Field(description="Dynkin labels per site.")
    thetas: List[Tuple[float, float]] = Field(description="Inhomogeneities as [re, im].")
    twist: List[Tuple[float, float]] = Field(description="Twist values x_j as [re, im].")
    hbar: Tuple[float, float] = (1.0, 0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _shapes(self) -> "ChainSpecModel":
        if len(self.site_labels) != self.L or len(self.thetas) != self.L:
            raise ValueError("site_labels and thetas must have one entry per site")
        for labels in self.site_labels:
            if len(labels) != self.rank or any(m < 0 for m in labels):
                raise ValueError("site labels must be rank nonnegative integers")
        return self


class SystemModel(BaseModel):
    """
    Serialized extended Q-system: algebra, twist and the seed function of every node.
    """

    schema_version: str = SCHEMA_VERSION
    series: str
    rank: int
    twist: List[Tuple[float, float]]
    twist_logs: Optional[List[Tuple[float, float]]] = Field(
        default=None, description="Branch-fixed logarithms of the twist values, when not principal."
    )
    hbar: Tuple[float, float] = (1.0, 0.0)
    seeds: List[TwistedPolyModel] = Field(description="Highest-weight Q-function per node.")
    sources: Optional[List[TwistedPolyModel]] = None
    top: Optional[TwistedPolyModel] = Field(
        default=None, description="A series: the Wronskian of all r+1 single-box functions."
    )
    base: Optional[Dict[str, List[TwistedPolyModel]]] = Field(
        default=None,
        description="Standard components (singles, vector, psi, eta); rebuilt from the seeds when absent.",
    )
    magnons: Optional[List[int]] = None


class TEntryModel(BaseModel):
    a: int
    s: int
    coeffs: List[Tuple[float, float]] = Field(description="Ascending polynomial coefficients in u as [re, im].")


class TGridModel(BaseModel):
    """
    Contents of a grid.json file: T_{a,s} as polynomials in u for s = 0..smax.
    """

    schema_version: str = SCHEMA_VERSION
    series: str
    rank: int
    smax: int = Field(ge=1)
    hbar: Tuple[float, float] = (1.0, 0.0)
    entries: List[TEntryModel]


def complex_pair(z: complex) -> Tuple[float, float]:
    z = complex(z)
    return (z.real, z.imag)


def from_pair(p) -> complex:
    return complex(p[0], p[1])
