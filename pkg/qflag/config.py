import os

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from qflag.errors import SchemaError


class Settings(BaseModel):
    """
    Tolerances and sampling parameters used by the verification suites.
    """

    tol_exact: float = Field(
        default=1e-12, gt=0, description="Tolerance for checks derived from exact identities."
    )
    tol_eigen: float = Field(
        default=1e-10, gt=0, description="Tolerance for eigen-solver comparisons."
    )
    tol_relation: float = Field(
        default=1e-9, gt=0, description="Relative residual bound for Q-system relations."
    )
    samples: int = Field(default=10, ge=1, description="Spectral-parameter sample points.")
    seed: int = Field(default=0, description="Seed threaded into every random draw.")
    max_components: int = Field(
        default=64,
        ge=1,
        description="Cap on the number of tensor components checked per bilinear family.",
    )
    census_restarts: int = Field(
        default=200, ge=1, description="Random restarts per magnon sector in chain censuses."
    )
    dedup_tol: float = Field(
        default=1e-6, gt=0, description="Root-multiset distance under which solutions coincide."
    )

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        """Build settings, applying QFLAG_TOL and QFLAG_SEED when present."""
        values = dict(overrides)
        raw_tol = os.environ.get("QFLAG_TOL")
        if raw_tol:
            try:
                parts = [float(p) for p in raw_tol.split(",")]
            except ValueError as e:
                raise SchemaError(f"QFLAG_TOL is not numeric: {raw_tol!r}") from e
            if len(parts) == 1:
                values.setdefault("tol_relation", parts[0])
            elif len(parts) == 3:
                for key, value in zip(("tol_exact", "tol_eigen", "tol_relation"), parts):
                    values.setdefault(key, value)
            else:
                raise SchemaError("QFLAG_TOL takes one value or three comma-separated values")
        raw_seed = os.environ.get("QFLAG_SEED")
        if raw_seed:
            try:
                values.setdefault("seed", int(raw_seed))
            except ValueError as e:
                raise SchemaError(f"QFLAG_SEED is not an integer: {raw_seed!r}") from e
        try:
            return cls(**values)
        except ValidationError as e:
            raise SchemaError(str(e)) from e

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, stream])
