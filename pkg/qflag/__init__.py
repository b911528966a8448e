"""Extended Baxter Q-systems for simply-laced Lie algebras."""

from qflag.config import Settings
from qflag.errors import QFlagError
from qflag.schemas import RelationReport, SuiteReport

__version__ = "0.1.0"

__all__ = ["QFlagError", "RelationReport", "Settings", "SuiteReport", "__version__"]
