"""Config module - size budgets and run configuration"""

import os
from dataclasses import dataclass, field

from .constants import (
    BUDGET_ENV_VAR,
    DEFAULT_SEED,
    DEFAULT_TOL,
    MAX_DENSE,
    MAX_FLATS,
    MAX_GRAM_ENTRIES,
)
from .errors import InvalidParameters


@dataclass(frozen=True)
class Budget:
    """Upper limits on what a run may build

    max_flats bounds each part of an incidence graph, max_gram_entries the
    dense NN^T, max_dense the side of dense pair scans and eigensolves.
    """

    max_flats: int = MAX_FLATS
    max_gram_entries: int = MAX_GRAM_ENTRIES
    max_dense: int = MAX_DENSE

    @classmethod
    def from_env(cls, environ=None) -> "Budget":
        """Read FQFLATS_BUDGET as 'max_flats[,max_gram_entries[,max_dense]]'"""
        environ = os.environ if environ is None else environ
        raw = environ.get(BUDGET_ENV_VAR, "").strip()
        if not raw:
            return cls()
        try:
            values = [int(v) for v in raw.split(",")]
        except ValueError:
            raise InvalidParameters(f"{BUDGET_ENV_VAR}={raw!r} is not a list of integers") from None
        if not 1 <= len(values) <= 3 or min(values) < 1:
            raise InvalidParameters(f"{BUDGET_ENV_VAR}={raw!r} needs 1 to 3 positive integers")
        return cls(*values)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a CLI run's output"""

    command: str
    q: int | None = None
    d: int | None = None
    k: int | None = None
    h: int | None = None
    seed: int = DEFAULT_SEED
    samples: int | None = None  # None: per-check defaults
    tol: float = DEFAULT_TOL
    budget: Budget = field(default_factory=Budget)
    fmt: str = "json"
    output: str | None = None
    grid: tuple[tuple[int, int, int, int], ...] = ()
    extra: tuple[tuple[str, object], ...] = ()

    def option(self, name: str, default=None):
        return dict(self.extra).get(name, default)
