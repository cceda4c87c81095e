"""Validated run parameters shared by the command line and the services."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import Config


class RunConfig(BaseModel):
    """One run's knobs. Defaults come from ``config.Config``; flags override them."""

    model_config = ConfigDict(frozen=True)

    eps: float = Field(default_factory=lambda: Config.EPS)
    max_steps: int = Field(default_factory=lambda: Config.MAX_STEPS, ge=1)
    feasibility_steps: int = Field(default_factory=lambda: Config.FEASIBILITY_STEPS, ge=1)
    g_target: float = Field(default_factory=lambda: Config.G_TARGET, gt=0)
    ds_target: float = Field(default_factory=lambda: Config.DS_TARGET, gt=0)
    checkpoint_every: int = Field(default_factory=lambda: Config.CHECKPOINT_EVERY, ge=1)
    stagnation_window: int = Field(default_factory=lambda: Config.STAGNATION_WINDOW, ge=1)
    witness_max_denominator: int = Field(default_factory=lambda: Config.WITNESS_MAX_DENOMINATOR, ge=1)
    lattice_limit: int = Field(default_factory=lambda: Config.LATTICE_LIMIT, ge=1)
    threads: int = Field(default_factory=lambda: Config.THREADS, ge=1)
    precision: Optional[int] = Field(default_factory=lambda: Config.PRECISION, ge=53)
    seed: int = Field(default_factory=lambda: Config.SEED)
    output_format: Literal["json", "csv", "human"] = "json"
    trace: bool = False
    oracle: bool = False

    @field_validator("eps")
    @classmethod
    def _eps_in_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("eps must lie strictly between 0 and 1")
        return value

    @classmethod
    def from_options(cls, **options: Optional[object]) -> "RunConfig":
        """Build from CLI options, ignoring the ones left unset."""

        return cls(**{key: value for key, value in options.items() if value is not None})


__all__ = ["RunConfig"]
