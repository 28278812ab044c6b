"""
Data models for hyperparameters, privacy budgets and run records
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Method(str, Enum):
    """Optimization methods"""
    DPMIXSGD = "dpmixsgd"
    DM_HSGD = "dm_hsgd"
    SGDA = "sgda"
    DP_SGDA = "dp_sgda"

    @property
    def is_private(self) -> bool:
        return self in (Method.DPMIXSGD, Method.DP_SGDA)


class ShardMode(str, Enum):
    """How samples are distributed across agents"""
    IID = "iid"
    LABEL_SORTED = "label-sorted"


class HyperParams(BaseModel):
    """Step sizes, momentum weights, batch sizes, horizon and noise levels"""
    model_config = ConfigDict(frozen=True)

    eta_x: float
    eta_y: float
    beta_x: float = 1.0
    beta_y: float = 1.0
    b0: int = 1
    batch: int = 1
    T: int = 1
    sigma_x: float = 0.0
    sigma_y: float = 0.0
    clip: Optional[float] = None

    @field_validator('eta_x', 'eta_y')
    @classmethod
    def _positive_step(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator('beta_x', 'beta_y')
    @classmethod
    def _momentum_weight(cls, v: float, info) -> float:
        if not 0 < v <= 1:
            raise ValueError(f"{info.field_name} must lie in (0, 1]")
        return v

    @field_validator('b0', 'batch', 'T')
    @classmethod
    def _at_least_one(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator('sigma_x', 'sigma_y')
    @classmethod
    def _nonnegative_noise(cls, v: float, info) -> float:
        if v < 0:
            raise ValueError(f"{info.field_name} must be non-negative")
        return v

    @field_validator('clip')
    @classmethod
    def _positive_clip(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError("clip must be positive")
        return v

    def without_noise(self) -> "HyperParams":
        return self.model_copy(update={'sigma_x': 0.0, 'sigma_y': 0.0})


class PrivacyBudget(BaseModel):
    """(theta, gamma) budget with the calibration constant and gradient-norm bound"""
    model_config = ConfigDict(frozen=True)

    theta: float
    gamma: float
    c: float = 1.0
    L_g: float = 1.0

    @field_validator('theta')
    @classmethod
    def _theta(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("theta must be positive")
        return v

    @field_validator('gamma')
    @classmethod
    def _gamma(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("gamma must lie in (0, 1)")
        return v

    @field_validator('c', 'L_g')
    @classmethod
    def _positive(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v


class ProblemMeta(BaseModel):
    """Smoothness metadata of a min-max problem"""
    model_config = ConfigDict(frozen=True)

    L: float
    mu: float
    L_g: float
    sigma_var: Optional[float] = None

    @field_validator('L', 'mu', 'L_g')
    @classmethod
    def _positive(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @model_validator(mode='after')
    def _condition_number(self) -> "ProblemMeta":
        if self.L < self.mu:
            raise ValueError("L must be at least mu (kappa >= 1)")
        return self

    @property
    def kappa(self) -> float:
        return self.L / self.mu


class StationarityConfig(BaseModel):
    """Inner maximization used to estimate ||grad Phi(x_bar)||"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    inner_steps: int = Field(default=200)
    inner_eta: Optional[float] = None  # None means 1/L
    tol: float = 1e-8

    @field_validator('inner_steps')
    @classmethod
    def _steps(cls, v: int) -> int:
        if v < 1:
            raise ValueError("inner_steps must be at least 1")
        return v

    @field_validator('inner_eta')
    @classmethod
    def _eta(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError("inner_eta must be positive")
        return v


@dataclass
class RunRow:
    """One logged iteration of a run"""
    iteration: int
    epoch: float
    x_bar: np.ndarray
    y_bar: np.ndarray
    consensus_x: float
    consensus_y: float
    grad_norm: float
    wall_ms: float
    auroc_test: Optional[float] = None


@dataclass
class RunRecord:
    """Full result of one optimization run"""
    method: Method
    seed: int
    T: int
    sigma_x: float = 0.0
    sigma_y: float = 0.0
    rows: List[RunRow] = field(default_factory=list)
    zeta: Optional[int] = None
    x_bar_zeta: Optional[np.ndarray] = None
    x_bar_final: Optional[np.ndarray] = None
    y_bar_final: Optional[np.ndarray] = None

    def add_row(self, row: RunRow) -> None:
        """Append a row; iteration indices must increase"""
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError(
                f"iteration {row.iteration} logged after {self.rows[-1].iteration}"
            )
        self.rows.append(row)

    @property
    def final_row(self) -> Optional[RunRow]:
        return self.rows[-1] if self.rows else None


class RunLogger(Protocol):
    """Receives RunRecord rows as a run progresses"""
    log_every: int

    def log(self, row: RunRow) -> None:
        ...
