from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from app.schema.grid_schema import Grid
from app.schema.potential_schema import Potential

if TYPE_CHECKING:
    from app.services.discretize_service import TransferKernel


class CorrelationSeries(BaseModel):
    """连通两点函数随间距 n 的取值"""
    separations: List[int]
    values: List[complex]
    rate: Optional[float] = Field(default=None, description="拟合的指数衰减率")
    predicted_gap: float = Field(description="c₀/W")
    spectral_ratio: Optional[float] = Field(default=None, description="|λ₁/λ₀|")
    F: str
    G: str
    W: float

    @property
    def predicted_rate(self) -> float:
        return 1.0 - self.predicted_gap


class ContourComparison(BaseModel):
    """旋转与未旋转积分路径下的有限链均值对比"""
    observable: str
    rotated: complex
    unrotated: complex
    difference: float
    finite_chain: complex
    brute_force: complex
    oracle_difference: float


@dataclass(frozen=True)
class ChainModel:
    """旋转后的复作用链

    U(x) = V(ζx)；matrix 为未归一化的 Nyström 矩阵，
    boundary 为边界向量 b_i = sqrt(w_i)·exp(-U(x_i)/2)。
    """
    base: Potential
    potential: Potential
    zeta_angle: float
    W: float
    grid: Grid
    kernel: "TransferKernel"
    matrix: np.ndarray
    boundary: np.ndarray

    @property
    def zeta(self) -> complex:
        return complex(np.exp(1j * self.zeta_angle))
