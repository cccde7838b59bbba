from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PANEL_ORDER = 8


@dataclass(frozen=True)
class Grid:
    """[-L, L] 上的复合 Gauss–Legendre 求积规则"""
    nodes: np.ndarray
    weights: np.ndarray
    half_length: float
    scheme: str = "composite-gauss-legendre"

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1 or self.nodes.size == 0:
            raise ValueError("nodes 与 weights 必须是等长的非空一维数组")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("节点必须严格递增")
        if np.any(self.weights <= 0):
            raise ValueError("权重必须为正")
        if np.any(np.abs(self.nodes) > self.half_length):
            raise ValueError("节点必须位于 [-L, L] 内")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def count(self) -> int:
        return int(self.nodes.size)

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def describe(self) -> dict:
        return {"L": float(self.half_length), "N": self.count, "scheme": self.scheme}


@dataclass(frozen=True)
class DiscretizedOperator:
    """对称 Nyström 矩阵 M_ij = sqrt(w_i)·K(x_i, x_j)·sqrt(w_j)

    matrix 为复对称矩阵（M = Mᵀ，不取共轭）
    """
    grid: Grid
    matrix: np.ndarray
    W: float
    zeta_angle: float
    potential: str
    # 装配时核函数的 U″(0)，供 μ、α 的计算复用
    second_derivative_at_zero: Optional[complex] = field(default=None)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def zeta(self) -> complex:
        return complex(np.exp(1j * self.zeta_angle))
