from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field


@dataclass
class EigenPair:
    """幂迭代得到的顶端特征对

    vector 以 Hermite 范数归一化，并固定相位使 ⟨u₀, g_α⟩ ≥ 0；
    bilinear_norm 记录双线性配对 Σ (u₀)_i²（即 ⟨u₀, ū₀⟩）。
    """
    eigenvalue: complex
    vector: np.ndarray
    residual: float
    iterations: int
    bilinear_norm: complex = 0j

    def summary(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "residual": self.residual,
            "iterations": self.iterations,
            "bilinear_norm": self.bilinear_norm,
        }


@dataclass(frozen=True)
class BlockOperators:
    """K̂ 在 span(g) ⊕ g^⊥ 上的四个块：A 为标量，B、C 为 g^⊥ 中的向量，D 为 P K̂ P"""
    g: np.ndarray
    A: complex
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        # K̂v = g(A⟨g, v⟩ + ⟨B, v⟩) + C⟨g, v⟩ + D v
        coefficient = np.vdot(self.g, v)
        return self.g * (self.A * coefficient + np.vdot(self.B, v)) + self.C * coefficient + self.D @ v


class BlockReport(BaseModel):
    """K̂ = μ⁻¹M 关于 span(g) ⊕ g^⊥ 的块分解"""
    W: float
    A: complex = Field(description="gᴴK̂g")
    normB: float = Field(description="‖P K̂ᴴ g‖")
    normC: float = Field(description="‖P K̂ g‖")
    normD: float = Field(description="P K̂ P 的最大奇异值")
    eigenvalue: complex = Field(description="λ₀")
    mu: complex = Field(description="μ")
    u0_minus_galpha: float = Field(description="‖u₀ − g_α‖")
    c0: float

    @property
    def gapD(self) -> float:
        return 1.0 - self.normD


class SemigroupReport(BaseModel):
    """不变补空间上的半群衰减"""
    rate: float = Field(description="各试验中 (‖K̂ⁿu‖/‖u‖)^(1/n) 的最大值")
    asymptotic_rate: float = Field(description="各试验中最后一步 ‖K̂ⁿu‖/‖K̂ⁿ⁻¹u‖ 的最大值")
    max_leakage: float = Field(description="重新投影后 |Σ u_i(u₀)_i|/‖u‖ 的最大值")
    n_steps: int
    trials: int
    seed: int


class OverlapReport(BaseModel):
    """二维求积的重叠积分 I(α) 与其渐近值"""
    value: complex
    asymptotic: complex
    relative_error: float
    precondition_ok: bool = Field(description="α 是否满足 |α² − W²ζ²U″(0)/2| ≤ C·W^(3/2)")


class SpectrumReport(BaseModel):
    """spectrum 子命令的输出"""
    W: float
    grid_L: float
    grid_N: int
    eigenvalues: List[complex]
    residuals: List[float]
    iterations: List[int]
    bilinear_norm: complex
    singular_values: List[float]
    schur_bound: float
    mu: Optional[complex] = Field(default=None, description="U2 成立时的 μ")
    c0: Optional[float] = Field(default=None)
    oracle_eigenvalues: Optional[List[complex]] = Field(default=None, description="quadratic 势时的闭式 λ_j")
    oracle_singular_values: Optional[List[float]] = Field(default=None)
