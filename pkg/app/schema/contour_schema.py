import cmath
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.schema.potential_schema import Potential


class RotationParams(BaseModel):
    """鞍点参数

    α = W·sqrt(ζ²U″(0)/2)，μ = sqrt(π/(W²ζ² + α))，c₀ = sqrt(|U″(0)|/2)·Re ζ²
    """
    model_config = ConfigDict(frozen=True)

    zeta_angle: float = Field(description="arg ζ，|arg ζ| < π/4")
    W: float = Field(gt=0)
    alpha: float = Field(gt=0, description="高斯宽度参数 α")
    mu: complex = Field(description="顶端特征值尺度 μ")
    c0: float = Field(description="谱隙常数 c₀")

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.zeta_angle)

    @property
    def predicted_gap(self) -> float:
        return self.c0 / self.W


class ResolvedModel(BaseModel):
    """由配置得到的势与旋转角

    base 为未旋转的 V；potential 为进入核函数的 U。
    quadratic 模型中 ζ 只作用于核的高斯因子（谐振子 K_hr 的约定），U = V；
    其余模型 U(x) = V(ζx)。
    """
    model_config = ConfigDict(frozen=True)

    base: Potential
    potential: Potential
    zeta_angle: float
    harmonic: Optional[Tuple[float, float]] = Field(default=None, description="quadratic 模型的 (a, b)")

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.zeta_angle)
