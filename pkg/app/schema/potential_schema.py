import cmath
from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


PotentialKind = Literal["quadratic", "rotated-log", "custom"]


class Potential(BaseModel):
    """复势 U(x) = V(ζx)

    quadratic:   V(x) = curvature/2 · x²
    rotated-log: V(x) = a·log(1 + b x²)
    custom:      V(x) = Σ c_k x^k，k 从 2 开始（U1 自动满足）

    ζ 以辐角 zeta_angle 存储，避免 |ζ| = 1 的舍入漂移。
    """
    model_config = ConfigDict(frozen=True)

    kind: PotentialKind = Field(description="势的类型")
    curvature: complex = Field(default=2.0, description="quadratic: V″(0)")
    a: float = Field(default=1.0, gt=0, description="rotated-log: 系数 a")
    b: complex = Field(default=1.0, description="rotated-log: 系数 b，Re b > 0")
    coefficients: Tuple[complex, ...] = Field(default=(), description="custom: c₂, c₃, …")
    zeta_angle: float = Field(default=0.0, description="arg ζ")
    growth_exponent: float = Field(default=2.0, gt=1, description="U4 中的 γ")
    polynomial_strip: float = Field(default=1.0, gt=0, description="多项式势的解析带半宽")

    @model_validator(mode="after")
    def _check_parameters(self) -> "Potential":
        if self.kind == "rotated-log":
            if self.b.real <= 0:
                raise ValueError("rotated-log 势要求 Re b > 0")
            rotated = self.b * self.zeta ** 2
            if rotated.imag == 0 and rotated.real < 0:
                raise ValueError("bζ² 为负实数，解析带退化")
        if self.kind == "custom" and not self.coefficients:
            raise ValueError("custom 势需要至少一个系数")
        return self

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.zeta_angle)

    @property
    def second_derivative_at_zero(self) -> complex:
        """U″(0) = ζ²·V″(0)，由参数直接给出而非数值微分"""
        if self.kind == "quadratic":
            v_second = self.curvature
        elif self.kind == "rotated-log":
            v_second = 2 * self.a * self.b
        else:
            v_second = 2 * self.coefficients[0]
        return complex(self.zeta ** 2 * v_second)

    @property
    def strip_halfwidth(self) -> float:
        """U4 中解析带的半宽 c

        rotated-log 取实轴到 log(1 + bζ²z²) 最近分支点距离的一半
        """
        if self.kind == "rotated-log":
            root = cmath.sqrt(self.b * self.zeta ** 2)
            return 0.5 * abs((1 / root).real)
        return self.polynomial_strip

    @property
    def label(self) -> str:
        if self.kind == "quadratic":
            body = f"curvature={self.curvature}"
        elif self.kind == "rotated-log":
            body = f"a={self.a},b={self.b}"
        else:
            body = "c=" + ",".join(str(c) for c in self.coefficients)
        return f"{self.kind}({body},argζ={self.zeta_angle:.12g})"


class AssumptionCheck(BaseModel):
    """单项假设的抽样检查结果"""
    name: str = Field(description="假设编号，如 U1")
    passed: bool = Field(description="是否通过")
    margin: float = Field(description="最坏情况的裕量")
    detail: str = Field(default="", description="说明")


class AssumptionReport(BaseModel):
    """U1–U4 检查报告

    抽样检查，并非证明。
    """
    potential: str = Field(description="势的标识")
    zeta_angle: float = Field(description="核中使用的 arg ζ")
    checks: List[AssumptionCheck] = Field(default_factory=list)
    note: str = Field(default="sampled check, not a proof")

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]


class ObservableReport(BaseModel):
    """F1–F2 检查报告（扇形区域 Σ 上抽样）"""
    observable: str
    growth_degree: float
    degree_limit: float = Field(description="F2 允许的增长阶上界，无限制时为 inf")
    finite: bool = Field(description="F1 的抽样替代：扇形上取值有限")
    bound: float = Field(description="max |F(z)|·(1+|z|)^(-growth_degree)")
    passed: bool
    note: str = Field(default="sampled check, not a proof")
