import cmath
import math
from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class HarmonicParams(BaseModel):
    """非自伴谐振子 K_hr(x, y) = exp{-W²ζ²(x-y)² - (a+ib)/2·(x²+y²)}

    条件：a > 0，|ζ| = 1，Re ζ² > 0
    """
    model_config = ConfigDict(frozen=True)

    W: float = Field(gt=0)
    zeta_angle: float = Field(default=0.0)
    a: float = Field(gt=0)
    b: float = Field(default=0.0)

    @model_validator(mode="after")
    def _check_zeta(self) -> "HarmonicParams":
        if math.cos(2 * self.zeta_angle) <= 0:
            raise ValueError("要求 Re ζ² > 0")
        return self

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.zeta_angle)

    @property
    def coupling(self) -> complex:
        """a + ib"""
        return complex(self.a, self.b)

    @property
    def normal_case(self) -> bool:
        """ζ²(a+ib) 是否为正实数（与 U2 相容的情形）"""
        q = self.zeta ** 2 * self.coupling
        return q.real > 0 and abs(cmath.phase(q)) <= 1e-12


class HarmonicSpectrum(BaseModel):
    """谐振子的闭式谱数据"""
    params: HarmonicParams
    alpha_hr: complex = Field(description="Re α_hr > 0 的根")
    eigenvalues: List[complex] = Field(description="λ_j")
    singular_values: List[float] = Field(description="经 T_hr 约化得到的精确 s_j")
    singular_values_radical: List[float] = Field(description="根式公式给出的 s_j，仅供对照")
    A_const: float = Field(description="2W²Re ζ² + a")
    W_prime_sq: float = Field(description="W⁴/A")
    a_prime: float = Field(description="2a(1 - a/(2A))")
    alpha_T: float = Field(description="T_hr 顶端本征函数的宽度参数")
    normal_case: bool


class OracleRow(BaseModel):
    """oracle 子命令的一行输出"""
    j: int
    eigenvalue: complex
    singular_value: float
    singular_value_radical: float
    alpha_hr: complex
    alpha_T: float
