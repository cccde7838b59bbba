"""积分路径旋转与鞍点参数

ζ 在内部以辐角存储；所有平方根取主值。
"""
import cmath
import logging
import math
from typing import TYPE_CHECKING

from app.errors import ContourError
from app.schema.contour_schema import ResolvedModel, RotationParams
from app.schema.potential_schema import Potential
from app.services.potential_service import ARG_TOLERANCE, is_real_positive, rotate

if TYPE_CHECKING:
    from app.config import ModelSettings

logger = logging.getLogger(__name__)


def rotation_angle(v_second: complex) -> float:
    """arg ζ = −arg(V″(0))/4

    Raises:
        ContourError: V″(0) = 0，或 arg V″(0) = π 使 |arg ζ| = π/4
    """
    v_second = complex(v_second)
    if v_second == 0:
        raise ContourError("V″(0) = 0，无法确定旋转角")
    phase = cmath.phase(v_second)
    if abs(phase) >= math.pi - ARG_TOLERANCE:
        raise ContourError(f"arg V″(0) = {phase:.12g} 迫使 |arg ζ| ≥ π/4")
    return -phase / 4


def solve_rotation(v_second: complex) -> complex:
    """求旋转因子 ζ，使 ζ⁴·V″(0) = |V″(0)| > 0

    Example:
        >>> solve_rotation(2.0)
        (1+0j)
    """
    return cmath.exp(1j * rotation_angle(v_second))


def _checked_angle(zeta: complex) -> float:
    zeta = complex(zeta)
    if abs(abs(zeta) - 1) > ARG_TOLERANCE:
        raise ContourError(f"要求 |ζ| = 1，实际 |ζ| = {abs(zeta)!r}")
    angle = cmath.phase(zeta)
    if abs(angle) >= math.pi / 4:
        raise ContourError(f"要求 |arg ζ| < π/4，实际 arg ζ = {angle:.12g}")
    return angle


def saddle_params(W: float, zeta: complex, u_second: complex) -> RotationParams:
    """鞍点参数 α、μ、c₀

    Args:
        W: 耦合强度
        zeta: 旋转因子
        u_second: U″(0)

    Raises:
        ContourError: ζ²U″(0) 不是正实数（U2 不成立）
    """
    if W <= 0:
        raise ContourError(f"W 必须为正，实际 {W}")
    angle = _checked_angle(zeta)
    zeta = cmath.exp(1j * angle)
    q = zeta ** 2 * complex(u_second)
    if not is_real_positive(q):
        raise ContourError(f"U2 不成立: ζ²U″(0) = {q:.12g} 不是正实数")
    alpha = W * math.sqrt(q.real / 2)
    mu = cmath.sqrt(math.pi / (W ** 2 * zeta ** 2 + alpha))
    c0 = math.sqrt(abs(u_second) / 2) * (zeta ** 2).real
    return RotationParams(zeta_angle=angle, W=W, alpha=alpha, mu=mu, c0=c0)


def normal_zeta(W: float, a: float, b: float) -> complex:
    """使 α_hr² = W²ζ²(a+ib) + (a+ib)²/4 为实数的 ζ

    此时谐振子 K_hr 为正规算子。

    Raises:
        ContourError: 不存在满足 Re ζ² > 0 的解
    """
    c = complex(a, b)
    d = c ** 2 / 4
    radicand = W ** 4 * abs(c) ** 2 - d.imag ** 2
    if radicand < 0:
        raise ContourError("不存在使 α_hr² 为实数的单位模 ζ")
    target = d.real + math.sqrt(radicand)
    zeta_sq = (target - d) / (W ** 2 * c)
    if zeta_sq.real <= 0:
        raise ContourError(f"正规情形的 ζ² = {zeta_sq:.6g} 不满足 Re ζ² > 0")
    return cmath.exp(0.5j * cmath.phase(zeta_sq))


def oracle_zeta(a: float, b: float) -> complex:
    """ζ = exp(−i·arg(a+ib)/2)，使 ζ²(a+ib) 为正实数"""
    return cmath.exp(-0.5j * cmath.phase(complex(a, b)))


def resolve_model(model: "ModelSettings") -> ResolvedModel:
    """由 [model] 配置构造 V、U 与 ζ

    未给出 zeta_angle 时：quadratic 取 oracle_zeta，其余由 V″(0) 求解。
    """
    common = {"growth_exponent": model.growth_exponent, "polynomial_strip": model.strip_halfwidth}
    if model.kind == "quadratic":
        coupling = complex(model.a, model.b.real)
        base = Potential(kind="quadratic", curvature=2 * coupling, **common)
        angle = model.zeta_angle
        if angle is None:
            angle = cmath.phase(oracle_zeta(model.a, model.b.real))
        return ResolvedModel(base=base, potential=base, zeta_angle=angle, harmonic=(model.a, model.b.real))

    if model.kind == "rotated-log":
        base = Potential(kind="rotated-log", a=model.a, b=model.b, **common)
    else:
        base = Potential(kind="custom", coefficients=tuple(model.coefficients), **common)
    angle = model.zeta_angle
    if angle is None:
        angle = rotation_angle(base.second_derivative_at_zero)
    logger.info(f"旋转角 arg ζ = {angle:.12g} ({base.label})")
    return ResolvedModel(base=base, potential=rotate(base, cmath.exp(1j * angle)), zeta_angle=angle)
