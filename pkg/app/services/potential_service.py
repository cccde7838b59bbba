import cmath
import logging
import math
from typing import Union

import numpy as np

from app.errors import PotentialDomainError
from app.schema.potential_schema import AssumptionCheck, AssumptionReport, ObservableReport, Potential
from app.services.observables import Observable

logger = logging.getLogger(__name__)

ArrayLike = Union[complex, float, np.ndarray]

# "实正数"判断与 U1 的容差：公式精确，容差只吸收舍入
ARG_TOLERANCE = 1e-12


def _as_result(z, values: np.ndarray):
    return complex(values) if np.ndim(z) == 0 else values


def eval_potential(p: Potential, z: ArrayLike, check_strip: bool = True):
    """计算 U(z) = V(ζz)

    Args:
        p: 势函数
        z: 求值点，标量或数组
        check_strip: 是否检查 |Im z| ≤ strip_halfwidth

    Returns:
        U(z)，与输入形状一致

    Raises:
        PotentialDomainError: 求值点离开解析带或落在对数分支切割上

    Example:
        >>> eval_potential(Potential(kind="rotated-log"), 1.0)
        (0.6931471805599453+0j)
    """
    zz = np.asarray(z, dtype=complex)
    if check_strip and np.any(np.abs(zz.imag) > p.strip_halfwidth * (1 + 1e-12)):
        raise PotentialDomainError(
            f"求值点离开解析带 |Im z| ≤ {p.strip_halfwidth:.6g}: max |Im z| = {np.max(np.abs(zz.imag)):.6g}"
        )
    w = p.zeta * zz
    if p.kind == "quadratic":
        values = 0.5 * p.curvature * w ** 2
    elif p.kind == "rotated-log":
        arg = 1 + p.b * w ** 2
        on_cut = (arg.real <= 0) & (np.abs(arg.imag) <= 1e-14 * np.maximum(1.0, np.abs(arg)))
        if np.any(on_cut):
            raise PotentialDomainError("1 + bζ²z² 落在对数的分支切割上")
        values = p.a * np.log(arg)
    else:
        values = np.zeros_like(w)
        for k, coefficient in enumerate(p.coefficients, start=2):
            values = values + coefficient * w ** k
    return _as_result(z, values)


def derivative(p: Potential, z: ArrayLike):
    """解析导数 U′(z)"""
    zz = np.asarray(z, dtype=complex)
    zeta = p.zeta
    w = zeta * zz
    if p.kind == "quadratic":
        values = zeta * p.curvature * w
    elif p.kind == "rotated-log":
        values = zeta * p.a * 2 * p.b * w / (1 + p.b * w ** 2)
    else:
        values = np.zeros_like(w)
        for k, coefficient in enumerate(p.coefficients, start=2):
            values = values + zeta * k * coefficient * w ** (k - 1)
    return _as_result(z, values)


def rotate(p: Potential, zeta: complex) -> Potential:
    """U ↦ U(ζ·)，|ζ| = 1"""
    if abs(abs(zeta) - 1) > ARG_TOLERANCE:
        raise PotentialDomainError(f"旋转因子必须满足 |ζ| = 1，实际 |ζ| = {abs(zeta)}")
    data = p.model_dump()
    data["zeta_angle"] = p.zeta_angle + cmath.phase(zeta)
    return Potential.model_validate(data)


def harmonic_approximation(p: Potential) -> Potential:
    """与 p 具有相同 U″(0) 的二次势"""
    return Potential(
        kind="quadratic",
        curvature=p.second_derivative_at_zero,
        growth_exponent=p.growth_exponent,
        polynomial_strip=p.strip_halfwidth,
    )


def is_real_positive(value: complex) -> bool:
    return value.real > 0 and abs(cmath.phase(value)) <= ARG_TOLERANCE


class PotentialService:
    """势函数与观测量的抽样检查服务

    所有检查都是抽样检查，并非证明；报告中会注明。
    """

    def __init__(
        self,
        real_points: int = 400,
        strip_lines: int = 5,
        extent: float = 10.0,
        sector_rays: int = 5,
        u4_ceiling: float = 1e6,
    ):
        """初始化检查服务

        Args:
            real_points: 实轴上的抽样点数
            strip_lines: 解析带内的水平抽样线数
            extent: 抽样范围 [-extent, extent]
            sector_rays: 扇形 Σ 内的射线数
            u4_ceiling: U4 比值的上限
        """
        self.real_points = real_points
        self.strip_lines = strip_lines
        self.extent = extent
        self.sector_rays = sector_rays
        self.u4_ceiling = u4_ceiling

    def check_assumptions(self, p: Potential, zeta: complex = 1.0) -> AssumptionReport:
        """抽样检查 U1–U4

        Args:
            p: 势函数 U
            zeta: 核中高斯因子 exp(-W²ζ²(x-y)²) 使用的 ζ

        Returns:
            各项假设的通过情况与最坏裕量
        """
        checks = []

        u0 = abs(eval_potential(p, 0.0))
        du0 = abs(derivative(p, 0.0))
        worst = max(u0, du0)
        checks.append(AssumptionCheck(
            name="U1",
            passed=worst <= ARG_TOLERANCE,
            margin=worst,
            detail=f"|U(0)| = {u0:.3e}, |U′(0)| = {du0:.3e}",
        ))

        q = complex(zeta) ** 2 * p.second_derivative_at_zero
        checks.append(AssumptionCheck(
            name="U2",
            passed=is_real_positive(q),
            margin=q.real if is_real_positive(q) else -abs(cmath.phase(q)),
            detail=f"ζ²U″(0) = {q:.12g}",
        ))

        x = np.linspace(-self.extent, self.extent, self.real_points)
        x = x[x != 0]
        ratio = np.real(eval_potential(p, x)) / np.minimum(1.0, x ** 2)
        margin = float(np.min(ratio))
        checks.append(AssumptionCheck(
            name="U3",
            passed=margin > 0,
            margin=margin,
            detail="min Re U(x)/min(1, x²) over sampled x ≠ 0",
        ))

        c = p.strip_halfwidth
        heights = np.linspace(-c, c, self.strip_lines) if self.strip_lines > 1 else np.zeros(1)
        z = (np.linspace(-self.extent, self.extent, self.real_points)[None, :] + 1j * heights[:, None]).ravel()
        u4 = np.abs(derivative(p, z)) / np.maximum(1.0, np.real(eval_potential(p, z))) ** p.growth_exponent
        worst_u4 = float(np.max(u4))
        checks.append(AssumptionCheck(
            name="U4",
            passed=bool(np.isfinite(worst_u4)) and worst_u4 <= self.u4_ceiling,
            margin=worst_u4,
            detail=f"max |U′(z)|/max(1, Re U(z))^γ on {self.strip_lines} strip lines, γ = {p.growth_exponent}",
        ))

        report = AssumptionReport(potential=p.label, zeta_angle=cmath.phase(complex(zeta)), checks=checks)
        if not report.all_passed:
            logger.warning(f"假设检查未通过: {report.failed()} ({p.label})")
        return report

    def check_observable(self, observable: Observable, base: Potential, zeta: complex) -> ObservableReport:
        """在扇形 Σ = conv(ℝ ∪ ℝζ) 上抽样检查 F1–F2

        Args:
            observable: 观测量 F
            base: 未旋转的势 V，rotated-log 时给出 F2 的增长阶上界 2a − 1
            zeta: 旋转因子
        """
        limit = 2 * base.a - 1 if base.kind == "rotated-log" else math.inf
        angles = np.linspace(0.0, cmath.phase(complex(zeta)), self.sector_rays)
        radii = np.linspace(0.0, self.extent, self.real_points)
        rays = radii[None, :] * np.exp(1j * angles)[:, None]
        z = np.concatenate([rays.ravel(), -rays.ravel()])

        with np.errstate(all="ignore"):
            values = observable(z)
        finite = bool(np.all(np.isfinite(values)))
        bound = float(np.max(np.abs(values) * (1 + np.abs(z)) ** (-observable.growth_degree))) if finite else math.inf
        passed = finite and math.isfinite(bound) and observable.growth_degree < limit
        if not passed:
            logger.warning(
                f"观测量 {observable.name} 未通过 F1–F2: 增长阶 {observable.growth_degree}，上界 {limit}"
            )
        return ObservableReport(
            observable=observable.name,
            growth_degree=observable.growth_degree,
            degree_limit=limit,
            finite=finite,
            bound=bound,
            passed=passed,
        )
