"""非自伴谐振子的闭式谱数据

K_hr(x, y) = exp{-W²ζ²(x-y)² - (a+ib)/2·(x²+y²)}

本征值 λ_j = sqrt(π/D)·(W²ζ²/D)^j，D = W²ζ² + α_hr + (a+ib)/2，
α_hr² = W²ζ²(a+ib) + (a+ib)²/4 且 Re α_hr > 0。

K*K 与实对称算子 T_hr 相似（相差一个纯相位乘子），T_hr 是参数为
(W′², a′, b′ = 0) 的谐振子乘以 sqrt(π/A)，由此得到精确奇异值。
"""
import cmath
import math
from typing import List

import numpy as np

from app.errors import ContourError
from app.schema.grid_schema import Grid
from app.schema.harmonic_schema import HarmonicParams, HarmonicSpectrum, OracleRow
from app.schema.potential_schema import Potential
from app.services.discretize_service import TransferKernel, assemble_operator


def _alpha(w2: complex, coupling: complex) -> complex:
    rhs = w2 * coupling + coupling ** 2 / 4
    if rhs.imag == 0 and rhs.real <= 0:
        raise ContourError(f"α_hr² = {rhs} 为非正实数，谐振子退化")
    root = cmath.sqrt(rhs)
    return root if root.real > 0 else -root


def _eigenvalue(w2: complex, coupling: complex, j: int) -> complex:
    denominator = w2 + _alpha(w2, coupling) + coupling / 2
    return cmath.sqrt(math.pi / denominator) * (w2 / denominator) ** j


def alpha_hr(p: HarmonicParams) -> complex:
    """α_hr，取 Re α_hr > 0 的根"""
    return _alpha(p.W ** 2 * p.zeta ** 2, p.coupling)


def harmonic_eigenvalue(p: HarmonicParams, j: int) -> complex:
    """第 j 个本征值 λ_j

    Example:
        >>> harmonic_eigenvalue(HarmonicParams(W=3, a=2), 0)  # sqrt(π/(10+√19))
        (0.4677...+0j)
    """
    if j < 0:
        raise ValueError(f"j 必须非负，实际 {j}")
    return _eigenvalue(p.W ** 2 * p.zeta ** 2, p.coupling, j)


def reduced_parameters(p: HarmonicParams):
    """T_hr 的参数 (A, W′², a′, α_T)"""
    A = 2 * p.W ** 2 * (p.zeta ** 2).real + p.a
    w2_prime = p.W ** 4 / A
    a_prime = 2 * p.a * (1 - p.a / (2 * A))
    alpha_T = math.sqrt(w2_prime * a_prime + a_prime ** 2 / 4)
    return A, w2_prime, a_prime, alpha_T


def harmonic_singular_value(p: HarmonicParams, j: int) -> float:
    """经 T_hr 约化得到的精确奇异值 s_j = sqrt(sqrt(π/A)·λ_j(W′², a′, 0))"""
    A, w2_prime, a_prime, _ = reduced_parameters(p)
    reduced = _eigenvalue(complex(w2_prime), complex(a_prime), j).real
    return math.sqrt(math.sqrt(math.pi / A) * reduced)


def singular_value_radical(p: HarmonicParams, j: int) -> float:
    """根式公式给出的 s_j，仅与精确值相差 O(W⁻²)，只作对照"""
    A, _, _, _ = reduced_parameters(p)
    w4 = p.W ** 4
    denominator = w4 + 2 * p.a * A + math.sqrt((2 * w4 + p.a * A) * p.a * A)
    return math.sqrt(math.sqrt(math.pi ** 2 / denominator) * (w4 / denominator) ** j)


def kstarK_kernel(p: HarmonicParams, x, y):
    """(K*K)(x, y) = ∫ conj(K(r, x))·K(r, y) dr 的闭式

    = sqrt(π/A)·exp(B²/A − (W²ζ̄² + c̄/2)x² − (W²ζ² + c/2)y²)，B = W²(ζ̄²x + ζ²y)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A, _, _, _ = reduced_parameters(p)
    zeta_sq = p.zeta ** 2
    c = p.coupling
    B = p.W ** 2 * (zeta_sq.conjugate() * x + zeta_sq * y)
    exponent = (
        B ** 2 / A
        - (p.W ** 2 * zeta_sq.conjugate() + c.conjugate() / 2) * x ** 2
        - (p.W ** 2 * zeta_sq + c / 2) * y ** 2
    )
    values = math.sqrt(math.pi / A) * np.exp(exponent)
    return complex(values) if np.ndim(values) == 0 else values


def gaussian_eigenfunction(alpha: float, x):
    """归一化高斯 g_α(x) = (2α/π)^{1/4}·exp(-αx²)"""
    if alpha <= 0:
        raise ValueError(f"α 必须为正，实际 {alpha}")
    return (2 * alpha / math.pi) ** 0.25 * np.exp(-alpha * np.asarray(x, dtype=float) ** 2)


def apply_to_gaussian(p: HarmonicParams, alpha: float, x):
    """K_hr g_α 的闭式值

    α² = W²ζ²(a+ib) 时等于 μ·g_α(x)·c(α)·e^{-d(α)x²}，
    c(α) = (1 + (a+ib)/(2(α+W²ζ²)))^{-1/2}，d(α) = (a+ib)²/(4(W²ζ² + α + (a+ib)/2))
    """
    s = p.W ** 2 * p.zeta ** 2
    c = p.coupling
    denominator = s + alpha + c / 2
    x = np.asarray(x, dtype=float)
    prefactor = (2 * alpha / math.pi) ** 0.25 * cmath.sqrt(math.pi / denominator)
    return prefactor * np.exp((s ** 2 / denominator - s - c / 2) * x ** 2)


def top_singular_function(p: HarmonicParams, x):
    """K*K 的顶端归一化本征函数 g̃(x) = (2α_T/π)^{1/4}·e^{i·Im(α_hr²)x²/A}·e^{-α_T x²}"""
    A, _, _, alpha_T = reduced_parameters(p)
    phase = (p.W ** 2 * p.zeta ** 2 * p.coupling + p.coupling ** 2 / 4).imag / A
    x = np.asarray(x, dtype=float)
    return gaussian_eigenfunction(alpha_T, x) * np.exp(1j * phase * x ** 2)


def harmonic_kernel(p: HarmonicParams) -> TransferKernel:
    """K_hr 写成 TransferKernel：U(x) = (a+ib)x²"""
    potential = Potential(kind="quadratic", curvature=2 * p.coupling)
    return TransferKernel(W=p.W, zeta_angle=p.zeta_angle, potential=potential)


def spectrum(p: HarmonicParams, j_max: int) -> HarmonicSpectrum:
    """j = 0..j_max 的本征值、奇异值与 T_hr 参数"""
    A, w2_prime, a_prime, alpha_T = reduced_parameters(p)
    indices = range(j_max + 1)
    return HarmonicSpectrum(
        params=p,
        alpha_hr=alpha_hr(p),
        eigenvalues=[harmonic_eigenvalue(p, j) for j in indices],
        singular_values=[harmonic_singular_value(p, j) for j in indices],
        singular_values_radical=[singular_value_radical(p, j) for j in indices],
        A_const=A,
        W_prime_sq=w2_prime,
        a_prime=a_prime,
        alpha_T=alpha_T,
        normal_case=p.normal_case,
    )


def oracle_rows(result: HarmonicSpectrum) -> List[OracleRow]:
    return [
        OracleRow(
            j=j,
            eigenvalue=result.eigenvalues[j],
            singular_value=result.singular_values[j],
            singular_value_radical=result.singular_values_radical[j],
            alpha_hr=result.alpha_hr,
            alpha_T=result.alpha_T,
        )
        for j in range(len(result.eigenvalues))
    ]


def _two_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, ord=2))


def normality_defect(p: HarmonicParams, grid: Grid) -> float:
    """‖MᴴM − MMᴴ‖/‖MᴴM‖（谱范数，稠密计算）"""
    M = assemble_operator(harmonic_kernel(p), grid).matrix
    MhM = M.conj().T @ M
    MMh = M @ M.conj().T
    return _two_norm(MhM - MMh) / _two_norm(MhM)


def commutator_defect(p: HarmonicParams, q: HarmonicParams, grid: Grid) -> float:
    """‖M_p M_q − M_q M_p‖/(‖M_p‖·‖M_q‖)

    两个谐振子当且仅当 α_hr 相同时可交换。
    """
    Mp = assemble_operator(harmonic_kernel(p), grid).matrix
    Mq = assemble_operator(harmonic_kernel(q), grid).matrix
    return _two_norm(Mp @ Mq - Mq @ Mp) / (_two_norm(Mp) * _two_norm(Mq))

