"""复作用链的均值与连通关联

有限链的权重为 B(φ₀)·Π K(φ_k, φ_{k+1})·B(φ_n)，B(x) = exp(-U(x)/2)；
旋转积分路径 φ ← ζφ 后 U(x) = V(ζx)，观测量变为 F_ζ(x) = F(ζx)。
双线性配对 ⟨v, ū₀⟩ = Σ v_i(u₀)_i。
"""
import logging
import math
from typing import Optional

import numpy as np

from app.errors import ChainError
from app.schema.chain_schema import ChainModel, CorrelationSeries
from app.schema.potential_schema import Potential
from app.schema.spectral_schema import EigenPair
from app.services.contour_service import rotation_angle, saddle_params
from app.services.discretize_service import TransferKernel, assemble_operator, auto_resolution, build_grid
from app.services.observables import Observable
from app.services.potential_service import eval_potential, rotate
from app.services.spectral_service import SpectralService

logger = logging.getLogger(__name__)

# 分母下溢保护
DENOMINATOR_FLOOR = 1e-300
# ⟨u₀, ū₀⟩ 低于此值视为准零配对
PAIRING_FLOOR = 1e-6
# 衰减率拟合时可用取值的下限
VALUE_FLOOR = 1e-13
MAX_BRUTE_FORCE_SITES = 3
MAX_BRUTE_FORCE_NODES = 200


def correlation_decay_rate(values, burn_in: int = 3) -> float:
    """对 n ≥ burn_in 且 |value| > 1e-13 的点拟合 ln|c(n)| 的斜率，返回 exp(slope)

    Raises:
        ChainError: 可用点少于 5 个
    """
    n = np.arange(len(values))
    magnitudes = np.abs(np.asarray(values, dtype=complex))
    usable = (n >= burn_in) & (magnitudes > VALUE_FLOOR)
    if np.count_nonzero(usable) < 5:
        raise ChainError(f"可用于拟合的间距只有 {np.count_nonzero(usable)} 个（需要 ≥ 5 个 |c(n)| > {VALUE_FLOOR}）")
    slope, _ = np.polyfit(n[usable], np.log(magnitudes[usable]), 1)
    return float(math.exp(slope))


def _gaussian_precision(v2: float, W: float, sites: int) -> np.ndarray:
    """Q = v2·I + 2W²·L_path，L_path 为路径图 Laplace 矩阵"""
    laplacian = np.diag(np.full(sites, 2.0)) - np.eye(sites, k=1) - np.eye(sites, k=-1)
    if sites > 0:
        laplacian[0, 0] = laplacian[-1, -1] = 1.0
    if sites == 1:
        laplacian[0, 0] = 0.0
    return v2 * np.eye(sites) + 2 * W ** 2 * laplacian


def gaussian_chain_moment(v2: float, W: float, M: int, N: int) -> float:
    """二次势 V(x) = v2/2·x² 的有限链上 ⟨φ_M²⟩ = (Q⁻¹)_MM"""
    Q = _gaussian_precision(v2, W, M + N + 1)
    return float(np.linalg.inv(Q)[M, M])


def gaussian_chain_rate(v2: float, W: float) -> float:
    """无限 Gaussian 链协方差 ⟨φ₀φ_n⟩ ∝ rⁿ 的特征根 r"""
    s = v2 + 4 * W ** 2
    return (s - math.sqrt(s ** 2 - 16 * W ** 4)) / (4 * W ** 2)


class ChainService:
    """链模型服务"""

    def __init__(
        self,
        spectral: SpectralService,
        resolution_tol: float = 1e-10,
        max_half_length: float = 40.0,
    ):
        """初始化链模型服务

        Args:
            spectral: 谱分析服务
            resolution_tol: auto_resolution 的截断容差
            max_half_length: 截断长度上限
        """
        self.spectral = spectral
        self.resolution_tol = resolution_tol
        self.max_half_length = max_half_length

    def build_model(
        self,
        base: Potential,
        W: float,
        zeta_angle: Optional[float] = None,
        half_length: Optional[float] = None,
        count: Optional[int] = None,
    ) -> ChainModel:
        """由 V 构造链模型

        Args:
            base: 未旋转的势 V
            W: 耦合强度
            zeta_angle: arg ζ，缺省时由 V″(0) 求解；取 0 得到未旋转的积分
            half_length: 固定截断长度 L
            count: 固定节点数
        """
        if zeta_angle is None:
            zeta_angle = rotation_angle(base.second_derivative_at_zero)
        zeta = complex(np.exp(1j * zeta_angle))
        potential = rotate(base, zeta)
        if half_length is None or count is None:
            L, N = auto_resolution(W, zeta, potential, self.resolution_tol, False, self.max_half_length)
            half_length = half_length if half_length is not None else L
            if count is None:
                count = max(8, math.ceil(N * half_length / L))
        grid = build_grid(half_length, count)
        kernel = TransferKernel(W=W, zeta_angle=zeta_angle, potential=potential)
        matrix = assemble_operator(kernel, grid).matrix
        boundary = grid.sqrt_weights * np.exp(-0.5 * np.asarray(eval_potential(potential, grid.nodes)))
        if not np.all(np.isfinite(boundary)):
            raise ChainError("边界向量 B 在网格上非有限")
        logger.info(f"链模型: {potential.label}, W={W}, L={grid.half_length:.6g}, N={grid.count}")
        return ChainModel(
            base=base,
            potential=potential,
            zeta_angle=zeta_angle,
            W=W,
            grid=grid,
            kernel=kernel,
            matrix=matrix,
            boundary=boundary,
        )

    @staticmethod
    def _observable_on_grid(model: ChainModel, observable: Observable) -> np.ndarray:
        return observable.rotated(model.zeta)(np.asarray(model.grid.nodes))

    def finite_chain_mean(self, model: ChainModel, observable: Observable, M: int, N: int) -> complex:
        """(K^M b)ᵀ·diag(F_ζ)·(K^N b) / (K^M b)ᵀ(K^N b)

        每一步按范数重新缩放，缩放因子在比值中抵消。
        """
        if M < 0 or N < 0:
            raise ValueError("M 与 N 必须非负")
        left = self._power_apply(model.matrix, model.boundary, M)
        right = self._power_apply(model.matrix, model.boundary, N)
        f = self._observable_on_grid(model, observable)
        denominator = left @ right
        if abs(denominator) < DENOMINATOR_FLOOR:
            raise ChainError(f"有限链分母 |{denominator}| 低于下溢保护 {DENOMINATOR_FLOOR}")
        return complex((left * f) @ right / denominator)

    @staticmethod
    def _power_apply(matrix: np.ndarray, vector: np.ndarray, steps: int) -> np.ndarray:
        v = vector / np.linalg.norm(vector)
        for _ in range(steps):
            v = matrix @ v
            v = v / np.linalg.norm(v)
        return v

    def brute_force_tensor_mean(self, model: ChainModel, observable: Observable, M: int, N: int) -> complex:
        """在完整张量网格上直接求和的有限链均值，不复用矩阵乘积

        Raises:
            ValueError: 格点数超过 3 或网格节点超过 200
        """
        sites = M + N + 1
        if M < 0 or N < 0 or sites > MAX_BRUTE_FORCE_SITES:
            raise ValueError(f"暴力求和要求 M + N + 1 ≤ {MAX_BRUTE_FORCE_SITES}，实际 {sites}")
        if model.grid.count > MAX_BRUTE_FORCE_NODES:
            raise ValueError(f"暴力求和要求网格节点 ≤ {MAX_BRUTE_FORCE_NODES}，实际 {model.grid.count}")
        nodes = np.asarray(model.grid.nodes)
        w = np.asarray(model.grid.weights)
        K = model.kernel.matrix(nodes)
        B = np.exp(-0.5 * np.asarray(eval_potential(model.potential, nodes)))
        f = self._observable_on_grid(model, observable)

        numerator = 0j
        denominator = 0j
        for i in range(nodes.size):
            if sites == 1:
                weight = np.array(w[i] * B[i] * B[i])
                observed = weight * f[i]
            elif sites == 2:
                weight = w[i] * B[i] * K[i, :] * w * B
                observed = weight * (f[i] if M == 0 else f)
            else:
                weight = (w[i] * B[i] * K[i, :] * w)[:, None] * K * (w * B)[None, :]
                if M == 0:
                    observed = weight * f[i]
                elif M == 1:
                    observed = weight * f[:, None]
                else:
                    observed = weight * f[None, :]
            numerator += observed.sum()
            denominator += weight.sum()
        if abs(denominator) < DENOMINATOR_FLOOR:
            raise ChainError(f"暴力求和分母 |{denominator}| 低于下溢保护")
        return complex(numerator / denominator)

    def eigenpair(self, model: ChainModel) -> EigenPair:
        return self.spectral.top_eigenpair(model.matrix)

    def mean_observable(self, model: ChainModel, observable: Observable, pair: Optional[EigenPair] = None) -> complex:
        """M, N → ∞ 的极限 ⟨F_ζu₀, ū₀⟩/⟨u₀, ū₀⟩

        Raises:
            ChainError: |⟨u₀, ū₀⟩| < 1e-6
        """
        pair = pair or self.eigenpair(model)
        u0 = pair.vector
        pairing = self._pairing(pair)
        f = self._observable_on_grid(model, observable)
        return complex(np.sum(f * u0 * u0) / pairing)

    @staticmethod
    def _pairing(pair: EigenPair) -> complex:
        if abs(pair.bilinear_norm) < PAIRING_FLOOR:
            raise ChainError(f"|⟨u₀, ū₀⟩| = {abs(pair.bilinear_norm):.3e} 过小，超出适用范围")
        return pair.bilinear_norm

    def _connected_iterates(
        self,
        model: ChainModel,
        F: Observable,
        G: Observable,
        n_max: int,
        pair: EigenPair,
    ):
        u0 = pair.vector
        pairing = self._pairing(pair)
        f = self._observable_on_grid(model, F)
        g = self._observable_on_grid(model, G)
        K_hat = model.matrix / pair.eigenvalue
        mean_f = np.sum(f * u0 * u0) / pairing
        # 先扣除 u₀ 分量：Σ K̂ⁿ(F_ζu₀ − ⟨F⟩u₀)·G_ζu₀ 直接给出连通部分
        v = f * u0 - mean_f * u0
        target = g * u0
        for n in range(n_max + 1):
            yield n, complex(np.sum(v * target) / pairing)
            v = K_hat @ v

    def two_point_connected(
        self,
        model: ChainModel,
        F: Observable,
        G: Observable,
        n: int,
        pair: Optional[EigenPair] = None,
    ) -> complex:
        """⟨K̂ⁿF_ζu₀, G_ζū₀⟩/⟨u₀, ū₀⟩ − ⟨F⟩⟨G⟩，K̂ = M/λ₀"""
        if n < 0:
            raise ValueError(f"n 必须非负，实际 {n}")
        pair = pair or self.eigenpair(model)
        value = 0j
        for _, value in self._connected_iterates(model, F, G, n, pair):
            pass
        return value

    def correlation_series(
        self,
        model: ChainModel,
        F: Observable,
        G: Observable,
        n_max: int,
        burn_in: int = 3,
        pair: Optional[EigenPair] = None,
    ) -> CorrelationSeries:
        """n = 0..n_max 的连通两点函数与拟合衰减率

        各 n 共享迭代 K̂ⁿv，由单个工作者顺序计算。
        """
        pair = pair or self.eigenpair(model)
        values = [value for _, value in self._connected_iterates(model, F, G, n_max, pair)]
        try:
            rate = correlation_decay_rate(values, burn_in)
        except ChainError as e:
            logger.warning(f"无法拟合衰减率: {e}")
            rate = None
        u_second = model.potential.second_derivative_at_zero
        c0 = saddle_params(model.W, model.zeta, u_second).c0
        second = self.spectral.top_eigenvalues(model.matrix, 2)
        return CorrelationSeries(
            separations=list(range(n_max + 1)),
            values=values,
            rate=rate,
            predicted_gap=c0 / model.W,
            spectral_ratio=abs(second[1].eigenvalue / second[0].eigenvalue),
            F=F.name,
            G=G.name,
            W=model.W,
        )

    @staticmethod
    def periodic_mean(model: ChainModel, observable: Observable, length: int) -> complex:
        """周期边界 tr(K^L·diag(F_ζ))/tr(K^L)，重复平方并逐次缩放"""
        if length < 1:
            raise ValueError(f"length 必须为正，实际 {length}")
        base = model.matrix / np.linalg.norm(model.matrix)
        result = None
        exponent = length
        while exponent:
            if exponent & 1:
                result = base.copy() if result is None else result @ base
                result = result / np.linalg.norm(result)
            exponent >>= 1
            if exponent:
                base = base @ base
                base = base / np.linalg.norm(base)
        f = observable.rotated(model.zeta)(np.asarray(model.grid.nodes))
        diagonal = np.diag(result)
        trace = diagonal.sum()
        if abs(trace) < DENOMINATOR_FLOOR:
            raise ChainError("周期边界的迹退化")
        return complex(np.sum(diagonal * f) / trace)
