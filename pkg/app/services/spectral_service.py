import cmath
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.errors import ConvergenceError
from app.schema.grid_schema import Grid
from app.schema.spectral_schema import BlockOperators, BlockReport, EigenPair, OverlapReport, SemigroupReport
from app.services.discretize_service import TransferKernel, assemble_operator, project_function

logger = logging.getLogger(__name__)

# ⟨u₀, g_α⟩ 低于此值时改用最大分量固定相位
_PHASE_FLOOR = 1e-8


class SpectralService:
    """谱分析引擎

    只需要谱的顶端，全部使用幂迭代：
    - 复对称矩阵的特征对，双线性投影 u uᵀ/(uᵀu) 收缩
    - MᴴM 的奇异值，Hermite 收缩
    内积约定 ⟨u, v⟩ = Σ u_i·conj(v_i)。
    """

    def __init__(self, tol: float = 1e-10, max_iters: int = 20000, seed: int = 0):
        """初始化谱分析服务

        Args:
            tol: 特征值相对容差
            max_iters: 幂迭代最大次数
            seed: 随机初始向量的种子
        """
        self.tol = tol
        self.max_iters = max_iters
        self.seed = seed

    def _start_vector(self, n: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)

    def _iterate(self, apply: Callable[[np.ndarray], np.ndarray], start: np.ndarray, label: str):
        """幂迭代主循环，返回 (Rayleigh 商, 向量, 残差, 迭代次数)

        收敛条件：相邻 Rayleigh 商之差 < tol·|ρ| 且残差 ‖Au − ρu‖ < tol·|ρ|
        """
        u = start / np.linalg.norm(start)
        previous = None
        residual = math.inf
        for iteration in range(1, self.max_iters + 1):
            w = apply(u)
            norm_w = np.linalg.norm(w)
            if norm_w == 0:
                return 0j, u, 0.0, iteration
            rho = np.vdot(u, w)
            residual = float(np.linalg.norm(w - rho * u))
            scale = self.tol * abs(rho)
            if previous is not None and abs(rho - previous) < scale and residual < scale:
                logger.debug(f"{label}: {iteration} 次迭代收敛，残差 {residual:.3e}")
                return complex(rho), u, residual, iteration
            previous = rho
            u = w / norm_w
        raise ConvergenceError(
            f"{label}: {self.max_iters} 次迭代未收敛，残差 {residual:.3e}（谱顶端可能近简并）",
            residual=residual,
            iterations=self.max_iters,
        )

    @staticmethod
    def _fix_phase(u: np.ndarray, reference: Optional[np.ndarray]) -> np.ndarray:
        """使 ⟨u, g⟩ 为非负实数；⟨u, g⟩ ≈ 0 时使最大分量为正实数"""
        if reference is not None:
            overlap = np.vdot(reference, u)
            if abs(overlap) > _PHASE_FLOOR:
                return u * (abs(overlap) / overlap)
        pivot = u[np.argmax(np.abs(u))]
        return u * (abs(pivot) / pivot)

    def top_eigenpair(self, M: np.ndarray, reference: Optional[np.ndarray] = None) -> EigenPair:
        """模最大的特征值与 Hermite 归一化的特征向量

        Args:
            M: 方阵
            reference: 固定相位用的参考向量（通常是 project_function(g_α)）

        Raises:
            ConvergenceError: max_iters 内未收敛
        """
        M = np.asarray(M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"M 必须是方阵，实际形状 {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("M 含有非有限元素")
        rho, u, residual, iterations = self._iterate(lambda v: M @ v, self._start_vector(M.shape[0]), "top_eigenpair")
        u = self._fix_phase(u, reference)
        return EigenPair(
            eigenvalue=rho,
            vector=u,
            residual=residual,
            iterations=iterations,
            bilinear_norm=complex(np.sum(u * u)),
        )

    def top_eigenvalues(self, M: np.ndarray, k: int, reference: Optional[np.ndarray] = None) -> List[EigenPair]:
        """前 k 个特征对，逐个以 M ← M − λ u uᵀ/(uᵀu) 收缩"""
        deflated = np.array(M, dtype=complex)
        pairs = []
        for _ in range(k):
            pair = self.top_eigenpair(deflated, reference)
            pairs.append(pair)
            u = pair.vector
            deflated = deflated - pair.eigenvalue * np.outer(u, u) / np.sum(u * u)
        return pairs

    def singular_pairs(self, M: np.ndarray, k: int) -> List[Tuple[float, np.ndarray]]:
        """MᴴM 的前 k 个特征对 (s_j, v_j)，Hermite 收缩

        Raises:
            ConvergenceError: 第 j 个未收敛时携带已得到的 s_0..s_{j-1}
        """
        if not 1 <= k <= 10:
            raise ValueError(f"k 必须在 [1, 10] 内，实际 {k}")
        M = np.asarray(M)
        Mh = M.conj().T
        found: List[Tuple[float, np.ndarray]] = []

        def apply(v: np.ndarray) -> np.ndarray:
            w = Mh @ (M @ v)
            for value, vector in found:
                w = w - value ** 2 * vector * np.vdot(vector, v)
            return w

        for j in range(k):
            try:
                rho, v, _, _ = self._iterate(apply, self._start_vector(M.shape[1]), f"singular value {j}")
            except ConvergenceError as e:
                e.partial = [value for value, _ in found]
                raise
            found.append((math.sqrt(max(rho.real, 0.0)), v))
        return found

    def top_singular_values(self, M: np.ndarray, k: int) -> List[float]:
        """前 k 个奇异值，递减"""
        return [value for value, _ in self.singular_pairs(M, k)]

    @staticmethod
    def block_operators(M: np.ndarray, mu: complex, g: np.ndarray) -> BlockOperators:
        """K̂ = μ⁻¹M 关于 span(g) ⊕ g^⊥ 的块

        A = gᴴK̂g，B = P K̂ᴴ g，C = P K̂ g，D = P K̂ P，其中 P = I − g gᴴ。
        """
        if abs(np.linalg.norm(g) - 1) > 1e-8:
            raise ValueError(f"g 必须归一化，实际 ‖g‖ = {np.linalg.norm(g)}")
        K_hat = np.asarray(M) / mu
        K_g = K_hat @ g
        Kh_g = K_hat.conj().T @ g
        A = np.vdot(g, K_g)
        row = g.conj() @ K_hat
        # P K̂ P = K̂ − g(gᴴK̂) − (K̂g)gᴴ + A·g gᴴ
        D = K_hat - np.outer(g, row) - np.outer(K_g, g.conj()) + A * np.outer(g, g.conj())
        return BlockOperators(
            g=g,
            A=complex(A),
            B=Kh_g - g * np.vdot(g, Kh_g),
            C=K_g - g * A,
            D=D,
        )

    def block_decomposition(
        self,
        M: np.ndarray,
        mu: complex,
        g: np.ndarray,
        pair: Optional[EigenPair] = None,
        W: float = math.nan,
        c0: float = math.nan,
    ) -> BlockReport:
        """块分解的范数报告，‖D‖ 取 P K̂ P 的最大奇异值"""
        blocks = self.block_operators(M, mu, g)
        frobenius = np.linalg.norm(blocks.D)
        if frobenius <= 1e-12 * max(1.0, np.linalg.norm(np.asarray(M) / mu)):
            normD = float(frobenius)
        else:
            normD = self.top_singular_values(blocks.D, 1)[0]
        if pair is None:
            pair = self.top_eigenpair(M, reference=g)
        return BlockReport(
            W=W,
            A=blocks.A,
            normB=float(np.linalg.norm(blocks.B)),
            normC=float(np.linalg.norm(blocks.C)),
            normD=normD,
            eigenvalue=pair.eigenvalue,
            mu=complex(mu),
            u0_minus_galpha=float(np.linalg.norm(pair.vector - g)),
            c0=c0,
        )

    def semigroup_decay(
        self,
        M: np.ndarray,
        u0: np.ndarray,
        n_steps: int,
        trials: int,
        scale: Optional[complex] = None,
    ) -> SemigroupReport:
        """不变补空间 {u : Σ u_i(u₀)_i = 0} 上 K̂ = M/scale 的衰减率

        scale 缺省为 λ₀ = u₀ᵀMu₀/(u₀ᵀu₀)；每一步都重新投影以消除数值泄漏。
        """
        if n_steps < 10:
            raise ValueError(f"n_steps 至少为 10，实际 {n_steps}")
        M = np.asarray(M)
        pairing = np.sum(u0 * u0)
        if scale is None:
            scale = (u0 @ (M @ u0)) / pairing
        K_hat = M / scale

        def project(v: np.ndarray) -> np.ndarray:
            return v - u0 * (np.sum(u0 * v) / pairing)

        rng = np.random.default_rng(self.seed)
        best_rate = 0.0
        best_asymptotic = 0.0
        max_leakage = 0.0
        for _ in range(trials):
            u = project(rng.standard_normal(u0.size) + 1j * rng.standard_normal(u0.size))
            u = u / np.linalg.norm(u)
            log_growth = 0.0
            factor = 0.0
            for _ in range(n_steps):
                w = project(K_hat @ u)
                factor = float(np.linalg.norm(w))
                if factor == 0:
                    log_growth = -math.inf
                    break
                max_leakage = max(max_leakage, abs(np.sum(w * u0)) / factor)
                log_growth += math.log(factor)
                u = w / factor
            best_rate = max(best_rate, math.exp(log_growth / n_steps))
            best_asymptotic = max(best_asymptotic, factor)
        logger.debug(f"semigroup_decay: rate={best_rate:.8g}, asymptotic={best_asymptotic:.8g}")
        return SemigroupReport(
            rate=best_rate,
            asymptotic_rate=best_asymptotic,
            max_leakage=max_leakage,
            n_steps=n_steps,
            trials=trials,
            seed=self.seed,
        )

    @staticmethod
    def schur_bound(kernel: TransferKernel, grid: Grid) -> float:
        """max_i Σ_j w_j·|K(x_i, x_j)|

        |K(x, y)| = |K(y, x)| 时由加权 Schur 检验，它也是 Nyström 矩阵谱范数的上界。
        """
        raw = kernel.matrix(np.asarray(grid.nodes))
        return float(np.max(np.abs(raw) @ grid.weights))

    @staticmethod
    def overlap_integral(
        kernel: TransferKernel,
        alpha: float,
        grid: Grid,
        M: Optional[np.ndarray] = None,
        C: float = 1.0,
    ) -> OverlapReport:
        """I(α) = ∫∫ e^{-αx²}·K(x, y)·e^{-αy²} dx dy 的张量积求积

        渐近值 sqrt(π/(W²ζ²+α))·sqrt(π/(2α))。
        """
        W = kernel.W
        zeta_sq = kernel.zeta ** 2
        u_second = kernel.potential.second_derivative_at_zero
        closeness = abs(alpha ** 2 - W ** 2 * zeta_sq * u_second / 2)
        precondition_ok = closeness <= C * W ** 1.5
        if not precondition_ok:
            logger.warning(
                f"overlap_integral: |α² − W²ζ²U″(0)/2| = {closeness:.4g} 超过 C·W^(3/2) = {C * W ** 1.5:.4g}"
            )
        if M is None:
            M = assemble_operator(kernel, grid).matrix
        v = project_function(lambda x: np.exp(-alpha * x ** 2), grid)
        value = complex(v @ (M @ v))
        asymptotic = cmath.sqrt(math.pi / (W ** 2 * zeta_sq + alpha)) * math.sqrt(math.pi / (2 * alpha))
        return OverlapReport(
            value=value,
            asymptotic=asymptotic,
            relative_error=abs(value / asymptotic - 1),
            precondition_ok=precondition_ok,
        )

    @staticmethod
    def harmonic_residual(M: np.ndarray, M_tilde: np.ndarray, g: np.ndarray) -> float:
        """‖(M − M̃)g‖"""
        return float(np.linalg.norm((np.asarray(M) - np.asarray(M_tilde)) @ g))
