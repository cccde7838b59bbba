import asyncio
import logging
import math
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from app.errors import TransferLabError
from app.schema.harmonic_schema import HarmonicParams
from app.schema.potential_schema import Potential
from app.schema.sweep_schema import PowerLawFit, SweepResult, SweepRow
from app.services import harmonic_service
from app.services.contour_service import saddle_params
from app.services.discretize_service import (
    TransferKernel,
    assemble_operator,
    auto_resolution,
    build_grid,
    project_function,
)
from app.services.harmonic_service import gaussian_eigenfunction
from app.services.spectral_service import SpectralService

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4

# 比值类度量不做幂律拟合
_UNFITTED = {"gapD", "gapD_W_over_c0"}


def fit_power_law(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """在 (ln W, ln value) 上做最小二乘直线拟合

    Raises:
        ValueError: 点数少于 3 或存在非正值
    """
    if len(points) < 3:
        raise ValueError(f"幂律拟合至少需要 3 个点，实际 {len(points)}")
    W = np.array([w for w, _ in points], dtype=float)
    values = np.array([v for _, v in points], dtype=float)
    if np.any(W <= 0) or np.any(values <= 0):
        raise ValueError("幂律拟合要求 W 与取值均为正")
    x, y = np.log(W), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(slope=float(slope), intercept=float(intercept), r2=r2, points=len(points))


def _fit_metrics(rows: List[SweepRow]) -> Dict[str, PowerLawFit]:
    names = sorted({name for row in rows if not row.failed for name in row.metrics})
    fits = {}
    for name in names:
        if name in _UNFITTED:
            continue
        points = [
            (row.W, row.metrics[name])
            for row in rows
            if not row.failed and name in row.metrics and math.isfinite(row.metrics[name]) and row.metrics[name] > 0
        ]
        if len(points) < MIN_FIT_POINTS:
            logger.info(f"度量 {name} 只有 {len(points)} 个正值点，跳过拟合")
            continue
        fits[name] = fit_power_law(points)
    return fits


class AsymptoticsService:
    """W 扫描实验

    每个 W 的计算相互独立，在线程池中并发执行，结果按 W 顺序组装。
    """

    def __init__(
        self,
        spectral: SpectralService,
        resolution_tol: float = 1e-10,
        max_half_length: float = 40.0,
        threads: int = 1,
    ):
        """初始化扫描服务

        Args:
            spectral: 谱分析服务
            resolution_tol: auto_resolution 的截断容差
            max_half_length: 截断长度上限
            threads: 并发工作线程数
        """
        self.spectral = spectral
        self.resolution_tol = resolution_tol
        self.max_half_length = max_half_length
        self.threads = threads

    async def _run_rows(self, W_list: Sequence[float], task: Callable[[float], SweepRow]) -> List[SweepRow]:
        semaphore = asyncio.Semaphore(self.threads)

        async def run(W: float) -> SweepRow:
            async with semaphore:
                try:
                    return await asyncio.to_thread(task, W)
                except TransferLabError as e:
                    logger.warning(f"W={W} 计算失败: {e}")
                    return SweepRow(W=W, failed=True, error=str(e))
                # numpy 的 LinAlgError 也是 ValueError
                except (ValueError, ArithmeticError) as e:
                    logger.warning(f"W={W} 数值异常 {type(e).__name__}: {e}")
                    return SweepRow(W=W, failed=True, error=f"{type(e).__name__}: {e}")

        return list(await asyncio.gather(*(run(W) for W in W_list)))

    @staticmethod
    def _check_w_list(W_list: Sequence[float]) -> None:
        if len(W_list) < MIN_FIT_POINTS:
            raise ValueError(f"W_list 至少需要 {MIN_FIT_POINTS} 个取值")
        if any(b <= a for a, b in zip(W_list, W_list[1:])):
            raise ValueError("W_list 必须严格递增")

    def main_proposition_row(self, potential: Potential, zeta_angle: float, W: float) -> SweepRow:
        """单个 W 的块分解、本征对、调和残差与重叠积分"""
        zeta = complex(np.exp(1j * zeta_angle))
        params = saddle_params(W, zeta, potential.second_derivative_at_zero)
        L, N = auto_resolution(W, zeta, potential, self.resolution_tol, True, self.max_half_length)
        grid = build_grid(L, N)
        kernel = TransferKernel(W=W, zeta_angle=zeta_angle, potential=potential)
        M = assemble_operator(kernel, grid).matrix
        M_tilde = assemble_operator(kernel.harmonic_approximation(), grid).matrix
        g = project_function(lambda x: gaussian_eigenfunction(params.alpha, x), grid)

        pair = self.spectral.top_eigenpair(M, reference=g)
        blocks = self.spectral.block_decomposition(M, params.mu, g, pair, W=W, c0=params.c0)
        tilde_pair = self.spectral.top_eigenpair(M_tilde, reference=g)
        residual = self.spectral.harmonic_residual(M, M_tilde, g)
        overlap = self.spectral.overlap_integral(kernel, params.alpha, grid, M=M)
        s0 = self.spectral.top_singular_values(M, 1)[0]

        metrics = {
            "abs_A_minus_1": abs(blocks.A - 1),
            "normB": blocks.normB,
            "normC": blocks.normC,
            "gapD": blocks.gapD,
            "gapD_W_over_c0": blocks.gapD * W / params.c0,
            "lambda0_over_mu_minus_1": abs(pair.eigenvalue / params.mu - 1),
            "lambda0_over_tilde_minus_1": abs(pair.eigenvalue / tilde_pair.eigenvalue - 1),
            "u0_minus_galpha": blocks.u0_minus_galpha,
            "s0_over_lambda0_minus_1": abs(s0 / abs(pair.eigenvalue) - 1),
            "overlap_relative_error": overlap.relative_error,
            "harmonic_residual_over_mu": residual / abs(params.mu),
        }
        return SweepRow(W=W, metrics=metrics, grid_L=grid.half_length, grid_N=grid.count)

    async def sweep_main_proposition(
        self,
        potential: Potential,
        zeta_angle: float,
        W_list: Sequence[float],
    ) -> SweepResult:
        """对每个 W 验证块分解的界，并拟合各度量的幂律

        δ̂ = −1 − slope(|A−1|)；失败的 W 保留在表中但不参与拟合。
        """
        self._check_w_list(W_list)
        zeta = complex(np.exp(1j * zeta_angle))
        c0 = saddle_params(W_list[0], zeta, potential.second_derivative_at_zero).c0
        rows = await self._run_rows(W_list, lambda W: self.main_proposition_row(potential, zeta_angle, W))
        fits = _fit_metrics(rows)
        delta_hat = -1.0 - fits["abs_A_minus_1"].slope if "abs_A_minus_1" in fits else None
        return SweepResult(
            experiment="main-proposition",
            W_values=list(W_list),
            rows=rows,
            fits=fits,
            c0=c0,
            delta_hat=delta_hat,
        )

    def _grid_for(self, p: HarmonicParams):
        kernel = harmonic_service.harmonic_kernel(p)
        L, N = auto_resolution(p.W, p.zeta, kernel.potential, self.resolution_tol, True, self.max_half_length)
        return kernel, build_grid(L, N)

    def singular_ratio_row(
        self,
        zeta_angle: float,
        a: float,
        b: float,
        W: float,
        j_max: int,
        numeric: bool,
    ) -> SweepRow:
        """单个 W 的 s_j/|λ_j| − 1（闭式）与网格上的谐振子度量"""
        p = HarmonicParams(W=W, zeta_angle=zeta_angle, a=a, b=b)
        metrics = {}
        for j in range(j_max + 1):
            s_j = harmonic_service.harmonic_singular_value(p, j)
            lam_j = abs(harmonic_service.harmonic_eigenvalue(p, j))
            metrics[f"s{j}_over_lambda{j}_minus_1"] = abs(s_j / lam_j - 1)

        kernel, grid = self._grid_for(p)
        M = assemble_operator(kernel, grid).matrix
        # g_α 取 α = W·sqrt(ζ²(a+ib))，正规情形下为实数
        alpha_saddle = (W * np.sqrt(p.zeta ** 2 * p.coupling)).real
        mu = complex(np.sqrt(math.pi / (W ** 2 * p.zeta ** 2 + alpha_saddle)))
        g = project_function(lambda x: gaussian_eigenfunction(alpha_saddle, x), grid)
        metrics["harmonic_gaussian_residual"] = float(np.linalg.norm(M @ g - mu * g)) / abs(mu)

        pairs = self.spectral.singular_pairs(M, j_max + 1 if numeric else 1)
        v = pairs[0][1]
        overlap = np.vdot(v, g)
        v = v * (overlap / abs(overlap))
        metrics["singular_function_distance"] = float(np.linalg.norm(v - g))

        if numeric:
            exact_s = [harmonic_service.harmonic_singular_value(p, j) for j in range(j_max + 1)]
            metrics["nystrom_singular_rel_error"] = max(
                abs(value / exact - 1) for (value, _), exact in zip(pairs, exact_s)
            )
            eigen = self.spectral.top_eigenvalues(M, j_max + 1)
            metrics["nystrom_eigen_rel_error"] = max(
                abs(pair.eigenvalue / harmonic_service.harmonic_eigenvalue(p, j) - 1)
                for j, pair in enumerate(eigen)
            )
        logger.debug(f"singular ratio W={W}: α_hr={harmonic_service.alpha_hr(p)}, N={grid.count}")
        return SweepRow(W=W, metrics=metrics, grid_L=grid.half_length, grid_N=grid.count)

    async def sweep_singular_ratio(
        self,
        zeta_angle: float,
        a: float,
        b: float,
        W_list: Sequence[float],
        j_max: int,
    ) -> SweepResult:
        """正规情形谐振子族的 s_j/|λ_j| − 1 扫描

        Nyström 交叉检查只在最小与最大的 W 上进行。
        """
        self._check_w_list(W_list)
        first = HarmonicParams(W=W_list[0], zeta_angle=zeta_angle, a=a, b=b)
        if not first.normal_case:
            raise ValueError("sweep_singular_ratio 要求 ζ²(a+ib) 为正实数")
        ends = {W_list[0], W_list[-1]}
        rows = await self._run_rows(
            W_list,
            lambda W: self.singular_ratio_row(zeta_angle, a, b, W, j_max, W in ends),
        )
        fits = {
            name: fit
            for name, fit in _fit_metrics(rows).items()
            if not name.startswith("nystrom_")
        }
        c0 = saddle_params(W_list[0], first.zeta, 2 * first.coupling).c0
        return SweepResult(
            experiment="singular-ratio",
            W_values=list(W_list),
            rows=rows,
            fits=fits,
            c0=c0,
        )
