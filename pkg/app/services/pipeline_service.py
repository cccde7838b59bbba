"""实验流水线

每个子命令对应一条流水线：解析模型 → 构造网格与算子 → 调用各服务 → 组装结果。
命令行与 HTTP 接口共用这些流水线，前者负责写文件，后者直接返回结果模型。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from app.errors import AssumptionViolation, ConfigurationError, ContourError
from app.schema.chain_schema import ContourComparison
from app.schema.contour_schema import ResolvedModel, RotationParams
from app.schema.grid_schema import PANEL_ORDER, Grid
from app.schema.harmonic_schema import HarmonicParams
from app.schema.potential_schema import Potential
from app.schema.spectral_schema import SpectrumReport
from app.services import harmonic_service
from app.services.asymptotics_service import AsymptoticsService
from app.services.chain_service import MAX_BRUTE_FORCE_NODES, ChainService
from app.services.contour_service import resolve_model, rotation_angle, saddle_params
from app.services.discretize_service import (
    TransferKernel,
    assemble_operator,
    auto_resolution,
    build_grid,
    project_function,
)
from app.services.harmonic_service import gaussian_eigenfunction
from app.services.observables import Observable, get_observable
from app.services.potential_service import PotentialService, rotate
from app.services.spectral_service import SpectralService

if TYPE_CHECKING:
    from app.config import Settings

logger = logging.getLogger(__name__)


@dataclass
class PipelineOutput:
    """一条流水线的全部产物

    Attributes:
        result: 主结果模型（HTTP 接口的响应体）
        rows: CSV 行
        grid: 实际使用的网格 (L, N)
        extras: 写入 JSON 的附加结果
        summary: 打印到标准输出的单行摘要
        exit_code: 0，或检测到假设不成立时的 3
    """
    result: BaseModel
    rows: List[Dict[str, Any]]
    grid: Dict[str, Any]
    extras: Dict[str, Any] = field(default_factory=dict)
    summary: List[str] = field(default_factory=list)
    exit_code: int = 0

    def payload(self) -> Dict[str, Any]:
        data = self.result.model_dump()
        for key, value in self.extras.items():
            data[key] = value.model_dump() if isinstance(value, BaseModel) else value
        return data


class ExperimentPipeline:
    """由 Settings 组装各服务并运行子命令"""

    def __init__(self, settings: "Settings"):
        """
        Args:
            settings: 已校验的完整配置
        """
        self.settings = settings
        solver = settings.solver
        sampling = settings.experiment.sampling
        self.spectral = SpectralService(tol=solver.tol, max_iters=solver.max_iters, seed=solver.seed)
        self.potentials = PotentialService(
            real_points=sampling.real_points,
            strip_lines=sampling.strip_lines,
            extent=sampling.extent,
            sector_rays=sampling.sector_rays,
            u4_ceiling=sampling.u4_ceiling,
        )
        self.asymptotics = AsymptoticsService(
            self.spectral,
            resolution_tol=solver.resolution_tol,
            max_half_length=solver.max_half_length,
            threads=solver.threads,
        )
        self.chain = ChainService(
            self.spectral,
            resolution_tol=solver.resolution_tol,
            max_half_length=solver.max_half_length,
        )

    @classmethod
    def with_overrides(
        cls,
        settings: "Settings",
        model: Optional[Dict[str, Any]] = None,
        experiment: Optional[Dict[str, Any]] = None,
    ) -> "ExperimentPipeline":
        """在给定配置上覆盖 [model] / [experiment] 的部分字段，覆盖后的值重新校验

        Raises:
            pydantic.ValidationError: 覆盖后的字段不合法
        """
        update = {}
        for name, overrides in (("model", model), ("experiment", experiment)):
            if overrides:
                section = getattr(settings, name)
                merged = {**section.model_dump(), **{k: v for k, v in overrides.items() if v is not None}}
                update[name] = type(section).model_validate(merged)
        return cls(settings.model_copy(update=update))

    def resolve(self) -> ResolvedModel:
        return resolve_model(self.settings.model)

    def _grid(self, W: float, zeta: complex, potential: Potential) -> Grid:
        """auto_resolution 给出的网格；配置了 half_length 时按同一间距换算节点数"""
        solver = self.settings.solver
        L, N = auto_resolution(W, zeta, potential, solver.resolution_tol, True, solver.max_half_length)
        half_length = self.settings.model.half_length
        if half_length is None:
            return build_grid(L, N)
        count = PANEL_ORDER * math.ceil(N * half_length / L / PANEL_ORDER)
        return build_grid(half_length, max(PANEL_ORDER, count))

    def _chain_angle(self, base: Potential) -> float:
        angle = self.settings.model.zeta_angle
        return rotation_angle(base.second_derivative_at_zero) if angle is None else angle

    def _checked_observables(self, names: List[str], base: Potential, zeta: complex) -> List[Observable]:
        """F1–F2 抽样检查，任一不通过即抛出 AssumptionViolation"""
        observables = []
        for name in names:
            observable = get_observable(name)
            report = self.potentials.check_observable(observable, base, zeta)
            if not report.passed:
                raise AssumptionViolation(
                    f"观测量 {name} 不满足 F1–F2: 增长阶 {report.growth_degree} ≥ {report.degree_limit}"
                )
            observables.append(observable)
        return observables

    def oracle(self) -> PipelineOutput:
        """谐振子闭式谱表"""
        resolved = self.resolve()
        if resolved.harmonic is None:
            raise ConfigurationError(f"oracle 只适用于 quadratic 模型，实际 {self.settings.model.kind}")
        a, b = resolved.harmonic
        p = HarmonicParams(W=self.settings.model.W, zeta_angle=resolved.zeta_angle, a=a, b=b)
        result = harmonic_service.spectrum(p, self.settings.experiment.j_max)
        rows = [row.model_dump() for row in harmonic_service.oracle_rows(result)]
        summary = [
            f"j={row['j']} λ={row['eigenvalue']:.12g} s={row['singular_value']:.12g}"
            for row in rows
        ]
        return PipelineOutput(result=result, rows=rows, grid={"L": None, "N": None}, summary=summary)

    def spectrum(self) -> PipelineOutput:
        """谱顶端：前 j_max+1 个特征值、奇异值与 Schur 上界"""
        resolved = self.resolve()
        W = self.settings.model.W
        zeta = resolved.zeta
        u_second = resolved.potential.second_derivative_at_zero
        try:
            params: Optional[RotationParams] = saddle_params(W, zeta, u_second)
        except ContourError as e:
            logger.info(f"U2 不成立，省略 μ 与 c₀: {e}")
            params = None

        grid = self._grid(W, zeta, resolved.potential)
        kernel = TransferKernel(W=W, zeta_angle=resolved.zeta_angle, potential=resolved.potential)
        M = assemble_operator(kernel, grid).matrix
        reference = None
        if params is not None:
            reference = project_function(lambda x: gaussian_eigenfunction(params.alpha, x), grid)

        pairs = self.spectral.top_eigenvalues(M, self.settings.experiment.j_max + 1, reference)
        singular = self.spectral.top_singular_values(M, self.settings.solver.singular_k)

        oracle_eigen = oracle_singular = None
        if resolved.harmonic is not None:
            a, b = resolved.harmonic
            p = HarmonicParams(W=W, zeta_angle=resolved.zeta_angle, a=a, b=b)
            oracle_eigen = [harmonic_service.harmonic_eigenvalue(p, j) for j in range(len(pairs))]
            oracle_singular = [harmonic_service.harmonic_singular_value(p, j) for j in range(len(singular))]

        report = SpectrumReport(
            W=W,
            grid_L=grid.half_length,
            grid_N=grid.count,
            eigenvalues=[pair.eigenvalue for pair in pairs],
            residuals=[pair.residual for pair in pairs],
            iterations=[pair.iterations for pair in pairs],
            bilinear_norm=pairs[0].bilinear_norm,
            singular_values=singular,
            schur_bound=self.spectral.schur_bound(kernel, grid),
            mu=params.mu if params else None,
            c0=params.c0 if params else None,
            oracle_eigenvalues=oracle_eigen,
            oracle_singular_values=oracle_singular,
        )

        rows = []
        for j in range(max(len(pairs), len(singular))):
            row: Dict[str, Any] = {"j": j}
            if j < len(pairs):
                row.update(eigenvalue=pairs[j].eigenvalue, residual=pairs[j].residual, iterations=pairs[j].iterations)
                if oracle_eigen:
                    row["oracle_eigenvalue"] = oracle_eigen[j]
            if j < len(singular):
                row["singular_value"] = singular[j]
                if oracle_singular:
                    row["oracle_singular_value"] = oracle_singular[j]
            rows.append(row)
        summary = [
            f"W={W} λ0={report.eigenvalues[0]:.12g} s0={singular[0]:.12g} "
            f"schur={report.schur_bound:.6g} L={grid.half_length:.6g} N={grid.count}"
        ]
        return PipelineOutput(result=report, rows=rows, grid=grid.describe(), summary=summary)

    def blocks(self) -> PipelineOutput:
        """块分解、不变补空间上的半群衰减与重叠积分

        Raises:
            ContourError: U2 不成立
            AssumptionViolation: U1–U4 抽样检查不通过
        """
        resolved = self.resolve()
        W = self.settings.model.W
        zeta = resolved.zeta
        params = saddle_params(W, zeta, resolved.potential.second_derivative_at_zero)
        assumptions = self.potentials.check_assumptions(resolved.potential, zeta)
        if not assumptions.all_passed:
            raise AssumptionViolation(f"假设 {', '.join(assumptions.failed())} 不成立 ({resolved.potential.label})")

        grid = self._grid(W, zeta, resolved.potential)
        kernel = TransferKernel(W=W, zeta_angle=resolved.zeta_angle, potential=resolved.potential)
        M = assemble_operator(kernel, grid).matrix
        g = project_function(lambda x: gaussian_eigenfunction(params.alpha, x), grid)
        pair = self.spectral.top_eigenpair(M, reference=g)
        report = self.spectral.block_decomposition(M, params.mu, g, pair, W=W, c0=params.c0)
        solver = self.settings.solver
        semigroup = self.spectral.semigroup_decay(M, pair.vector, solver.semigroup_steps, solver.trials)
        overlap = self.spectral.overlap_integral(kernel, params.alpha, grid, M=M)

        row = {
            "W": W,
            "A": report.A,
            "normB": report.normB,
            "normC": report.normC,
            "normD": report.normD,
            "gapD": report.gapD,
            "gapD_W_over_c0": report.gapD * W / params.c0,
            "eigenvalue": report.eigenvalue,
            "mu": report.mu,
            "u0_minus_galpha": report.u0_minus_galpha,
            "semigroup_rate": semigroup.rate,
            "semigroup_asymptotic_rate": semigroup.asymptotic_rate,
            "overlap_relative_error": overlap.relative_error,
        }
        summary = [
            f"W={W} |A-1|={abs(report.A - 1):.3e} ‖B‖={report.normB:.3e} ‖C‖={report.normC:.3e} "
            f"gapD·W/c0={row['gapD_W_over_c0']:.4g} rate={semigroup.asymptotic_rate:.8g}"
        ]
        return PipelineOutput(
            result=report,
            rows=[row],
            grid=grid.describe(),
            extras={
                "gapD": report.gapD,
                "rotation": params,
                "eigenpair": pair.summary(),
                "semigroup": semigroup,
                "overlap": overlap,
                "assumptions": assumptions,
            },
            summary=summary,
        )

    async def sweep(self) -> PipelineOutput:
        """W 扫描；quadratic 模型在正规情形下追加奇异值比值扫描"""
        resolved = self.resolve()
        W_list = self.settings.model.W_list
        main = await self.asymptotics.sweep_main_proposition(resolved.potential, resolved.zeta_angle, W_list)
        results = {"main-proposition": main}
        if resolved.harmonic is not None:
            a, b = resolved.harmonic
            first = HarmonicParams(W=W_list[0], zeta_angle=resolved.zeta_angle, a=a, b=b)
            if first.normal_case:
                results["singular-ratio"] = await self.asymptotics.sweep_singular_ratio(
                    resolved.zeta_angle, a, b, W_list, self.settings.experiment.j_max
                )
            else:
                logger.info("α_hr² 不是实数，跳过奇异值比值扫描")

        rows = []
        grid: Dict[str, Any] = {}
        summary = []
        for name, sweep in results.items():
            rows.extend({"experiment": name, **record} for record in sweep.to_rows())
            grid[name] = {str(row.W): {"L": row.grid_L, "N": row.grid_N} for row in sweep.rows}
            for metric, fit in sorted(sweep.fits.items()):
                summary.append(f"{name} {metric}: slope={fit.slope:.4f} r2={fit.r2:.4f}")
            failed = [row.W for row in sweep.rows if row.failed]
            if failed:
                summary.append(f"{name} failed W: {failed}")
        if main.delta_hat is not None:
            summary.append(f"main-proposition delta_hat={main.delta_hat:.4f}")
        extras = {name: sweep for name, sweep in results.items() if name != "main-proposition"}
        return PipelineOutput(result=main, rows=rows, grid=grid, extras=extras, summary=summary)

    def correlate(self) -> PipelineOutput:
        """连通两点函数的衰减、M, N → ∞ 的均值与周期边界对照"""
        model_settings = self.settings.model
        experiment = self.settings.experiment
        base = self.resolve().base
        angle = self._chain_angle(base)
        zeta = complex(np.exp(1j * angle))
        F, G = self._checked_observables([experiment.F, experiment.G], base, zeta)
        observables = self._checked_observables(list(dict.fromkeys(experiment.observables)), base, zeta)

        model = self.chain.build_model(base, model_settings.W, angle, model_settings.half_length)
        pair = self.chain.eigenpair(model)
        series = self.chain.correlation_series(model, F, G, experiment.n_max, experiment.burn_in, pair)

        means = {}
        finite = {}
        periodic = {}
        for observable in observables:
            means[observable.name] = self.chain.mean_observable(model, observable, pair)
            finite[observable.name] = self.chain.finite_chain_mean(model, observable, experiment.M, experiment.N)
            periodic[observable.name] = self.chain.periodic_mean(model, observable, experiment.periodic_length)

        ratio = None
        if series.rate is not None:
            ratio = (1.0 - series.rate) / series.predicted_gap
        rows = [
            {"n": n, "re": value.real, "im": value.imag, "abs": abs(value)}
            for n, value in zip(series.separations, series.values)
        ]
        rate_text = "n/a" if series.rate is None else f"{series.rate:.8g}"
        summary = [
            f"W={model.W} {F.name}/{G.name}: rate={rate_text} predicted={series.predicted_rate:.8g} "
            f"|λ1/λ0|={series.spectral_ratio:.8g}"
        ]
        summary.extend(f"⟨{name}⟩={value:.10g}" for name, value in means.items())
        return PipelineOutput(
            result=series,
            rows=rows,
            grid=model.grid.describe(),
            extras={
                "ratio": ratio,
                "means": means,
                "finite_chain_means": finite,
                "periodic_means": periodic,
                "eigenvalue": pair.eigenvalue,
                "bilinear_norm": pair.bilinear_norm,
            },
            summary=summary,
        )

    def check_contour(self) -> PipelineOutput:
        """旋转与未旋转积分路径下 3 格点链均值的比较，以及有限链与暴力求和的一致性"""
        model_settings = self.settings.model
        base = self.resolve().base
        W = model_settings.W
        angle = self._chain_angle(base)
        zeta = complex(np.exp(1j * angle))
        params = saddle_params(W, zeta, rotate(base, zeta).second_derivative_at_zero)
        observables = self._checked_observables(list(dict.fromkeys(self.settings.experiment.observables)), base, zeta)

        rotated = self.chain.build_model(base, W, angle, model_settings.half_length)
        L, N = rotated.grid.half_length, rotated.grid.count
        unrotated = self.chain.build_model(base, W, 0.0, half_length=L, count=N)
        small = self.chain.build_model(base, W, angle, half_length=L, count=min(N, MAX_BRUTE_FORCE_NODES))

        comparisons = []
        for observable in observables:
            value = self.chain.finite_chain_mean(rotated, observable, 1, 1)
            reference = self.chain.finite_chain_mean(unrotated, observable, 1, 1)
            small_value = self.chain.finite_chain_mean(small, observable, 1, 1)
            brute = self.chain.brute_force_tensor_mean(small, observable, 1, 1)
            comparisons.append(ContourComparison(
                observable=observable.name,
                rotated=value,
                unrotated=reference,
                difference=abs(value - reference),
                finite_chain=small_value,
                brute_force=brute,
                oracle_difference=abs(small_value - brute),
            ))

        summary = [f"arg ζ={angle:.12g} α={params.alpha:.8g} c0={params.c0:.8g}"]
        summary.extend(
            f"{c.observable}: |rotated-unrotated|={c.difference:.3e} |chain-brute|={c.oracle_difference:.3e}"
            for c in comparisons
        )
        return PipelineOutput(
            result=params,
            rows=[c.model_dump() for c in comparisons],
            grid={"L": L, "N": N, "brute_force_N": small.grid.count},
            extras={"comparisons": [c.model_dump() for c in comparisons]},
            summary=summary,
        )

    def check_assumptions(self) -> PipelineOutput:
        """U1–U4 与 F1–F2 的抽样检查；任一不通过时退出码为 3"""
        resolved = self.resolve()
        report = self.potentials.check_assumptions(resolved.potential, resolved.zeta)
        experiment = self.settings.experiment
        names = dict.fromkeys([*experiment.observables, experiment.F, experiment.G])
        observable_reports = [
            self.potentials.check_observable(get_observable(name), resolved.base, resolved.zeta)
            for name in names
        ]

        rows = [
            {"check": check.name, "passed": check.passed, "margin": check.margin, "detail": check.detail}
            for check in report.checks
        ]
        rows.extend(
            {
                "check": f"F:{item.observable}",
                "passed": item.passed,
                "margin": item.bound,
                "detail": f"growth degree {item.growth_degree} < {item.degree_limit}",
            }
            for item in observable_reports
        )
        passed = report.all_passed and all(item.passed for item in observable_reports)
        summary = [f"{row['check']}: {'ok' if row['passed'] else 'FAILED'} margin={row['margin']:.6g}" for row in rows]
        return PipelineOutput(
            result=report,
            rows=rows,
            grid={"L": None, "N": None},
            extras={"observables": [item.model_dump() for item in observable_reports]},
            summary=summary,
            exit_code=0 if passed else AssumptionViolation.exit_code,
        )

