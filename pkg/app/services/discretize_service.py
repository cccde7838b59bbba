import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from app.errors import DiscretizationError, ResolutionError
from app.schema.grid_schema import PANEL_ORDER, DiscretizedOperator, Grid
from app.schema.potential_schema import Potential
from app.services.potential_service import eval_potential, harmonic_approximation

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(PANEL_ORDER)

# auto_resolution 的扫描步数
_SCAN_POINTS = 40001


@dataclass(frozen=True)
class TransferKernel:
    """K(x, y) = exp(-W²ζ²(x-y)² - U(x)/2 - U(y)/2)"""
    W: float
    zeta_angle: float
    potential: Potential

    @property
    def zeta(self) -> complex:
        return complex(np.exp(1j * self.zeta_angle))

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gauss = self.W ** 2 * self.zeta ** 2 * (x - y) ** 2
        return np.exp(-gauss - 0.5 * eval_potential(self.potential, x) - 0.5 * eval_potential(self.potential, y))

    def matrix(self, nodes: np.ndarray) -> np.ndarray:
        """节点上的核矩阵 K(x_i, x_j)，按构造精确对称"""
        u = np.asarray(eval_potential(self.potential, nodes))
        diff = nodes[:, None] - nodes[None, :]
        return np.exp(-self.W ** 2 * self.zeta ** 2 * diff ** 2 - 0.5 * (u[:, None] + u[None, :]))

    def harmonic_approximation(self) -> "TransferKernel":
        """U 替换为其在 0 处的二阶 Taylor 展开的核 K̃"""
        return TransferKernel(W=self.W, zeta_angle=self.zeta_angle, potential=harmonic_approximation(self.potential))


def build_grid(L: float, N: int) -> Grid:
    """[-L, L] 上等宽面板的 8 阶复合 Gauss–Legendre 规则

    Args:
        L: 半长度
        N: 节点数，向上取整为 8 的倍数

    Example:
        >>> build_grid(1.0, 8).weights.sum()
        2.0
    """
    if L <= 0:
        raise ValueError(f"L 必须为正，实际 {L}")
    if N < 2:
        raise ValueError(f"N 至少为 2，实际 {N}")
    panels = math.ceil(N / PANEL_ORDER)
    edges = np.linspace(-L, L, panels + 1)
    half = 0.5 * np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    nodes = (centers[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return Grid(nodes=nodes, weights=weights, half_length=float(L))


def _first_crossing(t: np.ndarray, values: np.ndarray, target: float):
    hits = np.nonzero(values >= target)[0]
    return float(t[hits[0]]) if hits.size else None


def auto_resolution(
    W: float,
    zeta: complex,
    potential: Potential,
    tol: float,
    localize: bool = True,
    max_half_length: float = 40.0,
) -> Tuple[float, int]:
    """按截断与分辨率规则选择 (L, N)

    L_cut: Re U(±L) ≥ 2·ln(1/tol) 的最小 L
    L_loc: 2W·sqrt(Re ζ²)·∫₀ᴸ sqrt(max(Re U, 0)) ≥ 2·ln(1/tol) 的最小 L，
           即顶端本征函数隧穿衰减指数达到阈值（谐振子时等于 αL²）

    localize=True 取 min(L_cut, L_loc)；localize=False 取 L_cut，
    在 max_half_length 内达不到时退回 L_loc 并给出警告。
    节点间距 h ≤ sqrt(Re ζ²)/(8W)，N = ceil(2L/h) 并取整到面板阶数的倍数。

    Raises:
        ResolutionError: 两种规则在 max_half_length 内都无法满足
    """
    if not 0 < tol <= 1e-2:
        raise ValueError(f"tol 必须在 (0, 1e-2] 内，实际 {tol}")
    zeta = complex(zeta)
    re_zeta_sq = (zeta ** 2).real
    if re_zeta_sq <= 0:
        raise ResolutionError(f"Re ζ² = {re_zeta_sq} ≤ 0，核不衰减")
    target = 2 * math.log(1 / tol)

    t = np.linspace(0.0, max_half_length, _SCAN_POINTS)
    re_u = np.minimum(
        np.real(eval_potential(potential, t, check_strip=False)),
        np.real(eval_potential(potential, -t, check_strip=False)),
    )
    L_cut = _first_crossing(t, re_u, target)

    root = np.sqrt(np.maximum(re_u, 0.0))
    tunnel = np.concatenate([[0.0], np.cumsum(0.5 * (root[1:] + root[:-1]) * np.diff(t))])
    L_loc = _first_crossing(t, 2 * W * math.sqrt(re_zeta_sq) * tunnel, target)

    if L_cut is None and L_loc is None:
        raise ResolutionError(
            f"势增长过慢: 在 L ≤ {max_half_length} 内 Re U 与局域化积分都达不到 {target:.3g}"
        )
    if localize:
        L = min(value for value in (L_cut, L_loc) if value is not None)
    elif L_cut is not None:
        L = L_cut
    else:
        logger.warning(f"Re U 在 L ≤ {max_half_length} 内达不到截断阈值，退回局域化长度 L = {L_loc:.4g}")
        L = L_loc

    # 比 1/(8W·sqrt(Re ζ²)) 更严，Re ζ² < 1 时仍解析 1/W 的相位尺度
    spacing = math.sqrt(re_zeta_sq) / (8 * W)
    N = PANEL_ORDER * math.ceil(math.ceil(2 * L / spacing) / PANEL_ORDER)
    logger.info(f"auto_resolution: W={W}, L_cut={L_cut}, L_loc={L_loc}, L={L:.6g}, N={N}")
    return L, N


def assemble_operator(kernel: TransferKernel, grid: Grid) -> DiscretizedOperator:
    """对称 Nyström 装配 M_ij = sqrt(w_i)·K(x_i, x_j)·sqrt(w_j)

    Raises:
        DiscretizationError: 核在节点上出现非有限值
    """
    with np.errstate(over="ignore", invalid="ignore"):
        raw = kernel.matrix(np.asarray(grid.nodes))
    if not np.all(np.isfinite(raw)):
        raise DiscretizationError(f"核在 {np.count_nonzero(~np.isfinite(raw))} 个节点对上非有限")
    s = grid.sqrt_weights
    # outer(s, s) 按分量精确对称，乘积保持 M = Mᵀ
    matrix = raw * np.outer(s, s)
    return DiscretizedOperator(
        grid=grid,
        matrix=matrix,
        W=kernel.W,
        zeta_angle=kernel.zeta_angle,
        potential=kernel.potential.label,
        second_derivative_at_zero=kernel.potential.second_derivative_at_zero,
    )


def project_function(f: Callable[[np.ndarray], np.ndarray], grid: Grid) -> np.ndarray:
    """v_i = sqrt(w_i)·f(x_i)"""
    return grid.sqrt_weights * np.asarray(f(grid.nodes), dtype=complex)
