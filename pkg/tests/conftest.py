"""共享测试夹具"""
import math
import textwrap
from pathlib import Path

import pytest

from app.schema.harmonic_schema import HarmonicParams
from app.services.discretize_service import assemble_operator, auto_resolution, build_grid
from app.services.harmonic_service import harmonic_kernel
from app.services.spectral_service import SpectralService


@pytest.fixture
def spectral() -> SpectralService:
    return SpectralService(tol=1e-10, max_iters=20000, seed=0)


@pytest.fixture
def self_adjoint_params() -> HarmonicParams:
    """b = 0, ζ = 1：K_hr 实对称"""
    return HarmonicParams(W=4.0, a=2.0)


@pytest.fixture
def rotated_params() -> HarmonicParams:
    """ζ²(a+ib) = 2/√3 > 0 的旋转情形"""
    return HarmonicParams(W=8.0, a=1.0, b=math.tan(math.pi / 6), zeta_angle=-math.pi / 12)


@pytest.fixture
def non_normal_params() -> HarmonicParams:
    return HarmonicParams(W=1.0, a=1.0, b=2.0)


@pytest.fixture
def harmonic_matrix():
    """auto_resolution 网格上的谐振子 Nyström 矩阵 (M, grid)"""
    def build(p: HarmonicParams, tol: float = 1e-10):
        kernel = harmonic_kernel(p)
        L, N = auto_resolution(p.W, p.zeta, kernel.potential, tol)
        grid = build_grid(L, N)
        return assemble_operator(kernel, grid).matrix, grid

    return build


@pytest.fixture
def write_config(tmp_path: Path):
    """写出 TOML 配置并把输出路径指向 tmp_path"""
    def write(body: str, name: str = "run.toml") -> Path:
        path = tmp_path / name
        output = textwrap.dedent(f"""
            [output]
            csv_path = "{(tmp_path / 'out.csv').as_posix()}"
            json_path = "{(tmp_path / 'out.json').as_posix()}"
        """)
        path.write_text(textwrap.dedent(body) + output, encoding="utf-8")
        return path

    return write
