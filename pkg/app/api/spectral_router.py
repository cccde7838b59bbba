"""谱分析API路由"""
import asyncio
from typing import Literal, Optional

from fastapi import APIRouter, HTTPException, Query, Response

from app.cache.cache_decorator import cached
from app.config import settings
from app.errors import TransferLabError
from app.schema.spectral_schema import BlockReport, SpectrumReport
from app.services.pipeline_service import ExperimentPipeline

router = APIRouter(tags=["Spectral"])

Kind = Literal["quadratic", "rotated-log"]


def _pipeline(kind: str, W: float, a: float, b: str, zeta_angle: Optional[float]) -> ExperimentPipeline:
    return ExperimentPipeline.with_overrides(
        settings,
        model={"kind": kind, "W": W, "a": a, "b": b, "zeta_angle": zeta_angle},
    )


@router.get("/spectrum", response_model=SpectrumReport)
@cached("spectrum")
async def get_spectrum(
    response: Response,
    kind: Kind = Query("rotated-log"),
    W: float = Query(8.0, gt=0),
    a: float = Query(1.0, gt=0),
    b: str = Query("1", description="复数写作 1+0.5j"),
    zeta_angle: Optional[float] = Query(None),
):
    """Nyström 矩阵的顶端特征值、奇异值与 Schur 上界

    响应头:
        X-Cache-Status: HIT | MISS | BYPASS
    """
    try:
        output = await asyncio.to_thread(_pipeline(kind, W, a, b, zeta_angle).spectrum)
        return output.result
    except (TransferLabError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/blocks", response_model=BlockReport)
@cached("blocks")
async def get_blocks(
    response: Response,
    kind: Kind = Query("rotated-log"),
    W: float = Query(8.0, gt=0),
    a: float = Query(1.0, gt=0),
    b: str = Query("1"),
    zeta_angle: Optional[float] = Query(None),
):
    """K̂ = μ⁻¹M 的块分解

    U2 不成立或 U1–U4 抽样检查失败时返回 400。
    """
    try:
        output = await asyncio.to_thread(_pipeline(kind, W, a, b, zeta_angle).blocks)
        return output.result
    except (TransferLabError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))
