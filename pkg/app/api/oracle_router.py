"""谐振子闭式谱API路由"""
import asyncio
from typing import Optional

from fastapi import APIRouter, HTTPException, Query, Response

from app.cache.cache_decorator import cached
from app.config import settings
from app.errors import TransferLabError
from app.schema.harmonic_schema import HarmonicSpectrum
from app.services.pipeline_service import ExperimentPipeline

router = APIRouter(prefix="/oracle", tags=["Oracle"])


@router.get("", response_model=HarmonicSpectrum)
@cached("oracle")
async def get_oracle(
    response: Response,
    W: float = Query(3.0, gt=0, description="耦合强度"),
    a: float = Query(2.0, gt=0),
    b: float = Query(0.0),
    zeta_angle: Optional[float] = Query(None, description="arg ζ，缺省取 −arg(a+ib)/2"),
    j_max: int = Query(5, ge=0, le=9),
):
    """谐振子 K_hr 的本征值、精确奇异值与约化参数

    Returns:
        HarmonicSpectrum: j = 0..j_max 的闭式谱数据

    响应头:
        X-Cache-Status: HIT | MISS | BYPASS
    """
    try:
        pipeline = ExperimentPipeline.with_overrides(
            settings,
            model={"kind": "quadratic", "W": W, "a": a, "b": b, "zeta_angle": zeta_angle},
            experiment={"j_max": j_max},
        )
        output = await asyncio.to_thread(pipeline.oracle)
        return output.result
    except (TransferLabError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))
