"""链模型API路由"""
import asyncio
from typing import Literal

from fastapi import APIRouter, HTTPException, Query, Response

from app.cache.cache_decorator import cached
from app.config import settings
from app.errors import TransferLabError
from app.schema.chain_schema import CorrelationSeries
from app.services.observables import OBSERVABLES
from app.services.pipeline_service import ExperimentPipeline

router = APIRouter(prefix="/correlate", tags=["Chain"])


@router.get("", response_model=CorrelationSeries)
@cached("correlate")
async def get_correlation(
    response: Response,
    kind: Literal["quadratic", "rotated-log"] = Query("rotated-log"),
    W: float = Query(8.0, gt=0),
    a: float = Query(2.0, gt=0),
    b: str = Query("1"),
    F: str = Query("x", description=f"观测量: {', '.join(sorted(OBSERVABLES))}"),
    G: str = Query("x"),
    n_max: int = Query(40, ge=5),
):
    """连通两点函数 ⟨F(φ₀)G(φ_n)⟩_c 及其衰减率

    F、G 不满足 F1–F2 时返回 400。
    """
    try:
        pipeline = ExperimentPipeline.with_overrides(
            settings,
            model={"kind": kind, "W": W, "a": a, "b": b},
            experiment={"F": F, "G": G, "n_max": n_max, "observables": [F, G]},
        )
        output = await asyncio.to_thread(pipeline.correlate)
        return output.result
    except (TransferLabError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))
