"""FastAPI应用主入口"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI

from app.api import chain_router, oracle_router, spectral_router
from app.cache import cache_manager
from app.config import settings

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """应用生命周期管理"""
    # 启动时：仅在启用缓存时建立Redis连接
    if settings.redis.enabled:
        await cache_manager.connect()
        logger.info(f"已连接 Redis: {settings.redis.host}:{settings.redis.port}")
    yield
    # 关闭时：关闭Redis连接
    await cache_manager.close()


app = FastAPI(
    title="TransferLab API",
    description="非自伴转移算子数值实验 API - 提供谐振子闭式谱、Nyström 谱分析、块分解与链模型关联函数",
    version="0.1.0",
    lifespan=lifespan,
)

# 注册路由
app.include_router(oracle_router.router)
app.include_router(spectral_router.router)
app.include_router(chain_router.router)


@app.get("/")
async def root():
    """根路径"""
    return {
        "message": settings.app_name,
        "docs": "/docs",
        "endpoints": {
            "oracle": "/oracle?W={W}&a={a}&b={b}",
            "spectrum": "/spectrum?kind={kind}&W={W}",
            "blocks": "/blocks?kind={kind}&W={W}",
            "correlate": "/correlate?F={F}&G={G}",
        },
    }


@app.get("/health")
async def health():
    """健康检查"""
    return {"status": "ok", "cache": "enabled" if settings.redis.enabled else "disabled"}
