"""缓存装饰器"""
import inspect
import logging
from functools import wraps
from typing import Any, Callable, get_type_hints

from fastapi import Request, Response
from pydantic import BaseModel

from app.cache.redis_cache import cache_manager

logger = logging.getLogger(__name__)


def _has_error(result: Any) -> bool:
    if isinstance(result, BaseModel):
        return bool(getattr(result, "error", None))
    if isinstance(result, dict):
        return bool(result.get("error"))
    return False


def cached(cache_prefix: str):
    """缓存装饰器

    用于API端点的缓存功能：以全部查询参数的规范 JSON 作为键，
    并在响应头中添加缓存状态标识

    Args:
        cache_prefix: 缓存键前缀（如：oracle, spectrum, correlate）

    Usage:
        @cached("oracle")
        async def get_oracle(response: Response, W: float = 3.0, ...):
            ...

    响应头:
        X-Cache-Status: HIT | MISS | BYPASS（未启用 Redis）
        X-Cache-Key: 缓存键（仅在命中时）
    """
    def decorator(func: Callable) -> Callable:
        # 获取函数返回类型注解
        return_type = get_type_hints(func).get('return')

        @wraps(func)
        async def wrapper(*args, **kwargs) -> Any:
            response: Response = kwargs.get('response')
            params = {
                key: value
                for key, value in kwargs.items()
                if not isinstance(value, (Request, Response))
            }

            if not cache_manager.enabled:
                if response:
                    response.headers["X-Cache-Status"] = "BYPASS"
                return await func(*args, **kwargs)

            cached_result = await cache_manager.get(cache_prefix, params)
            if cached_result is not None:
                cache_key = cache_manager.generate_cache_key(cache_prefix, params)
                logger.info(f"Cache HIT: {cache_key}")
                if response:
                    response.headers["X-Cache-Status"] = "HIT"
                    response.headers["X-Cache-Key"] = cache_key
                # 使用类型注解将字典转换为 Pydantic 模型
                if return_type and inspect.isclass(return_type) and issubclass(return_type, BaseModel):
                    return return_type.model_validate(cached_result)
                return cached_result

            logger.info(f"Cache MISS: {cache_prefix}")
            result = await func(*args, **kwargs)
            if response:
                response.headers["X-Cache-Status"] = "MISS"

            # 带 error 的结果不缓存
            if not _has_error(result):
                await cache_manager.set(cache_prefix, params, result)
            return result

        return wrapper
    return decorator
