"""Redis缓存管理器"""
import hashlib
import json
import logging
from typing import Any, Mapping, Optional

from pydantic import BaseModel
from redis import asyncio as aioredis
from redis.exceptions import RedisError

from app.config import settings

logger = logging.getLogger(__name__)


class CacheManager:
    """Redis缓存管理器

    负责实验结果的存储与查询；过期交给 Redis 的 TTL 处理。
    任何 Redis 故障都按未命中处理，不影响请求本身。
    """

    def __init__(self, namespace: str = "transferlab"):
        self._redis: Optional[aioredis.Redis] = None
        self.namespace = namespace

    @property
    def enabled(self) -> bool:
        return settings.redis.enabled

    async def connect(self):
        """建立Redis连接"""
        if not self._redis:
            self._redis = aioredis.from_url(
                settings.redis.url,
                encoding="utf-8",
                decode_responses=True,
            )

    async def close(self):
        """关闭Redis连接"""
        if self._redis:
            await self._redis.aclose()
            self._redis = None

    def generate_cache_key(self, prefix: str, params: Mapping[str, Any]) -> str:
        """生成缓存键

        Args:
            prefix: 缓存键前缀（如：oracle, spectrum, correlate）
            params: 请求参数

        Returns:
            str: transferlab:{prefix}:{参数规范 JSON 的 MD5}
        """
        canonical = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
        digest = hashlib.md5(canonical.encode()).hexdigest()
        return f"{self.namespace}:{prefix}:{digest}"

    async def get(self, prefix: str, params: Mapping[str, Any]) -> Optional[dict]:
        """从缓存获取数据

        Returns:
            Optional[dict]: 缓存的结果；不存在、已损坏或 Redis 不可用时返回 None
        """
        cache_key = self.generate_cache_key(prefix, params)
        try:
            await self.connect()
            cached_data = await self._redis.get(cache_key)
        except (RedisError, OSError) as e:
            logger.warning(f"读取缓存失败，按未命中处理: {e}")
            return None
        if not cached_data:
            return None
        try:
            return json.loads(cached_data)["result"]
        except (json.JSONDecodeError, KeyError, TypeError):
            logger.warning(f"缓存数据损坏，删除 {cache_key}")
            try:
                await self._redis.delete(cache_key)
            except (RedisError, OSError):
                pass
            return None

    async def set(self, prefix: str, params: Mapping[str, Any], result: Any):
        """将结果存入缓存，TTL 取 redis.ttl_seconds

        Args:
            prefix: 缓存键前缀
            params: 请求参数
            result: 要缓存的结果（支持Pydantic模型或字典）
        """
        cache_key = self.generate_cache_key(prefix, params)
        if isinstance(result, BaseModel):
            result = result.model_dump(mode="json")
        payload = json.dumps({"params": params, "result": result}, ensure_ascii=False, default=str)
        try:
            await self.connect()
            await self._redis.setex(cache_key, settings.redis.ttl_seconds, payload)
        except (RedisError, OSError) as e:
            logger.warning(f"写入缓存失败: {e}")


# 全局缓存管理器实例
cache_manager = CacheManager()
