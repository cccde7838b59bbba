"""缓存模块"""
from app.cache.cache_decorator import cached
from app.cache.redis_cache import cache_manager

__all__ = ["cache_manager", "cached"]
