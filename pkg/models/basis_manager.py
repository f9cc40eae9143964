"""
生成元基管理模块
==============
负责按局域维度 d 一次性构造并缓存 GeneratorBasis

GeneratorBasis 构造后只读，可以在线程间共享；缓存的写入由锁保护，
同一个 d 只会构造一次。
"""

import threading
import time
from typing import Any, Dict

from modules.su_generators import GeneratorBasis, build_basis
from utils.logger import get_logger


class BasisManager:
    """生成元基管理器 - 统一管理各维度基的构造和缓存"""

    def __init__(self):
        self._basis_cache: Dict[int, GeneratorBasis] = {}
        self._build_times: Dict[int, float] = {}
        self._lock = threading.Lock()
        self.logger = get_logger("mfef.basis")

    def get_basis(self, d: int) -> GeneratorBasis:
        """获取 d 维基，首次访问时构造"""
        basis = self._basis_cache.get(d)
        if basis is not None:
            return basis

        with self._lock:
            # 双重检查，其他线程可能已经构造完成
            basis = self._basis_cache.get(d)
            if basis is None:
                start = time.perf_counter()
                basis = build_basis(d)
                self._build_times[d] = time.perf_counter() - start
                self._basis_cache[d] = basis
                self.logger.debug("Generator basis built", d=d,
                                  duration=f"{self._build_times[d]:.4f}s")
            return basis

    def is_cached(self, d: int) -> bool:
        return d in self._basis_cache

    def clear_cache(self):
        """清空基缓存"""
        with self._lock:
            self._basis_cache.clear()
            self._build_times.clear()

    def get_cache_info(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "cached_dimensions": sorted(self._basis_cache),
                "build_times": dict(self._build_times),
                "structure_constant_entries": {
                    d: b.f.size for d, b in self._basis_cache.items()
                },
            }


# 全局基管理器实例
basis_manager = BasisManager()
