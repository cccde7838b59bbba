"""观测量注册表

只提供封闭的内置集合，不解析表达式，使 F1–F2 始终可检查。
本模块不得导入 app.config（配置校验会反向导入此处）。
"""
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np


@dataclass(frozen=True)
class Observable:
    """局部观测量 F 及其在扇形 Σ 上的增长阶"""
    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    growth_degree: float

    def __call__(self, z) -> np.ndarray:
        return self.evaluator(np.asarray(z, dtype=complex))

    def rotated(self, zeta: complex) -> Callable[[np.ndarray], np.ndarray]:
        """F_ζ(x) = F(ζx)"""
        return lambda x: self(zeta * np.asarray(x, dtype=complex))


OBSERVABLES: Dict[str, Observable] = {
    "one": Observable("one", lambda z: np.ones_like(z), 0.0),
    "x": Observable("x", lambda z: z, 1.0),
    "x2": Observable("x2", lambda z: z ** 2, 2.0),
    # ±i 不在 Σ 内，log(1 + z²) 在扇形上解析
    "log-moment": Observable("log-moment", lambda z: np.log1p(z ** 2), 0.25),
}


def get_observable(name: str) -> Observable:
    try:
        return OBSERVABLES[name]
    except KeyError:
        raise ValueError(f"未知的观测量: {name}，可选: {sorted(OBSERVABLES)}") from None
