from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class PowerLawFit(BaseModel):
    """ln(value) = slope·ln(W) + intercept 的最小二乘拟合"""
    slope: float
    intercept: float
    r2: float
    points: int


class SweepRow(BaseModel):
    """单个 W 的度量值"""
    W: float
    metrics: Dict[str, float] = Field(default_factory=dict)
    grid_L: Optional[float] = None
    grid_N: Optional[int] = None
    failed: bool = False
    error: Optional[str] = None


class SweepResult(BaseModel):
    """W 扫描的度量表与幂律拟合"""
    experiment: str
    W_values: List[float]
    rows: List[SweepRow]
    fits: Dict[str, PowerLawFit] = Field(default_factory=dict)
    c0: float
    delta_hat: Optional[float] = Field(default=None, description="−1 − slope(|A−1|)")

    def to_rows(self) -> List[dict]:
        """长表形式：每个 (W, metric) 一行，flag 为 ok 或 failed"""
        records = []
        for row in self.rows:
            flag = "failed" if row.failed else "ok"
            if row.failed and not row.metrics:
                records.append({"W": row.W, "metric": "error", "value": float("nan"), "flag": flag})
                continue
            for name in sorted(row.metrics):
                records.append({"W": row.W, "metric": name, "value": row.metrics[name], "flag": flag})
        return records

    def metric(self, name: str) -> List[Optional[float]]:
        return [row.metrics.get(name) if not row.failed else None for row in self.rows]
