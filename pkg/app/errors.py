"""异常定义

每个异常携带命令行退出码：
    0 成功；1 配置/校验错误；2 数值不收敛；3 检测到假设（U1–U4 / F1–F2）不成立
"""
from typing import List, Optional


class TransferLabError(Exception):
    """所有领域异常的基类"""
    exit_code: int = 1


class ConfigurationError(TransferLabError):
    """配置文件无法解析或字段不满足前置条件"""
    exit_code = 1


class PotentialDomainError(TransferLabError, ValueError):
    """求值点离开解析带，或落在对数的分支切割上"""
    exit_code = 1


class ResolutionError(TransferLabError):
    """势函数增长过慢，无法在允许区间内确定截断长度"""
    exit_code = 1


class DiscretizationError(TransferLabError):
    """核函数在节点上出现非有限值"""
    exit_code = 1


class ContourError(TransferLabError):
    """旋转角或鞍点参数不满足 U2（ζ²U″(0) 必须为正实数）"""
    exit_code = 3


class AssumptionViolation(TransferLabError):
    """抽样检查发现 U1–U4 或 F1–F2 不成立"""
    exit_code = 3


class ConvergenceError(TransferLabError):
    """幂迭代在最大迭代次数内未收敛

    Attributes:
        residual: 达到的残差
        iterations: 已执行的迭代次数
        partial: 收敛前已得到的部分结果（如前几个奇异值）
    """
    exit_code = 2

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        iterations: int = 0,
        partial: Optional[List[float]] = None,
    ):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.partial = partial or []


class ChainError(TransferLabError):
    """链模型的分母或 ⟨u₀, ū₀⟩ 配对退化"""
    exit_code = 2
