"""数据模型定义包

包含势函数、鞍点参数、谐振子谱、离散化与谱分析结果的数据结构定义
"""

from app.schema.potential_schema import (
    Potential,
    AssumptionCheck,
    AssumptionReport,
    ObservableReport
)

from app.schema.contour_schema import RotationParams, ResolvedModel

from app.schema.harmonic_schema import (
    HarmonicParams,
    HarmonicSpectrum,
    OracleRow
)

from app.schema.grid_schema import Grid, DiscretizedOperator, PANEL_ORDER

from app.schema.spectral_schema import (
    EigenPair,
    BlockOperators,
    BlockReport,
    SemigroupReport,
    OverlapReport,
    SpectrumReport
)

from app.schema.sweep_schema import PowerLawFit, SweepRow, SweepResult

from app.schema.chain_schema import ChainModel, CorrelationSeries, ContourComparison

__all__ = [
    # 势函数
    'Potential',
    'AssumptionCheck',
    'AssumptionReport',
    'ObservableReport',
    # 鞍点参数
    'RotationParams',
    'ResolvedModel',
    # 谐振子
    'HarmonicParams',
    'HarmonicSpectrum',
    'OracleRow',
    # 离散化
    'Grid',
    'DiscretizedOperator',
    'PANEL_ORDER',
    # 谱分析
    'EigenPair',
    'BlockOperators',
    'BlockReport',
    'SemigroupReport',
    'OverlapReport',
    'SpectrumReport',
    # W 扫描
    'PowerLawFit',
    'SweepRow',
    'SweepResult',
    # 链模型
    'ChainModel',
    'CorrelationSeries',
    'ContourComparison',
]
