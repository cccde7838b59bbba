"""服务层包

包含势函数检查、积分路径旋转、离散化、谱分析、W 扫描与链模型服务
"""

from app.services.asymptotics_service import AsymptoticsService
from app.services.chain_service import ChainService
from app.services.pipeline_service import ExperimentPipeline, PipelineOutput
from app.services.potential_service import PotentialService
from app.services.report_service import ReportWriter
from app.services.spectral_service import SpectralService

__all__ = [
    'AsymptoticsService',
    'ChainService',
    'ExperimentPipeline',
    'PipelineOutput',
    'PotentialService',
    'ReportWriter',
    'SpectralService',
]
