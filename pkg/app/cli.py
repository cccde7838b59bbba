"""命令行入口

    transferlab <subcommand> --config run.toml [--gnuplot] [--log-level INFO]

退出码：0 成功；1 配置/校验错误；2 数值不收敛；3 检测到假设不成立。
只有流水线完整成功后才写出结果文件。
"""
import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.config import Settings, load_settings
from app.errors import TransferLabError
from app.services.pipeline_service import ExperimentPipeline, PipelineOutput
from app.services.report_service import ReportWriter

logger = logging.getLogger(__name__)


COMMANDS: Dict[str, Callable[[ExperimentPipeline], PipelineOutput]] = {
    "oracle": ExperimentPipeline.oracle,
    "spectrum": ExperimentPipeline.spectrum,
    "blocks": ExperimentPipeline.blocks,
    "sweep": lambda pipeline: asyncio.run(pipeline.sweep()),
    "correlate": ExperimentPipeline.correlate,
    "check-contour": ExperimentPipeline.check_contour,
    "check-assumptions": ExperimentPipeline.check_assumptions,
}

_HELP = {
    "oracle": "谐振子闭式本征值与奇异值表（quadratic 模型）",
    "spectrum": "Nyström 矩阵的顶端特征值与奇异值",
    "blocks": "块分解、半群衰减与重叠积分",
    "sweep": "W 扫描与幂律拟合",
    "correlate": "链模型的连通两点函数与均值",
    "check-contour": "积分路径旋转不变性与暴力求和对照",
    "check-assumptions": "U1–U4 与 F1–F2 抽样检查",
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, metavar="PATH", help="TOML 配置文件")
    common.add_argument("--gnuplot", action="store_true", help="在 CSV 旁输出空白分隔的数据文件")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="日志级别（默认 WARNING）",
    )

    parser = argparse.ArgumentParser(
        prog="transferlab",
        description="非自伴转移算子的谱与链模型数值实验",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=_HELP[name])
    return parser


def _resolved_config(settings: Settings) -> dict:
    return settings.model_dump(mode="json", exclude={"redis": {"password"}})


def _emit(settings: Settings, output: PipelineOutput, gnuplot: bool) -> None:
    writer = ReportWriter(_resolved_config(settings), gnuplot=gnuplot or settings.output.gnuplot)
    writer.write_csv(settings.output.csv_path, output.rows, output.grid)
    writer.write_json(settings.output.json_path, output.payload(), output.grid)
    for line in output.summary:
        print(line)


def run(command: str, config_path: Path, gnuplot: bool = False) -> int:
    """运行一个子命令并返回退出码"""
    try:
        settings = load_settings(config_path)
    except ValidationError as e:
        print(f"error: 配置校验失败\n{e}", file=sys.stderr)
        return 1
    except TransferLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    pipeline = ExperimentPipeline(settings)
    try:
        output = COMMANDS[command](pipeline)
    except TransferLabError as e:
        partial = getattr(e, "partial", None)
        if partial:
            print(f"partial: {partial}", file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    _emit(settings, output, gnuplot)
    return output.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logger.info(f"运行 {args.command}，配置 {args.config}")
    return run(args.command, args.config, args.gnuplot)


if __name__ == "__main__":
    raise SystemExit(main())
