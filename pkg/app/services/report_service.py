"""结果文件输出

CSV 以 `# config:` 与 `# grid:` 注释行开头；JSON 包含 config、grid、results 三个键，
键排序、不含时间戳。所有文件先写入目标目录下的临时文件，再以 os.replace 原子替换。
"""
import json
import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Sequence, TextIO

import pandas as pd

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """复数拆成 [实部, 虚部] 以外的其余类型原样保留"""
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def flatten_row(row: Mapping[str, Any]) -> Dict[str, Any]:
    """复数列展开为 <name>_re / <name>_im 两列"""
    flat = {}
    for key, value in row.items():
        if isinstance(value, complex):
            flat[f"{key}_re"] = value.real
            flat[f"{key}_im"] = value.imag
        else:
            flat[key] = value
    return flat


def rows_to_frame(rows: Sequence[Mapping[str, Any]]) -> pd.DataFrame:
    """按行构造表格；列为各行键的并集，按首次出现的顺序排列"""
    return pd.DataFrame([flatten_row(row) for row in rows])


@contextmanager
def _atomic_open(path: Path) -> Iterator[TextIO]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False, encoding="utf-8", newline=""
    )
    try:
        with handle:
            yield handle
        os.replace(handle.name, path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise
    logger.info(f"已写入 {path}")


def _compact(value: Any) -> str:
    return json.dumps(_plain(value), sort_keys=True, separators=(",", ":"))


class ReportWriter:
    """CSV / JSON / gnuplot 结果写出器"""

    def __init__(self, config: Mapping[str, Any], gnuplot: bool = False):
        """
        Args:
            config: 完整解析后的配置，嵌入每个输出文件
            gnuplot: 是否同时输出空白分隔的数据文件
        """
        self.config = dict(config)
        self.gnuplot = gnuplot

    def _header(self, handle: TextIO, grid: Any) -> None:
        handle.write(f"# config: {_compact(self.config)}\n")
        handle.write(f"# grid: {_compact(grid)}\n")

    def write_csv(self, path: Path, rows: Sequence[Mapping[str, Any]], grid: Any) -> None:
        df = rows_to_frame(rows)
        with _atomic_open(path) as handle:
            self._header(handle, grid)
            df.to_csv(handle, index=False, lineterminator="\n")

        if self.gnuplot:
            self.write_gnuplot(Path(path).with_suffix(".dat"), df, grid)

    def write_gnuplot(self, path: Path, df: pd.DataFrame, grid: Any) -> None:
        """空白分隔的数据文件，列名写在注释行中，缺失值写作 nan"""
        with _atomic_open(path) as handle:
            self._header(handle, grid)
            handle.write("# " + " ".join(str(column) for column in df.columns) + "\n")
            df.to_csv(handle, sep=" ", index=False, header=False, na_rep="nan", lineterminator="\n")

    def write_json(self, path: Path, results: Any, grid: Any) -> None:
        payload = {"config": self.config, "grid": grid, "results": results}
        with _atomic_open(path) as handle:
            handle.write(json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=True) + "\n")
