"""
输出格式工具
全精度浮点格式、CSV/JSON 写出，以及命令行网格/范围字符串解析
"""
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import InvalidGrid

PathLike = Union[str, Path]
# 点数向下取整时容忍的舍入（以步长计）
GRID_SLACK = 1e-9


def fmt(value: float) -> str:
    """17 位有效数字，保证十进制往返无损"""
    return f"{float(value):.17g}"


def _open_target(target: Optional[PathLike]):
    if target is None or str(target) == "-":
        return None
    path = Path(target)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """把行数据渲染为 CSV 文本（浮点数按全精度输出）"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (fmt(v) if isinstance(v, (float, np.floating)) else v)
                         for v in row])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def write_text(text: str, target: Optional[PathLike] = None) -> None:
    """写到文件；target 为空或 "-" 时写到标准输出"""
    handle = _open_target(target)
    if handle is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with handle:
        handle.write(text)


def parse_grid(text: str) -> Tuple[float, float, float]:
    """解析 "a:b:h" 网格描述"""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidGrid(f"网格格式应为 min:max:step，得到 {text!r}", grid=text)
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise InvalidGrid(f"网格包含非数字字段: {text!r}", grid=text)
    if not (np.isfinite(lo) and np.isfinite(hi) and np.isfinite(step)):
        raise InvalidGrid("网格参数必须有限", grid=text)
    if not lo < hi:
        raise InvalidGrid("网格要求 min < max", grid=text)
    if not step > 0:
        raise InvalidGrid("网格步长必须为正", grid=text)
    return lo, hi, step


def make_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """生成均匀升序网格 lo + i·step，最后一点不超过 hi（允许 1e-9 步长的舍入）"""
    if not lo < hi or not step > 0:
        raise InvalidGrid("网格要求 min < max 且 step > 0", min=lo, max=hi, step=step)
    count = int(np.floor((hi - lo) / step + GRID_SLACK)) + 1
    return lo + step * np.arange(count, dtype=float)


def parse_int_range(text: str) -> List[int]:
    """解析 "1..10" 或 "1,2,5" 形式的整数列表"""
    text = text.strip()
    try:
        if ".." in text:
            first, last = text.split("..", 1)
            start, stop = int(first), int(last)
            if stop < start:
                raise InvalidGrid(f"范围上界小于下界: {text!r}", range=text)
            return list(range(start, stop + 1))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InvalidGrid(f"无法解析整数范围: {text!r}", range=text)
