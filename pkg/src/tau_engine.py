"""
τ 函数展开引擎
把 det(Ã_N) 写成 2^{N-1} 个 cosh 项之和，并在对数域稳定地求 τ、τ'、τ'' 与势能 V(x)

每一项对应一个"负号"下标集合 T（|T| ≤ N/2）：
    a_T·exp(α_T) + a_{T^c}·exp(-α_T) = 2·A_T·cosh(slope_T·x + offset_T)
其中 a_T = D(κ_T)，A_T = sqrt(a_T·a_{T^c})，因此 det(Ã_N) = 2τ，τ ≡ Σ A_T cosh(…)
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from alternant import log_alternant_products
from errors import EmptyGrid, InvalidGrid, SizeLimit
from formats import fmt, render_csv, render_json
from spectral_core import ValidatedSpectrum

logger = logging.getLogger(__name__)

MAX_EXPANSION_N = 22
LN2 = float(np.log(2.0))
# 网格扫描时每块的点数，限制 (点数 × 项数) 的临时数组大小
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class TauTerm:
    subset: Tuple[int, ...]  # 1 起始的负号下标
    coeff_log: float
    slope: float
    offset: float

    @property
    def amplitude(self) -> float:
        return float(np.exp(self.coeff_log))


@dataclass(frozen=True, eq=False)
class TauExpansion:
    """按斜率降序存放的展开项（数组形式，terms 按需生成 TauTerm 列表）"""
    spectrum: ValidatedSpectrum
    masks: np.ndarray  # (项数, N) 布尔，True 表示属于 T
    coeff_logs: np.ndarray
    slopes: np.ndarray
    offsets: np.ndarray

    @property
    def term_count(self) -> int:
        return int(self.slopes.size)

    @property
    def terms(self) -> List[TauTerm]:
        return [
            TauTerm(tuple(int(i) + 1 for i in np.flatnonzero(mask)), float(c), float(s), float(o))
            for mask, c, s, o in zip(self.masks, self.coeff_logs, self.slopes, self.offsets)
        ]


@dataclass(frozen=True)
class PotentialCurve:
    xs: np.ndarray
    vs: np.ndarray
    c_phys: float = 1.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.vs, dtype=float)
        if xs.shape != vs.shape or xs.ndim != 1:
            raise InvalidGrid("xs 与 vs 长度必须一致", xs=int(xs.size), vs=int(vs.size))
        if xs.size == 0:
            raise EmptyGrid("势能曲线至少需要一个点")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vs))):
            raise InvalidGrid("势能曲线包含非有限值")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vs", vs)
        object.__setattr__(self, "c_phys", float(self.c_phys))

    def to_csv(self) -> str:
        return render_csv(["x", "V"], zip(self.xs.tolist(), self.vs.tolist()))

    def to_dict(self) -> Dict[str, object]:
        return {"xs": self.xs.tolist(), "vs": self.vs.tolist(), "c_phys": self.c_phys}

    def to_json(self) -> str:
        return render_json(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PotentialCurve":
        data = json.loads(text)
        return cls(np.asarray(data["xs"], dtype=float), np.asarray(data["vs"], dtype=float),
                   float(data.get("c_phys", 1.0)))

    @classmethod
    def from_csv(cls, text: str, c_phys: float = 1.0) -> "PotentialCurve":
        lines = [line for line in text.strip().splitlines() if line.strip()]
        if not lines or lines[0].strip() != "x,V":
            raise InvalidGrid("势能 CSV 表头应为 x,V")
        rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]], dtype=float)
        return cls(rows[:, 0], rows[:, 1], c_phys)


def _subset_masks(n: int) -> np.ndarray:
    """枚举 |T| < N/2 的全部子集，以及 |T| = N/2 且含下标 1 的子集"""
    codes = np.arange(1 << n, dtype=np.int32)
    bits = np.empty((codes.size, n), dtype=bool)
    # 逐列取位，避免 (2^N, N) 的整型临时数组
    for j in range(n):
        bits[:, j] = (codes >> j) & 1
    sizes = bits.sum(axis=1)
    keep = 2 * sizes < n
    if n % 2 == 0:
        keep |= (2 * sizes == n) & bits[:, 0]
    return bits[keep]


def build_expansion(spectrum: ValidatedSpectrum) -> TauExpansion:
    """
    构造 τ 函数的 cosh 展开
    Args:
        spectrum: 已校验的谱
    Returns:
        含 2^{N-1} 项、按斜率降序排列的 TauExpansion
    """
    n = spectrum.n
    if n > MAX_EXPANSION_N:
        raise SizeLimit(f"展开最多支持 N = {MAX_EXPANSION_N}", n=n, limit=MAX_EXPANSION_N)
    k = spectrum.kappa_array
    kx = k * spectrum.shift_array

    masks = _subset_masks(n)
    minus = masks.astype(float)
    plus = 1.0 - minus

    # 系数由乘积公式给出，不做行列式求值
    log_a = log_alternant_products(k, minus)
    log_a_complement = log_alternant_products(k, plus)

    coeff_logs = 0.5 * (log_a + log_a_complement)
    slopes = plus @ k - minus @ k
    offsets = -(plus @ kx) + minus @ kx + 0.5 * (log_a - log_a_complement)

    # 斜率降序；并列时按子集编码保证确定性
    codes = masks.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
    order = np.lexsort((codes, -slopes))
    expansion = TauExpansion(spectrum, masks[order], coeff_logs[order], slopes[order], offsets[order])
    logger.info(f"τ 展开构造完成: N={n}, 项数={expansion.term_count}")
    return expansion


def _log_cosh(arg: np.ndarray) -> np.ndarray:
    a = np.abs(arg)
    return a + np.log1p(np.exp(-2.0 * a)) - LN2


def _eval_block(expansion: TauExpansion, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """对一组点求 (ln τ, τ'/τ, τ''/τ)，每个点的结果与分块方式无关"""
    args = xs[:, None] * expansion.slopes[None, :] + expansion.offsets[None, :]
    log_terms = expansion.coeff_logs[None, :] + _log_cosh(args)
    log_tau = logsumexp(log_terms, axis=1)
    weights = np.exp(log_terms - log_tau[:, None])
    slopes = expansion.slopes[None, :]
    d1 = np.sum(weights * slopes * np.tanh(args), axis=1)
    d2 = np.sum(weights * slopes * slopes, axis=1)
    return log_tau, d1, d2


def eval_tau(expansion: TauExpansion, x: float) -> Tuple[float, float, float]:
    """返回 (ln τ, τ'/τ, τ''/τ)，导数按项解析求出"""
    log_tau, d1, d2 = _eval_block(expansion, np.array([float(x)]))
    return float(log_tau[0]), float(d1[0]), float(d2[0])


def eval_potential(expansion: TauExpansion, x: float) -> float:
    """V(x) = -2C(τ''/τ - (τ'/τ)²)"""
    _, d1, d2 = eval_tau(expansion, x)
    return -2.0 * expansion.spectrum.c_phys * (d2 - d1 * d1)


def _potential_block(expansion: TauExpansion, xs: np.ndarray) -> np.ndarray:
    _, d1, d2 = _eval_block(expansion, xs)
    return -2.0 * expansion.spectrum.c_phys * (d2 - d1 * d1)


def sample_potential(expansion: TauExpansion, grid: Sequence[float], workers: int = 1) -> PotentialCurve:
    """
    在升序网格上采样势能
    Args:
        expansion: τ 展开
        grid: 升序有限网格
        workers: 并行线程数，结果与分块无关
    """
    xs = np.asarray(grid, dtype=float)
    if xs.size == 0:
        raise EmptyGrid("网格为空")
    if not np.all(np.isfinite(xs)):
        raise InvalidGrid("网格包含非有限值")
    if xs.size > 1 and np.any(np.diff(xs) <= 0):
        raise InvalidGrid("网格必须严格升序")

    chunk = max(1, _CHUNK_CELLS // max(1, expansion.term_count))
    blocks = [xs[i:i + chunk] for i in range(0, xs.size, chunk)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _potential_block(expansion, b), blocks))
    else:
        parts = [_potential_block(expansion, b) for b in blocks]
    vs = np.concatenate(parts)
    logger.debug(f"势能采样完成: {xs.size} 个点, {len(blocks)} 块")
    return PotentialCurve(xs, vs, expansion.spectrum.c_phys)


def merged_amplitudes(expansion: TauExpansion, normalize: bool = True,
                      decimals: int = 9) -> Dict[float, float]:
    """
    按 |斜率| 合并振幅（展示用），normalize 时以 T=∅ 项为 1
    """
    amplitudes = np.exp(expansion.coeff_logs - (expansion.coeff_logs[0] if normalize else 0.0))
    merged: Dict[float, float] = {}
    for slope, amp in zip(np.abs(expansion.slopes), amplitudes):
        key = round(float(slope), decimals)
        merged[key] = merged.get(key, 0.0) + float(amp)
    return dict(sorted(merged.items(), key=lambda kv: -kv[0]))


def describe(expansion: TauExpansion, limit: Optional[int] = None) -> str:
    """展开的可读文本（调试输出）"""
    lines = []
    for term in expansion.terms[:limit]:
        lines.append(f"{fmt(term.amplitude)}*cosh({fmt(term.slope)}*x + {fmt(term.offset)})  T={term.subset}")
    return "\n".join(lines)
