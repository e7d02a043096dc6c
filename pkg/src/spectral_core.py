"""
谱输入核心
校验 κ 谱，并在三种归一化表示之间转换：归一化常数 C_n、平移量 x_n、对称模式
内部统一使用平移量 x_n，exp(2κ_n x_n) = C_n²/(2κ_n)
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from errors import (
    DegenerateGap,
    EmptySpectrum,
    LengthMismatch,
    NonAscendingSpectrum,
    NonPositiveConstant,
    NonPositiveKappa,
    NonPositiveNorming,
    OverflowShift,
    ReconstructionError,
)

logger = logging.getLogger(__name__)

DEFAULT_GAP_REL = 1e-8
# 2κx 超过该值时 exp 溢出
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class SymmetricMode:
    """对称模式：平移量由 κ 唯一确定，V(-x) = V(x)"""
    mode: str = field(default="symmetric", init=False)


@dataclass(frozen=True)
class Constants:
    """显式归一化常数 C_n"""
    values: Tuple[float, ...]
    mode: str = field(default="constants", init=False)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class Shifts:
    """显式平移量 x_n"""
    values: Tuple[float, ...]
    mode: str = field(default="shifts", init=False)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


Norming = Union[SymmetricMode, Constants, Shifts]


@dataclass(frozen=True)
class SpectralInput:
    kappas: Tuple[float, ...]
    norming: Norming = SymmetricMode()
    c_phys: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        object.__setattr__(self, "c_phys", float(self.c_phys))

    @property
    def n(self) -> int:
        return len(self.kappas)

    def to_dict(self) -> Dict[str, Any]:
        norming: Dict[str, Any] = {"mode": self.norming.mode}
        if not isinstance(self.norming, SymmetricMode):
            norming["values"] = list(self.norming.values)
        return {"kappas": list(self.kappas), "norming": norming, "c_phys": self.c_phys}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectralInput":
        """从 JSON 文档结构构造；字段名固定为 kappas / norming / c_phys"""
        try:
            kappas = [float(k) for k in data["kappas"]]
        except (KeyError, TypeError, ValueError):
            raise ReconstructionError("谱输入缺少有效的 kappas 字段")
        norming_data = data.get("norming") or {"mode": "symmetric"}
        mode = str(norming_data.get("mode", "symmetric")).lower()
        values = norming_data.get("values") or []
        if mode == "symmetric":
            norming: Norming = SymmetricMode()
        elif mode == "constants":
            norming = Constants(tuple(values))
        elif mode == "shifts":
            norming = Shifts(tuple(values))
        else:
            raise ReconstructionError(f"未知的归一化模式: {mode}", mode=mode)
        return cls(tuple(kappas), norming, float(data.get("c_phys", 1.0)))

    @classmethod
    def from_json(cls, text: str) -> "SpectralInput":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ReconstructionError(f"谱输入不是合法 JSON: {e}")
        if not isinstance(data, dict):
            raise ReconstructionError("谱输入应为 JSON 对象")
        return cls.from_dict(data)


@dataclass(frozen=True)
class ValidatedSpectrum:
    kappas: Tuple[float, ...]
    shifts: Tuple[float, ...]
    c_phys: float = 1.0

    @property
    def n(self) -> int:
        return len(self.kappas)

    @property
    def kappa_array(self) -> np.ndarray:
        return np.asarray(self.kappas, dtype=float)

    @property
    def shift_array(self) -> np.ndarray:
        return np.asarray(self.shifts, dtype=float)

    @property
    def energies(self) -> np.ndarray:
        """束缚态能量 E_n = -Cκ_n²"""
        return -self.c_phys * self.kappa_array ** 2


def load_spectral_input(path: Union[str, Path]) -> SpectralInput:
    """读取谱输入 JSON 文件"""
    with open(path, "r", encoding="utf-8") as f:
        return SpectralInput.from_json(f.read())


def pair_log_ratios(kappas: np.ndarray) -> np.ndarray:
    """c_ij = ln|(κ_j+κ_i)/(κ_j-κ_i)|，对角线置零"""
    k = np.asarray(kappas, dtype=float)
    diff = np.abs(k[None, :] - k[:, None])
    total = k[None, :] + k[:, None]
    with np.errstate(divide="ignore"):
        c = np.log(total) - np.log(diff)
    np.fill_diagonal(c, 0.0)
    return c


def symmetric_shifts(kappas: np.ndarray) -> np.ndarray:
    """对称条件 2κ_i x_i = Σ_{j≠i} c_ij；N=1 时 x_1 = 0"""
    k = np.asarray(kappas, dtype=float)
    if k.size == 1:
        return np.zeros(1)
    return pair_log_ratios(k).sum(axis=1) / (2.0 * k)


def _check_kappas(kappas: Tuple[float, ...], gap_rel: float) -> None:
    if len(kappas) == 0:
        raise EmptySpectrum("谱至少需要一个 κ")
    for i, k in enumerate(kappas):
        if not (math.isfinite(k) and k > 0):
            raise NonPositiveKappa(f"κ_{i + 1} = {k} 必须为有限正数", index=i + 1, value=k)
    for i in range(1, len(kappas)):
        if not kappas[i] > kappas[i - 1]:
            raise NonAscendingSpectrum(
                f"κ 必须严格升序: κ_{i} = {kappas[i - 1]}, κ_{i + 1} = {kappas[i]}",
                index=i + 1,
            )
    eps_gap = gap_rel * kappas[-1]
    for i in range(1, len(kappas)):
        gap = kappas[i] - kappas[i - 1]
        if gap < eps_gap:
            raise DegenerateGap(
                f"κ_{i} 与 κ_{i + 1} 间隔 {gap:.3e} 小于阈值 {eps_gap:.3e}",
                index=i + 1, gap=gap, eps_gap=eps_gap,
            )


def validate(spectral_input: SpectralInput, gap_rel: float = DEFAULT_GAP_REL) -> ValidatedSpectrum:
    """
    校验谱输入并计算平移量
    Args:
        spectral_input: 原始谱输入
        gap_rel: 最小间隔阈值相对 κ_N 的比例
    Returns:
        以平移量表示的 ValidatedSpectrum
    """
    kappas = spectral_input.kappas
    _check_kappas(kappas, gap_rel)
    if not (math.isfinite(spectral_input.c_phys) and spectral_input.c_phys > 0):
        raise NonPositiveConstant(f"C = {spectral_input.c_phys} 必须为正", c_phys=spectral_input.c_phys)

    k = np.asarray(kappas, dtype=float)
    norming = spectral_input.norming
    if isinstance(norming, SymmetricMode):
        shifts = symmetric_shifts(k)
    elif isinstance(norming, Constants):
        if len(norming.values) != len(kappas):
            raise LengthMismatch("归一化常数个数与 κ 个数不一致",
                                 expected=len(kappas), got=len(norming.values))
        c = np.asarray(norming.values, dtype=float)
        if not np.all(np.isfinite(c) & (c > 0)):
            raise NonPositiveNorming("归一化常数必须为有限正数", values=list(norming.values))
        # 对数域计算，C_n 极大或极小时不溢出
        with np.errstate(over="ignore"):
            shifts = (2.0 * np.log(c) - np.log(2.0 * k)) / (2.0 * k)
        if not np.all(np.isfinite(shifts)):
            raise NonPositiveNorming("归一化常数对应的平移量超出可表示范围", values=list(norming.values))
    elif isinstance(norming, Shifts):
        if len(norming.values) != len(kappas):
            raise LengthMismatch("平移量个数与 κ 个数不一致",
                                 expected=len(kappas), got=len(norming.values))
        shifts = np.asarray(norming.values, dtype=float)
        if not np.all(np.isfinite(shifts)):
            raise NonPositiveNorming("平移量必须有限", values=list(norming.values))
    else:
        raise ReconstructionError(f"不支持的归一化类型: {type(norming).__name__}")

    logger.debug(f"谱校验通过: N={len(kappas)}, 模式={norming.mode}")
    return ValidatedSpectrum(tuple(kappas), tuple(float(x) for x in shifts), spectral_input.c_phys)


def norming_constants(spectrum: ValidatedSpectrum) -> np.ndarray:
    """由平移量求归一化常数 C_n = sqrt(2κ_n exp(2κ_n x_n))"""
    k = spectrum.kappa_array
    exponent = 2.0 * k * spectrum.shift_array
    too_big = np.flatnonzero(exponent > MAX_EXPONENT)
    if too_big.size:
        i = int(too_big[0])
        raise OverflowShift(f"2κ_{i + 1}x_{i + 1} = {exponent[i]:.1f} 超出可表示范围",
                            index=i + 1, exponent=float(exponent[i]))
    return np.sqrt(2.0 * k * np.exp(exponent))
