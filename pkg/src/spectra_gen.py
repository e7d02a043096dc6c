"""
示例谱生成
三个示例族：Pöschl–Teller（κ_n = n）、对称方势阱、Morse 势，以及命令行预设名解析
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.optimize import bisect

from errors import InvalidPreset, NoBoundStates, NonPositiveConstant, NonPositiveN, RootBracketFailure
from spectral_core import SpectralInput, SymmetricMode
from tau_engine import PotentialCurve

logger = logging.getLogger(__name__)

ROOT_XTOL = 1e-14
ROOT_MAXITER = 120
# 分支上端离 tan 奇点的距离
_ASYMPTOTE_GAP = 1e-12


@dataclass(frozen=True)
class SquareWellParams:
    half_width: float = 1.0
    depth: float = 25.0
    c_phys: float = 1.0

    def __post_init__(self):
        if not (self.half_width > 0 and self.depth > 0 and self.c_phys > 0):
            raise NonPositiveConstant("方势阱的半宽、深度与 C 都必须为正",
                                      half_width=self.half_width, depth=self.depth, c_phys=self.c_phys)

    @property
    def strength(self) -> float:
        """√(U0·a²/C)"""
        return math.sqrt(self.depth * self.half_width ** 2 / self.c_phys)


@dataclass(frozen=True)
class MorseParams:
    depth: float = 1.0
    a_morse: float = 4.0
    x0: float = 1.0
    c_phys: float = 1.0

    def __post_init__(self):
        if not (self.depth > 0 and self.x0 > 0 and self.c_phys > 0):
            raise NonPositiveConstant("Morse 势的深度、长度尺度与 C 都必须为正",
                                      depth=self.depth, x0=self.x0, c_phys=self.c_phys)

    @property
    def alpha(self) -> float:
        """势能指数中的 α，满足 a = √(D/C)·x0/α"""
        return math.sqrt(self.depth / self.c_phys) * self.x0 / self.a_morse


def poschl_teller_spectrum(n: int) -> SpectralInput:
    """κ = [1, 2, …, N]，对称模式，重构结果为 -N(N+1)/cosh²(x)"""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise NonPositiveN(f"能级数 N = {n} 必须为正整数", n=n)
    return SpectralInput(tuple(float(i) for i in range(1, int(n) + 1)), SymmetricMode(), 1.0)


def _even_branch(u: float, z0: float) -> float:
    return u * math.tan(u) - math.sqrt(max(z0 * z0 - u * u, 0.0))


def _odd_branch(u: float, z0: float) -> float:
    return -u / math.tan(u) - math.sqrt(max(z0 * z0 - u * u, 0.0))


def square_well_roots(z0: float) -> List[float]:
    """
    u·tan u = √(z0²-u²)（对称态）与 -u·cot u = √(z0²-u²)（反对称态）的全部根
    每个 tan 分支 [jπ/2, (j+1)π/2) 至多一个根，j 为偶数取对称方程，奇数取反对称方程
    Args:
        z0: √(U0·a²/C)
    Returns:
        升序根列表，对称/反对称交替
    """
    if not z0 > 0:
        raise NoBoundStates(f"z0 = {z0} 时不存在束缚态", z0=z0)
    roots = []
    branches = int(math.ceil(2.0 * z0 / math.pi))
    for j in range(branches):
        lo = j * math.pi / 2.0
        hi = min((j + 1) * math.pi / 2.0 - _ASYMPTOTE_GAP, z0)
        if hi <= lo:
            continue
        func = _even_branch if j % 2 == 0 else _odd_branch
        f_lo, f_hi = func(lo, z0), func(hi, z0)
        if f_lo == 0.0:
            roots.append(lo)
            continue
        if f_lo * f_hi > 0:
            raise RootBracketFailure(f"第 {j} 个分支上没有变号", branch=j, lo=lo, hi=hi)
        root = bisect(func, lo, hi, args=(z0,), xtol=ROOT_XTOL, maxiter=ROOT_MAXITER)
        logger.debug(f"方势阱分支 {j}: u = {root:.12f}")
        roots.append(float(root))
    if not roots:
        raise NoBoundStates(f"z0 = {z0} 时未找到根", z0=z0)
    return roots


def square_well_spectrum(params: SquareWellParams) -> SpectralInput:
    """方势阱的等谱无反射近似：κ_i = u_i/a"""
    roots = square_well_roots(params.strength)
    kappas = tuple(u / params.half_width for u in roots)
    logger.info(f"方势阱谱: z0={params.strength:.6g}, {len(kappas)} 个能级")
    return SpectralInput(kappas, SymmetricMode(), params.c_phys)


def morse_spectrum(params: MorseParams) -> SpectralInput:
    """
    E_n = -D(1-(n+1/2)/a)²，取全部 (n+1/2)/a < 1 的能级，κ 升序
    """
    if not params.a_morse > 0.5:
        raise NoBoundStates(f"a = {params.a_morse} 时 Morse 势没有束缚态", a_morse=params.a_morse)
    scale = math.sqrt(params.depth / params.c_phys)
    kappas = []
    n = 0
    while (n + 0.5) / params.a_morse < 1.0:
        kappas.append(scale * (1.0 - (n + 0.5) / params.a_morse))
        n += 1
    return SpectralInput(tuple(sorted(kappas)), SymmetricMode(), params.c_phys)


def morse_curve(params: MorseParams, grid: Sequence[float]) -> PotentialCurve:
    """V(x)/D = exp(-2αx/x0) - 2exp(-αx/x0)，用于与重构势对比"""
    xs = np.asarray(grid, dtype=float)
    t = np.exp(-params.alpha * xs / params.x0)
    return PotentialCurve(xs, params.depth * (t * t - 2.0 * t), params.c_phys)


def resolve_preset(name: str) -> SpectralInput:
    """
    解析预设名
    Args:
        name: "pt:N"、"well:z0"（z0 = √(U0a²/C)，a = C = 1）或 "morse:a"（D = C = 1）
    """
    family, sep, arg = str(name).strip().partition(":")
    if not sep or not arg:
        raise InvalidPreset(f"预设格式应为 族名:参数，得到 {name!r}", preset=name)
    family = family.lower()
    if family == "pt":
        if not arg.strip().lstrip("+-").isdigit():
            raise InvalidPreset(f"pt 预设的 N 必须为整数: {arg!r}", preset=name)
        return poschl_teller_spectrum(int(arg))
    try:
        value = float(arg)
    except ValueError:
        raise InvalidPreset(f"预设参数不是数字: {arg!r}", preset=name)
    if not math.isfinite(value):
        raise InvalidPreset(f"预设参数必须有限: {arg!r}", preset=name)
    if family == "well":
        if not value > 0:
            raise NoBoundStates(f"z0 = {value} 时不存在束缚态", z0=value)
        return square_well_spectrum(SquareWellParams(1.0, value * value, 1.0))
    if family == "morse":
        return morse_spectrum(MorseParams(1.0, value))
    raise InvalidPreset(f"未知的预设族: {family}", preset=name)


# 测试代码
if __name__ == "__main__":
    print(f"pt:4 -> {poschl_teller_spectrum(4).kappas}")
    print(f"well:5 -> {square_well_spectrum(SquareWellParams(1.0, 25.0)).kappas}")
    print(f"morse:4 -> {morse_spectrum(MorseParams(1.0, 4.0)).kappas}")
