"""
正向验证
对重构势做独立的数值检查：Numerov 打靶求束缚态能量、平面波传递估计反射系数、求和规则 ∫V dx = -4CΣκ_n
三项检查只依赖势能曲线本身，不调用重构路线的代码
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import bisect

from errors import InsufficientDecay, NonUniformGrid, StateCountMismatch
from formats import make_grid, render_json
from spectral_core import ValidatedSpectrum
from tau_engine import PotentialCurve, build_expansion, sample_potential

logger = logging.getLogger(__name__)

DECAY_LIMIT = 1e-10
UNIFORM_RTOL = 1e-6
# 递推值超过该量级时整体缩放，缩放不改变节点与匹配结果
RESCALE_LIMIT = 1e150
RESCALE_FACTOR = 1e-150
# 能量上限取 -TOP_FRACTION·|V_min|
TOP_FRACTION = 1e-6
MAX_ISOLATION_STEPS = 200


@dataclass
class NumerovSolution:
    xs: np.ndarray
    ys: np.ndarray
    energy: float
    direction: str

    @property
    def nodes(self) -> int:
        y = np.real(self.ys)
        return int(np.count_nonzero(np.signbit(y[1:]) != np.signbit(y[:-1])))


@dataclass
class VerificationReport:
    recovered_energies: List[float]
    target_energies: List[float]
    reflection_samples: List[Tuple[float, float]]
    sum_rule: Tuple[float, float]
    max_energy_residual: float
    max_reflection: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "recovered_energies": list(self.recovered_energies),
            "target_energies": list(self.target_energies),
            "reflection_samples": [[k, r] for k, r in self.reflection_samples],
            "sum_rule": list(self.sum_rule),
            "max_energy_residual": self.max_energy_residual,
            "max_reflection": self.max_reflection,
        }

    def to_json(self) -> str:
        return render_json(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        data = json.loads(text)
        return cls(
            [float(v) for v in data["recovered_energies"]],
            [float(v) for v in data["target_energies"]],
            [(float(k), float(r)) for k, r in data["reflection_samples"]],
            (float(data["sum_rule"][0]), float(data["sum_rule"][1])),
            float(data["max_energy_residual"]),
            float(data["max_reflection"]),
        )

    @property
    def sum_rule_residual(self) -> float:
        integral, expected = self.sum_rule
        return abs(integral - expected) / abs(expected)

    def failures(self, energy_tolerance: float, reflection_tolerance: float) -> List[str]:
        """未通过的检查项；空列表表示全部通过"""
        failed = []
        if not self.max_energy_residual <= energy_tolerance:
            failed.append("energies")
        if not self.max_reflection <= reflection_tolerance:
            failed.append("reflection")
        if not self.sum_rule_residual <= energy_tolerance:
            failed.append("sum_rule")
        return failed


def grid_step(curve: PotentialCurve) -> float:
    """均匀网格步长；不均匀时抛出 NonUniformGrid"""
    xs = curve.xs
    if xs.size < 3:
        raise NonUniformGrid("Numerov 积分至少需要 3 个网格点", points=int(xs.size))
    steps = np.diff(xs)
    h = float((xs[-1] - xs[0]) / (xs.size - 1))
    if not h > 0 or np.max(np.abs(steps - h)) > UNIFORM_RTOL * h:
        raise NonUniformGrid("网格步长不均匀", step=h, max_deviation=float(np.max(np.abs(steps - h))))
    return h


def _check_decay(curve: PotentialCurve) -> None:
    ends = max(abs(float(curve.vs[0])), abs(float(curve.vs[-1])))
    if ends >= DECAY_LIMIT:
        raise InsufficientDecay(f"势能在边界处 |V| = {ends:.3e}，未衰减到 {DECAY_LIMIT:g} 以下",
                                left=float(curve.vs[0]), right=float(curve.vs[-1]))


def _numerov_weights(curve: PotentialCurve, energy: float, h: float) -> np.ndarray:
    """g_i = 1 + h²·f_i/12，f = (E-V)/C"""
    return 1.0 + h * h * (energy - curve.vs) / (12.0 * curve.c_phys)


def _tail_ratio(g_end: float, energy: float):
    """
    常势区的离散解 y_i = r^i：r + 1/r = (12-10g)/g
    E ≤ 0 返回增长实根 r ≥ 1，E > 0 返回单位圆上的 e^{ik_d h}
    """
    half_trace = (6.0 - 5.0 * g_end) / g_end
    if energy <= 0:
        c = max(half_trace, 1.0)
        return c + math.sqrt(c * c - 1.0)
    c = min(max(half_trace, -1.0), 1.0)
    return complex(c, math.sqrt(1.0 - c * c))


def _recurrence(g: np.ndarray, y0, y1, stop: Optional[int] = None) -> np.ndarray:
    """
    沿数组方向做 Numerov 递推
    y_{i+1} = ((12-10g_i)y_i - g_{i-1}y_{i-1}) / g_{i+1}
    """
    count = g.size if stop is None else min(stop, g.size)
    a = ((12.0 - 10.0 * g[1:count - 1]) / g[2:count]).tolist()
    b = (g[:count - 2] / g[2:count]).tolist()
    ys = [y0, y1]
    rescaled = []
    prev, cur = y0, y1
    for i in range(count - 2):
        nxt = a[i] * cur - b[i] * prev
        if abs(nxt) > RESCALE_LIMIT:
            nxt *= RESCALE_FACTOR
            cur *= RESCALE_FACTOR
            ys[-1] = cur
            rescaled.append(len(ys) - 1)
        ys.append(nxt)
        prev, cur = cur, nxt
    out = np.array(ys)
    with np.errstate(under="ignore"):
        for idx in rescaled:
            out[:idx] *= RESCALE_FACTOR
    return out


def _integrate(curve: PotentialCurve, energy: float, direction: str, h: float,
               stop: Optional[int] = None) -> np.ndarray:
    g = _numerov_weights(curve, energy, h)
    if direction == "backward":
        g = g[::-1]
    elif direction != "forward":
        raise ValueError(f"未知的积分方向: {direction}")
    r = _tail_ratio(float(g[0]), energy)
    if isinstance(r, complex) and direction == "backward":
        # 右端纯透射波 e^{ikx}，向左一步相位为 e^{-ikh}
        r = r.conjugate()
    ys = _recurrence(g, 1.0 + 0j if isinstance(r, complex) else 1.0, r, stop)
    return ys[::-1] if direction == "backward" else ys


def numerov_integrate(curve: PotentialCurve, energy: float, direction: str = "forward") -> NumerovSolution:
    """
    在整个网格上积分 -C·ψ'' + V·ψ = E·ψ
    Args:
        curve: 均匀网格上的势能
        energy: 能量 E
        direction: "forward" 从左端出发（E<0 时初值 e^{+qx}，E>0 时 e^{ikx}），
                   "backward" 从右端出发（E<0 时初值 e^{-qx}，E>0 时透射波 e^{ikx}）
    Returns:
        按网格原顺序排列的解；数值过大时分段整体缩放过
    """
    h = grid_step(curve)
    ys = _integrate(curve, float(energy), direction, h)
    return NumerovSolution(curve.xs, ys, float(energy), direction)


def _match_index(curve: PotentialCurve, energy: float) -> int:
    """最外侧右经典转折点，找不到时取网格中点"""
    allowed = np.flatnonzero(curve.vs < energy)
    idx = int(allowed[-1]) if allowed.size else curve.xs.size // 2
    return min(max(idx, 1), curve.xs.size - 3)


def matching_wronskian(curve: PotentialCurve, energy: float, match_index: Optional[int] = None) -> float:
    """
    左右两侧积分解在匹配点的归一化离散 Casorati 行列式
    对 φ = g·ψ 该量与匹配点无关，只在本征能量处为零
    """
    h = grid_step(curve)
    m = _match_index(curve, energy) if match_index is None else int(match_index)
    size = curve.xs.size
    g = _numerov_weights(curve, energy, h)
    left = _integrate(curve, energy, "forward", h, stop=m + 2)
    # 右侧解覆盖下标 m..size-1
    right = _integrate(curve, energy, "backward", h, stop=size - m)
    pl0, pl1 = g[m] * float(left[m]), g[m + 1] * float(left[m + 1])
    pr0, pr1 = g[m] * float(right[0]), g[m + 1] * float(right[1])
    scale = math.hypot(pl0, pl1) * math.hypot(pr0, pr1)
    if scale == 0.0:
        return 0.0
    return (pl0 * pr1 - pl1 * pr0) / scale


class _NodeCounter:
    """缓存各能量处左积分解的节点数"""

    def __init__(self, curve: PotentialCurve, h: float):
        self.curve = curve
        self.h = h
        self.counts: Dict[float, int] = {}

    def __call__(self, energy: float) -> int:
        if energy not in self.counts:
            ys = _integrate(self.curve, energy, "forward", self.h)
            self.counts[energy] = int(np.count_nonzero(np.signbit(ys[1:]) != np.signbit(ys[:-1])))
        return self.counts[energy]

    def bracket(self, level: int, lo: float, hi: float) -> Tuple[float, float]:
        """已探测能量中，节点数 ≤ level 的最大者与 ≥ level+1 的最小者"""
        for energy, count in self.counts.items():
            if count <= level and energy > lo:
                lo = energy
            if count >= level + 1 and energy < hi:
                hi = energy
        return lo, hi


def bound_states(curve: PotentialCurve, count: int) -> List[float]:
    """
    打靶法求束缚态能量
    先用左积分解的节点数（Sturm 计数）把每个能级单独括住，再对匹配点 Casorati 行列式做二分
    Args:
        curve: 在两端充分衰减的均匀网格势能
        count: 期望的束缚态个数
    Returns:
        升序能量列表
    """
    if count < 1:
        raise ValueError("count 必须为正整数")
    h = grid_step(curve)
    v_min = float(np.min(curve.vs))
    if not v_min < 0:
        raise StateCountMismatch("势能处处非负，不存在束缚态", expected=count, found=0)
    e_floor = v_min
    e_top = -TOP_FRACTION * abs(v_min)
    nodes = _NodeCounter(curve, h)
    found = nodes(e_top)
    if found != count:
        raise StateCountMismatch(f"能量 {e_top:.3e} 以下有 {found} 个束缚态，期望 {count} 个",
                                 expected=count, found=found)

    energies = []
    for level in range(count):
        lo, hi = nodes.bracket(level, e_floor, e_top)
        steps = 0
        while not (nodes(lo) == level and nodes(hi) == level + 1):
            mid = 0.5 * (lo + hi)
            if nodes(mid) <= level:
                lo = mid
            else:
                hi = mid
            steps += 1
            if steps > MAX_ISOLATION_STEPS:
                raise StateCountMismatch(f"无法单独括住第 {level + 1} 个能级", expected=count, found=level)

        xtol = 1e-13 * abs(v_min)
        f_lo = matching_wronskian(curve, lo)
        f_hi = matching_wronskian(curve, hi)
        if f_lo * f_hi < 0:
            energy = bisect(lambda e: matching_wronskian(curve, e), lo, hi, xtol=xtol, maxiter=200)
        else:
            logger.warning(f"第 {level + 1} 个能级的匹配函数在区间两端同号，改用节点计数二分")
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                if nodes(mid) <= level:
                    lo = mid
                else:
                    hi = mid
            energy = 0.5 * (lo + hi)
        logger.debug(f"能级 {level + 1}: E = {energy:.12g}")
        energies.append(float(energy))
    logger.info(f"打靶完成: {count} 个束缚态, 探测 {len(nodes.counts)} 次")
    return sorted(energies)


def reflection_coefficient(curve: PotentialCurve, k: float) -> float:
    """
    |R(k)|：从右端以纯透射波 e^{ikx} 向左积分，在左端分解为入射 a·e^{ikx} 与反射 b·e^{-ikx}
    """
    if not k > 0:
        raise ValueError(f"波数 k = {k} 必须为正")
    _check_decay(curve)
    h = grid_step(curve)
    energy = curve.c_phys * k * k
    ys = _integrate(curve, energy, "backward", h)
    g = _numerov_weights(curve, energy, h)
    p = _tail_ratio(float(g[0]), energy)
    psi0, psi1 = complex(ys[0]), complex(ys[1])
    incident = (psi1 - psi0 / p) / (p - 1.0 / p)
    reflected = psi0 - incident
    return abs(reflected) / abs(incident)


def sum_rule(curve: PotentialCurve, spectrum: ValidatedSpectrum) -> Tuple[float, float]:
    """(∫V dx, -4C·Σκ_n)"""
    _check_decay(curve)
    integral = float(trapezoid(curve.vs, curve.xs))
    expected = -4.0 * spectrum.c_phys * float(np.sum(spectrum.kappa_array))
    return integral, expected


def verification_grid(spectrum: ValidatedSpectrum, domain_factor: float = 30.0,
                      step_factor: float = 1e-3) -> np.ndarray:
    """[-domain_factor/κ_1, domain_factor/κ_1]，步长 step_factor/κ_1"""
    unit = 1.0 / spectrum.kappas[0]
    return make_grid(-domain_factor * unit, domain_factor * unit, step_factor * unit)


def verify_curve(curve: PotentialCurve, spectrum: ValidatedSpectrum,
                 k_values: Sequence[float], workers: int = 1) -> VerificationReport:
    """对给定势能曲线做全部三项检查"""
    target = [float(e) for e in np.sort(spectrum.energies)]
    recovered = bound_states(curve, spectrum.n)
    residual = max(abs(r - t) / abs(t) for r, t in zip(recovered, target))

    ks = [float(k) for k in k_values]
    if workers > 1 and len(ks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            magnitudes = list(pool.map(lambda k: reflection_coefficient(curve, k), ks))
    else:
        magnitudes = [reflection_coefficient(curve, k) for k in ks]

    rule = sum_rule(curve, spectrum)
    report = VerificationReport(
        recovered_energies=recovered,
        target_energies=target,
        reflection_samples=list(zip(ks, magnitudes)),
        sum_rule=rule,
        max_energy_residual=float(residual),
        max_reflection=float(max(magnitudes)) if magnitudes else 0.0,
    )
    logger.info(f"验证完成: 能量残差 {report.max_energy_residual:.3e}, 最大 |R| {report.max_reflection:.3e}")
    return report


def verify_spectrum(spectrum: ValidatedSpectrum, domain_factor: float = 30.0, step_factor: float = 1e-3,
                    k_factors: Sequence[float] = (0.5, 1.0, 2.0), grid: Optional[Sequence[float]] = None,
                    workers: int = 1) -> Tuple[VerificationReport, PotentialCurve]:
    """
    重构并验证
    Args:
        spectrum: 已校验的谱
        domain_factor: 默认网格半宽（以 1/κ_1 为单位）
        step_factor: 默认网格步长（以 1/κ_1 为单位）
        k_factors: 反射系数采样波数（以 κ_1 为单位）
        grid: 显式网格，给出时忽略前两个参数
        workers: 采样与反射探测的线程数
    """
    xs = verification_grid(spectrum, domain_factor, step_factor) if grid is None else np.asarray(grid, dtype=float)
    curve = sample_potential(build_expansion(spectrum), xs, workers)
    ks = [f * spectrum.kappas[0] for f in k_factors]
    return verify_curve(curve, spectrum, ks, workers), curve


# 测试代码
if __name__ == "__main__":
    from spectra_gen import poschl_teller_spectrum
    from spectral_core import validate

    report, _ = verify_spectrum(validate(poschl_teller_spectrum(2)))
    print(report.to_json())
