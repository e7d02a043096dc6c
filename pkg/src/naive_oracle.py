"""
朴素行列式路线
直接组装 Ã_N = B̃_N + C̃_N 并求行列式，作为展开的正确性对照与基准测试的基线
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from alternant import PERMUTATION_MAX_N, extended_lu, extended_slogdet, extended_solve, generic_det, permutation_det
from errors import OverflowRange, SizeLimit
from formats import render_csv
from spectra_gen import poschl_teller_spectrum
from spectral_core import ValidatedSpectrum, validate
from tau_engine import build_expansion, eval_potential

logger = logging.getLogger(__name__)

# |κ_i(x-x_i)| 的上限（自然对数尺度）
EXPONENT_GUARD = 300.0
NAIVE_MAX_N = 12
BENCH_MAX_N = 20
LAPLACE_MAX_POINTS = 5


@dataclass(frozen=True)
class AssembledMatrix:
    entries: np.ndarray
    x: float
    spectrum: ValidatedSpectrum


def guarded_exponents(spectrum: ValidatedSpectrum, x) -> np.ndarray:
    """κ_i(x-x_i)；x 为标量时返回长度 N 的数组，为一维数组时返回 (点数, N)"""
    xs = np.asarray(x, dtype=float)
    e = (xs[..., None] - spectrum.shift_array) * spectrum.kappa_array
    bad = np.argwhere(np.abs(e) >= EXPONENT_GUARD)
    if bad.size:
        where = tuple(int(v) for v in bad[0])
        i = where[-1]
        raise OverflowRange(f"|κ_{i + 1}(x-x_{i + 1})| = {abs(e[where]):.1f} 超出范围",
                            index=i + 1, x=float(xs[where[:-1]]), exponent=float(e[where]))
    return e


def assemble(spectrum: ValidatedSpectrum, x: float) -> AssembledMatrix:
    """
    组装 Ã_N
    对角元 e^{κ_i(x-x_i)} + e^{-κ_i(x-x_i)}，非对角 (i,j) 为 2√(κ_iκ_j)/(κ_i+κ_j)·e^{-κ_j(x-x_j)}
    """
    e = guarded_exponents(spectrum, x)
    k = spectrum.kappa_array
    root = np.sqrt(k)
    coupling = 2.0 * np.outer(root, root) / (k[:, None] + k[None, :])
    # 第 j 列整体乘 e^{-κ_j(x-x_j)}，C̃_N 不对称
    entries = coupling * np.exp(-e)[None, :]
    entries[np.diag_indices_from(entries)] = np.exp(e) + np.exp(-e)
    return AssembledMatrix(entries, float(x), spectrum)


def _check_naive_size(spectrum: ValidatedSpectrum) -> None:
    if spectrum.n > NAIVE_MAX_N:
        raise SizeLimit(f"朴素行列式最多支持 N = {NAIVE_MAX_N}", n=spectrum.n, limit=NAIVE_MAX_N)


def _scaled_matrix(spectrum: ValidatedSpectrum, x, signs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    np.longdouble 下的行缩放矩阵 M 与行权重 w
    G = diag(e^{2e}) + K 满足 Ã_N = G·diag(e^{-e})；s_i > 0 的行除以 e^{2e_i} 得到 M，元素全部有界
    w_i 是 M 第 i 行的对角指数部分：s_i > 0 时为 1，否则为 e^{2e_i}
    """
    x = np.longdouble(x)
    k = spectrum.kappa_array.astype(np.longdouble)
    e = (x - spectrum.shift_array.astype(np.longdouble)) * k
    if np.any(np.abs(e) >= EXPONENT_GUARD):
        guarded_exponents(spectrum, float(x))
    root = np.sqrt(k)
    m = 2 * np.outer(root, root) / (k[:, None] + k[None, :])
    m[np.diag_indices_from(m)] += np.exp(2 * e)
    rows = signs > 0
    m[rows] *= np.exp(-2 * e[rows])[:, None]
    w = np.where(rows, np.longdouble(1), np.exp(2 * e))
    return m, w


def _scaled_log_det(spectrum: ValidatedSpectrum, x, signs: np.ndarray, method: str) -> np.longdouble:
    """ln det(Ã_N) - Σ s_i·κ_i(x-x_i)，符号 s_i 由调用方固定"""
    m, _ = _scaled_matrix(spectrum, x, signs)
    if method == "laplace":
        det = permutation_det(m)
        return np.log(det) if det > 0 else np.longdouble("nan")
    if method != "lu":
        raise ValueError(f"未知的行列式方法: {method}")
    sign, logabs = extended_slogdet(m)
    if sign <= 0:
        logger.warning(f"det(Ã_N) 在 x={float(x)} 处非正: sign={sign}")
        return np.longdouble("nan")
    return logabs


def _signs_at(spectrum: ValidatedSpectrum, x: float) -> np.ndarray:
    e = spectrum.kappa_array * (float(x) - spectrum.shift_array)
    return np.where(e >= 0, 1.0, -1.0)


def naive_log_tau(spectrum: ValidatedSpectrum, x: float, method: str = "lu") -> float:
    """ln det(Ã_N)；method 为 "lu" 或 "laplace"（置换求和，N ≤ 8）"""
    _check_naive_size(spectrum)
    signs = _signs_at(spectrum, x)
    linear = float(np.dot(signs, spectrum.kappa_array * (float(x) - spectrum.shift_array)))
    return float(_scaled_log_det(spectrum, x, signs, method)) + linear


def naive_log_derivatives(spectrum: ValidatedSpectrum, x: float) -> Tuple[float, float]:
    """
    用 Jacobi 公式直接求 (ln det Ã_N)′ 与 (ln det Ã_N)″，不做差分
    ln det Ã_N = ln det G - Σe，G′ = diag(2κe^{2e})，G″ = diag(4κ²e^{2e})
    行缩放后 G⁻¹G′ = M⁻¹·diag(2κw)，G⁻¹G″ = M⁻¹·diag(4κ²w)
    """
    _check_naive_size(spectrum)
    signs = _signs_at(spectrum, x)
    m, w = _scaled_matrix(spectrum, x, signs)
    k = spectrum.kappa_array.astype(np.longdouble)
    inverse = extended_solve(extended_lu(m), np.eye(spectrum.n, dtype=np.longdouble))
    u = 2 * k * w
    first = inverse * u[None, :]
    d1 = np.trace(first) - np.sum(k)
    d2 = np.sum(np.diag(inverse) * 2 * k * u) - np.sum(first * first.T)
    return float(d1), float(d2)


def naive_tau(spectrum: ValidatedSpectrum, x: float) -> float:
    """det(Ã_N)（行主元 LU）"""
    _check_naive_size(spectrum)
    return generic_det(assemble(spectrum, x).entries)


def naive_potential(spectrum: ValidatedSpectrum, x: float, h: float = 1e-4,
                    richardson: bool = False, method: str = "lu") -> float:
    """
    V(x) = -2C·d²/dx² ln det(Ã_N)，用步长 h 的中心二阶差分
    三个采样点共用 x 处的符号，扣掉的 Σ s_i·κ_i(x-x_i) 是 x 的线性函数，不影响二阶差分
    richardson 为 True 时用 h 与 h/2 做 Richardson 外推
    """
    if not 1e-5 <= h <= 1e-2:
        raise ValueError(f"差分步长 h={h} 应在 [1e-5, 1e-2] 内")
    _check_naive_size(spectrum)
    signs = _signs_at(spectrum, x)
    center = np.longdouble(x)
    mid = _scaled_log_det(spectrum, center, signs, method)

    def second_difference(step: np.longdouble) -> np.longdouble:
        left = _scaled_log_det(spectrum, center - step, signs, method)
        right = _scaled_log_det(spectrum, center + step, signs, method)
        return (left - 2 * mid + right) / (step * step)

    step = np.longdouble(h)
    d2 = second_difference(step)
    if richardson:
        d2 = (4 * second_difference(step / 2) - d2) / 3
    return float(-2.0 * spectrum.c_phys * d2)


@dataclass
class BenchmarkRow:
    n: int
    expansion_ns: float
    naive_lu_ns: Optional[float]
    naive_laplace_ns: Optional[float]
    terms: int
    build_ns: float = 0.0
    max_disagreement: Optional[float] = None


@dataclass
class BenchmarkReport:
    rows: List[BenchmarkRow] = field(default_factory=list)
    points: int = 0

    HEADER = ("N", "expansion_ns", "naive_lu_ns", "naive_laplace_ns", "terms")

    def to_csv(self) -> str:
        return render_csv(self.HEADER, (
            (r.n, r.expansion_ns, r.naive_lu_ns, r.naive_laplace_ns, r.terms) for r in self.rows
        ))

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "rows": [
                {
                    "N": r.n,
                    "expansion_ns": r.expansion_ns,
                    "naive_lu_ns": r.naive_lu_ns,
                    "naive_laplace_ns": r.naive_laplace_ns,
                    "terms": r.terms,
                    "build_ns": r.build_ns,
                    "max_disagreement": r.max_disagreement,
                }
                for r in self.rows
            ],
        }


def _per_point_ns(func: Callable[[float], float], xs: Sequence[float]) -> Tuple[float, List[float]]:
    values = []
    start = time.perf_counter_ns()
    for x in xs:
        values.append(func(x))
    elapsed = time.perf_counter_ns() - start
    return elapsed / max(1, len(xs)), values


def benchmark(n_range: Sequence[int], points: int, span: float = 2.0, h: float = 1e-4,
              richardson: bool = False) -> BenchmarkReport:
    """
    比较展开与朴素行列式的逐点求值耗时（单线程）
    Args:
        n_range: 能级数列表；朴素列只在 N ≤ 12 时测量，置换求和列只在 N ≤ 8 时测量
        points: 每个 N 的网格点数
        span: 网格半宽，点均匀分布在 [-span, span]
        h: 朴素路线的差分步长（只影响计时列，max_disagreement 用解析二阶导）
        richardson: 朴素路线是否做 Richardson 外推
    """
    ns = [int(n) for n in n_range]
    for n in ns:
        if n < 1 or n > BENCH_MAX_N:
            raise SizeLimit(f"基准测试的 N 应在 [1, {BENCH_MAX_N}] 内", n=n, limit=BENCH_MAX_N)
    if points < 1:
        raise ValueError("points 必须为正整数")

    xs = np.linspace(-span, span, points) if points > 1 else np.array([0.0])
    report = BenchmarkReport(points=points)
    for n in ns:
        spectrum = validate(poschl_teller_spectrum(n))

        start = time.perf_counter_ns()
        expansion = build_expansion(spectrum)
        build_ns = float(time.perf_counter_ns() - start)

        expansion_ns, v_expansion = _per_point_ns(lambda x: eval_potential(expansion, x), xs)

        naive_lu_ns = None
        naive_laplace_ns = None
        disagreement = None
        if n <= NAIVE_MAX_N:
            naive_lu_ns, _ = _per_point_ns(lambda x: naive_potential(spectrum, x, h, richardson), xs)
            # 差分只计时；一致性取自 Jacobi 公式的解析二阶导
            v_naive = [-2.0 * spectrum.c_phys * naive_log_derivatives(spectrum, x)[1] for x in xs]
            disagreement = float(np.max(np.abs(np.asarray(v_expansion) - np.asarray(v_naive))))
        if n <= PERMUTATION_MAX_N:
            laplace_xs = xs[:: max(1, len(xs) // LAPLACE_MAX_POINTS)][:LAPLACE_MAX_POINTS]
            naive_laplace_ns, _ = _per_point_ns(
                lambda x: naive_potential(spectrum, x, h, richardson, method="laplace"), laplace_xs)

        row = BenchmarkRow(n, expansion_ns, naive_lu_ns, naive_laplace_ns,
                           expansion.term_count, build_ns, disagreement)
        report.rows.append(row)
        logger.info(f"基准 N={n}: 展开 {expansion_ns:.0f} ns/点, 朴素 {naive_lu_ns} ns/点, 项数 {row.terms}")
    return report
