"""
束缚态波函数
由谱直接重构归一化束缚态 Ψ_n(x)：Ψ = A⁻¹Λ，A_mn = δ_mn + Λ_mΛ_n/(κ_m+κ_n)，Λ_n = C_n e^{-κ_n x}

行列式比 det[A⁽ⁿ⁾]/det(A) 用一次分解加列替换求解得到，不单独计算两个行列式。
为避免 Λ 跨越几百个数量级，实际求解的是 M = diag(1/Λ²) + K（K_mn = 1/(κ_m+κ_n)），
A = D_Λ·M·D_Λ，因此 Ψ_n = (M⁻¹·1)_n / Λ_n。
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from errors import EmptyGrid, IndexOutOfRange, InvalidGrid
from formats import render_csv
from naive_oracle import guarded_exponents
from spectral_core import ValidatedSpectrum, norming_constants
from tau_engine import TauExpansion, build_expansion, eval_potential

logger = logging.getLogger(__name__)

RESIDUAL_STEP = 5e-3
# 批量求解时每块的点数
_BATCH_POINTS = 20_000


def _cauchy(spectrum: ValidatedSpectrum) -> np.ndarray:
    k = spectrum.kappa_array
    return 1.0 / (k[:, None] + k[None, :])


def _lambdas(spectrum: ValidatedSpectrum, e: np.ndarray) -> np.ndarray:
    """Λ_n = C_n e^{-κ_n x} = √(2κ_n)·e^{-κ_n(x-x_n)}"""
    return np.sqrt(2.0 * spectrum.kappa_array) * np.exp(-e)


def matrix_A(spectrum: ValidatedSpectrum, x: float) -> np.ndarray:
    """A_mn = δ_mn + Λ_mΛ_n/(κ_m+κ_n)，对称正定"""
    e = guarded_exponents(spectrum, x)
    lam = _lambdas(spectrum, e)
    return np.eye(spectrum.n) + np.outer(lam, lam) * _cauchy(spectrum)


def _check_index(spectrum: ValidatedSpectrum, n: int) -> int:
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= spectrum.n:
        raise IndexOutOfRange(f"能级下标 n = {n} 应在 1..{spectrum.n} 内", n=n, size=spectrum.n)
    return int(n)


def psi_vector(spectrum: ValidatedSpectrum, x: float) -> np.ndarray:
    """x 处全部 Ψ_1..Ψ_N"""
    e = guarded_exponents(spectrum, x)
    k = spectrum.kappa_array
    m = _cauchy(spectrum)
    m[np.diag_indices_from(m)] += np.exp(2.0 * e) / (2.0 * k)
    y = cho_solve(cho_factor(m), np.ones(spectrum.n))
    return y * np.exp(e) / np.sqrt(2.0 * k)


def eval_psi(spectrum: ValidatedSpectrum, n: int, x: float) -> float:
    """
    第 n 个归一化束缚态在 x 处的值
    Args:
        spectrum: 已校验的谱
        n: 1 起始的能级下标（按 κ 升序）
        x: 坐标
    Returns:
        Ψ_n(x)，符号约定为 Ψ_n(x)e^{κ_n x} → +C_n（x → +∞）
    """
    n = _check_index(spectrum, n)
    return float(psi_vector(spectrum, x)[n - 1])


def _laplacian(func, x: float, delta: float) -> float:
    """五点中心差分求二阶导"""
    f2m, f1m, f0, f1p, f2p = (func(x + j * delta) for j in (-2, -1, 0, 1, 2))
    return (-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) / (12.0 * delta * delta)


def schrodinger_residual(spectrum: ValidatedSpectrum, n: int, x: float,
                         expansion: Optional[TauExpansion] = None,
                         delta: float = RESIDUAL_STEP) -> float:
    """|Ψ_n'' - ((V-E_n)/C)·Ψ_n|，V 取自 τ 展开（测试统计量）"""
    n = _check_index(spectrum, n)
    if expansion is None:
        expansion = build_expansion(spectrum)
    d2 = _laplacian(lambda t: eval_psi(spectrum, n, t), x, delta)
    energy = float(spectrum.energies[n - 1])
    v = eval_potential(expansion, x)
    return abs(d2 - (v - energy) / spectrum.c_phys * eval_psi(spectrum, n, x))


class WavefunctionSet:
    """一个谱的全部束缚态波函数"""

    def __init__(self, spectrum: ValidatedSpectrum):
        self.spectrum = spectrum
        self._expansion: Optional[TauExpansion] = None

    @property
    def size(self) -> int:
        return self.spectrum.n

    @property
    def norming(self) -> np.ndarray:
        """归一化常数 C_n"""
        return norming_constants(self.spectrum)

    @property
    def expansion(self) -> TauExpansion:
        if self._expansion is None:
            self._expansion = build_expansion(self.spectrum)
        return self._expansion

    def evaluate(self, n: int, x: float) -> float:
        return eval_psi(self.spectrum, n, x)

    def values(self, x: float) -> np.ndarray:
        return psi_vector(self.spectrum, x)

    def residual(self, n: int, x: float, delta: float = RESIDUAL_STEP) -> float:
        return schrodinger_residual(self.spectrum, n, x, self.expansion, delta)

    def sample(self, grid: Sequence[float]) -> np.ndarray:
        """
        在网格上批量求值
        Returns:
            形状 (点数, N) 的数组，第 n-1 列为 Ψ_n
        """
        xs = np.asarray(grid, dtype=float)
        if xs.ndim != 1:
            raise InvalidGrid("网格必须是一维数组")
        if xs.size == 0:
            raise EmptyGrid("网格为空")
        k = self.spectrum.kappa_array
        cauchy = _cauchy(self.spectrum)
        parts: List[np.ndarray] = []
        for start in range(0, xs.size, _BATCH_POINTS):
            e = guarded_exponents(self.spectrum, xs[start:start + _BATCH_POINTS])
            m = np.broadcast_to(cauchy, (e.shape[0],) + cauchy.shape).copy()
            idx = np.arange(self.size)
            m[:, idx, idx] += np.exp(2.0 * e) / (2.0 * k)
            rhs = np.ones(e.shape + (1,))
            y = np.linalg.solve(m, rhs)[..., 0]
            parts.append(y * np.exp(e) / np.sqrt(2.0 * k))
        logger.debug(f"波函数采样完成: {xs.size} 个点, N={self.size}")
        return np.concatenate(parts, axis=0)

    def to_csv(self, grid: Sequence[float]) -> str:
        """CSV：x,psi_1,...,psi_N"""
        xs = np.asarray(grid, dtype=float)
        psi = self.sample(xs)
        header = ["x"] + [f"psi_{i}" for i in range(1, self.size + 1)]
        return render_csv(header, ([x] + row for x, row in zip(xs.tolist(), psi.tolist())))


def sign_changes(values: Sequence[float], floor: float = 0.0) -> int:
    """符号变化次数；|值| ≤ floor 的点忽略（尾部数值噪声）"""
    v = np.asarray(values, dtype=float)
    v = v[np.abs(v) > floor]
    if v.size < 2:
        return 0
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


# 测试代码
if __name__ == "__main__":
    from spectra_gen import poschl_teller_spectrum
    from spectral_core import validate

    spectrum = validate(poschl_teller_spectrum(4))
    wavefunctions = WavefunctionSet(spectrum)
    print(f"Ψ(0) = {wavefunctions.values(0.0)}")
    print(f"残差 n=1, x=0.5: {wavefunctions.residual(1, 0.5):.3e}")
