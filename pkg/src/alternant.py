"""
交错行列式（alternant）工具
D(κ_1,…,κ_n) 的闭式乘积、暴力行列式对照、Vandermonde 乘积，以及通用行列式
"""
import itertools
import logging
from functools import lru_cache
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import lu_factor

from errors import DegenerateGap, NotSquare, SizeLimit

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 12
PERMUTATION_MAX_N = 8
# 超过该阶数时在对数域累乘，避免下溢
LOG_DOMAIN_MIN_N = 16


def _as_subset(values: Sequence[float]) -> np.ndarray:
    k = np.asarray(values, dtype=float)
    if k.ndim != 1:
        raise ValueError("κ 子集必须是一维序列")
    return k


def pair_log_factors(kappas: Sequence[float]) -> np.ndarray:
    """
    L_ij = 2 ln|(κ_j-κ_i)/(κ_j+κ_i)|（对角线为 0）
    ln D(子集) 等于子集内所有 i<j 的 L_ij 之和
    """
    k = _as_subset(kappas)
    diff = np.abs(k[None, :] - k[:, None])
    off = ~np.eye(k.size, dtype=bool)
    if np.any(diff[off] == 0):
        raise DegenerateGap("κ 子集中存在相等元素", values=k.tolist())
    total = k[None, :] + k[:, None]
    with np.errstate(divide="ignore"):
        factors = 2.0 * (np.log(diff) - np.log(total))
    np.fill_diagonal(factors, 0.0)
    return factors


def log_alternant_product(values: Sequence[float]) -> float:
    """ln D(κ)，空集与单元素集为 0"""
    k = _as_subset(values)
    if k.size <= 1:
        return 0.0
    return float(np.sum(np.triu(pair_log_factors(k), 1)))


def alternant_product(values: Sequence[float]) -> float:
    """
    D(κ_1,…,κ_n) = Π_{i<j} ((κ_j-κ_i)/(κ_j+κ_i))²
    Args:
        values: 升序正数子集
    Returns:
        (0, 1] 内的正数；|s| ≤ 1 时为 1
    """
    k = _as_subset(values)
    n = k.size
    if n <= 1:
        return 1.0
    if n > LOG_DOMAIN_MIN_N:
        return float(np.exp(log_alternant_product(k)))
    i, j = np.triu_indices(n, 1)
    gaps = k[j] - k[i]
    if np.any(gaps == 0):
        raise DegenerateGap("κ 子集中存在相等元素", values=k.tolist())
    ratios = gaps / (k[j] + k[i])
    return float(np.prod(ratios * ratios))


def log_alternant_products(kappas: Sequence[float], masks: np.ndarray) -> np.ndarray:
    """
    批量计算 ln D(κ_T)，masks 每行是一个子集的 0/1 指示向量
    与 alternant_product 使用同一个乘积公式
    """
    factors = pair_log_factors(kappas)
    m = np.asarray(masks, dtype=float)
    return 0.5 * np.sum((m @ factors) * m, axis=1)


def alternant_matrix(values: Sequence[float]) -> np.ndarray:
    """单位对角、非对角元 2√(κ_iκ_j)/(κ_i+κ_j) 的矩阵"""
    k = _as_subset(values)
    root = np.sqrt(k)
    return 2.0 * np.outer(root, root) / (k[:, None] + k[None, :])


def alternant_det_oracle(values: Sequence[float]) -> float:
    """
    暴力行列式，仅用于测试与基准
    det(A) = Π 2κ_i · det(1/(κ_i+κ_j))，后者对有理数做精确的行主元消元
    """
    k = _as_subset(values)
    if k.size > ORACLE_MAX_N:
        raise SizeLimit(f"行列式对照最多支持 {ORACLE_MAX_N} 阶", n=int(k.size), limit=ORACLE_MAX_N)
    if k.size == 0:
        return 1.0
    exact = [Fraction(float(v)) for v in k]
    cauchy = [[1 / (a + b) for b in exact] for a in exact]
    det = _exact_det(cauchy)
    for v in exact:
        det *= 2 * v
    return float(det)


def _exact_det(rows: List[List[Fraction]]) -> Fraction:
    """有理数行主元消元"""
    rows = [list(r) for r in rows]
    n = len(rows)
    det = Fraction(1)
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(rows[r][c]))
        if rows[p][c] == 0:
            return Fraction(0)
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            det = -det
        pivot = rows[c][c]
        det *= pivot
        for r in range(c + 1, n):
            factor = rows[r][c] / pivot
            if factor:
                rows[r] = rows[r][:c] + [x - factor * y for x, y in zip(rows[r][c:], rows[c][c:])]
    return det


def vandermonde(qs: Sequence[float]) -> float:
    """Π_{i<j}(q_j - q_i)；长度 ≤ 1 时为 1"""
    q = np.asarray(qs, dtype=float)
    if q.size <= 1:
        return 1.0
    i, j = np.triu_indices(q.size, 1)
    return float(np.prod(q[j] - q[i]))


def _check_square(m: np.ndarray) -> np.ndarray:
    a = np.asarray(m)
    if a.dtype != np.longdouble:
        a = a.astype(float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"需要方阵，得到形状 {a.shape}", shape=list(a.shape))
    return a


def generic_slogdet(m: np.ndarray) -> Tuple[float, float]:
    """行主元 LU 分解求 (符号, ln|det|)"""
    a = _check_square(m).astype(float)
    if a.shape[0] == 0:
        return 1.0, 0.0
    lu, piv = lu_factor(a, check_finite=True)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return 0.0, float("-inf")
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    sign = (-1.0) ** swaps * float(np.prod(np.sign(diag)))
    return sign, float(np.sum(np.log(np.abs(diag))))


def generic_det(m: np.ndarray) -> float:
    """带符号的行列式"""
    sign, logabs = generic_slogdet(m)
    if sign == 0.0:
        return 0.0
    return sign * float(np.exp(logabs))


def extended_lu(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    np.longdouble 下的行主元 LU 分解
    Returns:
        (lu, perm, sign)：下三角乘子与上三角因子存在同一数组里，perm 为行置换，sign 为置换符号
    """
    a = np.array(m, dtype=np.longdouble)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"需要方阵，得到形状 {a.shape}", shape=list(a.shape))
    n = a.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for c in range(n):
        p = c + int(np.argmax(np.abs(a[c:, c])))
        if p != c:
            a[[c, p]] = a[[p, c]]
            perm[[c, p]] = perm[[p, c]]
            sign = -sign
        pivot = a[c, c]
        if pivot == 0:
            continue
        a[c + 1:, c] /= pivot
        if c + 1 < n:
            a[c + 1:, c + 1:] -= np.outer(a[c + 1:, c], a[c, c + 1:])
    return a, perm, sign


def extended_slogdet(m: np.ndarray) -> Tuple[float, np.longdouble]:
    """
    np.longdouble 下的 (符号, ln|det|)
    小主元由抵消产生时，扩展精度把对数行列式的舍入误差压到差分可用的量级
    """
    lu, _, sign = extended_lu(m)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return 0.0, np.longdouble("-inf")
    sign *= float(np.prod(np.sign(diag)))
    return sign, np.sum(np.log(np.abs(diag)))


def extended_solve(factors: Tuple[np.ndarray, np.ndarray, float], rhs: np.ndarray) -> np.ndarray:
    """用 extended_lu 的结果解 M·X = rhs（rhs 可为向量或矩阵）"""
    lu, perm, _ = factors
    y = np.array(rhs, dtype=np.longdouble)[perm]
    n = lu.shape[0]
    for i in range(1, n):
        y[i] -= np.dot(lu[i, :i], y[:i])
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - np.dot(lu[i, i + 1:], y[i + 1:])) / lu[i, i]
    return y


@lru_cache(maxsize=None)
def _permutation_table(n: int) -> Tuple[np.ndarray, np.ndarray]:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    # 逆序数奇偶性给出置换符号
    inversions = np.zeros(perms.shape[0], dtype=np.intp)
    for a in range(n):
        for b in range(a + 1, n):
            inversions += perms[:, a] > perms[:, b]
    signs = np.where(inversions % 2 == 0, 1.0, -1.0)
    return perms, signs


def permutation_det(m: np.ndarray) -> float:
    """按置换求和的字面行列式（N! 项），N ≤ 8"""
    a = _check_square(m)
    n = a.shape[0]
    if n > PERMUTATION_MAX_N:
        raise SizeLimit(f"置换求和模式最多支持 {PERMUTATION_MAX_N} 阶", n=n, limit=PERMUTATION_MAX_N)
    if n == 0:
        return 1.0
    perms, signs = _permutation_table(n)
    products = np.prod(a[np.arange(n), perms], axis=1)
    return np.dot(signs.astype(a.dtype), products)


# 测试代码
if __name__ == "__main__":
    subset = [1.0, 2.0, 3.0, 4.0]
    print(f"乘积公式: {alternant_product(subset):.6e}")
    print(f"行列式对照: {alternant_det_oracle(subset):.6e}")
    print(f"Vandermonde([1,2,3]) = {vandermonde([1, 2, 3])}")
