"""Dense real kernels: Pfaffian, matrix exponential, LU determinant and inverse.

Pfaffians and determinants are returned as :class:`SignLog` so that products of
many of them never overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SignLog:
    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if self.sign == 0 and self.log_abs != -math.inf:
            object.__setattr__(self, "log_abs", -math.inf)

    @classmethod
    def from_value(cls, x: float) -> "SignLog":
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @property
    def value(self) -> float:
        return 0.0 if self.sign == 0 else self.sign * math.exp(self.log_abs)

    def __mul__(self, other: "SignLog") -> "SignLog":
        return SignLog(self.sign * other.sign, self.log_abs + other.log_abs)

    def __float__(self) -> float:
        return self.value


ZERO = SignLog(0, -math.inf)
ONE = SignLog(1, 0.0)


def pfaffian(a: np.ndarray, tol: float = 1e-10) -> SignLog:
    """Pfaffian via skew-symmetric Parlett-Reid elimination with pivoting."""
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("square matrix required")
    if n % 2:
        raise ValueError("Pfaffian needs an even dimension")
    if n == 0:
        return ONE
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a + a.T).max() > tol * scale:
        raise ValueError("matrix is not antisymmetric within tolerance")
    a = 0.5 * (a - a.T)
    sign = 1
    logabs = 0.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            # swap rows/cols k+1 and kp; the Pfaffian flips sign
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            sign = -sign
        piv = a[k + 1, k]
        if piv == 0.0:
            return ZERO
        # pf picks up a[k, k+1] = -piv
        sign *= 1 if -piv > 0 else -1
        logabs += math.log(abs(piv))
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            col = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return SignLog(sign, logabs)


def pfaffian_value(a: np.ndarray) -> float:
    return pfaffian(a).value


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling and squaring with a Pade approximant)."""
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    return scipy.linalg.expm(a)


@dataclass(frozen=True)
class LUResult:
    det: SignLog
    inv: np.ndarray


def lu_det_inverse(a: np.ndarray, rtol: float = 1e-13) -> LUResult:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    n = a.shape[0]
    if n == 0:
        return LUResult(ONE, np.zeros((0, 0)))
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    diag = np.diag(lu)
    norm = max(float(np.abs(a).max()), np.finfo(float).tiny)
    if np.min(np.abs(diag)) < rtol * norm:
        raise SingularMatrixError(f"pivot {np.min(np.abs(diag)):.3e} below {rtol}*|A|")
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    sign = (-1) ** swaps * int(np.prod(np.sign(diag)))
    det = SignLog(sign, float(np.sum(np.log(np.abs(diag)))))
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(n))
    return LUResult(det, inv)


def principal_pfaffians(f: np.ndarray) -> np.ndarray:
    """``pf(F[S, S])`` for every subset S of the N modes at once.

    Entry ``x`` of the result belongs to the subset whose mode u is bit
    ``N - 1 - u`` of x (mode 0 is the most significant bit). This is the
    occupation-basis expansion of ``exp(sum_{u<v} F_uv d_u^+ d_v^+)|0>``, built by
    applying one commuting pair factor ``1 + F_uv d_u^+ d_v^+`` at a time.
    """
    f = np.asarray(f, dtype=np.float64)
    n = f.shape[0]
    if n > 26:
        raise ValueError("too many modes for a dense expansion")
    psi = np.zeros(2**n)
    psi[0] = 1.0
    idx = np.arange(2**n, dtype=np.int64)
    for u in range(n):
        bu = 1 << (n - 1 - u)
        for v in range(u + 1, n):
            if f[u, v] == 0.0:
                continue
            bv = 1 << (n - 1 - v)
            src = idx[(idx & (bu | bv)) == 0]
            # modes strictly between u and v sit on bits between bv and bu
            between = (bu - 1) & ~((bv << 1) - 1)
            odd = np.bitwise_count(src & between) & 1
            psi[src | bu | bv] += f[u, v] * np.where(odd, -1.0, 1.0) * psi[src]
    return psi
