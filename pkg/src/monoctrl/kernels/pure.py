"""Pure Python/scipy implementations of the time-stepping kernels.

Same call surface as the compiled module; selected automatically when the
extension is unavailable or when MONOCTRL_PURE is set.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

BACKEND = "python"


def _as_banded(dl: np.ndarray, d: np.ndarray, du: np.ndarray) -> np.ndarray:
    n = d.shape[0]
    ab = np.zeros((3, n), dtype=np.result_type(dl, d, du))
    ab[0, 1:] = du
    ab[1, :] = d
    ab[2, :-1] = dl
    return ab


def solve_tridiag(dl: np.ndarray, d: np.ndarray, du: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve the tridiagonal system with sub/main/super diagonals dl, d, du."""
    return solve_banded((1, 1), _as_banded(dl, d, du), b)


def tridiag_matvec(dl: np.ndarray, d: np.ndarray, du: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = d * x
    y[1:] += dl * x[:-1]
    y[:-1] += du * x[1:]
    return y


def cn_propagate_forward(
    h_dl: np.ndarray,
    h_d: np.ndarray,
    h_du: np.ndarray,
    m_dl: np.ndarray,
    m_d: np.ndarray,
    m_du: np.ndarray,
    v: np.ndarray,
    tau: float,
    x0: np.ndarray,
) -> np.ndarray:
    """Crank-Nicolson sweep for H(v) = H0 + v * M with real tridiagonal bands.

    tau = dt / 2.  Returns the node trajectory, shape (len(v) + 1, len(x0)).
    """
    n_steps = v.shape[0]
    out = np.empty((n_steps + 1, x0.shape[0]), dtype=complex)
    out[0] = x0
    x = x0.astype(complex)
    for k in range(n_steps):
        p = tau * (h_d + v[k] * m_d)
        o_dl = tau * (h_dl + v[k] * m_dl)
        o_du = tau * (h_du + v[k] * m_du)
        rhs = tridiag_matvec(-1j * o_dl, 1.0 - 1j * p, -1j * o_du, x)
        x = solve_tridiag(1j * o_dl, 1.0 + 1j * p, 1j * o_du, rhs)
        out[k + 1] = x
    return out


def cn_propagate_adjoint(
    h_dl: np.ndarray,
    h_d: np.ndarray,
    h_du: np.ndarray,
    m_dl: np.ndarray,
    m_d: np.ndarray,
    m_du: np.ndarray,
    v: np.ndarray,
    tau: float,
    y_final: np.ndarray,
) -> np.ndarray:
    """Discrete adjoint of cn_propagate_forward (no state-cost sources).

    Each backward step applies the conjugate-transposed step map, which for
    a Hermitian generator is solve with the minus-branch followed by a
    matvec with the plus-branch.
    """
    n_steps = v.shape[0]
    out = np.empty((n_steps + 1, y_final.shape[0]), dtype=complex)
    out[n_steps] = y_final
    y = y_final.astype(complex)
    for k in range(n_steps - 1, -1, -1):
        p = tau * (h_d + v[k] * m_d)
        o_dl = tau * (h_dl + v[k] * m_dl)
        o_du = tau * (h_du + v[k] * m_du)
        z = solve_tridiag(-1j * o_dl, 1.0 - 1j * p, -1j * o_du, y)
        y = tridiag_matvec(1j * o_dl, 1.0 + 1j * p, 1j * o_du, z)
        out[k] = y
    return out
