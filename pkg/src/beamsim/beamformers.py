"""Closed-form receive beamformers: ZF, MMSE, and the maximum-SMINR eigenvector."""

import numpy as np


def lift_weights(w: np.ndarray) -> np.ndarray:
    """Complex 1xN weights -> real 2N vector [Re{w}, Im{w}]."""
    w = np.asarray(w)
    return np.concatenate([w.real, w.imag])


def unlift_weights(w_bar: np.ndarray) -> np.ndarray:
    """Inverse of :func:`lift_weights`."""
    w_bar = np.asarray(w_bar, dtype=float)
    n = w_bar.size // 2
    return w_bar[:n] + 1j * w_bar[n:]


def lift_channel(h: np.ndarray) -> np.ndarray:
    """Complex Nx1 channel -> real 2N vector [Re{h}, -Im{h}].

    With :func:`lift_weights` this turns Re{w h} into the real inner product
    lift_weights(w) @ lift_channel(h).
    """
    h = np.asarray(h)
    return np.concatenate([h.real, -h.imag])


def align_phase(w: np.ndarray, h_k: np.ndarray) -> np.ndarray:
    """Rotate w by a unit-modulus factor so that w h_k is real positive."""
    w = np.asarray(w)
    g = w @ h_k
    if g == 0:
        raise ValueError("cannot align phase: w h_k is zero")
    return w * np.exp(-1j * np.angle(g))


def zf(H: np.ndarray, k: int) -> np.ndarray:
    """Zero-forcing beamformer: row k of the pseudo-inverse, unit norm, aligned.

    Raises on (numerically) rank-deficient H.
    """
    N, K = H.shape
    if N < K:
        raise np.linalg.LinAlgError(f"zero-forcing needs N >= K, got N={N}, K={K}")
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise np.linalg.LinAlgError("channel matrix is rank-deficient")
    w = np.linalg.pinv(H)[k]
    w = align_phase(w, H[:, k])
    return w / np.linalg.norm(w)


def mmse(H: np.ndarray, k: int, sigma_z: float, symbol_energies) -> np.ndarray:
    """Linear MMSE beamformer, unit norm and phase-aligned.

    ``symbol_energies`` holds per-user average symbol energies used in the
    received-signal covariance.
    """
    if sigma_z <= 0:
        raise ValueError("sigma_z must be positive")
    N = H.shape[0]
    Es = np.asarray(symbol_energies, dtype=float)
    R = H @ np.diag(Es) @ H.conj().T + sigma_z**2 * np.eye(N)
    w = H[:, k].conj() @ np.linalg.inv(R)
    w = align_phase(w, H[:, k])
    return w / np.linalg.norm(w)


def max_eigvec_symmetric(M: np.ndarray, tol: float = 1e-12):
    """(largest eigenvalue, unit eigenvector) of a real symmetric matrix.

    Deterministic sign convention: the first component of the eigenvector
    whose magnitude exceeds tol is made positive.
    """
    M = np.asarray(M, dtype=float)
    if M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.max(np.abs(M)) or 1.0
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    eigvals, eigvecs = np.linalg.eigh(M)
    lam = float(eigvals[-1])
    v = eigvecs[:, -1]
    for x in v:
        if abs(x) > tol:
            if x < 0:
                v = -v
            break
    return lam, v


def sminr_quadratic_form(H: np.ndarray, k: int, constellations) -> np.ndarray:
    """2N x 2N real symmetric matrix whose Rayleigh quotient is the SMINR numerator.

    M = d^2 E_g htilde_k htilde_k^T - sum_{j != k} s_j(L_j)^2 htilde_j htilde_j^T.
    """
    c_k = constellations[k]
    hk = lift_channel(H[:, k])
    M = c_k.step**2 * np.outer(hk, hk)
    for j in range(H.shape[1]):
        if j == k:
            continue
        hj = lift_channel(H[:, j])
        M -= constellations[j].max_symbol ** 2 * np.outer(hj, hj)
    return M


def sminr_closed_form(H: np.ndarray, k: int, constellations) -> np.ndarray:
    """Maximum power-SMINR beamformer via the lifted eigenvector solution.

    Returns the unit-norm complex weights recovered from the dominant
    eigenvector of :func:`sminr_quadratic_form`, with the sign chosen so
    Re{w h_k} > 0. No further phase rotation is applied: any nontrivial
    rotation would change Re{w h_j} and lose the attained maximum.
    """
    M = sminr_quadratic_form(H, k, constellations)
    _, v = max_eigvec_symmetric(M)
    w = unlift_weights(v)
    g = (w @ H[:, k]).real
    if g < 0:
        w = -w
    return w
