"""Rayleigh channel generation, CSI perturbation, and received-signal synthesis."""

import json

import numpy as np


def sample_channel(n_antennas: int, n_users: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. circularly symmetric complex Gaussian channel, unit entry variance.

    Returns an (N, K) complex matrix whose columns are per-user channels.
    """
    if n_antennas < 1 or n_users < 1:
        raise ValueError("channel dimensions must be >= 1")
    re = rng.standard_normal((n_antennas, n_users))
    im = rng.standard_normal((n_antennas, n_users))
    return (re + 1j * im) / np.sqrt(2.0)


def perturb_csi(H: np.ndarray, var_ce: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. CSCG estimation error of variance ``var_ce`` to each entry."""
    if var_ce < 0:
        raise ValueError("CSI error variance must be nonnegative")
    if var_ce == 0:
        return H.copy()
    re = rng.standard_normal(H.shape)
    im = rng.standard_normal(H.shape)
    return H + np.sqrt(var_ce / 2.0) * (re + 1j * im)


def received_signal(
    H: np.ndarray, s: np.ndarray, sigma_z: float, rng: np.random.Generator = None
) -> np.ndarray:
    """r = H s + z with i.i.d. CSCG noise of variance sigma_z^2 per antenna.

    ``s`` may be a (K,) vector or a (K, n) block of real symbol values;
    ``sigma_z = 0`` gives the deterministic noise-free output.
    """
    s = np.asarray(s)
    if s.shape[0] != H.shape[1]:
        raise ValueError(
            f"symbol vector length {s.shape[0]} does not match K={H.shape[1]}"
        )
    if sigma_z < 0:
        raise ValueError("sigma_z must be nonnegative")
    r = H @ s
    if sigma_z > 0:
        re = rng.standard_normal(r.shape)
        im = rng.standard_normal(r.shape)
        r = r + sigma_z / np.sqrt(2.0) * (re + 1j * im)
    return r


def channel_to_json(H: np.ndarray) -> str:
    """Serialize a channel matrix as a row-major JSON array of [re, im] pairs."""
    payload = {
        "n_antennas": H.shape[0],
        "n_users": H.shape[1],
        "entries": [[float(x.real), float(x.imag)] for x in H.ravel(order="C")],
    }
    return json.dumps(payload)


def channel_from_json(text: str) -> np.ndarray:
    """Inverse of :func:`channel_to_json`."""
    payload = json.loads(text)
    entries = np.array(payload["entries"], dtype=float)
    H = entries[:, 0] + 1j * entries[:, 1]
    return H.reshape(payload["n_antennas"], payload["n_users"])
