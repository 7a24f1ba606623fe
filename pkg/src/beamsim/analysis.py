"""Exact analytic error probability, its upper bound, SMINR metrics, and margins.

Every beamformer in the package is scored through these functions. All of
them are scale-invariant in w (the Q-function arguments are normalized by
||w||), and none clamps its output: the upper bound may legitimately exceed
one for weight vectors violating the nonnegative-margin constraints.
"""

import numpy as np
from scipy.special import erfc

from .channel import received_signal
from .modem import InterfererTupleSet, decide_block, draw_symbols, enumerate_interferers


def q_function(x):
    """Gaussian tail probability Q(x), evaluated via erfc for stability."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def effective_gains(w: np.ndarray, H: np.ndarray, k: int):
    """(self_gain, cross_gains): complex w h_k and the (K-1)-vector of w h_j."""
    gains = np.asarray(w) @ H
    others = [j for j in range(H.shape[1]) if j != k]
    return gains[k], gains[others]


def _check_weights(w: np.ndarray) -> float:
    norm = float(np.linalg.norm(w))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("weight vector must be nonzero and finite")
    return norm


def pe_arguments(
    w: np.ndarray,
    H: np.ndarray,
    k: int,
    constellations,
    sigma_z: float,
    tuple_set: InterfererTupleSet = None,
) -> np.ndarray:
    """Per-tuple Q-function arguments of the exact error probability.

    arg(b) = Re{w h_k d sqrt(E_g) - w H_kbar sbar(b)} / ((sigma_z/sqrt(2)) ||w||).
    """
    norm = _check_weights(w)
    if sigma_z <= 0:
        raise ValueError("sigma_z must be positive")
    if tuple_set is None:
        tuple_set = enumerate_interferers(constellations, k)
    gains = np.asarray(w) @ H
    self_term = gains[k].real * constellations[k].step
    cross_re = gains[list(tuple_set.users)].real
    numerators = self_term - tuple_set.tuples @ cross_re
    return numerators / (sigma_z / np.sqrt(2.0) * norm)


def exact_pe(
    w: np.ndarray,
    H: np.ndarray,
    k: int,
    constellations,
    sigma_z: float,
    tuple_set: InterfererTupleSet = None,
) -> float:
    """Exact symbol error probability of user k under the threshold decision rule.

    Q-sum over all interferer tuples with prefactor 2(L_k - 1) / (L_k N_p_k).
    """
    args = pe_arguments(w, H, k, constellations, sigma_z, tuple_set)
    L = constellations[k].order
    return 2.0 * (L - 1) / (L * args.size) * float(np.sum(q_function(args)))


def exact_pe_bruteforce(
    w: np.ndarray,
    H: np.ndarray,
    k: int,
    constellations,
    sigma_z: float,
    n_mc: int,
    rng: np.random.Generator,
    block: int = 100_000,
):
    """Monte-Carlo estimate of user k's symbol error probability.

    Draws all-user symbols and noise, pushes them through the channel, the
    beamformer, and the decision rule, and counts errors. Returns
    (estimate, standard_error).
    """
    if n_mc <= 0:
        raise ValueError("n_mc must be positive")
    _check_weights(w)
    w = np.asarray(w)
    gain = (w @ H[:, k]).real * np.sqrt(constellations[k].pulse_energy)
    errors = 0
    remaining = n_mc
    while remaining > 0:
        n = min(block, remaining)
        indices, values = draw_symbols(constellations, rng, size=n)
        r = received_signal(H, values, sigma_z, rng)
        y = (w @ r).real
        decisions = decide_block(y, gain, constellations[k])
        errors += int(np.count_nonzero(decisions != indices[k]))
        remaining -= n
    p_hat = errors / n_mc
    stderr = np.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / n_mc) / n_mc)
    return p_hat, stderr


def feasibility_margins(
    w: np.ndarray,
    H: np.ndarray,
    k: int,
    constellations,
    tuple_set: InterfererTupleSet = None,
):
    """Full per-tuple margins and the collapsed single margin.

    full(b) = Re{w h_k d sqrt(E_g) - w H_kbar sbar(b)}
    reduced = Re{w h_k d sqrt(E_g)} - sum_j |Re{w h_j s_j(L_j)}|
    The reduced margin equals min(full) exactly.
    """
    _check_weights(w)
    if tuple_set is None:
        tuple_set = enumerate_interferers(constellations, k)
    gains = np.asarray(w) @ H
    self_term = gains[k].real * constellations[k].step
    cross_re = gains[list(tuple_set.users)].real
    full = self_term - tuple_set.tuples @ cross_re
    peaks = np.array([constellations[j].max_symbol for j in tuple_set.users])
    reduced = self_term - float(np.sum(np.abs(cross_re * peaks)))
    return full, reduced


def pe_upper_bound(
    w: np.ndarray, H: np.ndarray, k: int, constellations, sigma_z: float
) -> float:
    """Single-Q upper bound on the exact error probability of user k.

    (2(L_k - 1)/L_k) Q(reduced_margin / ((sigma_z/sqrt(2)) ||w||)). The
    argument is normalized by ||w|| so the bound is scale-invariant; on
    unit-norm weights this is the plain worst-case-interference bound.
    """
    norm = _check_weights(w)
    if sigma_z <= 0:
        raise ValueError("sigma_z must be positive")
    _, reduced = feasibility_margins(w, H, k, constellations)
    L = constellations[k].order
    arg = reduced / (sigma_z / np.sqrt(2.0) * norm)
    return 2.0 * (L - 1) / L * float(q_function(arg))


def sminr_amp(
    w: np.ndarray, H: np.ndarray, k: int, constellations, sigma_z: float
) -> float:
    """Amplitude-based signal minus interference to noise ratio.

    Reduced margin divided by sigma_z / sqrt(2). Not normalized by ||w||: the
    metric is defined for (and maximized over) the unit ball.
    """
    _check_weights(w)
    _, reduced = feasibility_margins(w, H, k, constellations)
    return reduced / (sigma_z / np.sqrt(2.0))


def sminr_power(
    w: np.ndarray, H: np.ndarray, k: int, constellations, sigma_z: float
) -> float:
    """Power-based SMINR; may be negative when interference dominates."""
    _check_weights(w)
    gains = np.asarray(w) @ H
    self_part = (gains[k].real * constellations[k].step) ** 2
    cross = 0.0
    for j in range(H.shape[1]):
        if j == k:
            continue
        cross += (gains[j].real * constellations[j].max_symbol) ** 2
    return (self_part - cross) / (sigma_z**2 / 2.0)


def error_floor(k: int, constellations) -> float:
    """High-power error probability floor (L_k - 1) / prod_j L_j of user k."""
    n_b = 1
    for c in constellations:
        n_b *= c.order
    return (constellations[k].order - 1) / n_b
