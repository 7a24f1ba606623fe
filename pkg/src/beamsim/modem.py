"""PAM constellations, symbol generation, and the threshold decision rule."""

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """L-ary PAM alphabet with half-spacing d and pulse energy E_g.

    Amplitudes are {(2l - 1 - L) d : 1 <= l <= L}, symmetric about zero.
    Transmitted symbol values are sqrt(E_g) * amplitude.
    """

    order: int
    half_spacing: float = 1.0
    pulse_energy: float = 1.0

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"constellation order must be >= 2, got {self.order}")
        if self.half_spacing <= 0:
            raise ValueError("half_spacing must be positive")
        if self.pulse_energy <= 0:
            raise ValueError("pulse_energy must be positive")

    def amplitude(self, l: int) -> float:
        """Amplitude of point l (1-based index)."""
        if not 1 <= l <= self.order:
            raise IndexError(f"amplitude index {l} out of range 1..{self.order}")
        return (2 * l - 1 - self.order) * self.half_spacing

    def amplitudes(self) -> np.ndarray:
        """All L amplitudes in increasing order."""
        return (2 * np.arange(1, self.order + 1) - 1 - self.order) * self.half_spacing

    def symbol_values(self) -> np.ndarray:
        """Symbol values s(l) = sqrt(E_g) * amplitude(l)."""
        return math.sqrt(self.pulse_energy) * self.amplitudes()

    @property
    def max_symbol(self) -> float:
        """Largest symbol value s(L)."""
        return math.sqrt(self.pulse_energy) * self.amplitude(self.order)

    @property
    def step(self) -> float:
        """Half the distance between adjacent symbol values, d * sqrt(E_g)."""
        return self.half_spacing * math.sqrt(self.pulse_energy)

    @property
    def average_energy(self) -> float:
        """Mean squared symbol value, d^2 E_g (L^2 - 1) / 3."""
        return (
            self.half_spacing**2
            * self.pulse_energy
            * (self.order**2 - 1)
            / 3.0
        )

    @property
    def bits_per_symbol(self) -> float:
        return math.log2(self.order)


def unit_energy_pam(order: int) -> Constellation:
    """PAM constellation with E_g = 1 and d chosen for unit average symbol energy."""
    if order < 2:
        raise ValueError(f"constellation order must be >= 2, got {order}")
    d = math.sqrt(3.0 / (order**2 - 1))
    return Constellation(order=order, half_spacing=d, pulse_energy=1.0)


def decide(y_real: float, gain: float, c: Constellation) -> int:
    """Threshold decision for one real beamformer output sample.

    ``gain`` is the per-unit-amplitude effective gain Re{w h} sqrt(E_g); the
    decision intervals are evaluated literally, so a nonpositive gain yields
    degenerate (but well-defined) decisions rather than an error.
    Returns the 1-based constellation index.
    """
    amps = c.amplitudes()
    d = c.half_spacing
    L = c.order
    if y_real <= gain * (amps[0] + d):
        return 1
    for l in range(2, L):
        lo = gain * (amps[l - 1] - d)
        hi = gain * (amps[l - 1] + d)
        if lo < y_real <= hi:
            return l
    return L


def decide_block(y_real: np.ndarray, gain: float, c: Constellation) -> np.ndarray:
    """Vectorized ``decide`` for positive gain. Returns 1-based indices."""
    if gain <= 0:
        return np.array([decide(float(y), gain, c) for y in np.ravel(y_real)]).reshape(
            np.shape(y_real)
        )
    thresholds = gain * (c.amplitudes()[:-1] + c.half_spacing)
    # side='left' assigns boundary samples to the lower bin (the "<=" branch)
    return np.searchsorted(thresholds, y_real, side="left") + 1


@dataclass(frozen=True)
class InterfererTupleSet:
    """All symbol-value tuples of the K-1 interferers of one user.

    ``users`` holds the 0-based indices j != k in ascending order; ``tuples``
    has shape (count, K-1) with column order matching ``users``.
    """

    users: tuple
    tuples: np.ndarray

    @property
    def count(self) -> int:
        return self.tuples.shape[0]


def enumerate_interferers(constellations, k: int) -> InterfererTupleSet:
    """Enumerate symbol-value tuples for all users j != k, lexicographically.

    User indices ascend across columns and the amplitude index of the largest
    j varies fastest, giving a deterministic ordering.
    """
    n_users = len(constellations)
    if not 0 <= k < n_users:
        raise IndexError(f"user index {k} out of range 0..{n_users - 1}")
    others = tuple(j for j in range(n_users) if j != k)
    value_lists = [constellations[j].symbol_values() for j in others]
    if not value_lists:
        return InterfererTupleSet(users=(), tuples=np.zeros((1, 0)))
    tuples = np.array(list(itertools.product(*value_lists)))
    return InterfererTupleSet(users=others, tuples=tuples)


def draw_symbols(constellations, rng: np.random.Generator, size: int = None):
    """Draw independent uniform symbols for every user.

    Returns (indices, values): 1-based indices and symbol values, each of
    shape (K,) or (K, size) when ``size`` is given.
    """
    shape = () if size is None else (size,)
    indices = np.empty((len(constellations),) + shape, dtype=np.int64)
    values = np.empty((len(constellations),) + shape)
    for j, c in enumerate(constellations):
        idx = rng.integers(1, c.order + 1, size=shape)
        indices[j] = idx
        values[j] = c.symbol_values()[idx - 1]
    return indices, values
