"""Core signal types and closed-form phasor math for two-frequency depth
correction.

Everything here is a pure function over immutable inputs: distances between
antennas and candidate points, unit-magnitude signal hypotheses, the
differential phasor that converts a residual phase into a depth correction,
and the unambiguous-correction window implied by a frequency difference.

Units are SI throughout: meters, hertz, radians. Complex values are
double-precision (complex128).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StructuralError

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact

# Bundled two-frequency configurations spanning a 10 GHz band below 82 GHz,
# keyed by the nominal frequency difference in GHz.
FREQUENCY_PAIRS = {
    "0.5": (81.45e9, 82.00e9),
    "1.0": (80.98e9, 82.00e9),
    "2.0": (79.95e9, 82.00e9),
    "4.0": (77.91e9, 82.00e9),
    "8.0": (73.97e9, 82.00e9),
    "10.0": (72.00e9, 82.00e9),
}


@dataclass(frozen=True)
class FrequencySet:
    """An ordered set of carrier frequencies in hertz.

    Frequencies must be strictly increasing and positive, so every ordered
    pair has a positive difference.
    """

    frequencies: tuple

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if len(freqs) < 1:
            raise ConfigurationError("frequency set must contain at least one carrier")
        if any(f <= 0.0 for f in freqs):
            raise ConfigurationError("carrier frequencies must be positive")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ConfigurationError("carrier frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", freqs)

    def __len__(self):
        return len(self.frequencies)

    def __getitem__(self, k: int) -> float:
        return self.frequencies[k]

    def delta(self, low: int = 0, high: int = -1) -> float:
        """Difference between two carriers (defaults to last minus first)."""
        d = self.frequencies[high] - self.frequencies[low]
        if d <= 0.0:
            raise ConfigurationError("frequency difference must be positive")
        return d

    @classmethod
    def from_pair_name(cls, name: str) -> "FrequencySet":
        """Look up one of the bundled two-frequency configurations."""
        try:
            return cls(FREQUENCY_PAIRS[str(name)])
        except KeyError:
            known = ", ".join(sorted(FREQUENCY_PAIRS))
            raise ConfigurationError(
                f"unknown frequency pair {name!r} (known: {known})"
            ) from None

    @classmethod
    def triple_from_pair_names(cls, low: str, high: str) -> "FrequencySet":
        """Three-carrier set built from two bundled pairs sharing their top
        frequency: the low-difference pair supplies the fine carrier, the
        high-difference pair the far one."""
        f_low = cls.from_pair_name(low)
        f_high = cls.from_pair_name(high)
        if f_low.frequencies[1] != f_high.frequencies[1]:
            raise ConfigurationError("pairs must share their upper carrier")
        carriers = sorted({*f_low.frequencies, *f_high.frequencies})
        if len(carriers) != 3:
            raise ConfigurationError("pair combination does not yield three carriers")
        return cls(tuple(carriers))


@dataclass(frozen=True)
class AntennaArray:
    """Transmit and receive element positions of a MIMO aperture, meters."""

    tx_positions: np.ndarray  # (T, 3)
    rx_positions: np.ndarray  # (R, 3)

    def __post_init__(self):
        tx = np.atleast_2d(np.asarray(self.tx_positions, dtype=np.float64))
        rx = np.atleast_2d(np.asarray(self.rx_positions, dtype=np.float64))
        if tx.ndim != 2 or tx.shape[1] != 3 or tx.shape[0] < 1:
            raise StructuralError("tx_positions must be a (T, 3) array with T >= 1")
        if rx.ndim != 2 or rx.shape[1] != 3 or rx.shape[0] < 1:
            raise StructuralError("rx_positions must be a (R, 3) array with R >= 1")
        if not (np.isfinite(tx).all() and np.isfinite(rx).all()):
            raise StructuralError("antenna positions must be finite")
        tx.setflags(write=False)
        rx.setflags(write=False)
        object.__setattr__(self, "tx_positions", tx)
        object.__setattr__(self, "rx_positions", rx)

    @property
    def n_tx(self) -> int:
        return self.tx_positions.shape[0]

    @property
    def n_rx(self) -> int:
        return self.rx_positions.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.n_tx * self.n_rx


def mimo_cross_array(n_tx: int, n_rx: int, aperture: float, z: float = 0.0) -> AntennaArray:
    """Orthogonal linear TX/RX arrays (TX along x, RX along y), the usual
    layout that fills a 2-D virtual aperture with n_tx*n_rx pairs."""
    if n_tx < 1 or n_rx < 1 or aperture <= 0.0:
        raise ConfigurationError("array needs n_tx, n_rx >= 1 and a positive aperture")
    tx_x = np.linspace(-aperture / 2.0, aperture / 2.0, n_tx) if n_tx > 1 else np.zeros(1)
    rx_y = np.linspace(-aperture / 2.0, aperture / 2.0, n_rx) if n_rx > 1 else np.zeros(1)
    tx = np.column_stack([tx_x, np.zeros(n_tx), np.full(n_tx, z)])
    rx = np.column_stack([np.zeros(n_rx), rx_y, np.full(n_rx, z)])
    return AntennaArray(tx, rx)


@dataclass(frozen=True)
class Scene:
    """Ideal point targets: positions, complex reflectivities, and a constant
    per-target phase offset added to every echo."""

    positions: np.ndarray       # (N, 3) meters
    reflectivities: np.ndarray  # (N,) complex
    phase_offsets: np.ndarray   # (N,) radians

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=np.float64))
        refl = np.atleast_1d(np.asarray(self.reflectivities, dtype=np.complex128))
        phi = np.atleast_1d(np.asarray(self.phase_offsets, dtype=np.float64))
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise StructuralError("positions must be a (N, 3) array with N >= 1")
        if refl.shape != (pos.shape[0],) or phi.shape != (pos.shape[0],):
            raise StructuralError("reflectivities and phase_offsets must be (N,)")
        if not (np.isfinite(pos).all() and np.isfinite(refl).all() and np.isfinite(phi).all()):
            raise StructuralError("scene values must be finite")
        if np.any(np.abs(refl) <= 0.0):
            raise StructuralError("reflectivity magnitudes must be positive")
        for a in (pos, refl, phi):
            a.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "reflectivities", refl)
        object.__setattr__(self, "phase_offsets", phi)

    @property
    def n_targets(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def from_targets(cls, targets) -> "Scene":
        """Build from an iterable of (position, reflectivity, phase_offset)."""
        pos, refl, phi = zip(*targets)
        return cls(np.asarray(pos), np.asarray(refl), np.asarray(phi))

    def union(self, other: "Scene") -> "Scene":
        return Scene(
            np.vstack([self.positions, other.positions]),
            np.concatenate([self.reflectivities, other.reflectivities]),
            np.concatenate([self.phase_offsets, other.phase_offsets]),
        )


@dataclass(frozen=True)
class BasebandTensor:
    """Demodulated complex measurements indexed (tx, rx, frequency)."""

    data: np.ndarray  # (T, R, F) complex128

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 3:
            raise StructuralError("baseband data must have shape (T, R, F)")
        if not np.isfinite(data).all():
            raise StructuralError("baseband entries must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape

    def check_consistent(self, array: AntennaArray, freqs: FrequencySet) -> None:
        t, r, f = self.data.shape
        if (t, r, f) != (array.n_tx, array.n_rx, len(freqs)):
            raise StructuralError(
                f"baseband shape {(t, r, f)} does not match array "
                f"{(array.n_tx, array.n_rx)} and {len(freqs)} frequencies"
            )


def round_trip_distance(tx, rx, p) -> float:
    """Path length from a TX element to a point and back to an RX element.

    Accepts single 3-vectors or broadcastable stacks of them.
    """
    tx = np.asarray(tx, dtype=np.float64)
    rx = np.asarray(rx, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    d = np.linalg.norm(tx - p, axis=-1) + np.linalg.norm(rx - p, axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def hypothesis_phasor(rho, f: float):
    """Expected unit phasor for an echo that travelled ``rho`` meters at
    carrier ``f``: exp(-j 2 pi f rho / c)."""
    rho = np.asarray(rho, dtype=np.float64)
    out = np.exp(-2j * np.pi * f / SPEED_OF_LIGHT * rho)
    return complex(out) if np.ndim(out) == 0 else out


def max_unambiguous_depth(delta_f: float) -> float:
    """Half-width of the depth window a frequency difference can correct
    without phase wrapping: c / (4 delta_f)."""
    if delta_f <= 0.0:
        raise ConfigurationError("frequency difference must be positive")
    return SPEED_OF_LIGHT / (4.0 * delta_f)


def phase_to_depth_correction(phase, f_eff: float):
    """Convert a residual phase (radians) into a signed depth correction.

    The correction is c * phase / (4 pi f_eff): linear and odd in the phase,
    so a phase at +/-pi maps to +/- the maximum unambiguous correction.
    """
    if f_eff <= 0.0:
        raise ConfigurationError("effective frequency must be positive")
    phase = np.asarray(phase, dtype=np.float64)
    out = SPEED_OF_LIGHT / (4.0 * np.pi * f_eff) * phase
    return float(out) if np.ndim(out) == 0 else out


def differential_phasor(c1, c2):
    """Combine two residual phasors into one at their difference frequency:
    c2 * conj(c1), whose angle is the wrapped phase difference."""
    return np.multiply(c2, np.conj(c1))


def principal_phase(z):
    """Angle of a complex value in (-pi, pi]; exact ties resolve to +pi."""
    ang = np.angle(z)
    if np.ndim(ang) == 0:
        return float(np.pi) if ang == -np.pi else float(ang)
    ang = np.asarray(ang)
    ang[ang == -np.pi] = np.pi
    return ang


def residual_phase(z):
    """Signed residual phase carried by a correlation phasor.

    Correlation phasors encode a phase lag as exp(-j phi), so the signed
    residual is the angle of the conjugate; a target beyond the assumed
    depth yields a positive residual.
    """
    return principal_phase(np.conj(z))
