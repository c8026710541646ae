"""Network parameters and Rayleigh block-fading channel generation.

Each epoch draws ``K`` independent exponential power gains (Rayleigh
amplitudes) with means set by a distance power-law path loss, normalised by
the noise power.

Randomness comes from numpy's counter-based ``Philox`` generator keyed by the
run seed.  Epoch ``i`` consumes a fixed block of ``stride`` uniforms starting
at counter offset ``i * stride``, so a single epoch can be regenerated without
replaying the trace and the full trace is produced in one vectorised call.
"""

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_DISTANCES",
    "NetworkConfig",
    "ChannelState",
    "mean_gain",
    "sample_epoch",
    "sample_trace",
    "save_trace_csv",
    "load_trace_csv",
]

# five EHU distances (m) used in the heterogeneous-distance study
DEFAULT_DISTANCES = (10.0, 12.5, 15.0, 17.0, 18.8)


@dataclass(frozen=True)
class NetworkConfig:
    """Static parameters of a single-BS harvest-then-transmit network.

    ``eta`` may be given as a scalar, which is broadcast to every user.
    Powers are in watts, distances in metres, ``ref_loss`` is the linear
    power gain at 1 m.
    """

    distances: tuple = DEFAULT_DISTANCES
    eta: object = 0.5
    p_c: float = 0.0
    P_max: float = 5.0
    P_avg: float = 1.0
    N_0: float = 1e-12
    T: float = 1.0
    alpha: float = 3.0
    ref_loss: float = 1e-3

    def __post_init__(self):
        d = tuple(float(v) for v in np.atleast_1d(self.distances))
        object.__setattr__(self, "distances", d)
        eta = np.broadcast_to(np.asarray(self.eta, dtype=float), (len(d),))
        object.__setattr__(self, "eta", tuple(float(v) for v in eta))
        for name in ("p_c", "P_max", "P_avg", "N_0", "T", "alpha", "ref_loss"):
            object.__setattr__(self, name, float(getattr(self, name)))
        self.validate()

    @property
    def K(self) -> int:
        return len(self.distances)

    @property
    def eta_array(self) -> np.ndarray:
        return np.array(self.eta)

    def validate(self):
        checks = [
            ("K", self.K >= 1),
            ("distances", all(v > 0 for v in self.distances)),
            ("eta", all(0 < v <= 1 for v in self.eta)),
            ("p_c", self.p_c >= 0),
            ("P_avg", 0 < self.P_avg <= self.P_max),
            ("N_0", self.N_0 > 0),
            ("T", self.T > 0),
            ("alpha", self.alpha > 0),
            ("ref_loss", self.ref_loss > 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ValueError(f"invalid NetworkConfig field: {name}")

    def replace(self, **changes) -> "NetworkConfig":
        fields = {
            "distances": self.distances,
            "eta": self.eta,
            "p_c": self.p_c,
            "P_max": self.P_max,
            "P_avg": self.P_avg,
            "N_0": self.N_0,
            "T": self.T,
            "alpha": self.alpha,
            "ref_loss": self.ref_loss,
        }
        if "distances" in changes and "eta" not in changes:
            if len(set(self.eta)) == 1:
                fields["eta"] = self.eta[0]
        fields.update(changes)
        return NetworkConfig(**fields)


@dataclass
class ChannelState:
    """Normalised gains ``x`` (1/W) of one epoch and ``a = eta * N_0 * x**2``."""

    x: np.ndarray
    a: np.ndarray
    epoch_index: int = 0

    @classmethod
    def from_gains(cls, x, config: NetworkConfig, epoch_index: int = 0):
        x = np.asarray(x, dtype=float)
        if x.shape != (config.K,):
            raise ValueError(f"expected {config.K} gains, got shape {x.shape}")
        if (x < 0).any():
            raise ValueError("channel gains must be nonnegative")
        a = config.eta_array * config.N_0 * x**2
        return cls(x=x, a=a, epoch_index=epoch_index)


def mean_gain(config: NetworkConfig, k=None):
    """Mean normalised gain ``ref_loss * D**-alpha / N_0`` of user ``k``.

    With ``k=None`` the means of all users are returned as an array.
    """
    d = np.asarray(config.distances)
    omega = config.ref_loss * d ** (-config.alpha) / config.N_0
    return omega if k is None else float(omega[k])


def _stride(K: int) -> int:
    # Philox emits blocks of four 64-bit words, one per uniform double
    return 4 * ((K + 3) // 4)


def _gains_from_uniforms(u: np.ndarray, omega: np.ndarray) -> np.ndarray:
    return -omega * np.log1p(-u)


def sample_epoch(seed: int, config: NetworkConfig, i: int) -> ChannelState:
    """Channel state of epoch ``i`` in the trace keyed by ``seed``."""
    stride = _stride(config.K)
    bg = np.random.Philox(key=seed)
    bg.advance(i * stride // 4)
    u = np.random.Generator(bg).random(config.K)
    x = _gains_from_uniforms(u, mean_gain(config))
    return ChannelState.from_gains(x, config, epoch_index=i)


def sample_trace(seed: int, config: NetworkConfig, M: int, start: int = 0) -> np.ndarray:
    """Gains for epochs ``start .. start+M-1`` as an ``(M, K)`` array.

    Row ``j`` equals ``sample_epoch(seed, config, start + j).x``.
    """
    stride = _stride(config.K)
    bg = np.random.Philox(key=seed)
    if start:
        bg.advance(start * stride // 4)
    u = np.random.Generator(bg).random((M, stride))[:, : config.K]
    return _gains_from_uniforms(u, mean_gain(config))


def save_trace_csv(path, x_trace: np.ndarray, start: int = 0):
    """Write gains as ``epoch,x_1,...,x_K`` with 17 significant digits."""
    x_trace = np.atleast_2d(x_trace)
    K = x_trace.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch"] + [f"x_{k + 1}" for k in range(K)])
        for j, row in enumerate(x_trace):
            w.writerow([start + j] + [f"{v:.17g}" for v in row])


def load_trace_csv(path) -> tuple:
    """Read a trace written by :func:`save_trace_csv`.

    Returns ``(epochs, x_trace)``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if not header or header[0] != "epoch" or any(
        h != f"x_{k + 1}" for k, h in enumerate(header[1:])
    ):
        raise ValueError(f"unexpected trace header: {header}")
    body = rows[1:]
    epochs = np.array([int(r[0]) for r in body], dtype=np.int64)
    x = np.array([[float(v) for v in r[1:]] for r in body], dtype=float)
    return epochs, x.reshape(len(body), len(header) - 1)
