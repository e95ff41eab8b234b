"""LeakyReLU mixing networks viewed as piece-wise affine functions.

A network is a list of layers ``(W, b)`` with ``W`` of shape ``(prev, next)``
so that ``z = W.T @ h + b``. Every layer except the last is followed by a
LeakyReLU with negative slope ``alpha``; the last layer maps to a scalar and
has no activation. Weights of every layer after the first must be
non-negative, which makes the realised piece dominate all other pieces at
any input.

A slope configuration assigns slope ``alpha`` or ``1`` to each of the ``m``
hidden units. It is stored as an integer bitmask where a set bit means slope
1 and hidden unit 0 is the most significant bit, so integer order equals
lexicographic order of the slope vector (all-alpha first, all-one last).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapExceededError

DEFAULT_CONFIG_CAP = 20


@dataclass(frozen=True)
class MixingNetwork:
    alpha: float
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        if not self.layers:
            raise ValueError("network needs at least one layer")
        layers = []
        prev = None
        for idx, (W, b) in enumerate(self.layers):
            W = np.array(W, dtype=float)
            b = np.array(b, dtype=float).reshape(-1)
            if W.ndim != 2:
                raise ValueError(f"layer {idx}: W must be a matrix")
            if b.shape != (W.shape[1],):
                raise ValueError(f"layer {idx}: bias has length {b.size}, expected {W.shape[1]}")
            if prev is not None and W.shape[0] != prev:
                raise ValueError(f"layer {idx}: input dim {W.shape[0]} does not chain from {prev}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {idx}: non-finite parameters")
            if idx > 0 and np.any(W < 0):
                raise ValueError(f"layer {idx}: weights after the first layer must be non-negative")
            W.setflags(write=False)
            b.setflags(write=False)
            layers.append((W, b))
            prev = W.shape[1]
        if prev != 1:
            raise ValueError(f"final layer must have one output, got {prev}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def hidden_widths(self) -> list[int]:
        return [W.shape[1] for W, _ in self.layers[:-1]]

    @property
    def n_hidden(self) -> int:
        return sum(self.hidden_widths)

    @classmethod
    def from_dict(cls, data: dict) -> "MixingNetwork":
        try:
            alpha = data["alpha"]
            layers = [(layer["W"], layer["b"]) for layer in data["layers"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"network is missing field {exc}") from None
        return cls(alpha, tuple(layers))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.layers],
        }


@dataclass(frozen=True)
class SlopeConfiguration:
    mask: int
    m: int
    alpha: float

    def __post_init__(self):
        if self.m < 0 or not 0 <= self.mask < (1 << self.m):
            raise ValueError(f"mask {self.mask} does not fit in {self.m} units")

    @classmethod
    def from_slopes(cls, slopes: Sequence[float], alpha: float) -> "SlopeConfiguration":
        mask = 0
        for s in slopes:
            if s == 1.0:
                bit = 1
            elif s == alpha:
                bit = 0
            else:
                raise ValueError(f"slope {s} is neither alpha={alpha} nor 1")
            mask = (mask << 1) | bit
        return cls(mask, len(slopes), alpha)

    @classmethod
    def all_ones(cls, m: int, alpha: float) -> "SlopeConfiguration":
        return cls((1 << m) - 1, m, alpha)

    def bits(self) -> np.ndarray:
        return mask_to_bits(self.mask, self.m)

    def slopes(self) -> np.ndarray:
        return np.where(self.bits(), 1.0, self.alpha)


def mask_to_bits(mask: int, m: int) -> np.ndarray:
    return np.array([(mask >> (m - 1 - u)) & 1 for u in range(m)], dtype=bool)


def _bits_to_mask(bits: np.ndarray) -> int:
    mask = 0
    for bit in bits:
        mask = (mask << 1) | int(bit)
    return mask


@dataclass(frozen=True)
class AffinePiece:
    w: np.ndarray
    bias: float

    def __call__(self, q) -> float:
        return float(np.dot(self.w, q) + self.bias)

    def split(self, n_vertices: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(w_V, w_E)`` for a graph with ``n_vertices`` vertices."""
        if not 0 <= n_vertices <= self.w.size:
            raise ValueError(f"cannot split {self.w.size} weights at {n_vertices}")
        return self.w[:n_vertices], self.w[n_vertices:]


def _check_input(net: MixingNetwork, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size != net.input_dim:
        raise ValueError(f"input has shape {q.shape}, expected ({net.input_dim},)")
    if not np.all(np.isfinite(q)):
        raise ValueError("input must be finite")
    return q


def forward(net: MixingNetwork, q) -> tuple[float, SlopeConfiguration]:
    """Network value at ``q`` and the slope configuration realised on the way."""
    q = _check_input(net, q)
    values, bits = _forward(net, q[None, :])
    return float(values[0]), SlopeConfiguration(_bits_to_mask(bits[0]), net.n_hidden, net.alpha)


def forward_values(net: MixingNetwork, Q) -> np.ndarray:
    """Vectorised network value over the rows of ``Q``."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != net.input_dim:
        raise ValueError(f"inputs have shape {Q.shape}, expected (N, {net.input_dim})")
    return _forward(net, Q)[0]


def _forward(net, Q):
    h = Q
    active = []
    for W, b in net.layers[:-1]:
        z = h @ W + b
        # alpha == 1 makes every slope 1, so the only configuration is all-ones
        on = np.ones(z.shape, dtype=bool) if net.alpha == 1.0 else z >= 0
        active.append(on)
        h = np.where(on, z, net.alpha * z)
    W, b = net.layers[-1]
    values = (h @ W + b)[:, 0]
    if active:
        bits = np.concatenate(active, axis=1)
    else:
        bits = np.zeros((len(values), 0), dtype=bool)
    return values, bits


def piece_from_config(net: MixingNetwork, c: SlopeConfiguration) -> AffinePiece:
    """Fold the fixed slopes of ``c`` through the layers into one affine map."""
    if c.m != net.n_hidden:
        raise ValueError(f"configuration has {c.m} units, network has {net.n_hidden}")
    slopes = np.where(c.bits(), 1.0, net.alpha)
    # running map h = q @ A + beta
    A = np.eye(net.input_dim)
    beta = np.zeros(net.input_dim)
    offset = 0
    for W, b in net.layers[:-1]:
        s = slopes[offset:offset + W.shape[1]]
        offset += W.shape[1]
        A = (A @ W) * s
        beta = (beta @ W + b) * s
    W, b = net.layers[-1]
    return AffinePiece((A @ W)[:, 0], float(beta @ W[:, 0] + b[0]))


def count_pieces(m: int, d: int) -> int:
    """Upper bound on the number of linear pieces of ``m`` hyperplanes in ``d`` dimensions."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    return sum(math.comb(m, d - i) for i in range(d + 1))


def all_configs(m: int, alpha: float, cap: int = DEFAULT_CONFIG_CAP) -> Iterator[SlopeConfiguration]:
    """All ``2**m`` slope configurations in increasing bitmask order."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    if m > cap:
        raise CapExceededError("slope-configuration", m, cap)
    return (SlopeConfiguration(mask, m, alpha) for mask in range(1 << m))


def sample_random_net(d: int, widths: Sequence[int], alpha: float, seed=None) -> MixingNetwork:
    """Random network: symmetric first layer, half-normal weights afterwards."""
    if not widths:
        raise ValueError("widths must be non-empty")
    rng = np.random.default_rng(seed)
    dims = [d, *widths, 1]
    layers = []
    for idx in range(len(dims) - 1):
        shape = (dims[idx], dims[idx + 1])
        if idx == 0:
            W = rng.normal(0.0, 1.0, size=shape)
        else:
            W = np.abs(rng.normal(0.0, 1.0, size=shape))
        b = rng.normal(0.0, 1.0, size=dims[idx + 1])
        layers.append((W, b))
    return MixingNetwork(alpha, tuple(layers))
