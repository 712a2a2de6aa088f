"""Rayleigh MIMO channel sampling with an imperfect transmitter-side estimate.

The channel is an ``n_rx x m_tx`` matrix of iid unit-variance complex Gaussian
entries.  The transmitter works from a noisy estimate of it: the true matrix
plus an independent complex Gaussian error whose per-entry variance decays as
``rho ** -alpha``, so ``alpha`` measures how fast estimate quality improves
with SNR (0 = never, large = very fast).

Sampling is counter-based: trial ``i`` of a given (seed, stream) pair always
yields the same matrices regardless of how trials are batched or which worker
draws them, which makes parallel Monte Carlo bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri

__all__ = [
    "ChannelConfig",
    "ChannelDraw",
    "EigenTriple",
    "check_perturbation_bound",
    "eig_ascending",
    "eigen_decay_weights",
    "eigen_triple",
    "sample_channel",
    "sample_channel_block",
    "wishart_log_norm_const",
]

_MASK64 = (1 << 64) - 1
# One Philox counter tick yields four 64-bit words = four doubles; a trial
# consumes 4 * n_rx * m_tx doubles = n_rx * m_tx ticks, so trial boundaries
# always fall on tick boundaries and contiguous batches can be carved
# anywhere without changing the draws.
_PARTS_PER_TRIAL = 4
_HALF_ULP = 2.0 ** -54


class ChannelConfig:
    """Antenna counts and estimate-quality exponent, orientation-canonical.

    The outage behavior is symmetric in the two antenna counts, so the
    constructor stores the larger count as ``m_tx`` and the smaller as
    ``n_rx``.
    """

    __slots__ = ("m_tx", "n_rx", "alpha", "block_len")

    def __init__(self, m, n, alpha, block_len=None):
        m = int(m)
        n = int(n)
        if m < 1 or n < 1:
            raise ValueError(f"antenna counts must be positive, got ({m}, {n})")
        alpha = float(alpha)
        if not math.isfinite(alpha) or alpha < 0.0:
            raise ValueError(f"alpha must be finite and >= 0, got {alpha}")
        m_tx, n_rx = (m, n) if m >= n else (n, m)
        if block_len is not None:
            block_len = int(block_len)
            if block_len < m_tx + n_rx - 1:
                raise ValueError(
                    f"block_len must be at least m_tx + n_rx - 1 = "
                    f"{m_tx + n_rx - 1}, got {block_len}")
        object.__setattr__(self, "m_tx", m_tx)
        object.__setattr__(self, "n_rx", n_rx)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "block_len", block_len)

    def __setattr__(self, name, value):
        raise AttributeError("ChannelConfig is immutable")

    def _key(self):
        return (self.m_tx, self.n_rx, self.alpha, self.block_len)

    def __eq__(self, other):
        if not isinstance(other, ChannelConfig):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return (f"ChannelConfig(m_tx={self.m_tx}, n_rx={self.n_rx}, "
                f"alpha={self.alpha}, block_len={self.block_len})")


@dataclass(frozen=True)
class ChannelDraw:
    """True channel, estimation error, and the error variance used."""

    h: np.ndarray
    e: np.ndarray
    sigma_e_sq: float

    @property
    def estimate(self):
        """The matrix the transmitter actually sees: channel plus error."""
        return self.h + self.e


@dataclass(frozen=True)
class EigenTriple:
    """Ascending eigenvalues of channel, estimate, and error Gram matrices."""

    channel: np.ndarray
    estimate: np.ndarray
    error: np.ndarray


def eigen_decay_weights(m, n):
    """Per-eigenvalue decay weights of the ordered Gram spectrum.

    With eigenvalues sorted ascending, the probability that eigenvalue ``i``
    (1-based) decays like ``rho**-v`` carries exponent ``(2i - 1 + m - n) v``:
    deep fades of the weakest direction are the cheapest.
    """
    return 2.0 * np.arange(1, n + 1) - 1.0 + (m - n)


def _bit_generator(seed, stream):
    return np.random.Philox(key=[int(seed) & _MASK64, int(stream) & _MASK64])


def sample_channel_block(cfg, rho, seed, start=0, count=1, stream=0):
    """Draw trials ``start .. start+count-1`` of a (seed, stream) sequence.

    Returns a :class:`ChannelDraw` whose ``h`` and ``e`` are stacked with a
    leading trial axis of length ``count``.  Any contiguous partition of the
    trial range reproduces the one-shot draw bit for bit.
    """
    rho = float(rho)
    if not math.isfinite(rho) or rho <= 0.0:
        raise ValueError(f"rho must be finite and positive, got {rho}")
    start = int(start)
    count = int(count)
    if start < 0 or count < 1:
        raise ValueError(f"need start >= 0 and count >= 1, got ({start}, {count})")
    n, m = cfg.n_rx, cfg.m_tx
    ticks_per_trial = n * m
    bg = _bit_generator(seed, stream)
    bg.advance(start * ticks_per_trial)
    gen = np.random.Generator(bg)
    u = gen.random(count * _PARTS_PER_TRIAL * n * m)
    # Shift the half-open [0,1) uniforms into (0,1) so the normal quantile
    # transform never sees an exact zero.
    z = ndtri(u + _HALF_ULP).reshape(count, _PARTS_PER_TRIAL, n, m)
    h = (z[:, 0] + 1j * z[:, 1]) * math.sqrt(0.5)
    sigma_e_sq = rho ** -cfg.alpha
    e = (z[:, 2] + 1j * z[:, 3]) * math.sqrt(0.5 * sigma_e_sq)
    return ChannelDraw(h=h, e=e, sigma_e_sq=sigma_e_sq)


def sample_channel(cfg, rho, seed, stream=0):
    """Draw a single channel/error pair (trial 0 of the stream)."""
    block = sample_channel_block(cfg, rho, seed, start=0, count=1, stream=stream)
    return ChannelDraw(h=block.h[0], e=block.e[0], sigma_e_sq=block.sigma_e_sq)


def eig_ascending(x):
    """Ascending eigenvalues of ``x @ x^H`` for one matrix or a batch.

    Accepts shape ``(..., n, m)`` and returns shape ``(..., n)``.  Tiny
    negative values produced by finite precision on rank-deficient inputs are
    clamped to zero.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim < 2:
        raise ValueError("expected a matrix or a batch of matrices")
    if not np.isfinite(x).all():
        raise ValueError("matrix entries must be finite")
    gram = x @ np.conj(np.swapaxes(x, -1, -2))
    vals = np.linalg.eigvalsh(gram)
    return np.clip(vals, 0.0, None)


def eigen_triple(draw):
    """Eigenvalues of the channel, its estimate, and the estimation error."""
    return EigenTriple(
        channel=eig_ascending(draw.h),
        estimate=eig_ascending(draw.estimate),
        error=eig_ascending(draw.e),
    )


def check_perturbation_bound(triple):
    """Each estimate eigenvalue is at most twice (channel + largest error).

    The estimate is the sum of channel and error matrices, so its k-th
    ascending eigenvalue cannot exceed twice the sum of the channel's k-th
    eigenvalue and the error's largest one.  A relative jitter allowance of
    ``1e-9 * max(1, largest estimate eigenvalue)`` absorbs floating-point
    noise at the boundary.
    """
    a = np.asarray(triple.channel, dtype=float)
    b = np.asarray(triple.estimate, dtype=float)
    c = np.asarray(triple.error, dtype=float)
    if not (a.shape == b.shape == c.shape) or a.ndim != 1:
        raise ValueError("eigenvalue vectors must share one length")
    eps = 1e-9 * max(1.0, float(b[-1]))
    return bool(np.all(b <= 2.0 * (a + c[-1]) + eps))


def wishart_log_norm_const(m, n):
    """Log normalization constant of the ordered Gram eigenvalue density.

    For an ``n x m`` (``m >= n``) iid complex Gaussian matrix the joint
    density of the ascending Gram eigenvalues is ``1/const *
    prod(a_i**(m-n)) * prod_{i<j}(a_j - a_i)**2 * exp(-sum(a))`` and this
    returns ``log(const) = sum_i log((m-i)! (n-i)!)``, evaluated in the log
    domain so large antenna counts do not overflow.
    """
    m = int(m)
    n = int(n)
    if n < 1 or m < n:
        raise ValueError(f"need m >= n >= 1, got ({m}, {n})")
    return float(sum(gammaln(m - i + 1) + gammaln(n - i + 1) for i in range(1, n + 1)))
