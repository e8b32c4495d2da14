"""Unscrambled Sobol sequences built from Joe-Kuo direction numbers.

Points are produced in Gray-code order with 32-bit precision. The
direction-number table (first 1024 dimensions of the new-joe-kuo-6 set)
ships with the package as a data file and is expanded on first use.
"""

import math
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import ConfigurationError

BITS = 32
MAX_INDEX = 2**31
MAX_DIMS = 1024

_SCALE = 0.5**BITS
_CHUNK = 4096


@lru_cache(maxsize=1)
def _load_tables():
    with resources.files("hds.data").joinpath("joe_kuo_1024.npz").open("rb") as fh:
        data = np.load(fh)
        return data["poly"].copy(), data["vinit"].copy()


@lru_cache(maxsize=8)
def _direction_table(dims: int) -> np.ndarray:
    """Expand initial numbers into the full dims x BITS direction table.

    Entry [d, k] is the k-th direction number of dimension d as an integer
    scaled by 2**BITS. Dimension 0 is the van der Corput sequence in base 2;
    the rest follow the primitive-polynomial recurrence
    m_k = 2 a_1 m_{k-1} ^ ... ^ 2^{s-1} a_{s-1} m_{k-s+1} ^ 2^s m_{k-s} ^ m_{k-s}.
    """
    poly, vinit = _load_tables()
    v = np.zeros((dims, BITS), dtype=np.uint64)
    v[0, :] = [1 << (BITS - k - 1) for k in range(BITS)]
    for d in range(1, dims):
        p = int(poly[d])
        s = p.bit_length() - 1
        a = [(p >> (s - 1 - i)) & 1 for i in range(s - 1)]
        m = [int(vinit[d, i]) for i in range(s)]
        for k in range(s, BITS):
            new = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if a[i - 1]:
                    new ^= m[k - i] << i
            m.append(new)
        for k in range(BITS):
            v[d, k] = m[k] << (BITS - k - 1)
    return v


def _state_at(v: np.ndarray, index: int) -> np.ndarray:
    """Integer state of the generator at a given sequence index (Gray code)."""
    x = np.zeros(v.shape[0], dtype=np.uint64)
    g = index ^ (index >> 1)
    for k in range(BITS):
        if (g >> k) & 1:
            x ^= v[:, k]
    return x


class SobolEngine:
    """Stateful Sobol generator over [0, 1)^dims.

    Consecutive ``draw`` calls return consecutive blocks of one global
    sequence; the engine is deterministic and carries no randomness.
    """

    def __init__(self, dims: int):
        if dims < 1:
            raise ConfigurationError("Sobol dimension must be >= 1")
        if dims > MAX_DIMS:
            raise ConfigurationError(
                f"Sobol dimension {dims} exceeds the shipped table ({MAX_DIMS})"
            )
        self.dims = dims
        self.index = 0
        self._v = _direction_table(max(dims, 2))[:dims]
        self._x = np.zeros(dims, dtype=np.uint64)

    def draw(self, count: int) -> np.ndarray:
        """Next ``count`` points as a count x dims float matrix in [0, 1)."""
        if count < 1:
            raise ConfigurationError("draw count must be >= 1")
        if self.index + count >= MAX_INDEX:
            raise ConfigurationError("Sobol sequence index would overflow 2^31")
        out = np.empty((count, self.dims))
        done = 0
        while done < count:
            n = min(_CHUNK, count - done)
            out[done : done + n] = self._draw_chunk(n)
            done += n
        return out

    def _draw_chunk(self, n: int) -> np.ndarray:
        idx = np.arange(self.index, self.index + n, dtype=np.uint64)
        gray = idx ^ (idx >> np.uint64(1))
        # state(i) = state(index) XOR v[k] over bits k where gray(i) and gray(index) differ
        states = np.zeros((n, self.dims), dtype=np.uint64)
        for k in range(BITS):
            bit = np.uint64(k)
            changed = ((gray >> bit) ^ (gray[0] >> bit)) & np.uint64(1)
            states[changed == 1] ^= self._v[:, k]
        states ^= self._x
        out = states * _SCALE
        # advance stored state to index + n
        self.index += n
        self._x = _state_at(self._v, self.index)
        return out

    def fast_forward(self, count: int) -> "SobolEngine":
        """Skip ``count`` points (e.g. drop the leading all-zeros point)."""
        if count < 0 or self.index + count >= MAX_INDEX:
            raise ConfigurationError("invalid fast-forward count")
        self.index += count
        self._x = _state_at(self._v, self.index)
        return self


def sobol_points(engine: SobolEngine, count: int) -> np.ndarray:
    """Draw the next block of ``count`` points from ``engine``."""
    return engine.draw(count)


def initial_sample_count(dims: int, cap_exponent: int = 15) -> int:
    """Pilot sample size: smallest power of two >= 200*dims, capped at 2**cap_exponent."""
    if dims < 1:
        raise ConfigurationError("dims must be >= 1")
    exponent = math.ceil(math.log2(200 * dims))
    return 2 ** min(exponent, cap_exponent)
