"""Deterministic random streams with labeled, non-overlapping sub-streams."""

import hashlib

import numpy as np


def _label_entropy(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class RngStream:
    """Seeded pseudo-random stream.

    The same seed yields bit-identical draws on every platform (PCG64 with
    SeedSequence entropy). Sub-streams derived from (seed, label) are
    independent of the parent and of each other; labels are hashed into
    extra entropy words, so no two labels share a stream.
    """

    def __init__(self, seed: int, _path: tuple = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._path = tuple(_path)
        entropy = [self.seed] + [_label_entropy(lbl) for lbl in self._path]
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def substream(self, label: str) -> "RngStream":
        """Derive the independent stream keyed by (seed, label path)."""
        return RngStream(self.seed, self._path + (label,))

    def uniform(self, size=None):
        """Uniform draws in [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        """Standard normal draws."""
        return self._gen.standard_normal(size)

    def integers(self, high: int, size=None):
        """Integer draws in [0, high)."""
        return self._gen.integers(0, high, size=size)

    def choice(self, n: int, size: int, replace: bool = True, p=None):
        """Index draws in [0, n), optionally weighted or without replacement."""
        return self._gen.choice(n, size=size, replace=replace, p=p)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def __repr__(self):
        path = "/".join(self._path)
        return f"RngStream(seed={self.seed}, path={path!r})"
