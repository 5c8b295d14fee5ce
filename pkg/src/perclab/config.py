"""Percolation configurations: sampling, bit access, binary file format.

A configuration's bit i (row-major site order) is a pure function of
(seed, i, p) through the counter-based generator in :mod:`perclab.rng`, so
identical inputs give identical bitsets on every platform, and kernels may
evaluate single sites lazily without building the array.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .lattice import Box, TriCoord, lambda_box
from .rng import RNG_ALGORITHM_ID, open_threshold, site_u53

MAGIC = b"PERC1"


@dataclass(frozen=True)
class Configuration:
    box: Box
    open_bits: np.ndarray = field(repr=False)  # bool, length side^2, row-major
    seed: int
    p: float

    def __post_init__(self):
        bits = np.asarray(self.open_bits, dtype=bool).ravel()
        if bits.size != self.box.n_sites:
            raise ValueError(
                f"bitset length {bits.size} != side^2 = {self.box.n_sites}")
        bits.setflags(write=False)
        object.__setattr__(self, "open_bits", bits)

    @property
    def side(self):
        return self.box.side

    def grid(self):
        """Open mask as a (side, side) array indexed [b - lo.b, a - lo.a]."""
        return self.open_bits.reshape(self.side, self.side)

    def is_open(self, site):
        return bool(self.open_bits[self.box.index_of(site)])


def sample(box, seed, p=0.5):
    """Draw a configuration; each site open independently with probability p."""
    if isinstance(box, int):
        box = lambda_box(box)
    thr = np.uint64(open_threshold(p))
    u = site_u53(np.arange(box.n_sites, dtype=np.uint64), seed)
    return Configuration(box=box, open_bits=u < thr, seed=int(seed), p=float(p))


def from_grid(grid, seed=0, p=0.5, lo=TriCoord(0, 0)):
    """Wrap an explicit (side, side) open mask as a Configuration.

    For hand-laid test configurations; seed/p are recorded but meaningless.
    """
    grid = np.asarray(grid, dtype=bool)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ValueError(f"grid must be square, got shape {grid.shape}")
    box = Box(TriCoord(*lo), grid.shape[0])
    return Configuration(box=box, open_bits=grid.ravel(), seed=seed, p=p)


def write_config(cfg, path):
    """Binary format: magic 'PERC1' | u32 LE side | u64 LE seed | f64 LE p |
    ceil(side^2/8) bytes of row-major bitset, LSB-first within a byte."""
    if cfg.box.lo != TriCoord(0, 0):
        raise ValueError("file format anchors boxes at (0,0)")
    packed = np.packbits(cfg.open_bits, bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQd", cfg.side, cfg.seed & (2**64 - 1), cfg.p))
        fh.write(packed)


def read_config(path):
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
        side, seed, p = struct.unpack("<IQd", fh.read(4 + 8 + 8))
        n = side * side
        raw = fh.read((n + 7) // 8)
        if len(raw) != (n + 7) // 8:
            raise ValueError("truncated bitset")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                         count=n, bitorder="little").astype(bool)
    return Configuration(box=lambda_box(side), open_bits=bits,
                         seed=seed, p=p)


def manifest_entry(cfg):
    """Reproducibility stanza for run manifests."""
    return {"side": cfg.side, "seed": cfg.seed, "p": cfg.p,
            "rng": RNG_ALGORITHM_ID}
