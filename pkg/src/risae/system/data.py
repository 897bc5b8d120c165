"""Message/channel datasets with per-block deterministic channel streams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelModel, ChannelRealization
from ..numerics import RngStream
from .model import SystemDims

TRAIN_FRACTION = 0.9


@dataclass
class Dataset:
    """``size`` blocks of ``L_B`` uniformly drawn messages with their channels.

    Channels of block ``b`` come from the stream ``rng.child(1, b)``, so they
    do not depend on batch composition or evaluation order. They are drawn on
    first use and cached when ``cache`` is set.
    """

    dims: SystemDims
    channel: ChannelModel
    messages: np.ndarray
    rng: RngStream
    cache: bool = True
    train_idx: np.ndarray = None
    test_idx: np.ndarray = None
    _store: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.messages.shape[0]

    def block_channels(self, b: int) -> ChannelRealization:
        b = int(b)
        if b in self._store:
            return self._store[b]
        real = self.channel.realize(self.rng.child(1, b), self.dims.block_len)
        if self.cache:
            self._store[b] = real
        return real

    def channels(self, blocks) -> ChannelRealization:
        return ChannelRealization.concat([self.block_channels(b) for b in blocks])

    def batch(self, blocks):
        blocks = np.asarray(blocks)
        return self.messages[blocks], self.channels(blocks)


def build_dataset(dims: SystemDims, channel: ChannelModel, size: int, rng: RngStream,
                  cache: bool = True, train_fraction: float = TRAIN_FRACTION) -> Dataset:
    """Uniform i.i.d. messages for ``size`` blocks, split into train/test by block."""
    if size < 1:
        raise ValueError("dataset needs at least one block")
    msgs = rng.child(0).gen.integers(0, dims.modulation, size=(size, dims.block_len))
    n_train = int(round(train_fraction * size))
    idx = np.arange(size)
    return Dataset(dims, channel, msgs, rng, cache, idx[:n_train], idx[n_train:])
