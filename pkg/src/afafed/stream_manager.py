"""Bounded FIFO buffer between each coworker's data stream and its trainer.

Admission always stores the newest arrival, evicting the oldest entry first
when the buffer is full.  A second, trainer-driven eviction removes the
oldest entry after a completed iteration, but only while more than one
minibatch worth of entries is stored, so a warm buffer can always serve the
next minibatch.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Tuple

import numpy as np

from .model_core import TrainingExample


@dataclass
class StreamBuffer:
    """FIFO of (arrival_index, example) pairs with bounded capacity."""

    capacity: int
    minibatch_size: int
    entries: Deque[Tuple[int, TrainingExample]] = field(default_factory=deque)
    next_arrival_index: int = 0

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("buffer capacity must be at least 1")
        if not 1 <= self.minibatch_size <= self.capacity:
            raise ValueError(
                f"minibatch size {self.minibatch_size} must lie in [1, capacity={self.capacity}]"
            )

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def ready(self) -> bool:
        return len(self.entries) >= self.minibatch_size


def admit(buf: StreamBuffer, example: TrainingExample) -> Optional[Tuple[int, TrainingExample]]:
    """Store a new arrival, evicting the oldest entry first if the buffer is full.

    Returns the evicted entry, or None when there was free space.
    """
    evicted = None
    if len(buf.entries) >= buf.capacity:
        evicted = buf.entries.popleft()
    buf.entries.append((buf.next_arrival_index, example))
    buf.next_arrival_index += 1
    return evicted


def evict_oldest_if_surplus(buf: StreamBuffer) -> Optional[Tuple[int, TrainingExample]]:
    """Drop the oldest entry when strictly more than one minibatch is stored.

    Returns the evicted entry, or None when the count is already at or below
    the minibatch size.  Never takes the buffer below minibatch_size entries.
    """
    if len(buf.entries) > buf.minibatch_size:
        return buf.entries.popleft()
    return None


def sample_minibatch(buf: StreamBuffer, rng: np.random.Generator) -> Optional[List[TrainingExample]]:
    """Draw minibatch_size entries uniformly without replacement.

    Returns None while the buffer holds fewer than minibatch_size entries
    (the not-ready signal); the buffer content is left untouched either way.
    """
    if len(buf.entries) < buf.minibatch_size:
        return None
    idx = rng.choice(len(buf.entries), size=buf.minibatch_size, replace=False)
    return [buf.entries[i][1] for i in idx]
