"""Deterministic keyed uniforms.

Every uniform used by the samplers is a pure function of a StreamKey
(seed, replication, time, optional past-window id).  Counter-based rather
than sequential: the backward algorithms revisit old times in later rounds
and interleave per-past streams, so the value at a key must never depend
on query order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class StreamKey:
    """Address of one uniform variate.

    ``time`` is a signed integer (backward runs use negative times).
    ``past_id`` is the index of a past window in the coupled-trajectory
    construction; ``None`` for the single-stream algorithm.
    """

    seed: int
    replication: int = 0
    time: int = 0
    past_id: Optional[int] = None

    def at(self, time: int, past_id: Optional[int] = None) -> "StreamKey":
        return replace(self, time=time, past_id=past_id)


def _mix64(z: int) -> int:
    # splitmix64 finalizer (Steele, Lea, Flood 2014); full-avalanche bijection.
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def uniform_at(key: StreamKey) -> float:
    """Uniform in [0, 1) with 53 bits of precision, pure in ``key``.

    Each key field is absorbed through a full mixing round so that nearby
    keys (adjacent times, adjacent replications) decorrelate.  Negative
    times enter via their two's-complement 64-bit image.
    """
    h = key.seed & _MASK64
    h = _mix64(h + _GAMMA)
    h = _mix64(h ^ ((key.replication & _MASK64) + _GAMMA))
    h = _mix64(h ^ ((key.time & _MASK64) + _GAMMA))
    pid = 0 if key.past_id is None else key.past_id + 1
    h = _mix64(h ^ ((pid & _MASK64) + _GAMMA))
    return (h >> 11) * 2.0**-53
