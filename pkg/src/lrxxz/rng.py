"""Counter-based random streams, one per trajectory.

A trajectory's stream is Philox keyed by ``(master_seed, trajectory_id)``, so
any trajectory can be regenerated on any worker without coordination, and
its position is fully described by the bit generator state (which is what
checkpoints store).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

_MASK64 = (1 << 64) - 1


def _check(seed: int, traj_id: int) -> None:
    if not 0 <= int(seed) <= _MASK64 or not 0 <= int(traj_id) <= _MASK64:
        raise ConfigurationError("seed and trajectory id must fit in 64 unsigned bits")


def trajectory_stream(seed: int, traj_id: int) -> np.random.Generator:
    """Independent generator for trajectory ``traj_id`` under ``seed``."""
    _check(seed, traj_id)
    key = np.array([int(seed), int(traj_id)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream_state(gen: np.random.Generator) -> dict:
    """JSON-friendly snapshot of a stream position."""
    st = gen.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "counter": [int(x) for x in st["state"]["counter"]],
        "key": [int(x) for x in st["state"]["key"]],
        "buffer": [int(x) for x in st["buffer"]],
        "buffer_pos": int(st["buffer_pos"]),
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }


def restore_stream(snapshot: dict) -> np.random.Generator:
    """Inverse of :func:`stream_state`."""
    if snapshot.get("bit_generator") != "Philox":
        raise ConfigurationError("checkpoint stream is not a Philox state")
    bg = np.random.Philox()
    bg.state = {
        "bit_generator": "Philox",
        "state": {
            "counter": np.array(snapshot["counter"], dtype=np.uint64),
            "key": np.array(snapshot["key"], dtype=np.uint64),
        },
        "buffer": np.array(snapshot["buffer"], dtype=np.uint64),
        "buffer_pos": snapshot["buffer_pos"],
        "has_uint32": snapshot["has_uint32"],
        "uinteger": snapshot["uinteger"],
    }
    return np.random.Generator(bg)
