"""Process boundary: CLI for headless work and the live WebSocket gateway."""

from .protocol import (
    PROTOCOL_VERSION,
    MessageWriter,
    SequenceChecker,
    decode_message,
    encode_message,
)
from .replay import ReplayResult, run_replay

__all__ = [
    "PROTOCOL_VERSION",
    "MessageWriter",
    "SequenceChecker",
    "decode_message",
    "encode_message",
    "ReplayResult",
    "run_replay",
]
