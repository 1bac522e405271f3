from .bus import BusEnvelope, MessageBus, Subscription, TopicInvalid, encode_envelope
from .supervisor import (
    NodeDown,
    NodeRecord,
    NodeRegistry,
    RestartPolicy,
    UnknownParam,
    set_param,
    supervise_tick,
)
from .faces import FaceRegistry
from .logstore import ActionLog

__all__ = [
    "ActionLog",
    "BusEnvelope",
    "FaceRegistry",
    "MessageBus",
    "NodeDown",
    "NodeRecord",
    "NodeRegistry",
    "RestartPolicy",
    "Subscription",
    "TopicInvalid",
    "UnknownParam",
    "encode_envelope",
    "set_param",
    "supervise_tick",
]
