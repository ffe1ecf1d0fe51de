from .analytics import SessionStats, mean_stats, reconstruct_sessions, session_stats
from .base import (
    COSTS_COLLECTION,
    EVALUATIONS_COLLECTION,
    FEATURES_COLLECTION,
    Storage,
    wipe_data_dir,
)
from .blobs import FileBlobStore, MemoryBlobStore
from .documents import (
    EVENT_KINDS,
    ActivityEvent,
    FileDocumentStore,
    FileEventLog,
    MemoryDocumentStore,
    MemoryEventLog,
    make_event,
)
from .security import hash_password, new_session_token, verify_password
from .structured import TERMINAL_STATUSES, SqliteStore

__all__ = [
    "SessionStats",
    "mean_stats",
    "reconstruct_sessions",
    "session_stats",
    "COSTS_COLLECTION",
    "EVALUATIONS_COLLECTION",
    "FEATURES_COLLECTION",
    "Storage",
    "wipe_data_dir",
    "FileBlobStore",
    "MemoryBlobStore",
    "EVENT_KINDS",
    "ActivityEvent",
    "FileDocumentStore",
    "FileEventLog",
    "MemoryDocumentStore",
    "MemoryEventLog",
    "make_event",
    "hash_password",
    "new_session_token",
    "verify_password",
    "TERMINAL_STATUSES",
    "SqliteStore",
]
