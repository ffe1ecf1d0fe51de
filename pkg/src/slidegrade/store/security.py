"""Password hashing (memory-hard scrypt, per-user salt) and session tokens.

Stored hash format: ``scrypt$<log2_n>$<r>$<p>$<salt_hex>$<key_hex>``. The
cost parameters are embedded so verification keeps working after config
changes; new hashes pick up the configured costs.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets

from ..config import AppConfig

_SALT_BYTES = 16
_KEY_BYTES = 32


def hash_password(password: str, config: AppConfig | None = None) -> str:
    config = config or AppConfig()
    salt = secrets.token_bytes(_SALT_BYTES)
    key = hashlib.scrypt(
        password.encode("utf-8"),
        salt=salt,
        n=1 << config.kdf_log2_n,
        r=config.kdf_r,
        p=config.kdf_p,
        dklen=_KEY_BYTES,
    )
    return "$".join(
        ("scrypt", str(config.kdf_log2_n), str(config.kdf_r), str(config.kdf_p),
         salt.hex(), key.hex())
    )


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, log2_n, r, p, salt_hex, key_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        expected = bytes.fromhex(key_hex)
        key = hashlib.scrypt(
            password.encode("utf-8"),
            salt=bytes.fromhex(salt_hex),
            n=1 << int(log2_n),
            r=int(r),
            p=int(p),
            dklen=len(expected),
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(key, expected)


def new_session_token() -> str:
    """Opaque 256-bit random session token."""
    return secrets.token_hex(32)
