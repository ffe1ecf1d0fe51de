"""Defensive ASGI middleware: body caps, rate limits, audit logging.

Body caps abort the request *while* it streams in: once the running byte
count passes the path's cap the app stops reading and the client gets a
413 having transferred less than the full body. Slow uploads hit the read
deadline and get a 408.
"""

from __future__ import annotations

import json
import logging
import time

from ..config import AppConfig
from .ratelimit import RateLimiter

audit_log = logging.getLogger("slidegrade.audit")

_UPLOAD_PATHS = ("/api/submissions", "/api/admin/import")


class _BodyTooLarge(Exception):
    pass


class _BodyTooSlow(Exception):
    pass


async def _send_error(send, status: int, code: str, message: str) -> None:
    body = json.dumps({"error": code, "message": message}).encode("utf-8")
    await send(
        {
            "type": "http.response.start",
            "status": status,
            "headers": [
                (b"content-type", b"application/json"),
                (b"content-length", str(len(body)).encode("ascii")),
            ],
        }
    )
    await send({"type": "http.response.body", "body": body})


def _header(scope, name: bytes) -> str:
    for key, value in scope.get("headers", ()):
        if key.lower() == name:
            return value.decode("latin-1")
    return ""


class BodyLimitMiddleware:
    def __init__(self, app, config: AppConfig):
        self.app = app
        self.config = config

    def _cap_for(self, scope) -> int:
        if scope.get("method") == "POST" and scope.get("path", "") in _UPLOAD_PATHS:
            # multipart framing overhead on top of the raw file cap
            return self.config.max_upload_bytes + 64 * 1024
        return self.config.max_json_body_bytes

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return
        cap = self._cap_for(scope)
        declared = _header(scope, b"content-length")
        if declared.isdigit() and int(declared) > cap:
            await _send_error(send, 413, "LimitExceeded", "request body exceeds the size limit")
            return

        state = {"received": 0, "started": False}
        deadline = time.monotonic() + self.config.request_read_timeout_s

        async def capped_receive():
            message = await receive()
            if message["type"] == "http.request":
                state["received"] += len(message.get("body") or b"")
                if state["received"] > cap:
                    raise _BodyTooLarge
                if time.monotonic() > deadline:
                    raise _BodyTooSlow
            return message

        async def tracking_send(message):
            if message["type"] == "http.response.start":
                state["started"] = True
            await send(message)

        try:
            await self.app(scope, capped_receive, tracking_send)
        except _BodyTooLarge:
            if state["started"]:
                raise
            await _send_error(send, 413, "LimitExceeded", "request body exceeds the size limit")
        except _BodyTooSlow:
            if state["started"]:
                raise
            await _send_error(send, 408, "RequestTimeout", "request body arrived too slowly")


class RateLimitMiddleware:
    def __init__(self, app, config: AppConfig, limiter: RateLimiter):
        self.app = app
        self.config = config
        self.limiter = limiter

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return
        client = scope.get("client")
        ip = client[0] if client else "unknown"
        if scope.get("path") == "/api/auth/login" and scope.get("method") == "POST":
            if not self.limiter.allow("login", ip, self.config.login_attempts_per_minute):
                await _send_error(send, 429, "RateLimited", "too many login attempts")
                return
        if not self.limiter.allow("general", ip, self.config.requests_per_minute):
            await _send_error(send, 429, "RateLimited", "too many requests")
            return
        await self.app(scope, receive, send)


class AuditMiddleware:
    """One structured JSON log line per request."""

    def __init__(self, app, config: AppConfig):
        self.app = app
        self.config = config

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return
        started = time.monotonic()
        status_holder = {"status": 0}

        async def tracking_send(message):
            if message["type"] == "http.response.start":
                status_holder["status"] = message["status"]
            await send(message)

        try:
            await self.app(scope, receive, tracking_send)
        finally:
            client = scope.get("client")
            audit_log.info(
                json.dumps(
                    {
                        "ts": time.time(),
                        "method": scope.get("method", ""),
                        "path": scope.get("path", ""),
                        "status": status_holder["status"],
                        "duration_ms": int((time.monotonic() - started) * 1000),
                        "client": client[0] if client else "",
                        "user": scope.get("slidegrade_user", ""),
                    },
                    sort_keys=True,
                )
            )
