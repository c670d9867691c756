"""Live capture over the Chrome DevTools Protocol.

Each session opens its own websocket to the browser endpoint, creates a
fresh browser context (so cookies never leak between pages) and attaches to
a new target in flattened-session mode.
"""

from __future__ import annotations

import itertools
import json
import logging
import time
import urllib.request
from collections import deque
from datetime import datetime, timezone

from websockets.sync.client import connect

from .driver import (
    DEFAULT_USER_AGENT,
    CaptureDriver,
    DriverSession,
    DriverUnavailable,
    FailedEvent,
    LoadEvent,
    PageInfo,
    RequestEvent,
    ResponseEvent,
)
from .models import CookieRecord

__all__ = ["CdpDriver", "CdpError"]

log = logging.getLogger(__name__)

_PAGE_INFO_JS = (
    "JSON.stringify({url: location.href, title: document.title || '', "
    "meta: ((document.querySelector('meta[name=description]') || {}).content) || ''})"
)


class CdpError(RuntimeError):
    pass


def _wall(ts) -> datetime | None:
    if ts is None:
        return None
    return datetime.fromtimestamp(float(ts), tz=timezone.utc)


class _CdpSession(DriverSession):
    def __init__(self, ws_url: str, *, user_agent: str, dnt: bool, connect_timeout: float):
        self._ws = connect(ws_url, open_timeout=connect_timeout, max_size=None)
        self._ids = itertools.count(1)
        self._pending: deque = deque()
        self._context = None
        self._session_id = None
        try:
            self._context = self._call("Target.createBrowserContext", {}, timeout=connect_timeout)[
                "browserContextId"
            ]
            target = self._call(
                "Target.createTarget",
                {"url": "about:blank", "browserContextId": self._context},
                timeout=connect_timeout,
            )["targetId"]
            self._session_id = self._call(
                "Target.attachToTarget", {"targetId": target, "flatten": True}, timeout=connect_timeout
            )["sessionId"]
            self._call("Network.enable", {}, session=True, timeout=connect_timeout)
            self._call("Page.enable", {}, session=True, timeout=connect_timeout)
            self._call("Network.setUserAgentOverride", {"userAgent": user_agent},
                       session=True, timeout=connect_timeout)
            if dnt:
                self._call("Network.setExtraHTTPHeaders", {"headers": {"DNT": "1"}},
                           session=True, timeout=connect_timeout)
        except Exception:
            self.close()
            raise

    def _call(self, method: str, params: dict, *, session: bool = False, timeout: float = 5.0) -> dict:
        msg_id = next(self._ids)
        msg = {"id": msg_id, "method": method, "params": params}
        if session:
            msg["sessionId"] = self._session_id
        self._ws.send(json.dumps(msg))
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"{method} timed out")
            data = json.loads(self._ws.recv(timeout=remaining))
            if data.get("id") == msg_id:
                if "error" in data:
                    raise CdpError(f"{method}: {data['error'].get('message', data['error'])}")
                return data.get("result", {})
            if "method" in data:
                self._pending.append(data)

    def navigate(self, url: str) -> None:
        result = self._call("Page.navigate", {"url": url}, session=True)
        error = result.get("errorText")
        if error:
            self._pending.append(
                {"method": "Network.loadingFailed", "sessionId": self._session_id,
                 "params": {"requestId": result.get("loaderId", "doc"), "errorText": error}}
            )

    def _translate(self, msg: dict):
        if msg.get("sessionId") not in (None, self._session_id):
            return None
        method = msg.get("method")
        p = msg.get("params", {})
        if method == "Network.requestWillBeSent":
            redirect = p.get("redirectResponse")
            req = p.get("request", {})
            return RequestEvent(
                p["requestId"], req.get("url", ""), req.get("method", "GET"), _wall(p.get("wallTime")),
                redirect_status=redirect.get("status") if redirect else None,
            )
        if method == "Network.responseReceived":
            resp = p.get("response", {})
            return ResponseEvent(p["requestId"], int(resp.get("status", 0)), resp.get("mimeType"))
        if method == "Network.loadingFailed":
            return FailedEvent(p["requestId"], p.get("errorText", ""))
        if method == "Page.loadEventFired":
            return LoadEvent()
        return None

    def next_event(self, timeout: float):
        if self._pending:
            return self._translate(self._pending.popleft())
        try:
            raw = self._ws.recv(timeout=max(timeout, 0.0))
        except TimeoutError:
            return None
        return self._translate(json.loads(raw))

    def page_info(self, timeout: float) -> PageInfo:
        result = self._call(
            "Runtime.evaluate", {"expression": _PAGE_INFO_JS, "returnByValue": True},
            session=True, timeout=timeout,
        )
        value = json.loads(result.get("result", {}).get("value") or "{}")
        return PageInfo(value.get("url", ""), value.get("title", ""), value.get("meta", ""))

    def cookies(self, timeout: float) -> list[CookieRecord]:
        result = self._call("Storage.getCookies", {"browserContextId": self._context}, timeout=timeout)
        out = []
        for c in result.get("cookies", []):
            if not c.get("name") or not c.get("domain"):
                continue
            expires = c.get("expires")
            out.append(
                CookieRecord(
                    name=c["name"],
                    value=c.get("value", ""),
                    domain=c["domain"],
                    path=c.get("path", "/"),
                    expiry=_wall(expires) if expires not in (None, -1) and not c.get("session") else None,
                    secure=bool(c.get("secure")),
                    http_only=bool(c.get("httpOnly")),
                )
            )
        out.sort(key=lambda c: (c.domain, c.path, c.name))
        return out

    def close(self) -> None:
        try:
            if self._context is not None:
                self._call("Target.disposeBrowserContext", {"browserContextId": self._context}, timeout=2.0)
        except Exception as exc:
            log.debug("disposeBrowserContext: %s", exc)
        finally:
            self._context = None
            self._ws.close()


class CdpDriver(CaptureDriver):
    """Driver for a headless Chromium started with ``--remote-debugging-port``."""

    def __init__(self, endpoint: str = "http://127.0.0.1:9222", *, connect_timeout: float = 5.0):
        if "://" not in endpoint:
            endpoint = "http://" + endpoint
        self.endpoint = endpoint.rstrip("/")
        self.connect_timeout = connect_timeout

    def _browser_ws_url(self) -> str:
        try:
            with urllib.request.urlopen(self.endpoint + "/json/version", timeout=self.connect_timeout) as resp:
                info = json.loads(resp.read().decode("utf-8"))
        except (OSError, ValueError) as exc:
            raise DriverUnavailable(f"{self.endpoint}: {exc}") from None
        ws_url = info.get("webSocketDebuggerUrl")
        if not ws_url:
            raise DriverUnavailable(f"{self.endpoint}: no webSocketDebuggerUrl in /json/version")
        return ws_url

    def check(self) -> None:
        self._browser_ws_url()

    def open_session(self, *, user_agent: str = DEFAULT_USER_AGENT, dnt: bool = False) -> DriverSession:
        ws_url = self._browser_ws_url()
        try:
            return _CdpSession(ws_url, user_agent=user_agent, dnt=dnt, connect_timeout=self.connect_timeout)
        except (OSError, TimeoutError) as exc:
            raise DriverUnavailable(f"{ws_url}: {exc}") from None
