"""HTTP provider speaking the generic paginated follower/followee contract.

Wire contract::

    GET {base_url}/{followers|followees}?id=<account id>[&cursor=<token>]
    200 -> {"ids": [...], "next_cursor": "<token>" | null}
    404 -> not_found, 401/403 -> protected, 410 -> suspended
    429 -> rate limited, ``Retry-After`` header in seconds
    5xx and connection errors -> transient; any other status is fatal

No vendor specifics live here; a deployment points ``base_url`` at an adapter.
"""

from __future__ import annotations

import httpx

from boostnet.acquisition import FOLLOWEES, FOLLOWERS, ProviderPage
from boostnet.providers import (
    FatalProviderError,
    NotFoundError,
    ProtectedError,
    RateLimitedError,
    SuspendedError,
    TransientError,
)

DEFAULT_RETRY_AFTER = 60.0


class RestGraphProvider:
    def __init__(self, base_url: str, *, client: httpx.Client | None = None, timeout: float = 30.0):
        self.client = client or httpx.Client(base_url=base_url, timeout=timeout)
        self.base_url = base_url.rstrip("/")

    def _get(self, relation: str, account_id: str, cursor: str | None) -> ProviderPage:
        params = {"id": account_id}
        if cursor is not None:
            params["cursor"] = cursor
        try:
            resp = self.client.get(f"{self.base_url}/{relation}", params=params)
        except httpx.TransportError as exc:
            raise TransientError(str(exc)) from exc
        code = resp.status_code
        if code == 200:
            try:
                body = resp.json()
                return ProviderPage(tuple(str(i) for i in body["ids"]), body.get("next_cursor"))
            except (ValueError, KeyError, TypeError) as exc:
                raise FatalProviderError(f"malformed page for {account_id}: {exc}") from exc
        if code == 404:
            raise NotFoundError(account_id)
        if code in (401, 403):
            raise ProtectedError(account_id)
        if code == 410:
            raise SuspendedError(account_id)
        if code == 429:
            try:
                wait = float(resp.headers.get("Retry-After", DEFAULT_RETRY_AFTER))
            except ValueError:
                wait = DEFAULT_RETRY_AFTER
            raise RateLimitedError(wait)
        if code >= 500:
            raise TransientError(f"HTTP {code}")
        raise FatalProviderError(f"HTTP {code} for {relation}({account_id})")

    def followers(self, account_id, cursor=None):
        return self._get(FOLLOWERS, account_id, cursor)

    def followees(self, account_id, cursor=None):
        return self._get(FOLLOWEES, account_id, cursor)
