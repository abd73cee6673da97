"""Provider error taxonomy and the shared retry policy.

Both the social-graph provider and the score provider raise these exceptions;
``call_with_retry`` turns retryable ones into waits and the per-account ones into
a fetch status.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Callable, TypeVar

T = TypeVar("T")


class ProviderError(Exception):
    """Base class for provider failures."""

    status = "error"


class NotFoundError(ProviderError):
    status = "not_found"


class ProtectedError(ProviderError):
    status = "protected"


class SuspendedError(ProviderError):
    status = "suspended"


class RateLimitedError(ProviderError):
    def __init__(self, retry_after: float, message: str = "rate limited"):
        super().__init__(message)
        self.retry_after = float(retry_after)


class TransientError(ProviderError):
    """Recoverable I/O failure (timeouts, 5xx, dropped connections)."""


class FatalProviderError(ProviderError):
    """Unrecoverable failure; aborts the whole crawl or scoring run."""


ACCOUNT_ERRORS = (NotFoundError, ProtectedError, SuspendedError)


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 5
    base_delay: float = 1.0
    max_rate_limit_waits: int = 100


class RetriesExhausted(ProviderError):
    status = "error"


def call_with_retry(
    fn: Callable[[], T],
    policy: RetryPolicy = RetryPolicy(),
    *,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> T:
    """Call ``fn`` until it succeeds.

    Rate limits wait the signalled interval. Transient errors back off
    exponentially from ``base_delay`` with full jitter, at most ``max_retries``
    times, after which ``RetriesExhausted`` is raised. Other errors propagate.
    """
    rng = rng or random.Random()
    transient = 0
    limited = 0
    while True:
        try:
            return fn()
        except RateLimitedError as exc:
            limited += 1
            if limited > policy.max_rate_limit_waits:
                raise RetriesExhausted(f"still rate limited after {limited - 1} waits") from exc
            sleep(max(exc.retry_after, 0.0))
        except TransientError as exc:
            if transient >= policy.max_retries:
                raise RetriesExhausted(f"gave up after {transient} retries: {exc}") from exc
            sleep(rng.uniform(0.0, policy.base_delay * 2 ** transient))
            transient += 1
