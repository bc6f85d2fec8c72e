"""Chat-completion HTTP client used to sample model answers.

Only the generic ``POST {base_url}/chat/completions`` shape is spoken. The API
key is read from an environment variable named in the config, never from
files or flags.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import httpx

from ..exceptions import AuthError, EndpointError
from .prompts import PromptSpec

logger = logging.getLogger(__name__)

DEFAULT_KEY_ENV = "CHEMCENSOR_API_KEY"
_TRANSIENT = {408, 409, 425, 429, 500, 502, 503, 504}


@dataclass(frozen=True, slots=True)
class EndpointConfig:
    """Where and how to query a model.

    Attributes:
        base_url: API root, e.g. ``https://host/v1``.
        model: Model name sent in the request body.
        api_key_env: Environment variable holding the bearer token; when the
            variable is unset no Authorization header is sent.
        params: Extra body fields such as ``temperature``.
        timeout: Per-request timeout in seconds.
        retries: Retries after the first attempt for transient failures.
        backoff: Base delay in seconds, doubled on each retry.
        concurrency: Maximum requests in flight.
    """

    base_url: str
    model: str
    api_key_env: str = DEFAULT_KEY_ENV
    params: dict = field(default_factory=dict)
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    concurrency: int = 4

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def describe(self) -> str:
        """Endpoint identity for provenance records (no credentials)."""
        return f"{self.base_url.rstrip('/')}#{self.model}"


def _content(payload: dict) -> str:
    try:
        return payload["choices"][0]["message"]["content"] or ""
    except (KeyError, IndexError, TypeError) as exc:
        raise EndpointError(f"unexpected response shape: {exc!r}") from exc


def request_completion(
    client: httpx.Client, config: EndpointConfig, prompt: str, sleep=time.sleep
) -> str:
    """One completion with retries.

    Raises:
        AuthError: The endpoint rejected the credentials (401/403).
        EndpointError: Retries exhausted or a non-transient failure.
    """
    url = config.base_url.rstrip("/") + "/chat/completions"
    body = {"model": config.model, "messages": [{"role": "user", "content": prompt}], **config.params}
    last = "no attempt made"
    for attempt in range(config.retries + 1):
        if attempt:
            sleep(config.backoff * 2 ** (attempt - 1))
        try:
            resp = client.post(url, json=body, headers=config.headers(), timeout=config.timeout)
        except httpx.TransportError as exc:
            last = f"{type(exc).__name__}: {exc}"
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint refused credentials from ${config.api_key_env} (HTTP {resp.status_code})")
        if resp.status_code in _TRANSIENT:
            last = f"HTTP {resp.status_code}"
            continue
        if resp.status_code >= 400:
            raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return _content(resp.json())
        except ValueError as exc:
            raise EndpointError(f"response is not JSON: {exc}") from exc
    raise EndpointError(f"giving up after {config.retries + 1} attempts ({last})")


def query_model(
    config: EndpointConfig,
    prompt: PromptSpec | str,
    n: int,
    transport: httpx.BaseTransport | None = None,
    sleep=time.sleep,
) -> list[str | None]:
    """``n`` independent completions for one prompt.

    Failed samples come back as ``None`` so a run never silently loses slots.

    Raises:
        AuthError: Credentials were rejected; the run cannot continue.
    """
    text = prompt.rendered if isinstance(prompt, PromptSpec) else prompt
    with httpx.Client(transport=transport) as client:

        def one(_: int) -> str | None:
            try:
                return request_completion(client, config, text, sleep)
            except EndpointError as exc:
                logger.warning("sample failed: %s", exc)
                return None

        with ThreadPoolExecutor(max_workers=max(1, config.concurrency)) as pool:
            return list(pool.map(one, range(n)))
