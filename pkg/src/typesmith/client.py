"""HTTP client for the synthesis service.

By default the client mounts the service in-process (no socket, no
separate server), which is what the CLI uses; pass a base URL to talk to
a remote `typesmith serve` instance instead.
"""

from __future__ import annotations

from typing import Optional

import httpx


class ServiceError(Exception):
    def __init__(self, status_code: int, detail: str) -> None:
        super().__init__(f"{status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class GateViolation(ServiceError):
    """The service reported an internal oracle disagreement."""


class ServiceClient:
    def __init__(self, server: Optional[str] = None) -> None:
        if server is None:
            from fastapi.testclient import TestClient

            from .service.app import app

            self._client: httpx.Client = TestClient(app)
        else:
            self._client = httpx.Client(base_url=server, timeout=600.0)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _call(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        response = self._client.request(method, path, json=payload)
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            if "internal-gate-violation" in str(detail):
                raise GateViolation(response.status_code, str(detail))
            raise ServiceError(response.status_code, str(detail))
        return response.json()

    def load_spec(self, documents: list[dict], prune: bool = True, depth: int = 2) -> dict:
        return self._call(
            "POST",
            "/specs",
            {
                "documents": documents,
                "prune_unusable": prune,
                "substitution_depth": depth,
            },
        )

    def stats(self, spec_id: str) -> dict:
        return self._call("GET", f"/specs/{spec_id}/stats")

    def graph_dot(self, spec_id: str) -> str:
        return self._call("GET", f"/specs/{spec_id}/graph.dot")["dot"]

    def synth(self, spec_id: str, **kwargs) -> dict:
        return self._call("POST", f"/specs/{spec_id}/synth", kwargs)

    def check_program(self, spec_id: str, program: str) -> dict:
        return self._call(
            "POST", f"/specs/{spec_id}/check", {"program": program}
        )

    def erase(self, spec_id: str, program: str) -> dict:
        return self._call(
            "POST", f"/specs/{spec_id}/erase", {"program": program}
        )

    def paths(self, spec_id: str, type_expr: str, **kwargs) -> dict:
        return self._call(
            "POST",
            f"/specs/{spec_id}/paths",
            {"type_expr": type_expr, **kwargs},
        )

    def campaign(self, **kwargs) -> dict:
        return self._call("POST", "/campaigns", kwargs)
