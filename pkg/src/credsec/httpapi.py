"""JSON-over-HTTP wire layer for the authority and the management service.

Every endpoint answers {"b": 0|1, ...}; failures carry a reason string and
an HTTP status.  Envelope bytes travel base64, hashes travel hex.  No
business logic lives here: each route body is a one-call wrapper.
"""

from __future__ import annotations

import base64
import binascii

import httpx
from fastapi import APIRouter, FastAPI, Header, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .authority import Cta, KeyBundle
from .cms import Cms
from .errors import (
    AuthFailed,
    CredsecError,
    DuplicateInstructor,
    DuplicateStudent,
    Forbidden,
    HashMismatch,
    NotFound,
    PersistenceFailure,
)

_STATUS = {
    AuthFailed: (401, "auth-failed"),
    Forbidden: (403, "forbidden"),
    NotFound: (404, "not-found"),
    HashMismatch: (400, "hash-mismatch"),
    DuplicateInstructor: (409, "duplicate"),
    DuplicateStudent: (409, "duplicate"),
    PersistenceFailure: (500, "persistence-failure"),
}


def install_error_handlers(app: FastAPI) -> None:
    async def handle(request: Request, exc: CredsecError):
        status, reason = _STATUS.get(type(exc), (500, "internal"))
        return JSONResponse(status_code=status, content={"b": 0, "reason": reason})

    for exc_type in _STATUS:
        app.add_exception_handler(exc_type, handle)

    async def handle_bad_input(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"b": 0, "reason": "bad-request"})

    app.add_exception_handler(ValueError, handle_bad_input)


def _bearer(authorization: str | None) -> str:
    if not authorization or not authorization.startswith("Bearer "):
        raise AuthFailed()
    return authorization[len("Bearer "):]


def _b64_decode(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError):
        raise ValueError("invalid base64 payload") from None


# --- request bodies ----------------------------------------------------------

class CtaInstructorBody(BaseModel):
    email: str
    id: str


class CtaStudentBody(BaseModel):
    email: str
    roll: str


class NonceCheckBody(BaseModel):
    id: str
    nonce: str
    consume: bool = False


class InsRegisterBody(BaseModel):
    email: str
    password: str
    id: str
    nonce: str


class StdRegisterBody(BaseModel):
    email: str
    password: str
    roll: str


class InsLoginBody(BaseModel):
    email: str
    password: str
    nonce: str


class StdLoginBody(BaseModel):
    email: str
    password: str


class UploadBody(BaseModel):
    roll: str
    course: str
    envelope: str
    h_c: str


class RecoverBody(BaseModel):
    roll: str
    course: str
    email: str | None = None
    password: str | None = None


# --- authority routes --------------------------------------------------------

def cta_router(cta: Cta) -> APIRouter:
    router = APIRouter()

    @router.post("/cta/instructor/register")
    def register_instructor(body: CtaInstructorBody):
        nonce = cta.register_instructor(body.email, body.id)
        return {"b": 1, "nonce": nonce}

    @router.post("/cta/student/register")
    def register_student(body: CtaStudentBody):
        # full bundle, private half included: this channel is the paper's
        # assumed-secure key distribution
        bundle = cta.register_student(body.email, body.roll)
        return {"b": 1, "bundle": bundle.to_json()}

    @router.get("/cta/encryption-key/{roll}")
    def encryption_key(roll: str):
        return {"b": 1, "bundle": cta.encryption_bundle(roll).to_json()}

    @router.post("/cta/internal/nonce-check")
    def nonce_check(body: NonceCheckBody):
        ok = cta.check_nonce(body.id, body.nonce, consume_registration=body.consume)
        return {"ok": ok}

    @router.get("/cta/internal/student-public/{roll}")
    def student_public(roll: str):
        record = cta.student_public(roll)
        if record is None:
            return {"found": False}
        return {"found": True, "email": record["email"],
                "e": str(record["e"]), "N": str(record["N"])}

    return router


# --- management-service routes -----------------------------------------------

def cms_router(cms: Cms) -> APIRouter:
    router = APIRouter()

    @router.post("/ins/register")
    def ins_register(body: InsRegisterBody):
        b, reason = cms.register_instructor(body.email, body.password, body.id, body.nonce)
        return {"b": b, "reason": reason}

    @router.post("/std/register")
    def std_register(body: StdRegisterBody):
        b, reason = cms.register_student(body.email, body.password, body.roll)
        return {"b": b, "reason": reason}

    @router.post("/ins/login")
    def ins_login(body: InsLoginBody):
        session = cms.login(body.email, body.password, nonce=body.nonce)
        return {"b": 1, "token": session.token, "expires_at": session.expires_at}

    @router.post("/std/login")
    def std_login(body: StdLoginBody):
        session = cms.login(body.email, body.password)
        return {"b": 1, "token": session.token, "expires_at": session.expires_at}

    @router.post("/credential/upload")
    def upload(body: UploadBody, authorization: str | None = Header(default=None)):
        token = _bearer(authorization)
        envelope = _b64_decode(body.envelope)
        block = cms.upload(token, body.roll, body.course, envelope,
                           bytes.fromhex(body.h_c))
        return {"b": 1, "block": block.index}

    @router.get("/credential/{roll}/{course}")
    def retrieve(roll: str, course: str, authorization: str | None = Header(default=None)):
        token = _bearer(authorization)
        data, h_c = cms.retrieve(token, roll, course)
        return {"b": 1, "envelope": base64.b64encode(data).decode("ascii"),
                "h_c": h_c.hex()}

    @router.post("/credential/recover")
    def recover(body: RecoverBody, authorization: str | None = Header(default=None)):
        token = None
        if authorization is not None:
            token = _bearer(authorization)
        data = cms.recover(body.roll, body.course, email=body.email,
                           password=body.password, token=token)
        return {"b": 1, "envelope": base64.b64encode(data).decode("ascii")}

    return router


def create_cta_app(cta: Cta) -> FastAPI:
    app = FastAPI(title="credsec authority")
    install_error_handlers(app)
    app.include_router(cta_router(cta))
    return app


def create_cms_app(cms: Cms, cta: Cta | None = None) -> FastAPI:
    """CMS app; pass the embedded authority to also expose its routes from
    the same port (single-process deployments)."""
    app = FastAPI(title="credsec management service")
    install_error_handlers(app)
    app.include_router(cms_router(cms))
    if cta is not None:
        app.include_router(cta_router(cta))
    return app


# --- clients -----------------------------------------------------------------

def serve_in_thread(app: FastAPI, host: str = "127.0.0.1",
                    port: int = 0) -> tuple[str, "object"]:
    """Run the app on a daemon thread; port 0 picks a free one.

    Returns (base_url, server); set server.should_exit = True to stop.
    Used by the HTTP bench mode and the live-server tests.
    """
    import threading
    import time

    import uvicorn

    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise RuntimeError("server failed to start within 10s")
        time.sleep(0.01)
    bound = server.servers[0].sockets[0].getsockname()[1]
    return f"http://{host}:{bound}", server


class HttpAuthority:
    """Directory adapter a split-deployment CMS uses to reach the authority."""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=10.0)

    def check_nonce(self, ins_id: str, nonce: str, consume_registration: bool = False) -> bool:
        resp = self._client.post(self.base_url + "/cta/internal/nonce-check",
                                 json={"id": ins_id, "nonce": nonce,
                                       "consume": consume_registration})
        resp.raise_for_status()
        return bool(resp.json()["ok"])

    def student_public(self, roll: str) -> dict | None:
        resp = self._client.get(self.base_url + f"/cta/internal/student-public/{roll}")
        resp.raise_for_status()
        payload = resp.json()
        if not payload["found"]:
            return None
        return {"roll": roll, "email": payload["email"],
                "e": int(payload["e"]), "N": int(payload["N"])}


class ApiError(Exception):
    """Non-2xx reply from a credsec service, with the decoded reason."""

    def __init__(self, status: int, reason: str):
        super().__init__(f"HTTP {status}: {reason}")
        self.status = status
        self.reason = reason


class ServiceClient:
    """Thin client used by the role CLIs and the HTTP bench mode."""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=60.0)

    def _unwrap(self, resp: httpx.Response) -> dict:
        try:
            payload = resp.json()
        except ValueError:
            resp.raise_for_status()
            raise ApiError(resp.status_code, "unparseable-response")
        if resp.status_code >= 400 or payload.get("b") == 0:
            raise ApiError(resp.status_code, payload.get("reason", "unknown"))
        return payload

    def _post(self, path: str, body: dict, token: str | None = None) -> dict:
        headers = {"Authorization": f"Bearer {token}"} if token else None
        return self._unwrap(self._client.post(self.base_url + path, json=body,
                                              headers=headers))

    def _get(self, path: str, token: str | None = None) -> dict:
        headers = {"Authorization": f"Bearer {token}"} if token else None
        return self._unwrap(self._client.get(self.base_url + path, headers=headers))

    # authority
    def cta_register_instructor(self, email: str, ins_id: str) -> str:
        return self._post("/cta/instructor/register", {"email": email, "id": ins_id})["nonce"]

    def cta_register_student(self, email: str, roll: str) -> KeyBundle:
        payload = self._post("/cta/student/register", {"email": email, "roll": roll})
        return KeyBundle.from_json(payload["bundle"])

    def fetch_encryption_key(self, roll: str) -> KeyBundle:
        return KeyBundle.from_json(self._get(f"/cta/encryption-key/{roll}")["bundle"])

    # management service
    def ins_register(self, email: str, password: str, ins_id: str, nonce: str) -> dict:
        return self._post("/ins/register", {"email": email, "password": password,
                                            "id": ins_id, "nonce": nonce})

    def std_register(self, email: str, password: str, roll: str) -> dict:
        return self._post("/std/register", {"email": email, "password": password,
                                            "roll": roll})

    def ins_login(self, email: str, password: str, nonce: str) -> str:
        return self._post("/ins/login", {"email": email, "password": password,
                                         "nonce": nonce})["token"]

    def std_login(self, email: str, password: str) -> str:
        return self._post("/std/login", {"email": email, "password": password})["token"]

    def upload(self, token: str, roll: str, course: str, envelope: bytes,
               h_c: bytes) -> int:
        body = {"roll": roll, "course": course,
                "envelope": base64.b64encode(envelope).decode("ascii"),
                "h_c": h_c.hex()}
        return self._post("/credential/upload", body, token=token)["block"]

    def retrieve(self, token: str, roll: str, course: str) -> tuple[bytes, bytes]:
        payload = self._get(f"/credential/{roll}/{course}", token=token)
        return base64.b64decode(payload["envelope"]), bytes.fromhex(payload["h_c"])

    def recover(self, roll: str, course: str, email: str | None = None,
                password: str | None = None, token: str | None = None) -> bytes:
        body = {"roll": roll, "course": course, "email": email, "password": password}
        payload = self._post("/credential/recover", body, token=token)
        return base64.b64decode(payload["envelope"])
