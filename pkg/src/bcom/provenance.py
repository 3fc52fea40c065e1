"""Records of provenance: who produced what, from which inputs, with which digests."""

from __future__ import annotations

import contextlib
import contextvars
import getpass
import hashlib
import json
import os
import re
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator
from urllib.parse import unquote, urlparse
from urllib.request import url2pathname

from .errors import InvalidStep, MalformedRecord, UnreadableInput

KINDS = ("source-fetch", "cache", "stage", "output-file")
DIGEST_ALGS = {"sha-256": hashlib.sha256, "md5": hashlib.md5}
DEFAULT_ALG = "sha-256"
RECORD_SUFFIX = ".prov.json"

OK = "ok"
DIGEST_MISMATCH = "digest-mismatch"
MISSING_SOURCE = "missing-source"

_STEP_KEYS = ("kind", "expr", "namespace", "version", "owner", "timestamp", "digest", "digest_alg", "uri")
_HEX = re.compile(r"^[0-9a-f]+$")


@dataclass(frozen=True)
class ProvenanceStep:
    kind: str
    expr: str
    namespace: str
    version: str
    owner: str
    timestamp: str
    digest: str | None
    digest_alg: str | None
    uri: str

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidStep(f"unknown step kind {self.kind!r}")
        for name in ("expr", "namespace", "version", "owner", "timestamp", "uri"):
            if not isinstance(getattr(self, name), str):
                raise InvalidStep(f"{name} must be text")
        if self.kind == "stage" and not self.expr.strip():
            raise InvalidStep("stage steps need a non-empty expression")
        try:
            parse_timestamp(self.timestamp)
        except ValueError as exc:
            raise InvalidStep(f"unparseable timestamp {self.timestamp!r}") from exc
        if self.digest is None:
            if self.kind != "source-fetch":
                raise InvalidStep(f"{self.kind} steps must carry a digest")
            if self.digest_alg is not None:
                raise InvalidStep("digest_alg given without digest")
        else:
            if not isinstance(self.digest, str) or not _HEX.match(self.digest):
                raise InvalidStep(f"digest must be lowercase hex, got {self.digest!r}")
            if self.digest_alg not in DIGEST_ALGS:
                raise InvalidStep(f"unsupported digest algorithm {self.digest_alg!r}")


@dataclass
class ProvenanceRecord:
    """Append-only list of steps behind one artifact."""

    artifact_uri: str = ""
    steps: list[ProvenanceStep] = field(default_factory=list)

    def append(self, step: ProvenanceStep) -> "ProvenanceRecord":
        step.validate()
        self.steps.append(step)
        return self

    def __len__(self) -> int:
        return len(self.steps)


def record_step(rec: ProvenanceRecord, step: ProvenanceStep) -> ProvenanceRecord:
    return rec.append(step)


# -- active record ---------------------------------------------------------

_active: contextvars.ContextVar[ProvenanceRecord | None] = contextvars.ContextVar(
    "bcom_provenance", default=None
)


def active_record() -> ProvenanceRecord | None:
    return _active.get()


@contextlib.contextmanager
def recording(rec: ProvenanceRecord) -> Iterator[ProvenanceRecord]:
    """Make ``rec`` the record that pipeline runs and fetches append to."""
    token = _active.set(rec)
    try:
        yield rec
    finally:
        _active.reset(token)


# -- step construction -----------------------------------------------------


def default_owner() -> str:
    user = os.environ.get("BCOM_USER")
    if user:
        return user
    try:
        return getpass.getuser()
    except Exception:  # no passwd entry in some containers
        return "unknown"


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def parse_timestamp(text: str) -> datetime:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks a zone offset")
    return ts


def package_version() -> str:
    from . import __version__

    return __version__


def stage_step(expr: str, namespace: str, name: str) -> ProvenanceStep:
    """Stage steps digest the stage expression text."""
    return ProvenanceStep(
        kind="stage",
        expr=expr,
        namespace=namespace,
        version=package_version(),
        owner=default_owner(),
        timestamp=now_rfc3339(),
        digest=digest_of(expr.encode("utf-8")),
        digest_alg=DEFAULT_ALG,
        uri=f"bcom://{namespace}/{name}",
    )


def file_step(kind: str, path: str | os.PathLike, expr: str | None = None,
              namespace: str = "bcom.io") -> ProvenanceStep:
    p = Path(path).resolve()
    uri = p.as_uri()
    if expr is None:
        expr = f"file({uri!r})" if kind == "output-file" else f"historical.cache({uri!r})"
    return ProvenanceStep(
        kind=kind,
        expr=expr,
        namespace=namespace,
        version="N/A" if kind == "output-file" else package_version(),
        owner=default_owner(),
        timestamp=now_rfc3339(),
        digest=digest_of(p),
        digest_alg=DEFAULT_ALG,
        uri=uri,
    )


def fetch_step(url: str, body: bytes | None) -> ProvenanceStep:
    return ProvenanceStep(
        kind="source-fetch",
        expr=f"fetch({url!r})",
        namespace="bcom.ingest",
        version="N/A",
        owner=default_owner(),
        timestamp=now_rfc3339(),
        digest=None if body is None else digest_of(body),
        digest_alg=None if body is None else DEFAULT_ALG,
        uri=url,
    )


# -- digests ---------------------------------------------------------------


def digest_of(source: bytes | bytearray | memoryview | str | os.PathLike, alg: str = DEFAULT_ALG) -> str:
    """Hex digest of raw bytes, or of a file's exact bytes when given a path."""
    try:
        factory = DIGEST_ALGS[alg]
    except KeyError:
        raise ValueError(f"unsupported digest algorithm {alg!r}") from None
    if isinstance(source, (bytes, bytearray, memoryview)):
        return factory(bytes(source)).hexdigest()
    h = factory()
    try:
        with open(source, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as exc:
        raise UnreadableInput(f"cannot read {source}: {exc}") from exc
    return h.hexdigest()


# -- serialization ---------------------------------------------------------


def serialize(rec: ProvenanceRecord) -> bytes:
    doc = {"artifact_uri": rec.artifact_uri, "steps": [asdict(s) for s in rec.steps]}
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def parse(data: bytes | str) -> ProvenanceRecord:
    try:
        text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    except UnicodeDecodeError as exc:
        raise MalformedRecord(f"record is not UTF-8: {exc.reason}", position=exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(exc.msg, position=exc.pos, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict) or set(doc) != {"artifact_uri", "steps"}:
        raise MalformedRecord("record must be an object with exactly artifact_uri and steps")
    if not isinstance(doc["artifact_uri"], str) or not isinstance(doc["steps"], list):
        raise MalformedRecord("artifact_uri must be text and steps a list")
    steps = []
    for i, raw in enumerate(doc["steps"]):
        if not isinstance(raw, dict) or set(raw) != set(_STEP_KEYS):
            raise MalformedRecord(f"step {i} does not have exactly the fields {', '.join(_STEP_KEYS)}")
        step = ProvenanceStep(**raw)
        try:
            step.validate()
        except InvalidStep as exc:
            raise MalformedRecord(f"step {i}: {exc}") from exc
        steps.append(step)
    return ProvenanceRecord(doc["artifact_uri"], steps)


def save(rec: ProvenanceRecord, path: str | os.PathLike) -> Path:
    """Write atomically: temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=RECORD_SUFFIX)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(serialize(rec))
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise
    return path


def load(path: str | os.PathLike) -> ProvenanceRecord:
    return parse(Path(path).read_bytes())


def record_path(artifact: str | os.PathLike) -> Path:
    return Path(str(artifact) + RECORD_SUFFIX)


# -- verification ----------------------------------------------------------


def _local_path(uri: str, base_dir: Path | None) -> Path | None:
    parsed = urlparse(uri)
    if parsed.scheme == "file":
        p = Path(url2pathname(unquote(parsed.path)))
    elif parsed.scheme == "" and uri:
        p = Path(uri)
    else:
        return None
    if p.exists():
        return p
    if base_dir is not None:
        # records travel with their artifacts: try the sibling file
        alt = base_dir / p.name
        if alt.exists():
            return alt
    return None


def verify(rec: ProvenanceRecord, base_dir: str | os.PathLike | None = None) -> list[tuple[ProvenanceStep, str]]:
    base = Path(base_dir) if base_dir is not None else None
    out = []
    for step in rec.steps:
        if step.kind == "stage":
            ok = digest_of(step.expr.encode("utf-8"), step.digest_alg or DEFAULT_ALG) == step.digest
            out.append((step, OK if ok else DIGEST_MISMATCH))
            continue
        local = _local_path(step.uri, base)
        if local is None or step.digest is None:
            out.append((step, MISSING_SOURCE))
            continue
        try:
            actual = digest_of(local, step.digest_alg or DEFAULT_ALG)
        except UnreadableInput:
            out.append((step, MISSING_SOURCE))
            continue
        out.append((step, OK if actual == step.digest else DIGEST_MISMATCH))
    return out


# -- rendering -------------------------------------------------------------


def _detail(step: ProvenanceStep) -> str:
    line = f"`-- v {step.version} {step.owner} @ {step.timestamp}"
    if step.digest:
        line += f" {(step.digest_alg or DEFAULT_ALG).upper()}:{step.digest}"
    return line


def render_tree(rec: ProvenanceRecord) -> str:
    lines = [f"**** PROVENANCE {rec.artifact_uri} ****"]
    in_stream = False
    for step in rec.steps:
        if step.kind == "stage":
            if not in_stream:
                lines.append("stream")
                in_stream = True
            lines += [step.namespace, step.expr, _detail(step)]
            continue
        if in_stream:
            lines.append("")
            in_stream = False
        lines += [step.expr, _detail(step), ""]
    if in_stream:
        lines.append("")
    lines.append(f"**** end of {rec.artifact_uri} ****")
    return "\n".join(lines) + "\n"
