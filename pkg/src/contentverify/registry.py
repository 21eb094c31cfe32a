"""
File-backed content record store.

Each record lives in ``records/<content-id>.cvsr``, a small UTF-8 text file
with a fixed header followed by the base64 signature blob::

    cvsr: 1
    content-id: 3f0c5a7e9b1d2c48
    created-at: 1700000000
    who: @someone
    where: camera
    canonical-dims: 1080x1080
    padded-dims: 1080x1080
    margins: 67,67
    alpha: 29.6546418
    qr-dims: 370x370
    qr-version: 3
    signature-encoding: f32le-rowmajor-base64

    <base64, 76 characters per line>

Files are written to a temporary name and renamed into place, so readers
only ever see complete records. Writers serialise on ``store.lock``.
"""

from __future__ import annotations

import base64
import fcntl
import os
import re
import tempfile
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    CorruptRecordError,
    DuplicateIdError,
    RecordNotFoundError,
    StoreIOError,
    StoreVersionError,
)
from .features import FeatureSignature, decode_signature, encode_signature
from .idcodec import is_content_id
from .imaging import CANONICAL_DIMS

FORMAT_VERSION = 1
VERSION_FILE = "FORMAT"
RECORD_SUFFIX = ".cvsr"
SIGNATURE_ENCODING = "f32le-rowmajor-base64"
_HEADER_KEYS = (
    "cvsr",
    "content-id",
    "created-at",
    "who",
    "where",
    "canonical-dims",
    "padded-dims",
    "margins",
    "alpha",
    "qr-dims",
    "qr-version",
    "signature-encoding",
)


def _canonical_alpha(alpha: float) -> float:
    return float(format(float(alpha), ".9g"))


@dataclass(frozen=True)
class ContentRecord:
    content_id: str
    created_at: int
    who: str
    where_from: str
    canonical_dims: tuple[int, int]  # (W, H)
    padded_dims: tuple[int, int]  # (W, H)
    margins: tuple[int, int]  # (rows, cols)
    alpha: float
    qr_dims: tuple[int, int]  # (H, W)
    qr_version: int
    signature: FeatureSignature = field(compare=True)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _canonical_alpha(self.alpha))
        for name in ("canonical_dims", "padded_dims", "margins", "qr_dims"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if not is_content_id(self.content_id):
            raise ValueError(f"invalid content id {self.content_id!r}")
        for text in (self.who, self.where_from):
            if "\n" in text or "\r" in text:
                raise ValueError("who/where must be single-line text")
        if self.canonical_dims not in CANONICAL_DIMS:
            raise ValueError(f"canonical dims {self.canonical_dims} are not a platform size")
        w, h = self.canonical_dims
        expected = (w + (-w % 8), h + (-h % 8))
        if self.padded_dims != expected:
            raise ValueError(f"padded dims {self.padded_dims} != {expected}")
        if (self.signature.width, self.signature.height) != self.padded_dims:
            raise ValueError("signature dims do not match padded dims")
        if self.qr_version < 1 or min(self.qr_dims) < 1 or min(self.margins) < 0:
            raise ValueError("invalid embedding parameters")


def format_record(record: ContentRecord) -> bytes:
    cw, ch = record.canonical_dims
    pw, ph = record.padded_dims
    mr, mc = record.margins
    qh, qw = record.qr_dims
    header = [
        f"cvsr: {FORMAT_VERSION}",
        f"content-id: {record.content_id}",
        f"created-at: {record.created_at}",
        f"who: {record.who}",
        f"where: {record.where_from}",
        f"canonical-dims: {cw}x{ch}",
        f"padded-dims: {pw}x{ph}",
        f"margins: {mr},{mc}",
        f"alpha: {record.alpha:.9g}",
        f"qr-dims: {qh}x{qw}",
        f"qr-version: {record.qr_version}",
        f"signature-encoding: {SIGNATURE_ENCODING}",
    ]
    blob = base64.b64encode(encode_signature(record.signature)).decode("ascii")
    body = [blob[i : i + 76] for i in range(0, len(blob), 76)]
    return ("\n".join(header) + "\n\n" + "\n".join(body) + "\n").encode("utf-8")


def _pair(value: str, sep: str) -> tuple[int, int]:
    a, b = value.split(sep)
    return int(a), int(b)


def parse_record(data: bytes) -> ContentRecord:
    try:
        text = data.decode("utf-8")
        head, _, body = text.partition("\n\n")
        lines = head.split("\n")
        if len(lines) != len(_HEADER_KEYS):
            raise ValueError("unexpected header length")
        fields = {}
        for key, line in zip(_HEADER_KEYS, lines):
            name, sep, value = line.partition(": ")
            if not sep:
                name, value = line.rstrip(":"), ""
            if name != key:
                raise ValueError(f"expected header {key!r}, found {name!r}")
            fields[key] = value
        if fields["cvsr"] != str(FORMAT_VERSION):
            raise ValueError(f"unsupported record version {fields['cvsr']}")
        if fields["signature-encoding"] != SIGNATURE_ENCODING:
            raise ValueError("unknown signature encoding")
        if not body.endswith("\n"):
            raise ValueError("missing trailing newline")
        blob = base64.b64decode("".join(body.split("\n")), validate=True)
        padded = _pair(fields["padded-dims"], "x")
        signature = decode_signature(blob, *padded)
        return ContentRecord(
            content_id=fields["content-id"],
            created_at=int(fields["created-at"]),
            who=fields["who"],
            where_from=fields["where"],
            canonical_dims=_pair(fields["canonical-dims"], "x"),
            padded_dims=padded,
            margins=_pair(fields["margins"], ","),
            alpha=float(fields["alpha"]),
            qr_dims=_pair(fields["qr-dims"], "x"),
            qr_version=int(fields["qr-version"]),
            signature=signature,
        )
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptRecordError(f"malformed record: {exc}") from exc


_ID_FILE = re.compile(r"[0-9a-f]{16}\.cvsr")


class RecordStore:
    """Handle on an open store directory; use :func:`open_store`."""

    def __init__(self, root: Path):
        self.root = root
        self.records_dir = root / "records"
        self.lock_path = root / "store.lock"
        self._thread_lock = threading.Lock()

    def __repr__(self):
        return f"RecordStore({str(self.root)!r})"

    def _path(self, content_id: str) -> Path:
        if not is_content_id(content_id):
            raise ValueError(f"invalid content id {content_id!r}")
        return self.records_dir / f"{content_id}{RECORD_SUFFIX}"

    @contextmanager
    def _writer(self):
        with self._thread_lock:
            try:
                fd = os.open(self.lock_path, os.O_RDWR | os.O_CREAT, 0o644)
            except OSError as exc:
                raise StoreIOError(f"cannot open lock file: {exc}") from exc
            try:
                fcntl.flock(fd, fcntl.LOCK_EX)
                yield
            finally:
                fcntl.flock(fd, fcntl.LOCK_UN)
                os.close(fd)

    def put(self, record: ContentRecord) -> None:
        record.validate()
        data = format_record(record)
        final = self._path(record.content_id)
        with self._writer():
            if final.exists():
                raise DuplicateIdError(record.content_id)
            try:
                fd, tmp = tempfile.mkstemp(
                    prefix=f".{record.content_id}.", suffix=".tmp", dir=self.records_dir
                )
            except OSError as exc:
                raise StoreIOError(f"cannot create record file: {exc}") from exc
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, final)
            except OSError as exc:
                _unlink_quietly(tmp)
                raise StoreIOError(f"failed to write record {record.content_id}: {exc}") from exc
            except BaseException:
                _unlink_quietly(tmp)
                raise
            _fsync_dir(self.records_dir)

    def get(self, content_id: str) -> ContentRecord:
        path = self._path(content_id)
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise RecordNotFoundError(content_id) from None
        except OSError as exc:
            raise StoreIOError(f"cannot read record {content_id}: {exc}") from exc
        record = parse_record(data)
        if record.content_id != content_id:
            raise CorruptRecordError(f"record file {path.name} holds id {record.content_id}")
        return record

    def __contains__(self, content_id: str) -> bool:
        return self._path(content_id).exists()

    def ids(self) -> list[str]:
        return sorted(
            p.name[: -len(RECORD_SUFFIX)]
            for p in self.records_dir.iterdir()
            if _ID_FILE.fullmatch(p.name)
        )

    def __len__(self) -> int:
        return len(self.ids())


def _unlink_quietly(path) -> None:
    try:
        os.unlink(path)
    except OSError:
        pass


def _fsync_dir(path: Path) -> None:
    try:
        fd = os.open(path, os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)


def open_store(path: str | os.PathLike) -> RecordStore:
    """Open (creating on first use) a record store rooted at ``path``."""
    root = Path(path)
    marker = root / VERSION_FILE
    try:
        (root / "records").mkdir(parents=True, exist_ok=True)
        if not marker.exists():
            tmp = root / f".{VERSION_FILE}.tmp"
            tmp.write_text(f"cvsr-store {FORMAT_VERSION}\n", encoding="utf-8")
            os.replace(tmp, marker)
        text = marker.read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise StoreIOError(f"cannot open store at {root}: {exc}") from exc
    name, _, version = text.partition(" ")
    if name != "cvsr-store" or not version.isdigit():
        raise StoreVersionError(f"unrecognised store marker {text!r}")
    if int(version) != FORMAT_VERSION:
        raise StoreVersionError(f"store format version {version} is not supported")
    return RecordStore(root)


def put_record(store: RecordStore, record: ContentRecord) -> None:
    store.put(record)


def get_record(store: RecordStore, content_id: str) -> ContentRecord:
    return store.get(content_id)
