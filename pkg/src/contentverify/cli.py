"""Command-line entry point: ``cvs register`` and ``cvs verify``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import CapacityError, CvsError
from .imaging import load_image, save_image
from .pipeline import PipelineConfig, register_content, verify_content
from .registry import open_store
from .stego import MasterKey

KEY_ENV = "CVS_MASTER_KEY"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_CODES = {
    "verified": 0,
    "suspected": 3,
    "tampered": 4,
    "watermark_not_found": 5,
    "record_not_found": 5,
}


class UsageError(Exception):
    pass


def _margins(text: str) -> tuple[int, int]:
    try:
        r, c = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("margins must look like R,C") from None
    if r < 0 or c < 0:
        raise argparse.ArgumentTypeError("margins must be non-negative")
    return r, c


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("alpha must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvs", description="Register and verify images.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, type=Path, help="PNG or JPEG image")
    common.add_argument("--store", required=True, type=Path, help="record store directory")
    common.add_argument("--key-file", type=Path, help=f"hex master key (overrides ${KEY_ENV})")
    common.add_argument("--json", action="store_true", help="print a JSON object")

    reg = sub.add_parser("register", parents=[common], help="watermark and record an image")
    reg.add_argument("--output", required=True, type=Path, help="watermarked PNG to write")
    reg.add_argument("--who", default="")
    reg.add_argument("--where", default="")
    reg.add_argument("--alpha", type=_positive_float, help="absolute embedding strength")
    reg.add_argument("--margins", type=_margins, help="spectral margins R,C")

    sub.add_parser("verify", parents=[common], help="check an image against the store")
    return parser


def load_key(key_file: Path | None, environ=os.environ) -> MasterKey:
    if key_file is not None:
        try:
            text = key_file.read_text(encoding="ascii")
        except (OSError, UnicodeDecodeError) as exc:
            raise UsageError(f"cannot read key file: {exc}") from exc
    elif environ.get(KEY_ENV):
        text = environ[KEY_ENV]
    else:
        raise UsageError(f"no master key: pass --key-file or set {KEY_ENV}")
    try:
        return MasterKey.from_hex(text)
    except ValueError as exc:
        raise UsageError(f"bad master key: {exc}") from exc


def _read_image(path: Path):
    try:
        return load_image(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read image {path}: {exc}") from exc


def _register(args, key: MasterKey, out) -> int:
    if args.output.suffix.lower() != ".png":
        raise UsageError("--output must be a .png path (registered images are stored losslessly)")
    cfg = PipelineConfig(alpha=args.alpha, margins=args.margins)
    image = _read_image(args.input)
    store = open_store(args.store)
    try:
        watermarked, content_id = register_content(image, args.who, args.where, store, key, cfg)
    except CapacityError as exc:
        raise UsageError(f"image too small to carry a watermark: {exc}") from exc
    output = args.output
    save_image(watermarked, output, format="PNG", compress_level=1)
    h, w = watermarked.shape[:2]
    if args.json:
        print(json.dumps({"content_id": content_id, "output": str(output), "dims": [w, h]}), file=out)
    else:
        print(f"Content ID: {content_id}\nWrote {output} ({w}x{h})", file=out)
    return EXIT_OK


def _verify(args, key: MasterKey, out) -> int:
    image = _read_image(args.input)
    report = verify_content(image, open_store(args.store), key)
    print(report.to_json() if args.json else report.to_text(), file=out)
    return EXIT_CODES[report.verdict]


def main(argv=None, *, environ=os.environ, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        key = load_key(args.key_file, environ)
        if args.command == "register":
            return _register(args, key, out)
        return _verify(args, key, out)
    except UsageError as exc:
        print(f"cvs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CvsError as exc:
        print(f"cvs: error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"cvs: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
