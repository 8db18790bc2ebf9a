"""Command line front end: validate, render, compute, list, serve.

Exit codes: 0 success, 1 validation issues, 2 I/O or parse errors (including
bad usage).  ``render`` writes through a temp file and atomic rename so an
interrupted run never leaves a partial SVG behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .glyphs import GlyphError
from .ingest import (
    IngestError,
    find_atlas,
    load_dataset,
    load_manifest,
    registry_list,
)
from .maprender import AtlasError, load_atlas
from .model import BindError, SpecError, plot_spec_from_json, validate_spec
from .render import RenderError, render_figure
from .stats import LQInput, StatsError, location_quotient

__all__ = ["main"]

IO_ERRORS = (IngestError, AtlasError, SpecError, OSError)
VALIDATION_ERRORS = (RenderError, GlyphError, BindError, StatsError)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _bundled_figure_dir() -> Path:
    return Path(__file__).parent / "data" / "figures"


def _resolve_spec(ref: str) -> dict:
    """A spec argument is a JSON file path or a bundled recipe name."""
    path = Path(ref)
    if not path.is_file():
        bundled = _bundled_figure_dir() / f"{ref}.json"
        if bundled.is_file():
            path = bundled
        else:
            raise IngestError(f"spec not found: {ref}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path.name}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError(f"{path.name}: spec must be a JSON object")
    return doc


def _split_recipe(doc: dict) -> tuple[dict, str, str]:
    """Recipes bundle dataset/atlas ids next to the spec; plain specs don't."""
    if "spec" in doc:
        return doc["spec"], str(doc.get("dataset", "")), str(doc.get("atlas", ""))
    return doc, "", ""


def _resolve_dataset(ref: str, root: Path):
    path = Path(ref)
    if path.is_file():
        return load_dataset(load_manifest(path))
    for manifest in registry_list(root):
        if manifest.id == ref:
            return load_dataset(manifest)
    raise IngestError(f"dataset not found: {ref}")


def _resolve_atlas(ref: str, root: Path):
    path = Path(ref)
    if path.is_file():
        return load_atlas(path)
    found = find_atlas(ref, root)
    if found is None:
        raise IngestError(f"atlas not found: {ref}")
    return load_atlas(found)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _load_inputs(args, root: Path):
    doc = _resolve_spec(args.spec)
    spec_doc, default_dataset, default_atlas = _split_recipe(doc)
    dataset_ref = args.dataset or default_dataset
    atlas_ref = args.atlas or default_atlas
    if not dataset_ref:
        raise IngestError("no dataset given and the spec names none")
    if not atlas_ref:
        raise IngestError("no atlas given and the spec names none")
    spec = plot_spec_from_json(spec_doc)
    table = _resolve_dataset(dataset_ref, root)
    atlas = _resolve_atlas(atlas_ref, root)
    return spec, table, atlas


def _cmd_render(args, root: Path) -> int:
    spec, table, atlas = _load_inputs(args, root)
    report = validate_spec(spec, table, atlas)
    if not report.ok():
        for issue in report.issues:
            print(issue, file=sys.stderr)
        return 1
    figure = render_figure(spec, table, atlas)
    out = Path(args.out)
    _atomic_write(out, figure.svg.encode("utf-8"))
    if args.report:
        report_path = out.with_suffix(out.suffix + ".report.json")
        payload = json.dumps(figure.report, indent=2) + "\n"
        _atomic_write(report_path, payload.encode("utf-8"))
    return 0


def _cmd_validate(args, root: Path) -> int:
    spec, table, atlas = _load_inputs(args, root)
    report = validate_spec(spec, table, atlas)
    if not report.ok():
        for issue in report.issues:
            print(issue, file=sys.stderr)
        return 1
    print("ok")
    return 0


def _cmd_lq(args, root: Path) -> int:
    value = location_quotient(
        LQInput(args.area_cat, args.area_total, args.nat_cat, args.nat_total)
    )
    print(f"{value:g}")
    return 0


def _cmd_datasets(args, root: Path) -> int:
    for manifest in registry_list(root):
        if manifest.error:
            print(f"{manifest.id}\tERROR: {manifest.error}")
        else:
            files = ", ".join(manifest.files)
            print(f"{manifest.id}\tatlas={manifest.atlas}\tfiles={files}")
    return 0


def _cmd_serve(args, root: Path) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(root=root, cors_origins=tuple(args.cors_origin))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="micromap",
        description="Render linked micromap figures from region-keyed tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_root(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--root",
            default=None,
            help="dataset root (default: MICROMAP_DATA_ROOT or bundled data)",
        )

    render = sub.add_parser("render", help="render a figure spec to SVG")
    add_root(render)
    render.add_argument("--spec", required=True, help="spec JSON path or bundled recipe name")
    render.add_argument("--dataset", default="", help="dataset id or manifest path")
    render.add_argument("--atlas", default="", help="atlas id or geometry file path")
    render.add_argument("--out", required=True, help="output SVG path")
    render.add_argument(
        "--report", action="store_true", help="also write <out>.report.json"
    )
    render.set_defaults(func=_cmd_render)

    validate = sub.add_parser("validate", help="check a spec against a dataset")
    add_root(validate)
    validate.add_argument("--spec", required=True)
    validate.add_argument("--dataset", default="")
    validate.add_argument("--atlas", default="")
    validate.set_defaults(func=_cmd_validate)

    lq = sub.add_parser("lq", help="location quotient from four employment counts")
    lq.add_argument("area_cat", type=float, help="category employment in the area")
    lq.add_argument("area_total", type=float, help="total employment in the area")
    lq.add_argument("nat_cat", type=float, help="category employment nationally")
    lq.add_argument("nat_total", type=float, help="total employment nationally")
    lq.set_defaults(func=_cmd_lq)

    datasets = sub.add_parser("datasets", help="list datasets under the root")
    add_root(datasets)
    datasets.set_defaults(func=_cmd_datasets)

    serve = sub.add_parser("serve", help="start the HTTP rendering service")
    add_root(serve)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--cors-origin", action="append", default=[], help="allowed CORS origin (repeatable)"
    )
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    from .ingest import default_data_root

    root_arg = getattr(args, "root", None)
    root = Path(root_arg) if root_arg else default_data_root()
    try:
        return args.func(args, root)
    except VALIDATION_ERRORS as exc:
        return _fail(str(exc), 1)
    except IO_ERRORS as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    raise SystemExit(main())
