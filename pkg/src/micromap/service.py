"""HTTP facade: dataset discovery and on-demand figure rendering.

Stateless by construction; datasets and atlases under the configured root are
treated as immutable, so identical POST bodies always produce identical SVG
bytes, matching the CLI byte-for-byte (same render path, default layout).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .glyphs import GlyphError
from .ingest import (
    IngestError,
    default_data_root,
    list_atlases,
    load_dataset,
    registry_list,
)
from .maprender import AtlasError, load_atlas
from .model import SpecError, plot_spec_from_json, validate_spec
from .render import RenderError, render_figure

__all__ = ["create_app"]

REPORT_LINK = '</api/render/report>; rel="describedby"'


def create_app(root: str | Path | None = None, cors_origins: tuple[str, ...] = ()) -> FastAPI:
    data_root = Path(root) if root is not None else default_data_root()
    app = FastAPI(title="micromap", docs_url=None, redoc_url=None)
    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    # immutable shared state: loaded lazily, cached for the app lifetime
    tables: dict = {}
    atlases: dict = {}

    def manifest_index():
        return {m.id: m for m in registry_list(data_root)}

    def get_table(dataset_id: str):
        if dataset_id not in tables:
            manifest = manifest_index().get(dataset_id)
            if manifest is None:
                return None, None
            tables[dataset_id] = (load_dataset(manifest), manifest)
        return tables[dataset_id]

    def get_atlas(atlas_id: str):
        if atlas_id not in atlases:
            path = dict(list_atlases(data_root)).get(atlas_id)
            if path is None:
                return None
            atlases[atlas_id] = load_atlas(path)
        return atlases[atlas_id]

    @app.get("/api/datasets")
    def datasets() -> JSONResponse:
        out = []
        for manifest in registry_list(data_root):
            if manifest.error:
                out.append({"id": manifest.id, "error": manifest.error})
                continue
            table, _ = get_table(manifest.id)
            units = {m.name: m.unit for m in manifest.adapter.mappings}
            time_members = {
                cname for pairs in table.time_groups.values() for _, cname in pairs
            }
            columns = [
                {"name": name, "type": "number", "unit": units.get(name, "")}
                for name in table.column_names()
                if name not in time_members
            ]
            out.append(
                {
                    "id": manifest.id,
                    "atlas": manifest.atlas,
                    "rows": len(table.keys),
                    "columns": columns,
                    "time_groups": {
                        group: [label for label, _ in pairs]
                        for group, pairs in table.time_groups.items()
                    },
                    "provenance": manifest.provenance,
                }
            )
        return JSONResponse(out)

    @app.get("/api/atlases")
    def atlas_listing() -> JSONResponse:
        out = []
        for atlas_id, _ in list_atlases(data_root):
            atlas = get_atlas(atlas_id)
            out.append({"id": atlas_id, "regions": len(atlas.regions)})
        return JSONResponse(out)

    async def prepare(request: Request):
        """Parse and render; returns (figure, error_response)."""
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return None, JSONResponse({"error": f"malformed JSON: {exc}"}, status_code=400)
        if not isinstance(body, Mapping):
            return None, JSONResponse({"error": "request must be a JSON object"}, status_code=400)
        dataset_id = str(body.get("dataset", ""))
        loaded = get_table(dataset_id)
        if loaded == (None, None):
            return None, JSONResponse(
                {"error": f"unknown dataset {dataset_id}"}, status_code=404
            )
        table, manifest = loaded
        atlas_id = str(body.get("atlas") or manifest.atlas)
        atlas = get_atlas(atlas_id)
        if atlas is None:
            return None, JSONResponse({"error": f"unknown atlas {atlas_id}"}, status_code=404)
        try:
            spec = plot_spec_from_json(body.get("spec"))
        except SpecError as exc:
            return None, JSONResponse({"issues": [str(exc)]}, status_code=422)
        report = validate_spec(spec, table, atlas)
        if not report.ok():
            return None, JSONResponse({"issues": list(report.issues)}, status_code=422)
        try:
            figure = render_figure(spec, table, atlas)
        except (RenderError, GlyphError) as exc:
            return None, JSONResponse({"issues": [str(exc)]}, status_code=422)
        return figure, None

    @app.post("/api/render")
    async def render(request: Request) -> Response:
        figure, error = await prepare(request)
        if error is not None:
            return error
        return Response(
            content=figure.svg,
            media_type="image/svg+xml",
            headers={"Link": REPORT_LINK},
        )

    @app.post("/api/render/report")
    async def render_report(request: Request) -> Response:
        figure, error = await prepare(request)
        if error is not None:
            return error
        return JSONResponse(figure.report)

    @app.exception_handler(IngestError)
    @app.exception_handler(AtlasError)
    def data_error(_request, exc) -> JSONResponse:  # pragma: no cover - defensive
        return JSONResponse({"error": str(exc)}, status_code=500)

    return app
