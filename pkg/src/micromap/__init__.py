"""Linked-micromap rendering engine for regional official statistics.

The pieces compose in one direction: ``ingest`` reads tabular extracts into
a :class:`~micromap.model.DataTable`, ``maprender`` loads region atlases,
``model`` validates and binds a declarative :class:`~micromap.model.PlotSpec`
against both, and ``render`` turns the bound model into a deterministic SVG
figure plus a JSON-friendly layout report.  ``cli`` and ``service`` expose
the same pipeline over argv and HTTP.
"""

from .grouping import GroupingError, Palette, assign_colors, build_groups, group_regions
from .ingest import (
    AdapterConfig,
    ColumnMapping,
    DatasetManifest,
    IngestError,
    LongTimeSpec,
    WideTimeSpec,
    dataset_from_csv,
    dataset_to_csv,
    load_csv_dataset,
    load_dataset,
    registry_list,
)
from .maprender import AtlasError, load_atlas
from .model import (
    Atlas,
    BindError,
    ColumnSort,
    ColumnSpec,
    DataTable,
    PcaSort,
    PlotSpec,
    RefValue,
    ResidualSort,
    SpecError,
    bind_spec,
    plot_spec_from_json,
    plot_spec_to_json,
    validate_spec,
)
from .render import LayoutOptions, RenderedFigure, RenderError, render_figure
from .stats import (
    LowessParams,
    LQInput,
    StatsError,
    ci_from_prse,
    location_quotient,
    lowess_fit,
    lowess_residuals,
    over_year_pct_change,
    pca_scores,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "Atlas",
    "AtlasError",
    "BindError",
    "ColumnMapping",
    "ColumnSort",
    "ColumnSpec",
    "DataTable",
    "DatasetManifest",
    "GroupingError",
    "IngestError",
    "LQInput",
    "LayoutOptions",
    "LongTimeSpec",
    "LowessParams",
    "Palette",
    "PcaSort",
    "PlotSpec",
    "RefValue",
    "RenderError",
    "RenderedFigure",
    "ResidualSort",
    "SpecError",
    "StatsError",
    "WideTimeSpec",
    "assign_colors",
    "bind_spec",
    "build_groups",
    "ci_from_prse",
    "dataset_from_csv",
    "dataset_to_csv",
    "group_regions",
    "load_atlas",
    "load_csv_dataset",
    "load_dataset",
    "location_quotient",
    "lowess_fit",
    "lowess_residuals",
    "over_year_pct_change",
    "pca_scores",
    "plot_spec_from_json",
    "plot_spec_to_json",
    "registry_list",
    "render_figure",
    "validate_spec",
    "__version__",
]
