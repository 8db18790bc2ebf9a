/** Explorer state, its lossless URL codec, and the render-request builder.
 *
 * The URL query string is the single source of truth for a view: encode and
 * decode round-trip exactly, so a pasted link reproduces the same request
 * byte-for-byte (the server renders deterministically on its side).
 */

export type Direction = "ascending" | "descending";
export type Shading = "current_group" | "cumulative";
export type OptionValue = number | boolean | string;

export type ReferenceValue = [number, string] | [number, string, string];

export interface ColumnConfig {
  glyph: string;
  bindings: Record<string, string>;
  reference_values: ReferenceValue[];
  options: Record<string, OptionValue>;
  title: string;
}

export interface UiState {
  dataset: string;
  sortColumn: string;
  direction: Direction;
  shading: Shading;
  /** Smoothing span applied to scatter overlays; slider range 0.2..1.0. */
  span: number;
  columns: ColumnConfig[];
}

export const SPAN_MIN = 0.2;
export const SPAN_MAX = 1.0;
export const SPAN_STEP = 0.05;
export const SPAN_DEFAULT = 2 / 3;

export interface RenderRequest {
  dataset: string;
  spec: {
    sort: { column: string };
    direction: Direction;
    shading: Shading;
    columns: Array<{
      glyph: string;
      bindings: Record<string, string>;
      reference_values: ReferenceValue[];
      options: Record<string, OptionValue>;
      title: string;
    }>;
  };
}

/** A field the view should highlight, with the reason a request was withheld. */
export interface Hint {
  field: string;
  message: string;
}

export type BuildResult =
  | { ok: true; request: RenderRequest }
  | { ok: false; hints: Hint[] };

// bindings each glyph must name before a request is worth sending; dot_ci
// additionally accepts value + prse or value + lo/hi
const REQUIRED_BINDINGS: Record<string, string[]> = {
  dot: ["value"],
  arrow: ["from", "to"],
  bar: ["value"],
  segmented_bar: ["shares"],
  boxplot: ["p10", "p25", "p50", "p75", "p90"],
  timeseries: ["group"],
  scatter: ["x", "y"],
};

function columnHints(column: ColumnConfig, index: number): Hint[] {
  const hints: Hint[] = [];
  const at = (binding: string) => `columns[${index}].bindings.${binding}`;
  if (!column.glyph) {
    hints.push({ field: `columns[${index}].glyph`, message: "choose a glyph" });
    return hints;
  }
  if (column.glyph === "dot_ci") {
    if (!column.bindings["value"]) {
      hints.push({ field: at("value"), message: "dot_ci needs a value binding" });
    }
    const hasPrse = Boolean(column.bindings["prse"]);
    const hasBounds = Boolean(column.bindings["lo"]) && Boolean(column.bindings["hi"]);
    if (!hasPrse && !hasBounds) {
      hints.push({ field: at("prse"), message: "dot_ci needs prse or lo/hi bindings" });
    }
    return hints;
  }
  for (const binding of REQUIRED_BINDINGS[column.glyph] ?? []) {
    if (!column.bindings[binding]) {
      hints.push({ field: at(binding), message: `${column.glyph} needs a ${binding} binding` });
    }
  }
  return hints;
}

/** Pure state -> request translation; withholds the request on gaps. */
export function buildRequest(state: UiState): BuildResult {
  const hints: Hint[] = [];
  if (!state.dataset) hints.push({ field: "dataset", message: "choose a dataset" });
  if (!state.sortColumn) hints.push({ field: "sortColumn", message: "choose a sort column" });
  if (state.columns.length === 0) {
    hints.push({ field: "columns", message: "add at least one data column" });
  }
  state.columns.forEach((column, index) => hints.push(...columnHints(column, index)));
  if (hints.length > 0) return { ok: false, hints };

  return {
    ok: true,
    request: {
      dataset: state.dataset,
      spec: {
        sort: { column: state.sortColumn },
        direction: state.direction,
        shading: state.shading,
        columns: state.columns.map((column) => {
          const options = { ...column.options };
          // the span slider drives every scatter overlay that does not pin its own
          if (column.glyph === "scatter" && options["lowess_span"] === undefined) {
            options["lowess_span"] = state.span;
          }
          return {
            glyph: column.glyph,
            bindings: { ...column.bindings },
            reference_values: column.reference_values.map(
              (ref) => [...ref] as ReferenceValue,
            ),
            options,
            title: column.title,
          };
        }),
      },
    },
  };
}

export function encodeState(state: UiState): URLSearchParams {
  const params = new URLSearchParams();
  params.set("dataset", state.dataset);
  params.set("sort", state.sortColumn);
  params.set("dir", state.direction);
  params.set("shading", state.shading);
  // String(number) -> Number(string) is exact for every finite double
  params.set("span", String(state.span));
  for (const column of state.columns) {
    params.append("col", JSON.stringify(column));
  }
  return params;
}

function isStringRecord(value: unknown): value is Record<string, string> {
  return (
    typeof value === "object" &&
    value !== null &&
    !Array.isArray(value) &&
    Object.values(value).every((v) => typeof v === "string")
  );
}

function isOptionRecord(value: unknown): value is Record<string, OptionValue> {
  return (
    typeof value === "object" &&
    value !== null &&
    !Array.isArray(value) &&
    Object.values(value).every(
      (v) => typeof v === "string" || typeof v === "number" || typeof v === "boolean",
    )
  );
}

function isReference(value: unknown): value is ReferenceValue {
  return (
    Array.isArray(value) &&
    (value.length === 2 || value.length === 3) &&
    typeof value[0] === "number" &&
    typeof value[1] === "string" &&
    (value.length === 2 || typeof value[2] === "string")
  );
}

function decodeColumn(raw: string): ColumnConfig | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) return null;
  const doc = parsed as Record<string, unknown>;
  if (typeof doc["glyph"] !== "string") return null;
  if (!isStringRecord(doc["bindings"])) return null;
  if (!Array.isArray(doc["reference_values"]) || !doc["reference_values"].every(isReference)) {
    return null;
  }
  if (!isOptionRecord(doc["options"])) return null;
  if (typeof doc["title"] !== "string") return null;
  return {
    glyph: doc["glyph"],
    bindings: doc["bindings"],
    reference_values: doc["reference_values"],
    options: doc["options"],
    title: doc["title"],
  };
}

/** Inverse of encodeState; null when the query string is not a valid state. */
export function decodeState(params: URLSearchParams): UiState | null {
  const dataset = params.get("dataset");
  const sortColumn = params.get("sort");
  const direction = params.get("dir");
  const shading = params.get("shading");
  const span = params.get("span");
  if (dataset === null || sortColumn === null || direction === null) return null;
  if (direction !== "ascending" && direction !== "descending") return null;
  if (shading !== "current_group" && shading !== "cumulative") return null;
  if (span === null || span === "" || Number.isNaN(Number(span))) return null;
  const columns: ColumnConfig[] = [];
  for (const raw of params.getAll("col")) {
    const column = decodeColumn(raw);
    if (column === null) return null;
    columns.push(column);
  }
  return {
    dataset,
    sortColumn,
    direction,
    shading,
    span: Number(span),
    columns,
  };
}

/** Column metadata from GET /api/datasets, as far as the client needs it. */
export interface DatasetSummary {
  id: string;
  columns: Array<{ name: string; type: string; unit?: string }>;
  time_groups?: Record<string, string[]>;
}

/** First numeric column as sort plus one dot column over the same values. */
export function defaultState(summary: DatasetSummary): UiState {
  const numeric = summary.columns.find((c) => c.type === "number");
  const name = numeric ? numeric.name : "";
  return {
    dataset: summary.id,
    sortColumn: name,
    direction: "descending",
    shading: "current_group",
    span: SPAN_DEFAULT,
    columns: name
      ? [
          {
            glyph: "dot",
            bindings: { value: name },
            reference_values: [],
            options: {},
            title: name,
          },
        ]
      : [],
  };
}
