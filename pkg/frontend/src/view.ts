/** DOM shell: controls on the left, inline SVG on the right.
 *
 * The figure is injected as inline SVG (not an <img>) so row labels stay
 * selectable; all layout comes from the server, never recomputed here.
 * State lives in the URL query string for shareable views.
 */

import { ExplorerModel, ViewSnapshot } from "./model.js";
import {
  ColumnConfig,
  DatasetSummary,
  decodeState,
  defaultState,
  encodeState,
  SPAN_DEFAULT,
  SPAN_MAX,
  SPAN_MIN,
  SPAN_STEP,
  UiState,
} from "./state.js";

const GLYPHS = ["dot", "dot_ci", "arrow", "bar", "boxplot", "timeseries", "scatter"];

// dot_ci offers value+prse; lo/hi pairs stay a hand-edited-spec feature
const BINDINGS: Record<string, string[]> = {
  dot: ["value"],
  dot_ci: ["value", "prse"],
  arrow: ["from", "to"],
  bar: ["value"],
  boxplot: ["p10", "p25", "p50", "p75", "p90"],
  timeseries: ["group"],
  scatter: ["x", "y"],
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

function option(value: string, label = value): HTMLOptionElement {
  const node = el("option", { value }, label);
  return node;
}

export class ExplorerView {
  private readonly root: HTMLElement;
  private readonly model: ExplorerModel;
  private datasets: DatasetSummary[] = [];
  private state: UiState;

  private controls!: HTMLElement;
  private figure!: HTMLElement;
  private banner!: HTMLElement;
  private issueList!: HTMLElement;
  private retryButton!: HTMLButtonElement;

  constructor(root: HTMLElement, baseUrl = "") {
    this.root = root;
    this.state = {
      dataset: "",
      sortColumn: "",
      direction: "descending",
      shading: "current_group",
      span: SPAN_DEFAULT,
      columns: [],
    };
    this.model = new ExplorerModel({
      baseUrl,
      fetcher: (url, init) => fetch(url, init),
      onChange: (snapshot) => this.render(snapshot),
    });
    this.scaffold();
  }

  async start(): Promise<void> {
    const response = await fetch("/api/datasets");
    const all = (await response.json()) as Array<DatasetSummary & { error?: string }>;
    this.datasets = all.filter((d) => !("error" in d && d.error));
    const fromUrl = decodeState(new URLSearchParams(window.location.search));
    const first = this.datasets[0];
    if (fromUrl !== null) {
      this.state = fromUrl;
    } else if (first !== undefined) {
      this.state = defaultState(first);
    }
    this.rebuildControls();
    this.apply();
    window.addEventListener("popstate", () => {
      const decoded = decodeState(new URLSearchParams(window.location.search));
      if (decoded !== null) {
        this.state = decoded;
        this.rebuildControls();
        this.apply(false);
      }
    });
  }

  private apply(pushUrl = true): void {
    if (pushUrl) {
      const query = encodeState(this.state).toString();
      window.history.replaceState(null, "", `${window.location.pathname}?${query}`);
    }
    this.model.setState(JSON.parse(JSON.stringify(this.state)) as UiState);
  }

  private update(mutate: (state: UiState) => void): void {
    mutate(this.state);
    this.apply();
  }

  private scaffold(): void {
    this.root.replaceChildren();
    const layout = el("div", { class: "explorer" });
    this.controls = el("div", { class: "controls" });
    const stage = el("div", { class: "stage" });
    this.banner = el("div", { class: "banner", hidden: "hidden" });
    this.issueList = el("ul", { class: "issues" });
    this.retryButton = el("button", { class: "retry", hidden: "hidden" }, "Retry");
    this.retryButton.addEventListener("click", () => this.model.retry());
    this.figure = el("div", { class: "figure" });
    stage.append(this.banner, this.issueList, this.retryButton, this.figure);
    layout.append(this.controls, stage);
    this.root.append(layout);
  }

  private summary(): DatasetSummary | undefined {
    return this.datasets.find((d) => d.id === this.state.dataset);
  }

  private numericColumns(): string[] {
    const summary = this.summary();
    return summary ? summary.columns.filter((c) => c.type === "number").map((c) => c.name) : [];
  }

  private timeGroups(): string[] {
    const summary = this.summary();
    return summary && summary.time_groups ? Object.keys(summary.time_groups) : [];
  }

  private rebuildControls(): void {
    this.controls.replaceChildren();

    const datasetSelect = el("select", { "data-field": "dataset" });
    for (const d of this.datasets) datasetSelect.append(option(d.id));
    datasetSelect.value = this.state.dataset;
    datasetSelect.addEventListener("change", () => {
      const summary = this.datasets.find((d) => d.id === datasetSelect.value);
      if (summary) {
        this.state = defaultState(summary);
        this.rebuildControls();
        this.apply();
      }
    });
    this.controls.append(labelled("Dataset", datasetSelect));

    const sortSelect = el("select", { "data-field": "sortColumn" });
    for (const name of this.numericColumns()) sortSelect.append(option(name));
    sortSelect.value = this.state.sortColumn;
    sortSelect.addEventListener("change", () =>
      this.update((s) => {
        s.sortColumn = sortSelect.value;
      }),
    );
    this.controls.append(labelled("Sort by", sortSelect));

    const directionSelect = el("select", { "data-field": "direction" });
    directionSelect.append(option("descending"), option("ascending"));
    directionSelect.value = this.state.direction;
    directionSelect.addEventListener("change", () =>
      this.update((s) => {
        s.direction = directionSelect.value as UiState["direction"];
      }),
    );
    this.controls.append(labelled("Direction", directionSelect));

    const shadingSelect = el("select", { "data-field": "shading" });
    shadingSelect.append(option("current_group", "current group"), option("cumulative"));
    shadingSelect.value = this.state.shading;
    shadingSelect.addEventListener("change", () =>
      this.update((s) => {
        s.shading = shadingSelect.value as UiState["shading"];
      }),
    );
    this.controls.append(labelled("Map shading", shadingSelect));

    const span = el("input", {
      type: "range",
      min: String(SPAN_MIN),
      max: String(SPAN_MAX),
      step: String(SPAN_STEP),
      list: "span-ticks",
      "data-field": "span",
    });
    span.value = String(this.state.span);
    const ticks = el("datalist", { id: "span-ticks" });
    ticks.append(option(String(SPAN_DEFAULT), "default"));
    const spanValue = el("span", { class: "span-value" }, this.state.span.toFixed(2));
    const spanReset = el("button", { type: "button" }, "2/3");
    spanReset.addEventListener("click", () => {
      span.value = String(SPAN_DEFAULT);
      spanValue.textContent = SPAN_DEFAULT.toFixed(2);
      this.update((s) => {
        s.span = SPAN_DEFAULT;
      });
    });
    span.addEventListener("input", () => {
      spanValue.textContent = Number(span.value).toFixed(2);
      this.update((s) => {
        s.span = Number(span.value);
      });
    });
    const spanRow = labelled("Smoothing span", span);
    spanRow.append(spanValue, spanReset, ticks);
    this.controls.append(spanRow);

    const columnsBox = el("div", { class: "columns", "data-field": "columns" });
    this.state.columns.forEach((column, index) =>
      columnsBox.append(this.columnEditor(column, index)),
    );
    const add = el("button", { type: "button" }, "Add column");
    add.addEventListener("click", () => {
      const name = this.numericColumns()[0] ?? "";
      this.update((s) => {
        s.columns.push({
          glyph: "dot",
          bindings: name ? { value: name } : {},
          reference_values: [],
          options: {},
          title: name,
        });
      });
      this.rebuildControls();
    });
    this.controls.append(el("h3", {}, "Columns"), columnsBox, add);
  }

  private columnEditor(column: ColumnConfig, index: number): HTMLElement {
    const box = el("fieldset", { class: "column", "data-field": `columns[${index}].glyph` });
    box.append(el("legend", {}, `column ${index + 1}`));

    const glyphSelect = el("select");
    for (const glyph of GLYPHS) glyphSelect.append(option(glyph));
    glyphSelect.value = column.glyph;
    glyphSelect.addEventListener("change", () => {
      this.update((s) => {
        const target = s.columns[index];
        if (target) {
          target.glyph = glyphSelect.value;
          target.bindings = {};
        }
      });
      this.rebuildControls();
    });
    box.append(labelled("Glyph", glyphSelect));

    const choices =
      column.glyph === "timeseries" ? this.timeGroups() : this.numericColumns();
    for (const binding of BINDINGS[column.glyph] ?? []) {
      const select = el("select", {
        "data-field": `columns[${index}].bindings.${binding}`,
      });
      select.append(option("", "(unset)"));
      for (const name of choices) select.append(option(name));
      select.value = column.bindings[binding] ?? "";
      select.addEventListener("change", () =>
        this.update((s) => {
          const target = s.columns[index];
          if (!target) return;
          if (select.value) target.bindings[binding] = select.value;
          else delete target.bindings[binding];
        }),
      );
      box.append(labelled(binding, select));
    }

    const title = el("input", { type: "text", value: column.title });
    title.addEventListener("change", () =>
      this.update((s) => {
        const target = s.columns[index];
        if (target) target.title = title.value;
      }),
    );
    box.append(labelled("Title", title));

    const remove = el("button", { type: "button" }, "Remove");
    remove.addEventListener("click", () => {
      this.update((s) => {
        s.columns.splice(index, 1);
      });
      this.rebuildControls();
    });
    box.append(remove);
    return box;
  }

  private render(snapshot: ViewSnapshot): void {
    if (snapshot.svg !== null) {
      this.figure.innerHTML = snapshot.svg;
    }
    this.banner.hidden = !snapshot.stale;
    this.banner.textContent = snapshot.stale
      ? "Showing the previous figure; the current settings have not rendered."
      : "";
    this.retryButton.hidden = !snapshot.canRetry;

    this.issueList.replaceChildren();
    for (const issue of snapshot.issues) {
      this.issueList.append(el("li", { class: "issue" }, issue));
    }
    for (const hint of snapshot.hints) {
      this.issueList.append(el("li", { class: "hint" }, `${hint.field}: ${hint.message}`));
    }
    for (const node of Array.from(this.root.querySelectorAll(".hint-highlight"))) {
      node.classList.remove("hint-highlight");
    }
    for (const hint of snapshot.hints) {
      const target = this.root.querySelector(`[data-field="${hint.field}"]`);
      if (target) target.classList.add("hint-highlight");
    }
  }
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const row = el("label", { class: "row" });
  row.append(el("span", {}, text), control);
  return row;
}

export function mountExplorer(root: HTMLElement, baseUrl = ""): Promise<void> {
  return new ExplorerView(root, baseUrl).start();
}
