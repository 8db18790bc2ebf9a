/** Fetch orchestration for the explorer: debounce, cancellation, retention.
 *
 * One in-flight render at a time; a newer state change aborts or outruns the
 * older request and late responses are dropped by sequence number.  The last
 * good figure is never discarded on failure: validation issues and network
 * errors overlay it (marked stale) so the user keeps their bearings.
 */

import { buildRequest, Hint, UiState } from "./state.js";

export interface ResponseLike {
  status: number;
  text(): Promise<string>;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init: {
    method: string;
    headers: Record<string, string>;
    body: string;
    signal?: AbortSignal;
  },
) => Promise<ResponseLike>;

export type ViewStatus = "empty" | "pending" | "ready" | "invalid" | "error";

export interface ViewSnapshot {
  status: ViewStatus;
  /** Last successfully rendered figure; survives later failures. */
  svg: string | null;
  /** True when the shown figure no longer matches the current state. */
  stale: boolean;
  /** Server validation issues (422 body) for the current state. */
  issues: string[];
  /** Incomplete-state fields to highlight; request was withheld. */
  hints: Hint[];
  /** True after a network failure; retry() re-issues the request. */
  canRetry: boolean;
}

export interface ExplorerOptions {
  fetcher: FetchLike;
  onChange?: (snapshot: ViewSnapshot) => void;
  baseUrl?: string;
  debounceMs?: number;
}

const INITIAL: ViewSnapshot = {
  status: "empty",
  svg: null,
  stale: false,
  issues: [],
  hints: [],
  canRetry: false,
};

export class ExplorerModel {
  private readonly fetcher: FetchLike;
  private readonly onChange: (snapshot: ViewSnapshot) => void;
  private readonly baseUrl: string;
  private readonly debounceMs: number;

  private snap: ViewSnapshot = { ...INITIAL };
  private state: UiState | null = null;
  private stateKey = "";
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;
  private seq = 0;

  constructor(options: ExplorerOptions) {
    this.fetcher = options.fetcher;
    this.onChange = options.onChange ?? (() => undefined);
    this.baseUrl = options.baseUrl ?? "";
    this.debounceMs = options.debounceMs ?? 250;
  }

  get snapshot(): ViewSnapshot {
    return { ...this.snap, issues: [...this.snap.issues], hints: [...this.snap.hints] };
  }

  /** Debounced; a state identical to the current one never refetches. */
  setState(next: UiState): void {
    const key = JSON.stringify(next);
    if (key === this.stateKey) return;
    this.state = next;
    this.stateKey = key;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire();
    }, this.debounceMs);
  }

  /** Re-issue the current state immediately (after a network failure). */
  retry(): void {
    if (this.state === null) return;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.fire();
  }

  private publish(changes: Partial<ViewSnapshot>): void {
    this.snap = { ...this.snap, ...changes };
    this.onChange(this.snapshot);
  }

  private fire(): void {
    if (this.state === null) return;
    const built = buildRequest(this.state);
    if (!built.ok) {
      // incomplete state: no network call, highlight the gaps
      this.controller?.abort();
      this.controller = null;
      this.seq += 1;
      this.publish({
        status: "invalid",
        hints: built.hints,
        issues: [],
        stale: this.snap.svg !== null,
        canRetry: false,
      });
      return;
    }

    const seq = ++this.seq;
    this.controller?.abort();
    const controller = typeof AbortController === "undefined" ? null : new AbortController();
    this.controller = controller;
    this.publish({ status: "pending", hints: [], canRetry: false });

    this.fetcher(`${this.baseUrl}/api/render`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(built.request),
      signal: controller?.signal,
    }).then(
      async (response) => {
        if (seq !== this.seq) return; // superseded; drop silently
        if (response.status === 200) {
          const svg = await response.text();
          if (seq !== this.seq) return;
          this.publish({ status: "ready", svg, stale: false, issues: [], canRetry: false });
          return;
        }
        if (response.status === 422) {
          const body = (await response.json().catch(() => ({}))) as { issues?: unknown };
          if (seq !== this.seq) return;
          const issues = Array.isArray(body.issues) ? body.issues.map(String) : [];
          this.publish({
            status: "invalid",
            issues,
            stale: this.snap.svg !== null,
            canRetry: false,
          });
          return;
        }
        this.publish({
          status: "error",
          issues: [`render request failed with status ${response.status}`],
          stale: this.snap.svg !== null,
          canRetry: true,
        });
      },
      () => {
        if (seq !== this.seq) return; // aborted by a newer request
        this.publish({
          status: "error",
          issues: ["could not reach the render service"],
          stale: this.snap.svg !== null,
          canRetry: true,
        });
      },
    );
  }
}
