import { postSearch, type SearchRequest, type SearchResponse } from "./api.js";
import { clearBanner, renderBanner, renderResults, renderStatus } from "./render.js";

type FetchFn = typeof fetch;

/**
 * One result panel: issues searches and renders into its container.
 *
 * Concurrency contract: at most one request is in flight per panel.
 * Starting a new search aborts the previous request, and a response is
 * rendered only if it belongs to the most recent search, so rapid
 * parameter changes always end with the final request's results on
 * screen regardless of arrival order.
 */
export class SearchPanel {
    readonly statusEl: HTMLElement;
    readonly bannerEl: HTMLElement;
    readonly resultsEl: HTMLElement;
    lastResponse: SearchResponse | null = null;
    onRendered: (() => void) | null = null;

    private seq = 0;
    private controller: AbortController | null = null;
    private lastRequest: SearchRequest | null = null;

    constructor(
        readonly root: HTMLElement,
        private readonly base: string,
        private readonly fetchFn?: FetchFn,
    ) {
        this.statusEl = mustFind(root, ".status");
        this.bannerEl = mustFind(root, ".banner");
        this.resultsEl = mustFind(root, ".results");
    }

    async run(req: SearchRequest): Promise<void> {
        const ticket = ++this.seq;
        this.controller?.abort();
        const controller = new AbortController();
        this.controller = controller;
        this.lastRequest = req;
        this.root.classList.add("busy");
        try {
            const resp = await postSearch(this.base, req, {
                signal: controller.signal,
                fetchFn: this.fetchFn,
            });
            if (ticket !== this.seq) {
                return; // a newer search superseded this one
            }
            this.lastResponse = resp;
            clearBanner(this.bannerEl);
            renderStatus(this.statusEl, resp);
            renderResults(this.resultsEl, resp);
            this.onRendered?.();
        } catch (err) {
            if (ticket !== this.seq || (err as Error).name === "AbortError") {
                return;
            }
            this.lastResponse = null;
            this.resultsEl.innerHTML = "";
            this.statusEl.innerHTML = "";
            const message = err instanceof Error ? err.message : String(err);
            renderBanner(this.bannerEl, message, () => void this.retry());
        } finally {
            if (ticket === this.seq) {
                this.root.classList.remove("busy");
            }
        }
    }

    async retry(): Promise<void> {
        if (this.lastRequest) {
            await this.run(this.lastRequest);
        }
    }
}

function mustFind(root: HTMLElement, selector: string): HTMLElement {
    const el = root.querySelector<HTMLElement>(selector);
    if (!el) {
        throw new Error(`panel root is missing ${selector}`);
    }
    return el;
}
