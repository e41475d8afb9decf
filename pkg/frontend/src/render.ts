import type { SearchResponse } from "./api.js";

// All rendering goes through the container's own document, so these
// functions work in the page and under a constructed DOM in tests.

export function renderResults(container: HTMLElement, resp: SearchResponse): void {
    const doc = container.ownerDocument;
    container.innerHTML = "";
    // Hits are appended in response order, never sorted or filtered
    // client-side: the list on screen is exactly what the service ranked.
    for (const hit of resp.hits) {
        const item = doc.createElement("li");
        item.className = "hit";
        item.dataset.docId = hit.doc_id;

        const head = doc.createElement("div");
        head.className = "hit-head";

        const rank = doc.createElement("span");
        rank.className = "rank";
        rank.textContent = String(hit.rank);

        const title = doc.createElement("span");
        title.className = "title";
        title.textContent = hit.title || hit.doc_id;

        const score = doc.createElement("span");
        score.className = "score";
        score.textContent = hit.score.toFixed(4);

        head.append(rank, title, score);
        item.append(head);

        if (hit.abstract) {
            const snippet = doc.createElement("p");
            snippet.className = "snippet";
            snippet.textContent = hit.abstract;
            item.append(snippet);
        }
        container.append(item);
    }
    if (resp.hits.length === 0) {
        const empty = doc.createElement("li");
        empty.className = "empty";
        empty.textContent = "no results";
        container.append(empty);
    }
}

export function renderStatus(el: HTMLElement, resp: SearchResponse): void {
    const doc = el.ownerDocument;
    el.innerHTML = "";
    const badges: [string, string][] = [
        ["method", resp.method],
        ["latency", `${resp.timing.total_ms.toFixed(1)} ms`],
        ["index queries", String(resp.timing.index_queries)],
        ["ILD@10", resp.ild === null ? "n/a" : resp.ild.toFixed(3)],
    ];
    for (const [label, value] of badges) {
        const badge = doc.createElement("span");
        badge.className = "badge";
        const name = doc.createElement("small");
        name.textContent = label;
        const val = doc.createElement("b");
        val.textContent = value;
        badge.append(name, val);
        el.append(badge);
    }
}

export function renderBanner(el: HTMLElement, message: string, onRetry: () => void): void {
    const doc = el.ownerDocument;
    el.innerHTML = "";
    const text = doc.createElement("span");
    text.textContent = message;
    const retry = doc.createElement("button");
    retry.textContent = "retry";
    retry.addEventListener("click", onRetry);
    el.append(text, retry);
    el.classList.add("active");
}

export function clearBanner(el: HTMLElement): void {
    el.innerHTML = "";
    el.classList.remove("active");
}

// Mark documents that appear in both result lists. Previous marks are
// cleared first so toggling compare off and on never leaves stale
// highlights. Returns the shared ids, which the caller may ignore.
export function highlightShared(a: HTMLElement, b: HTMLElement): Set<string> {
    const idsOf = (root: HTMLElement) => {
        const out = new Set<string>();
        root.querySelectorAll<HTMLElement>("[data-doc-id]").forEach((el) => {
            out.add(el.dataset.docId ?? "");
        });
        return out;
    };
    const inA = idsOf(a);
    const inB = idsOf(b);
    const shared = new Set<string>();
    for (const id of inA) {
        if (inB.has(id)) {
            shared.add(id);
        }
    }
    for (const root of [a, b]) {
        root.querySelectorAll<HTMLElement>("[data-doc-id]").forEach((el) => {
            el.classList.toggle("shared", shared.has(el.dataset.docId ?? ""));
        });
    }
    return shared;
}

export function clearShared(roots: HTMLElement[]): void {
    for (const root of roots) {
        root.querySelectorAll(".shared").forEach((el) => el.classList.remove("shared"));
    }
}
