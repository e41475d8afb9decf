import { getHealth, METHODS, type MethodName, type SearchRequest } from "./api.js";
import { clamp01, debounce } from "./debounce.js";
import { clearShared, highlightShared } from "./render.js";
import { SearchPanel } from "./panel.js";

// The page is served from /ui/ on the same origin as the API.
const BASE = "";

type UiState = {
    query: string;
    method: MethodName;
    compare: MethodName | "off";
    alphaQuery: number;
    mmrLambda: number;
    topK: number;
};

const state: UiState = {
    query: "",
    method: "rrf",
    compare: "off",
    alphaQuery: 0.95,
    mmrLambda: 0.7,
    topK: 10,
};

function byId<T extends HTMLElement>(id: string): T {
    const el = document.getElementById(id);
    if (!el) {
        throw new Error(`missing #${id}`);
    }
    return el as T;
}

const queryInput = byId<HTMLInputElement>("query");
const runButton = byId<HTMLButtonElement>("run");
const methodSelect = byId<HTMLSelectElement>("method-a");
const compareSelect = byId<HTMLSelectElement>("method-b");
const alphaSlider = byId<HTMLInputElement>("alpha");
const alphaOut = byId<HTMLOutputElement>("alpha-out");
const lambdaSlider = byId<HTMLInputElement>("lambda");
const lambdaOut = byId<HTMLOutputElement>("lambda-out");
const topkInput = byId<HTMLInputElement>("topk");
const corpusBadge = byId<HTMLElement>("corpus-badge");
const panelB = byId<HTMLElement>("panel-b");

const panels = {
    a: new SearchPanel(byId("panel-a"), BASE),
    b: new SearchPanel(panelB, BASE),
};

function requestFor(method: MethodName): SearchRequest {
    return {
        query: state.query,
        method,
        top_k: state.topK,
        alpha_query: state.alphaQuery,
        mmr_lambda: state.mmrLambda,
    };
}

function refreshHighlights(): void {
    if (state.compare !== "off" && panels.a.lastResponse && panels.b.lastResponse) {
        highlightShared(panels.a.resultsEl, panels.b.resultsEl);
    } else {
        clearShared([panels.a.resultsEl, panels.b.resultsEl]);
    }
}

panels.a.onRendered = refreshHighlights;
panels.b.onRendered = refreshHighlights;

function fire(): void {
    if (!state.query.trim()) {
        return;
    }
    void panels.a.run(requestFor(state.method));
    if (state.compare !== "off") {
        void panels.b.run(requestFor(state.compare));
    }
}

const debouncedFire = debounce(fire, 300);

function fireNow(): void {
    debouncedFire.cancel();
    fire();
}

queryInput.addEventListener("input", () => {
    state.query = queryInput.value;
    debouncedFire();
});
queryInput.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
        fireNow();
    }
});
runButton.addEventListener("click", fireNow);

methodSelect.addEventListener("change", () => {
    state.method = methodSelect.value as MethodName;
    fireNow();
});

compareSelect.addEventListener("change", () => {
    state.compare = compareSelect.value as MethodName | "off";
    panelB.classList.toggle("hidden", state.compare === "off");
    if (state.compare === "off") {
        clearShared([panels.a.resultsEl, panels.b.resultsEl]);
    } else {
        fireNow();
    }
});

alphaSlider.addEventListener("input", () => {
    state.alphaQuery = clamp01(Number(alphaSlider.value));
    alphaOut.value = state.alphaQuery.toFixed(2);
    debouncedFire();
});

lambdaSlider.addEventListener("input", () => {
    state.mmrLambda = clamp01(Number(lambdaSlider.value));
    lambdaOut.value = state.mmrLambda.toFixed(2);
    debouncedFire();
});

topkInput.addEventListener("change", () => {
    const k = Math.max(1, Math.min(100, Number(topkInput.value) || 10));
    state.topK = k;
    topkInput.value = String(k);
    fireNow();
});

async function init(): Promise<void> {
    for (const select of [methodSelect, compareSelect]) {
        for (const m of METHODS) {
            const opt = document.createElement("option");
            opt.value = m;
            opt.textContent = m;
            select.append(opt);
        }
    }
    methodSelect.value = state.method;
    compareSelect.value = "off";
    try {
        const health = await getHealth(BASE);
        corpusBadge.textContent =
            `${health.documents} docs, ${health.dense_dim}d dense, ${health.encoder} encoder`;
    } catch (err) {
        corpusBadge.textContent = err instanceof Error ? err.message : "service unreachable";
        corpusBadge.classList.add("error");
    }
}

void init();
