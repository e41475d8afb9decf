// Typed client for the search service. Every call is a fresh request:
// no caching anywhere, so each response is a real latency measurement.

export type MethodName = "sparse" | "dense" | "rrf" | "rrf_mmr" | "proj" | "proj_mmr";

export const METHODS: MethodName[] = ["sparse", "dense", "rrf", "rrf_mmr", "proj", "proj_mmr"];

export type SearchRequest = {
    query: string;
    method: MethodName;
    top_k?: number;
    candidate_k?: number;
    alpha_query?: number;
    alpha_hyb?: number | null;
    mmr_lambda?: number;
};

export type Hit = {
    doc_id: string;
    title: string;
    abstract: string;
    score: number;
    rank: number;
};

export type SearchResponse = {
    schema: string;
    query: string | null;
    method: MethodName;
    params: Record<string, unknown>;
    hits: Hit[];
    timing: {
        encode_ms: number;
        retrieve_ms: number;
        fuse_ms: number;
        total_ms: number;
        index_queries: number;
    };
    ild: number | null;
};

export type HealthInfo = {
    schema: string;
    status: string;
    methods: MethodName[];
    documents: number;
    documents_fused: number;
    dense_dim: number;
    vocab_dim: number;
    projection_seed: number;
    encoder: string;
};

export class ApiError extends Error {
    constructor(public readonly status: number, detail: string) {
        super(detail);
        this.name = "ApiError";
    }
}

type FetchFn = typeof fetch;

async function errorDetail(resp: Response): Promise<string> {
    try {
        const body = await resp.json();
        if (typeof body?.detail === "string") {
            return body.detail;
        }
        if (Array.isArray(body?.detail)) {
            // FastAPI validation errors arrive as a list of objects.
            return body.detail.map((d: { msg?: string }) => d.msg ?? JSON.stringify(d)).join("; ");
        }
    } catch {
        // fall through to the generic message
    }
    return `request failed with status ${resp.status}`;
}

export async function postSearch(
    base: string,
    req: SearchRequest,
    opts: { signal?: AbortSignal; fetchFn?: FetchFn } = {},
): Promise<SearchResponse> {
    const fetchFn = opts.fetchFn ?? fetch;
    const resp = await fetchFn(`${base}/search`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        cache: "no-store",
        body: JSON.stringify(req),
        signal: opts.signal,
    });
    if (!resp.ok) {
        throw new ApiError(resp.status, await errorDetail(resp));
    }
    return (await resp.json()) as SearchResponse;
}

export async function getHealth(base: string, fetchFn: FetchFn = fetch): Promise<HealthInfo> {
    const resp = await fetchFn(`${base}/health`, { cache: "no-store" });
    if (!resp.ok) {
        throw new ApiError(resp.status, await errorDetail(resp));
    }
    return (await resp.json()) as HealthInfo;
}
