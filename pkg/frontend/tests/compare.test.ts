import { describe, expect, it, vi } from "vitest";
import type { SearchResponse } from "../src/api.js";
import { SearchPanel } from "../src/panel.js";
import { highlightShared } from "../src/render.js";

function twoPanels(): [SearchPanel, SearchPanel, (ids: string[]) => Response] {
    const make = () => {
        const root = document.createElement("section");
        root.innerHTML =
            '<div class="status"></div><div class="banner"></div><ol class="results"></ol>';
        document.body.append(root);
        return root;
    };
    const body = (ids: string[]) =>
        ({
            ok: true,
            status: 200,
            json: async (): Promise<SearchResponse> => ({
                schema: "1",
                query: "q",
                method: "rrf",
                params: {},
                hits: ids.map((id, i) => ({
                    doc_id: id,
                    title: id,
                    abstract: "",
                    score: 1 - i * 0.05,
                    rank: i + 1,
                })),
                timing: {
                    encode_ms: 0,
                    retrieve_ms: 1,
                    fuse_ms: 0,
                    total_ms: 1,
                    index_queries: 1,
                },
                ild: 0.2,
            }),
        }) as unknown as Response;
    const a = new SearchPanel(
        make(),
        "",
        vi.fn(async () => body(["d1", "d2", "d3"])) as unknown as typeof fetch,
    );
    const b = new SearchPanel(
        make(),
        "",
        vi.fn(async () => body(["d3", "d9", "d1"])) as unknown as typeof fetch,
    );
    return [a, b, body];
}

describe("compare view", () => {
    it("links shared documents across both columns", async () => {
        const [a, b] = twoPanels();
        await a.run({ query: "q", method: "rrf" });
        await b.run({ query: "q", method: "proj" });
        const shared = highlightShared(a.resultsEl, b.resultsEl);
        expect([...shared].sort()).toEqual(["d1", "d3"]);
        expect(a.resultsEl.querySelectorAll(".shared")).toHaveLength(2);
        expect(b.resultsEl.querySelectorAll(".shared")).toHaveLength(2);
    });

    it("renders identical columns when both sides run the same response", async () => {
        const [a, b, body] = twoPanels();
        const same = vi.fn(async () => body(["d1", "d2"])) as unknown as typeof fetch;
        const dup1 = new SearchPanel(a.root, "", same);
        const dup2 = new SearchPanel(b.root, "", same);
        await dup1.run({ query: "q", method: "rrf" });
        await dup2.run({ query: "q", method: "rrf" });
        expect(dup1.resultsEl.innerHTML).toBe(dup2.resultsEl.innerHTML);
    });

    it("keeps one column alive when the other fails", async () => {
        const [a, b] = twoPanels();
        const broken = new SearchPanel(
            a.root,
            "",
            vi.fn(async () => {
                throw new TypeError("fetch failed");
            }) as unknown as typeof fetch,
        );
        await Promise.all([
            broken.run({ query: "q", method: "rrf" }),
            b.run({ query: "q", method: "proj" }),
        ]);
        expect(broken.bannerEl.classList.contains("active")).toBe(true);
        expect(b.resultsEl.querySelectorAll(".hit")).toHaveLength(3);
        expect(b.bannerEl.classList.contains("active")).toBe(false);
    });
});
