import { describe, expect, it } from "vitest";

import { excerptSpans, highlightSegments, normalizeExcerpt, normalizeWithMap } from "../src/highlight.js";

const ABSTRACT = "Sharded nearest neighbor search scales cosine retrieval.\n"
  + "Exact merges keep  ranking reproducible.";

describe("normalizeWithMap", () => {
  it("collapses whitespace and maps back to original offsets", () => {
    const { normalized, map } = normalizeWithMap("a  b\n c");
    expect(normalized).toBe("a b c");
    expect(map.length).toBe(normalized.length);
    expect("a  b\n c"[map[0]!]).toBe("a");
    expect("a  b\n c"[map[2]!]).toBe("b");
    expect("a  b\n c"[map[4]!]).toBe("c");
  });
});

describe("excerptSpans", () => {
  it("span slices back to the excerpt text modulo whitespace", () => {
    const excerpt = "Exact merges keep ranking reproducible.";
    const spans = excerptSpans(ABSTRACT, [excerpt]);
    expect(spans).toHaveLength(1);
    const sliced = ABSTRACT.slice(spans[0]!.start, spans[0]!.end);
    expect(sliced.replace(/\s+/g, " ")).toBe(excerpt);
  });

  it("offsets align with substring positions", () => {
    const spans = excerptSpans(ABSTRACT, ["cosine retrieval."]);
    expect(spans).toHaveLength(1);
    expect(ABSTRACT.slice(spans[0]!.start, spans[0]!.end)).toBe("cosine retrieval.");
    expect(ABSTRACT.indexOf("cosine retrieval.")).toBe(spans[0]!.start);
  });

  it("quoted excerpts match like the backend verifier", () => {
    expect(normalizeExcerpt('"Exact merges keep ranking reproducible."'))
      .toBe("Exact merges keep ranking reproducible.");
    expect(excerptSpans(ABSTRACT, ['"cosine retrieval."'])).toHaveLength(1);
  });

  it("fabricated excerpts yield no span", () => {
    expect(excerptSpans(ABSTRACT, ["Not present anywhere."])).toHaveLength(0);
  });

  it("overlapping excerpts merge", () => {
    const spans = excerptSpans(ABSTRACT, ["nearest neighbor search", "neighbor search scales"]);
    expect(spans).toHaveLength(1);
    expect(ABSTRACT.slice(spans[0]!.start, spans[0]!.end)).toBe("nearest neighbor search scales");
  });
});

describe("highlightSegments", () => {
  it("segments concatenate to the original abstract", () => {
    const segments = highlightSegments(ABSTRACT, ["cosine retrieval.", "Exact merges"]);
    expect(segments.map((s) => s.text).join("")).toBe(ABSTRACT);
    const marked = segments.filter((s) => s.marked).map((s) => s.text);
    expect(marked).toEqual(["cosine retrieval.", "Exact merges"]);
  });

  it("no excerpts means one unmarked segment", () => {
    expect(highlightSegments(ABSTRACT, [])).toEqual([{ text: ABSTRACT, marked: false }]);
  });
});
