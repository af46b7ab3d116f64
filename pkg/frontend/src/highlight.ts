// Locate verified attribution excerpts inside the displayed abstract.
//
// The backend verifies excerpts against a whitespace-normalized copy of the
// abstract, so a match is found in normalized space and then mapped back to
// original character offsets; the UI marks those exact spans.

export interface Span {
  start: number; // inclusive, offsets into the ORIGINAL abstract
  end: number;   // exclusive
}

export interface Segment {
  text: string;
  marked: boolean;
}

interface NormalizedText {
  normalized: string;
  /** map[i] = index in the original text of normalized[i] */
  map: number[];
}

const QUOTES = new Set(['"', "'", "“", "”", "‘", "’", "`"]);

export function normalizeWithMap(text: string): NormalizedText {
  let normalized = "";
  const map: number[] = [];
  let pendingSpace = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i]!;
    if (/\s/.test(ch)) {
      if (normalized.length) pendingSpace = true;
      continue;
    }
    if (pendingSpace) {
      normalized += " ";
      map.push(i - 1);
      pendingSpace = false;
    }
    normalized += ch;
    map.push(i);
  }
  return { normalized, map };
}

export function normalizeExcerpt(excerpt: string): string {
  let text = excerpt.replace(/\s+/g, " ").trim();
  while (text.length && QUOTES.has(text[0]!)) text = text.slice(1).trim();
  while (text.length && QUOTES.has(text[text.length - 1]!)) text = text.slice(0, -1).trim();
  return text;
}

/** Spans of every excerpt occurrence in the abstract, merged and sorted.
 *  Excerpts that do not occur (unverified evidence) yield no span. */
export function excerptSpans(abstract: string, excerpts: string[]): Span[] {
  const { normalized, map } = normalizeWithMap(abstract);
  const spans: Span[] = [];
  for (const raw of excerpts) {
    const needle = normalizeExcerpt(raw);
    if (!needle) continue;
    const at = normalized.indexOf(needle);
    if (at === -1) continue;
    const start = map[at]!;
    const end = map[at + needle.length - 1]! + 1;
    spans.push({ start, end });
  }
  spans.sort((a, b) => a.start - b.start || a.end - b.end);
  const merged: Span[] = [];
  for (const span of spans) {
    const last = merged[merged.length - 1];
    if (last && span.start <= last.end) last.end = Math.max(last.end, span.end);
    else merged.push({ ...span });
  }
  return merged;
}

/** Split the abstract into alternating plain/marked segments for rendering. */
export function highlightSegments(abstract: string, excerpts: string[]): Segment[] {
  const spans = excerptSpans(abstract, excerpts);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const span of spans) {
    if (span.start > cursor) segments.push({ text: abstract.slice(cursor, span.start), marked: false });
    segments.push({ text: abstract.slice(span.start, span.end), marked: true });
    cursor = span.end;
  }
  if (cursor < abstract.length) segments.push({ text: abstract.slice(cursor), marked: false });
  return segments;
}
