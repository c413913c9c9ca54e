/** Parsing and consistency checks for bracketed citation numbers.
 *
 * Annotated answers carry output numbers like "[1, 4-7]"; the reference
 * panel lists the same numbers. The console renders citations from these
 * segments and verifies the two sides agree (exactly, for fine grain).
 */

import type { References } from "./types.js";

const CITATION = /\[(\d+(?:\s*[,–-]\s*\d+)*)\]/g;

export interface AnswerSegment {
  kind: "text" | "citation";
  text: string;
  numbers: number[];
}

export function expandNumbers(body: string): number[] {
  const out = new Set<number>();
  for (const piece of body.split(",")) {
    const range = piece.match(/^\s*(\d+)\s*[–-]\s*(\d+)\s*$/);
    if (range) {
      const a = Math.min(Number(range[1]), Number(range[2]));
      const b = Math.max(Number(range[1]), Number(range[2]));
      for (let k = a; k <= b; k++) out.add(k);
    } else if (piece.trim().match(/^\d+$/)) {
      out.add(Number(piece.trim()));
    }
  }
  return [...out].sort((x, y) => x - y);
}

export function segmentAnswer(annotated: string): AnswerSegment[] {
  const segments: AnswerSegment[] = [];
  let cursor = 0;
  for (const match of annotated.matchAll(CITATION)) {
    const start = match.index ?? 0;
    if (start > cursor) {
      segments.push({ kind: "text", text: annotated.slice(cursor, start), numbers: [] });
    }
    segments.push({ kind: "citation", text: match[0], numbers: expandNumbers(match[1] ?? "") });
    cursor = start + match[0].length;
  }
  if (cursor < annotated.length) {
    segments.push({ kind: "text", text: annotated.slice(cursor), numbers: [] });
  }
  return segments;
}

export function citedNumbers(annotated: string): Set<number> {
  const out = new Set<number>();
  for (const segment of segmentAnswer(annotated)) {
    for (const n of segment.numbers) out.add(n);
  }
  return out;
}

export function panelNumbers(refs: References): Set<number> {
  const out = new Set<number>();
  for (const p of refs.primary) out.add(p.number);
  for (const s of refs.secondary) out.add(s.number);
  return out;
}

export interface ConsistencyReport {
  missingFromPanel: number[]; // cited in the answer, absent from the panel
  unusedInAnswer: number[]; // listed in the panel, never cited
}

export function checkConsistency(annotated: string, refs: References): ConsistencyReport {
  const cited = citedNumbers(annotated);
  const listed = panelNumbers(refs);
  return {
    missingFromPanel: [...cited].filter((n) => !listed.has(n)).sort((a, b) => a - b),
    unusedInAnswer: [...listed].filter((n) => !cited.has(n)).sort((a, b) => a - b),
  };
}
