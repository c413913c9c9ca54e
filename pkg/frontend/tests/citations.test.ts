import { describe, expect, it } from "vitest";

import {
  checkConsistency,
  citedNumbers,
  expandNumbers,
  panelNumbers,
  segmentAnswer,
} from "../src/citations.js";
import type { References } from "../src/types.js";

describe("expandNumbers", () => {
  it("expands ranges inclusively", () => {
    expect(expandNumbers("2-5")).toEqual([2, 3, 4, 5]);
  });

  it("splits comma lists", () => {
    expect(expandNumbers("3, 9")).toEqual([3, 9]);
  });

  it("handles mixed lists and ranges", () => {
    expect(expandNumbers("1, 8, 10-12")).toEqual([1, 8, 10, 11, 12]);
  });

  it("accepts en-dash ranges", () => {
    expect(expandNumbers("2–4")).toEqual([2, 3, 4]);
  });

  it("deduplicates overlaps", () => {
    expect(expandNumbers("2-4, 3")).toEqual([2, 3, 4]);
  });
});

describe("segmentAnswer", () => {
  it("splits text and citation segments in order", () => {
    const segments = segmentAnswer("Claim one [1, 4]. Claim two [2-3].");
    expect(segments.map((s) => s.kind)).toEqual(["text", "citation", "text", "citation", "text"]);
    expect(segments[1]?.numbers).toEqual([1, 4]);
    expect(segments[3]?.numbers).toEqual([2, 3]);
  });

  it("returns a single text segment when no citations exist", () => {
    const segments = segmentAnswer("No citations at all.");
    expect(segments).toHaveLength(1);
    expect(segments[0]?.kind).toBe("text");
  });

  it("reassembles to the original string", () => {
    const annotated = "Alpha [1]. Beta [2-5, 9]. Gamma.";
    const joined = segmentAnswer(annotated)
      .map((s) => s.text)
      .join("");
    expect(joined).toBe(annotated);
  });
});

const REFS: References = {
  primary: [
    { number: 1, doc_id: "a", title: "Alpha" },
    { number: 2, doc_id: "b", title: "Beta" },
  ],
  secondary: [
    { number: 3, raw: "Entry three", doc_id: "a" },
    { number: 4, raw: "Entry four", doc_id: "b" },
  ],
};

describe("consistency", () => {
  it("collects cited and panel numbers", () => {
    expect([...citedNumbers("x [1] y [3-4]")]).toEqual([1, 3, 4]);
    expect([...panelNumbers(REFS)]).toEqual([1, 2, 3, 4]);
  });

  it("reports a consistent fine-grain payload as clean", () => {
    const report = checkConsistency("a [1, 3] b [2, 4]", REFS);
    expect(report.missingFromPanel).toEqual([]);
    expect(report.unusedInAnswer).toEqual([]);
  });

  it("flags citations missing from the panel", () => {
    const report = checkConsistency("a [1, 7]", REFS);
    expect(report.missingFromPanel).toEqual([7]);
    expect(report.unusedInAnswer).toEqual([2, 3, 4]);
  });
});
