import { describe, expect, it } from "vitest";

import { RoundSelections } from "../src/selections.js";
import type { Relevance } from "../src/types.js";

// small deterministic PRNG so the randomized checks are reproducible
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("RoundSelections", () => {
  it("starts all-skip and within budget", () => {
    const s = new RoundSelections(10, 4);
    expect(s.nonzeroCount()).toBe(0);
    expect(s.withinBudget()).toBe(true);
    expect(s.payload()).toEqual(new Array(10).fill(0));
  });

  it("accepts selections up to the budget and blocks the next one", () => {
    const s = new RoundSelections(8, 3);
    expect(s.set(0, 1)).toBe(true);
    expect(s.set(1, -1)).toBe(true);
    expect(s.set(2, 1)).toBe(true);
    expect(s.set(3, 1)).toBe(false); // over budget: rejected, unchanged
    expect(s.get(3)).toBe(0);
    expect(s.nonzeroCount()).toBe(3);
    expect(s.withinBudget()).toBe(true);
  });

  it("lets a selected entry flip sign without consuming budget", () => {
    const s = new RoundSelections(4, 1);
    expect(s.set(2, 1)).toBe(true);
    expect(s.set(2, -1)).toBe(true);
    expect(s.get(2)).toBe(-1);
    expect(s.nonzeroCount()).toBe(1);
  });

  it("frees budget when an entry is skipped again", () => {
    const s = new RoundSelections(4, 1);
    s.set(0, 1);
    expect(s.set(1, 1)).toBe(false);
    s.set(0, 0);
    expect(s.set(1, 1)).toBe(true);
  });

  it("cycles skip -> same -> different -> skip", () => {
    const s = new RoundSelections(2, 2);
    s.cycle(0);
    expect(s.get(0)).toBe(1);
    s.cycle(0);
    expect(s.get(0)).toBe(-1);
    s.cycle(0);
    expect(s.get(0)).toBe(0);
  });

  it("zero budget blocks every disclosure but allows skip", () => {
    const s = new RoundSelections(5, 0);
    expect(s.set(0, 1)).toBe(false);
    expect(s.set(0, 0)).toBe(true);
    expect(s.withinBudget()).toBe(true);
  });

  it("rejects out-of-range indices", () => {
    const s = new RoundSelections(3, 3);
    expect(() => s.get(3)).toThrow();
    expect(() => s.set(-1, 1)).toThrow();
  });

  it("payload is a copy, not a live view", () => {
    const s = new RoundSelections(3, 3);
    const before = s.payload();
    s.set(1, -1);
    expect(before).toEqual([0, 0, 0]);
  });

  it("never exceeds budget under random interaction (boundary mirror)", () => {
    for (let seed = 1; seed <= 30; seed++) {
      const rand = mulberry32(seed);
      const nAttrs = 1 + Math.floor(rand() * 40);
      const budget = Math.floor(rand() * (nAttrs + 1));
      const s = new RoundSelections(nAttrs, budget);
      for (let step = 0; step < 200; step++) {
        const index = Math.floor(rand() * nAttrs);
        const value = ([-1, 0, 1] as Relevance[])[Math.floor(rand() * 3)];
        s.set(index, value);
        expect(s.nonzeroCount()).toBeLessThanOrEqual(budget);
      }
      // the exact boundary count is reachable
      s.reset();
      for (let i = 0; i < budget; i++) expect(s.set(i, 1)).toBe(true);
      expect(s.nonzeroCount()).toBe(budget);
      if (budget < nAttrs) expect(s.set(budget, 1)).toBe(false);
    }
  });
});
