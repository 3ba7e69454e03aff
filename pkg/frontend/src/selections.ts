/** Per-round selection buffer with client-side disclosure-budget enforcement.
 *
 * The wire payload is always exactly what the user selected: this class never
 * invents, reorders, or clamps values, it only refuses to go over budget.
 */

import type { Relevance } from "./types.js";

export class RoundSelections {
  private values: Relevance[];

  constructor(readonly nAttrs: number, readonly budget: number) {
    if (nAttrs < 1) throw new Error("nAttrs must be >= 1");
    if (budget < 0) throw new Error("budget must be >= 0");
    this.values = new Array<Relevance>(nAttrs).fill(0);
  }

  get(index: number): Relevance {
    this.checkIndex(index);
    return this.values[index];
  }

  /** Apply a selection; returns false (unchanged) if it would exceed budget. */
  set(index: number, value: Relevance): boolean {
    this.checkIndex(index);
    if (value !== 0 && this.values[index] === 0 && this.nonzeroCount() >= this.budget) {
      return false;
    }
    this.values[index] = value;
    return true;
  }

  /** Cycle skip -> same -> different -> skip, honoring the budget. */
  cycle(index: number): boolean {
    const order: Relevance[] = [0, 1, -1];
    const next = order[(order.indexOf(this.get(index)) + 1) % order.length];
    return this.set(index, next);
  }

  nonzeroCount(): number {
    return this.values.filter((v) => v !== 0).length;
  }

  remaining(): number {
    return this.budget - this.nonzeroCount();
  }

  /** True exactly when the server would accept this vector. */
  withinBudget(): boolean {
    return this.nonzeroCount() <= this.budget;
  }

  /** The exact array sent over the wire. */
  payload(): number[] {
    return this.values.slice();
  }

  reset(): void {
    this.values.fill(0);
  }

  private checkIndex(index: number): void {
    if (!Number.isInteger(index) || index < 0 || index >= this.nAttrs) {
      throw new Error(`attribute index ${index} out of range 0..${this.nAttrs - 1}`);
    }
  }
}
