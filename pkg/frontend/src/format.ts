/** Presentation helpers; formatting only, never computation. */

import type { Sourced } from "./provenance.js";

export function riskBadgeText(risk: Sourced<number>): string {
  return risk.value.toFixed(4);
}

export function probabilityText(p: Sourced<number | null> | Sourced<number>): string {
  return p.value === null ? "n/a" : (p.value as number).toFixed(4);
}

export function countText(n: Sourced<number>): string {
  return n.value.toLocaleString("en-US");
}
