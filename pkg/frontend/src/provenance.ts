/**
 * Provenance-tracked display values.
 *
 * The console performs no statistical arithmetic: every number shown on
 * screen is wrapped in a `Sourced` carrying the request-log entry and
 * JSON path it was read from. Tests replay the log and check that each
 * displayed value is byte-identical to the recorded response field.
 */

export interface Source {
  requestId: number;
  path: string;
}

export interface Sourced<T> {
  value: T;
  source: Source;
}

export interface RequestLogEntry {
  id: number;
  method: string;
  path: string;
  body: unknown;
  status: number;
  response: unknown;
}

/** Resolve a dotted/indexed path like "pairwise.0.measured_risk". */
export function resolvePath(obj: unknown, path: string): unknown {
  if (path === "") return obj;
  let cur: unknown = obj;
  for (const part of path.split(".")) {
    if (cur === null || cur === undefined) return undefined;
    cur = (cur as Record<string, unknown>)[part];
  }
  return cur;
}

export function sourced<T>(entry: RequestLogEntry, path: string): Sourced<T> {
  const value = resolvePath(entry.response, path);
  if (value === undefined) {
    throw new Error(`response ${entry.id} has nothing at '${path}'`);
  }
  return { value: value as T, source: { requestId: entry.id, path } };
}

export function isSourced(x: unknown): x is Sourced<unknown> {
  return (
    typeof x === "object" &&
    x !== null &&
    "value" in x &&
    "source" in x &&
    typeof (x as Sourced<unknown>).source === "object"
  );
}

/**
 * Walk a view model and verify that every Sourced leaf matches the
 * request log. Returns the number of values checked; throws on any
 * mismatch or dangling source.
 */
export function verifyProvenance(view: unknown, log: RequestLogEntry[]): number {
  const byId = new Map(log.map((e) => [e.id, e]));
  let checked = 0;
  const walk = (node: unknown): void => {
    if (node === null || typeof node !== "object") return;
    if (isSourced(node)) {
      const entry = byId.get(node.source.requestId);
      if (!entry) throw new Error(`no request ${node.source.requestId} in the log`);
      const recorded = resolvePath(entry.response, node.source.path);
      if (JSON.stringify(recorded) !== JSON.stringify(node.value)) {
        throw new Error(
          `displayed value at ${node.source.path} of request ${node.source.requestId} ` +
            `diverges from the recorded response: ${JSON.stringify(node.value)} vs ` +
            JSON.stringify(recorded),
        );
      }
      checked += 1;
      return;
    }
    for (const v of Array.isArray(node) ? node : Object.values(node)) walk(v);
  };
  walk(view);
  return checked;
}
