/**
 * Presentation-level shaping of response data: layer tables from trace
 * spans, fused-layer matching for side-by-side deltas, and stable
 * number formatting. No request-side computation happens here; every
 * rendered number is a response field or a fixed-format view of one.
 */

import type { TraceSpan } from "./types.js";

export interface LayerRow {
  name: string;
  durationNs: number;
  fusedOf: string[];
  libraryCalls: { name: string; durationNs: number }[];
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function nsToMs(ns: number): string {
  return (ns / 1e6).toFixed(2);
}

function fusedTag(span: TraceSpan): string[] {
  const tag = span.tags["fused_of"];
  if (Array.isArray(tag)) return tag.map(String);
  if (typeof tag === "string") {
    return tag
      .split(",")
      .map((part) => part.trim())
      .filter((part) => part.length > 0);
  }
  return [];
}

/** Per-layer rows (layer-level spans with their library children). */
export function layerRows(spans: TraceSpan[]): LayerRow[] {
  const rows: LayerRow[] = [];
  for (const span of spans) {
    if (span.level !== "layer") continue;
    const libraryCalls = spans
      .filter((child) => child.parent_id === span.span_id && child.level === "library")
      .map((child) => ({ name: child.name, durationNs: child.end_ns - child.start_ns }));
    rows.push({
      name: span.name,
      durationNs: span.end_ns - span.start_ns,
      fusedOf: fusedTag(span),
      libraryCalls,
    });
  }
  return rows;
}

export interface ComparisonRow {
  layer: string;
  aNs: number | null;
  bNs: number | null;
  deltaNs: number | null;
  fused: boolean;
  matched: boolean;
}

function atoms(row: LayerRow): string[] {
  return row.fusedOf.length > 0 ? row.fusedOf : [row.name];
}

/**
 * Match layer rows by name, expanding fusion tags: a fused kernel row
 * compares against the sum of the rows covering its logical layers on
 * the other side. Deltas are a - b; one-sided rows are flagged.
 */
export function compareLayers(a: LayerRow[], b: LayerRow[]): ComparisonRow[] {
  const atomToB = new Map<string, number>();
  b.forEach((row, index) => {
    for (const atom of atoms(row)) {
      if (!atomToB.has(atom)) atomToB.set(atom, index);
    }
  });

  const rows: ComparisonRow[] = [];
  const usedB = new Set<number>();
  for (const row of a) {
    const matches = [...new Set(atoms(row).flatMap((atom) => {
      const hit = atomToB.get(atom);
      return hit === undefined ? [] : [hit];
    }))].sort((x, y) => x - y);
    if (matches.length === 0) {
      rows.push({
        layer: row.name, aNs: row.durationNs, bNs: null, deltaNs: null,
        fused: row.fusedOf.length > 0, matched: false,
      });
      continue;
    }
    matches.forEach((index) => usedB.add(index));
    const bRows = matches.map((index) => b[index]!);
    const bTotal = bRows.reduce((sum, candidate) => sum + candidate.durationNs, 0);
    const labelAtoms = [...atoms(row)];
    for (const bRow of bRows) {
      for (const atom of atoms(bRow)) {
        if (!labelAtoms.includes(atom)) labelAtoms.push(atom);
      }
    }
    const fused = row.fusedOf.length > 0 || bRows.some((candidate) => candidate.fusedOf.length > 0);
    rows.push({
      layer: fused ? labelAtoms.join("+") : row.name,
      aNs: row.durationNs,
      bNs: bTotal,
      deltaNs: row.durationNs - bTotal,
      fused,
      matched: true,
    });
  }
  b.forEach((row, index) => {
    if (!usedB.has(index)) {
      rows.push({
        layer: row.name, aNs: null, bNs: row.durationNs, deltaNs: null,
        fused: row.fusedOf.length > 0, matched: false,
      });
    }
  });
  return rows;
}

/** Human label for a pipeline-overrides map, stable ordering. */
export function overridesLabel(overrides: Record<string, Record<string, unknown>>): string {
  const parts: string[] = [];
  for (const kind of Object.keys(overrides).sort()) {
    const params = overrides[kind]!;
    for (const key of Object.keys(params).sort()) {
      parts.push(`${kind}.${key}=${String(params[key])}`);
    }
  }
  return parts.length > 0 ? parts.join(",") : "baseline";
}
