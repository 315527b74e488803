/**
 * Client-side mirror of the version-constraint grammar, for inline
 * validation in the composer. Semantics match the runtime: clauses
 * joined by "and", operators = >= <= > < ^ ~ (plus the unicode
 * comparison signs), wildcard minor/patch components, and a full
 * wildcard "x" that is only meaningful under = or >=.
 */

export interface Partial3 {
  major: number | null;
  minor: number | null;
  patch: number | null;
}

export interface Clause {
  op: string;
  pattern: Partial3;
}

export type Version = [number, number, number];

const CLAUSE_RE = /^(>=|<=|>|<|=|\^|~|≥|≤)?\s*([\dxX*]+(?:\.[\dxX*]+){0,2})$/;
const OP_ALIASES: Record<string, string> = { "≥": ">=", "≤": "<=" };

export class ConstraintSyntaxError extends Error {}

function parseComponent(text: string): number | null {
  if (text === "x" || text === "X" || text === "*") return null;
  if (!/^\d+$/.test(text)) {
    throw new ConstraintSyntaxError(`invalid version component '${text}'`);
  }
  return Number(text);
}

function parsePartial(text: string): Partial3 {
  const parts = text.split(".");
  if (parts.length > 3) throw new ConstraintSyntaxError(`invalid version pattern '${text}'`);
  const values = parts.map(parseComponent);
  while (values.length < 3) values.push(null);
  const [major, minor, patch] = values as [number | null, number | null, number | null];
  if (major === null && minor !== null) {
    throw new ConstraintSyntaxError(`wildcard major with concrete minor in '${text}'`);
  }
  if (minor === null && patch !== null) {
    throw new ConstraintSyntaxError(`wildcard minor with concrete patch in '${text}'`);
  }
  return { major, minor, patch };
}

export function parseVersion(text: string): Version {
  const match = /^(\d+)(?:\.(\d+))?(?:\.(\d+))?$/.exec(text.trim());
  if (!match) throw new ConstraintSyntaxError(`invalid semantic version '${text}'`);
  return [Number(match[1]), Number(match[2] ?? 0), Number(match[3] ?? 0)];
}

function cmp(a: Version, b: Version): number {
  for (let i = 0; i < 3; i++) {
    const ai = a[i] ?? 0;
    const bi = b[i] ?? 0;
    if (ai !== bi) return ai < bi ? -1 : 1;
  }
  return 0;
}

function floor(p: Partial3): Version {
  return [p.major ?? 0, p.minor ?? 0, p.patch ?? 0];
}

function impliedUpper(p: Partial3): Version | null {
  if (p.major === null) return null;
  if (p.minor === null) return [p.major + 1, 0, 0];
  if (p.patch === null) return [p.major, p.minor + 1, 0];
  return [p.major, p.minor, p.patch + 1];
}

interface Bounds {
  lo: Version | null;
  hi: Version | null; // exclusive
}

function caretUpper(p: Partial3, lo: Version): Version {
  if ((lo[0] ?? 0) > 0 || p.minor === null) return [(lo[0] ?? 0) + 1, 0, 0];
  if ((lo[1] ?? 0) > 0 || p.patch === null) return [0, (lo[1] ?? 0) + 1, 0];
  return [0, 0, (lo[2] ?? 0) + 1];
}

export function clauseBounds(clause: Clause): Bounds {
  const { op, pattern } = clause;
  if (pattern.major === null && op !== "=" && op !== ">=") {
    throw new ConstraintSyntaxError(`operator '${op}' cannot apply to the full wildcard`);
  }
  const lo = floor(pattern);
  const hi = impliedUpper(pattern);
  switch (op) {
    case "=":
      return { lo, hi };
    case ">=":
      return { lo, hi: null };
    case ">":
      return { lo: hi, hi: null };
    case "<":
      return { lo: null, hi: lo };
    case "<=":
      return { lo: null, hi };
    case "~": {
      const upper: Version =
        pattern.minor !== null ? [lo[0], lo[1] + 1, 0] : [lo[0] + 1, 0, 0];
      return { lo, hi: upper };
    }
    case "^":
      return { lo, hi: caretUpper(pattern, lo) };
    default:
      throw new ConstraintSyntaxError(`unknown operator '${op}'`);
  }
}

export function parseConstraint(text: string): Clause[] {
  if (!text || !text.trim()) throw new ConstraintSyntaxError("empty constraint");
  const clauses: Clause[] = [];
  for (const part of text.trim().split(/\s+and\s+/)) {
    const match = CLAUSE_RE.exec(part.trim());
    if (!match) throw new ConstraintSyntaxError(`malformed clause '${part.trim()}'`);
    const op = OP_ALIASES[match[1] ?? "="] ?? match[1] ?? "=";
    const clause = { op, pattern: parsePartial(match[2]!) };
    clauseBounds(clause); // validate operator/pattern combination eagerly
    clauses.push(clause);
  }
  return clauses;
}

export function satisfies(constraintText: string, versionText: string): boolean {
  const clauses = parseConstraint(constraintText);
  const version = parseVersion(versionText);
  return clauses.every((clause) => {
    const { lo, hi } = clauseBounds(clause);
    if (lo !== null && cmp(version, lo) < 0) return false;
    if (hi !== null && cmp(version, hi) >= 0) return false;
    return true;
  });
}

/** Inline validation: null when the text parses, else the error message. */
export function validateConstraintText(text: string): string | null {
  try {
    parseConstraint(text);
    return null;
  } catch (error) {
    return error instanceof ConstraintSyntaxError ? error.message : String(error);
  }
}
