// Two-decimal display everywhere; full precision goes in the title
// attribute so hover reveals the exact API value.

export function fmt2(v: number): string {
  return v.toFixed(2);
}

export function fullPrecision(v: number): string {
  return String(v);
}

export function fmtVector(vs: number[]): string {
  return "(" + vs.map(fmt2).join(", ") + ")";
}
