// Chart model for the screening panel: horizontal bars of per-factor
// scores with a threshold rule, plus a sorted interaction list. Pure
// pass-through of API numbers; only scaling for layout is computed.

import type { Classification, ScreeningReport } from "./api.js";

export interface Bar {
  label: string;
  value: number;
  widthPct: number;
  critical: boolean;
  badge: string;
}

export interface ChartModel {
  bars: Bar[];
  tauCrit: number;
  tauPct: number;
  interactions: { label: string; score: number; significant: boolean }[];
}

export function chartModel(
  report: ScreeningReport,
  cls: Classification,
): ChartModel {
  const scale = Math.max(...report.cwess, cls.tau_crit, 1e-12);
  const bars = report.cwess.map((value, i) => ({
    label: `f${i + 1}`,
    value,
    widthPct: (value / scale) * 100,
    critical: cls.labels[i] === "Critical",
    badge: cls.labels[i],
  }));
  const sig = new Set(cls.significant_interactions.map((p) => p.join(",")));
  const interactions = Object.entries(report.interaction_scores)
    .map(([pair, score]) => {
      const [a, b] = pair.split(",").map(Number);
      return {
        label: `f${a + 1} x f${b + 1}`,
        score,
        significant: sig.has(pair),
      };
    })
    .sort((p, q) => q.score - p.score);
  return {
    bars,
    tauCrit: cls.tau_crit,
    tauPct: (cls.tau_crit / scale) * 100,
    interactions,
  };
}
