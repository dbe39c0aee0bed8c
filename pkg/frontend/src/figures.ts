import type { EChartsCoreOption } from "echarts";
import { distinct, numeric, Row } from "./csv";
import { valueAxis } from "./render";

/** Sort rows by a numeric column, stably, without mutating the input. */
function sortedBy(rows: Row[], column: string): Row[] {
  return [...rows].sort((a, b) => numeric(a, column) - numeric(b, column));
}

/**
 * Convergence traces of the shifted exponent estimates, one line per
 * index i >= 2 (index 1 is pinned to zero by the shift).  Optional
 * summary rows add black dashed lines at the cross-trajectory averages.
 */
export function tracesFigure(stream: Row[], summary?: Row[]): EChartsCoreOption {
  const indices = distinct(stream, "i").filter((i) => i >= 2);
  const tMin = Math.min(...stream.map((r) => numeric(r, "t")));
  const tMax = Math.max(...stream.map((r) => numeric(r, "t")));
  const series: object[] = indices.map((i) => ({
    name: `i=${i}`,
    type: "line",
    showSymbol: false,
    data: sortedBy(stream.filter((r) => numeric(r, "i") === i), "t").map((r) => [
      numeric(r, "t"),
      numeric(r, "epsilon_shifted"),
    ]),
  }));
  if (summary) {
    for (const row of summary) {
      const i = numeric(row, "i");
      if (i < 2) continue;
      series.push({
        name: "trajectory average",
        type: "line",
        showSymbol: false,
        lineStyle: { type: "dashed", color: "#000000", width: 1 },
        color: "#000000",
        data: [
          [tMin, numeric(row, "mean_shifted")],
          [tMax, numeric(row, "mean_shifted")],
        ],
      });
    }
  }
  return {
    legend: { top: 8, data: indices.map((i) => `i=${i}`) },
    xAxis: valueAxis("t"),
    yAxis: valueAxis("shifted exponent"),
    series,
  };
}

/** Gap delta vs measurement strength, one curve per chain length. */
export function gapFamilyFigure(rows: Row[]): EChartsCoreOption {
  const sizes = distinct(rows, "L").sort((a, b) => a - b);
  return {
    legend: { top: 8, data: sizes.map((L) => `L=${L}`) },
    xAxis: valueAxis("eta"),
    yAxis: valueAxis("gap"),
    series: sizes.map((L) => ({
      name: `L=${L}`,
      type: "line",
      data: sortedBy(rows.filter((r) => numeric(r, "L") === L), "eta").map((r) => [
        numeric(r, "eta"),
        numeric(r, "delta"),
      ]),
    })),
  };
}

/** Extrapolated infinite-size gap vs measurement strength (floored at 0). */
export function gapLimitFigure(rows: Row[]): EChartsCoreOption {
  return {
    xAxis: valueAxis("eta"),
    yAxis: valueAxis("extrapolated gap"),
    series: [
      {
        name: "infinite-size gap",
        type: "line",
        data: sortedBy(rows, "eta").map((r) => [
          numeric(r, "eta"),
          Math.max(numeric(r, "gamma"), 0),
        ]),
      },
    ],
  };
}

function linearGuide(points: [number, number][]): [number, number][] {
  const n = points.length;
  const mx = points.reduce((s, p) => s + p[0], 0) / n;
  const my = points.reduce((s, p) => s + p[1], 0) / n;
  const sxx = points.reduce((s, p) => s + (p[0] - mx) ** 2, 0);
  const sxy = points.reduce((s, p) => s + (p[0] - mx) * (p[1] - my), 0);
  const slope = sxx > 0 ? sxy / sxx : 0;
  const xs = points.map((p) => p[0]);
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  return [
    [lo, my + slope * (lo - mx)],
    [hi, my + slope * (hi - mx)],
  ];
}

/**
 * Half-chain entropy vs chain length, one scatter per measurement
 * strength with a dashed least-squares guide line (flat in the area-law
 * phase, tilted in the volume-law phase).
 */
export function entropyScalingFigure(rows: Row[]): EChartsCoreOption {
  const etas = distinct(rows, "eta");
  const series: object[] = [];
  for (const eta of etas) {
    const points = sortedBy(rows.filter((r) => numeric(r, "eta") === eta), "L").map(
      (r) => [numeric(r, "L"), numeric(r, "mean_S")] as [number, number],
    );
    series.push({ name: `eta=${eta}`, type: "scatter", symbolSize: 9, data: points });
    series.push({
      name: `eta=${eta} guide`,
      type: "line",
      showSymbol: false,
      lineStyle: { type: "dashed", width: 1 },
      data: linearGuide(points),
    });
  }
  return {
    legend: { top: 8, data: etas.map((eta) => `eta=${eta}`) },
    xAxis: valueAxis("L"),
    yAxis: valueAxis("half-chain entropy (nats)"),
    series,
  };
}

/** Boundary mutual information vs measurement strength, one curve per L. */
export function miPeakFigure(rows: Row[]): EChartsCoreOption {
  const sizes = distinct(rows, "L").sort((a, b) => a - b);
  return {
    legend: { top: 8, data: sizes.map((L) => `L=${L}`) },
    xAxis: valueAxis("eta"),
    yAxis: valueAxis("boundary mutual information"),
    series: sizes.map((L) => ({
      name: `L=${L}`,
      type: "line",
      data: sortedBy(rows.filter((r) => numeric(r, "L") === L), "eta").map((r) => [
        numeric(r, "eta"),
        numeric(r, "mean_I"),
      ]),
    })),
  };
}

export const STREAM_COLUMNS = ["t", "i", "epsilon_tilde", "epsilon_shifted", "converged_flag"];
export const SUMMARY_COLUMNS = ["eta", "L", "i", "mean_shifted"];
export const GAP_COLUMNS = ["eta", "L", "delta", "converged"];
export const FIT_COLUMNS = ["eta", "gamma", "alpha", "beta", "cost", "flat_fit_flag"];
export const ENTANGLEMENT_COLUMNS = ["eta", "L", "mean_S", "mean_I", "n_samples"];
