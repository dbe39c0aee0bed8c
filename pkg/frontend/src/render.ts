import { writeFileSync } from "fs";
import * as echarts from "echarts";

export const WIDTH = 860;
export const HEIGHT = 540;

const BASE: echarts.EChartsCoreOption = {
  animation: false,
  backgroundColor: "#ffffff",
  textStyle: { fontFamily: "sans-serif", fontSize: 13 },
  grid: { left: 70, right: 30, top: 50, bottom: 55 },
};

/** Render an option to an SVG string at the fixed figure size. */
export function renderToSvg(option: echarts.EChartsCoreOption): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  chart.setOption({ ...BASE, ...option });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
}

export function writeFigure(option: echarts.EChartsCoreOption, outputPath: string): void {
  writeFileSync(outputPath, renderToSvg(option));
}

export function valueAxis(name: string): object {
  return {
    type: "value",
    name,
    nameLocation: "middle",
    nameGap: 32,
    axisLine: { show: true },
  };
}
