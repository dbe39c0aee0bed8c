import { readCsv } from "../csv";
import { ENTANGLEMENT_COLUMNS, miPeakFigure } from "../figures";
import { writeFigure } from "../render";
import { run } from "./run";

run("mi_peak <entanglement_summary.csv> <output.svg>", 2, ([summary, output]) => {
  writeFigure(miPeakFigure(readCsv(summary, ENTANGLEMENT_COLUMNS)), output);
});
