import { readCsv } from "../csv";
import { ENTANGLEMENT_COLUMNS, entropyScalingFigure } from "../figures";
import { writeFigure } from "../render";
import { run } from "./run";

run("entropy_scaling <entanglement_summary.csv> <output.svg>", 2, ([summary, output]) => {
  writeFigure(entropyScalingFigure(readCsv(summary, ENTANGLEMENT_COLUMNS)), output);
});
