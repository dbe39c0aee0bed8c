import { readCsv } from "../csv";
import { GAP_COLUMNS, gapFamilyFigure } from "../figures";
import { writeFigure } from "../render";
import { run } from "./run";

run("gap_family <gaps.csv> <output.svg>", 2, ([gaps, output]) => {
  writeFigure(gapFamilyFigure(readCsv(gaps, GAP_COLUMNS)), output);
});
