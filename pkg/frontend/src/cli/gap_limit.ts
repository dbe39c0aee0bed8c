import { readCsv } from "../csv";
import { FIT_COLUMNS, gapLimitFigure } from "../figures";
import { writeFigure } from "../render";
import { run } from "./run";

run("gap_limit <fits.csv> <output.svg>", 2, ([fits, output]) => {
  writeFigure(gapLimitFigure(readCsv(fits, FIT_COLUMNS)), output);
});
