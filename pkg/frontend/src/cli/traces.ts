import { readCsv } from "../csv";
import { STREAM_COLUMNS, SUMMARY_COLUMNS, tracesFigure } from "../figures";
import { writeFigure } from "../render";
import { run } from "./run";

run("traces <stream.csv> <output.svg> [summary.csv]", 2, ([stream, output, summary]) => {
  const streamRows = readCsv(stream, STREAM_COLUMNS);
  const summaryRows = summary ? readCsv(summary, SUMMARY_COLUMNS) : undefined;
  writeFigure(tracesFigure(streamRows, summaryRows), output);
});
