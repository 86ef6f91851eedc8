/**
 * Reader for the figure CSVs produced by the fadeout CLI.
 *
 * Layout: a `# params:` comment line, a header row (x column followed by
 * method columns), then numeric rows where missing cells are spelled `NA`.
 */

import Papa from "papaparse";

export interface FigureCsv {
  /** figure tag taken from the params line, e.g. "fig8" */
  figure: string;
  /** the full key=value map from the params line */
  params: Record<string, string>;
  xName: string;
  /** method columns, in file order */
  columns: string[];
  xs: number[];
  /** series values indexed [column][row]; NA cells are null */
  series: Record<string, (number | null)[]>;
}

export class CsvFormatError extends Error {}

function parseParamsLine(line: string): Record<string, string> {
  const params: Record<string, string> = {};
  const body = line.replace(/^#\s*params:\s*/, "");
  for (const piece of body.trim().split(/\s+/)) {
    const eq = piece.indexOf("=");
    if (eq > 0) params[piece.slice(0, eq)] = piece.slice(eq + 1);
  }
  return params;
}

export function parseFigureCsv(text: string): FigureCsv {
  const lines = text.split("\n");
  if (lines.length === 0 || !lines[0].startsWith("# params:")) {
    throw new CsvFormatError("missing '# params:' line; not a figure CSV");
  }
  const params = parseParamsLine(lines[0]);
  const figure = params["figure"];
  if (!figure) {
    throw new CsvFormatError("params line does not name a figure");
  }

  const parsed = Papa.parse<string[]>(lines.slice(1).join("\n"), {
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new CsvFormatError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new CsvFormatError("CSV has no header row");
  }
  const header = rows[0];
  const body = rows.slice(1);
  if (body.length === 0) {
    throw new CsvFormatError(`empty CSV body for ${figure}`);
  }

  const xName = header[0];
  const columns = header.slice(1);
  const xs: number[] = [];
  const series: Record<string, (number | null)[]> = {};
  for (const c of columns) series[c] = [];

  for (const row of body) {
    if (row.length !== header.length) {
      throw new CsvFormatError(
        `row has ${row.length} cells, header has ${header.length}`,
      );
    }
    const x = Number(row[0]);
    if (!Number.isFinite(x)) {
      throw new CsvFormatError(`non-numeric x value '${row[0]}'`);
    }
    xs.push(x);
    columns.forEach((c, j) => {
      const cell = row[j + 1];
      if (cell === "NA") {
        series[c].push(null);
        return;
      }
      const v = Number(cell);
      if (!Number.isFinite(v)) {
        throw new CsvFormatError(`non-numeric cell '${cell}' in ${c}`);
      }
      series[c].push(v);
    });
  }
  return { figure, params, xName, columns, xs, series };
}
