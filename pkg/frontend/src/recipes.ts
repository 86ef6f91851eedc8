/**
 * Axis and styling recipes, one per figure tag.
 *
 * Each CSV column must map to exactly one series (or be listed in
 * `ignore`); anything else is a recipe mismatch and rendering refuses to
 * guess.
 */

export type XKind = "linear" | "ln";
export type YKind = "linear" | "log" | "lnOverN";

export interface SeriesStyle {
  color: string;
  dash?: string;
}

export interface FigureRecipe {
  figure: string;
  xName: string;
  xKind: XKind;
  yKind: YKind;
  xLabel: string;
  yLabel: string;
  series: Record<string, SeriesStyle>;
  ignore: string[];
}

export class RecipeMismatchError extends Error {}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

function styled(columns: string[]): Record<string, SeriesStyle> {
  const out: Record<string, SeriesStyle> = {};
  columns.forEach((c, j) => {
    out[c] = { color: PALETTE[j % PALETTE.length] };
  });
  return out;
}

export const RECIPES: Record<string, FigureRecipe> = {
  fig1: {
    figure: "fig1",
    xName: "i",
    xKind: "linear",
    yKind: "log",
    xLabel: "initial infectives i",
    yLabel: "mean extinction time",
    series: styled(["Exact(2)", "KL(17)", "Lin(15)", "Det(6)", "Diff(9)"]),
    ignore: [],
  },
  fig2: {
    figure: "fig2",
    xName: "N",
    xKind: "linear",
    yKind: "log",
    xLabel: "population size N",
    yLabel: "mean extinction time",
    series: styled(["Exact(2)", "Lin(15)", "Det(6)", "Diff(9)"]),
    ignore: [],
  },
  fig4: {
    figure: "fig4",
    xName: "N",
    xKind: "ln",
    yKind: "linear",
    xLabel: "ln(N)",
    yLabel: "mean extinction time",
    series: styled(["Exact(2)", "KL(17)", "Lin(15)", "Det(6)", "Diff(9)"]),
    ignore: [],
  },
  fig5: {
    figure: "fig5",
    xName: "N",
    xKind: "linear",
    yKind: "log",
    xLabel: "population size N",
    yLabel: "mean time from quasi-stationarity",
    series: styled(["Exact(3)", "AD(18)", "Diff(9)", "OU(10)"]),
    ignore: [],
  },
  fig6: {
    figure: "fig6",
    xName: "N",
    xKind: "linear",
    yKind: "lnOverN",
    xLabel: "population size N",
    yLabel: "ln(time) / N",
    series: styled(["Exact(3)", "AD(18)", "Diff(9)", "OU(10)"]),
    ignore: [],
  },
  fig8: {
    figure: "fig8",
    xName: "R0",
    xKind: "linear",
    yKind: "linear",
    xLabel: "R0",
    yLabel: "growth-rate exponent",
    series: styled(["AD(18)", "FPE"]),
    ignore: [],
  },
  fig12: {
    figure: "fig12",
    xName: "N",
    xKind: "linear",
    yKind: "log",
    xLabel: "population size N",
    yLabel: "mean time from quasi-stationarity",
    series: styled(["Exact(3)", "Diff(19)", "OU(10)", "BBN(27)"]),
    ignore: [],
  },
  fig16: {
    figure: "fig16",
    xName: "N",
    xKind: "linear",
    yKind: "lnOverN",
    xLabel: "population size N",
    yLabel: "ln(time) / N",
    series: styled(["Exact(3)", "Diff(19)", "OU(10)", "BBN(27)"]),
    ignore: [],
  },
};

export function recipeFor(figure: string): FigureRecipe {
  const recipe = RECIPES[figure];
  if (!recipe) {
    throw new RecipeMismatchError(`no recipe for figure '${figure}'`);
  }
  return recipe;
}

/** Check that every CSV column is either a known series or ignorable. */
export function matchColumns(
  recipe: FigureRecipe,
  columns: string[],
): string[] {
  for (const c of columns) {
    if (!(c in recipe.series) && !recipe.ignore.includes(c)) {
      throw new RecipeMismatchError(
        `column '${c}' is not a series of ${recipe.figure} and has no ` +
          `ignore rule`,
      );
    }
  }
  return columns.filter((c) => c in recipe.series);
}
