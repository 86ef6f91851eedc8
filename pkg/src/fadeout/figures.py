"""Figure data sets as CSV: one row per x-value (initial count, population
size, or basic reproduction number), one column per method.

Output is deterministic given the run spec (seed included), uses scientific
notation with 12 significant digits, LF line endings, and an explicit
``NA`` cell whenever the exact solve is infeasible at that size.  Method
columns are tagged with the source-equation number, e.g. ``Exact(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diffusion1d, exact, fem2d, formulas, simulate
from .errors import NotApplicableError, NumericalFailureError, OutOfDomainError
from .model import ModelParams

FIGURE_TAGS = ("fig1", "fig2", "fig4", "fig5", "fig6", "fig8", "fig12",
               "fig16")

#: exact k=2 eigenproblem cutoff: matrix dimension N(N+3)/2 ~ 45k at N=300
EXACT_K2_MAX_N = 300
EXACT_K1_MAX_N = 100_000

_DEFAULTS = {
    "fig1": {"beta": 0.8, "k": 1, "n_grid": (100,)},
    "fig2": {"beta": 0.8, "k": 1, "n_range": (50, 1000)},
    "fig4": {"beta": 0.8, "k": 1, "n_range": (50, 1000)},
    "fig5": {"beta": 1.1, "k": 1, "n_range": (50, 1000)},
    "fig6": {"beta": 1.5, "k": 1, "n_range": (50, 1000)},
    "fig8": {"beta": None, "k": 1},
    "fig12": {"beta": 1.1, "k": 2, "n_range": (40, 200)},
    "fig16": {"beta": 1.5, "k": 2, "n_range": (40, 200)},
}

_COLUMNS = {
    "fig1": ("Exact(2)", "KL(17)", "Lin(15)", "Det(6)", "Diff(9)"),
    "fig2": ("Exact(2)", "Lin(15)", "Det(6)", "Diff(9)"),
    "fig4": ("Exact(2)", "KL(17)", "Lin(15)", "Det(6)", "Diff(9)"),
    "fig5": ("Exact(3)", "AD(18)", "Diff(9)", "OU(10)"),
    "fig6": ("Exact(3)", "AD(18)", "Diff(9)", "OU(10)"),
    "fig8": ("AD(18)", "FPE"),
    "fig12": ("Exact(3)", "Diff(19)", "OU(10)", "BBN(27)"),
    "fig16": ("Exact(3)", "Diff(19)", "OU(10)", "BBN(27)"),
}


def default_n_grid(lo: int, hi: int, count: int = 20) -> tuple:
    """20 log-spaced integer population sizes (documented default; the
    exact grids behind the published curves are not enumerated)."""
    vals = np.unique(np.rint(np.geomspace(lo, hi, count)).astype(int))
    return tuple(int(v) for v in vals)


@dataclass(frozen=True)
class RunSpec:
    """A figure run: the tag picks the defaults, every field can be
    overridden."""

    figure: str
    beta: float | None = None
    gamma: float = 1.0
    k: int | None = None
    n_grid: tuple | None = None
    i_grid: tuple | None = None
    seed: int = 0
    methods: tuple | None = None
    fem_density: tuple = fem2d.DEFAULT_DENSITIES
    mc_paths: int = 100_000

    def __post_init__(self):
        if self.figure not in FIGURE_TAGS:
            raise OutOfDomainError(
                f"unknown figure {self.figure!r}; expected one of "
                f"{', '.join(FIGURE_TAGS)}"
            )

    def resolved(self):
        d = _DEFAULTS[self.figure]
        beta = self.beta if self.beta is not None else d["beta"]
        k = self.k if self.k is not None else d["k"]
        if self.n_grid is not None:
            n_grid = tuple(int(n) for n in self.n_grid)
        elif "n_grid" in d:
            n_grid = d["n_grid"]
        elif "n_range" in d:
            n_grid = default_n_grid(*d["n_range"])
        else:
            n_grid = ()
        return beta, self.gamma, k, n_grid


@dataclass
class FigureData:
    figure: str
    params_line: str
    columns: tuple      # including the leading x column
    rows: list = field(default_factory=list)   # lists of float | None

    def to_csv_text(self) -> str:
        lines = [self.params_line, ",".join(self.columns)]
        x_is_int = self.columns[0] in ("i", "N")
        for row in self.rows:
            cells = []
            for j, v in enumerate(row):
                if v is None or (isinstance(v, float) and not math.isfinite(v)):
                    cells.append("NA")
                elif j == 0 and x_is_int:
                    cells.append(str(int(v)))
                else:
                    cells.append(f"{v:.11e}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text())
        return path


def _select(columns, methods):
    if methods is None:
        return tuple(columns)
    wanted = {m.strip().lower() for m in methods}
    kept = tuple(c for c in columns if c.split("(")[0].lower() in wanted)
    unknown = wanted - {c.split("(")[0].lower() for c in columns}
    if unknown:
        raise OutOfDomainError(
            f"methods {sorted(unknown)} are not available for this figure"
        )
    if not kept:
        raise OutOfDomainError("method filter removed every column")
    return kept


def _exact_feasible(k: int, n: int) -> bool:
    return n <= (EXACT_K1_MAX_N if k == 1 else EXACT_K2_MAX_N)


def _tau_q(params: ModelParams) -> float:
    return exact.quasi_stationary(params).tau_q


def _tag_failures(fn):
    """Attach the column's method name to numerical failures so callers can
    report which method broke."""
    def wrapped(col, *args, **kwargs):
        try:
            return fn(col, *args, **kwargs)
        except NumericalFailureError as exc:
            exc.method = col.split("(")[0]
            raise
    return wrapped


@_tag_failures
def _subcritical_value(col, params, i, norden_cache):
    name = col.split("(")[0]
    if name == "Exact":
        if not _exact_feasible(params.k_stages, params.n_pop):
            return None
        key = (params.beta, params.gamma, params.n_pop)
        if key not in norden_cache:
            norden_cache[key] = exact.norden_all(params)
        return float(norden_cache[key][i - 1])
    if name == "KL":
        return formulas.tau_kl(params, i)
    if name == "Lin":
        return formulas.tau_lin(params, i)
    if name == "Det":
        return formulas.tau_det(params, i)
    if name == "Diff":
        return diffusion1d.tau_diff_integral(params, float(i))
    raise OutOfDomainError(f"unknown column {col}")


@_tag_failures
def _qsd_value_k1(col, params):
    name = col.split("(")[0]
    if name == "Exact":
        if not _exact_feasible(1, params.n_pop):
            return None
        try:
            return _tau_q(params)
        except NumericalFailureError:
            # decay rate below double-precision resolvability at this N
            return None
    if name == "AD":
        return formulas.tau_ad(params)
    if name == "Diff":
        y0 = math.floor(params.n_pop * params.endemic_fraction())
        return diffusion1d.tau_diff_integral(params, float(y0))
    if name == "OU":
        return formulas.tau_ou(params)
    raise OutOfDomainError(f"unknown column {col}")


@_tag_failures
def _qsd_value_k2(col, params, fem_density):
    name = col.split("(")[0]
    if name == "Exact":
        if not _exact_feasible(2, params.n_pop):
            return None
        try:
            return _tau_q(params)
        except NumericalFailureError:
            return None
    if name == "Diff":
        domain = fem2d.Domain2D(n_pop=params.n_pop)
        mesh = fem2d.build_mesh(domain, boundary_densities=fem_density)
        solution = fem2d.solve_backward(params, mesh)
        return fem2d.query_at_endemic(solution, params)["tau"]
    if name == "OU":
        return formulas.tau_ou(params)
    if name == "BBN":
        return formulas.tau_bbn(params)
    raise OutOfDomainError(f"unknown column {col}")


def compute_figure(spec: RunSpec) -> FigureData:
    """All rows for one figure.  Rows come out in x order; any method that
    is structurally inapplicable at an x-value yields ``NA``."""
    beta, gamma, k, n_grid = spec.resolved()
    figure = spec.figure
    params_line = (
        f"# params: figure={figure} beta={beta} gamma={gamma} k={k} "
        f"seed={spec.seed} n_grid={'/'.join(str(n) for n in n_grid)} "
        f"fem_density={'/'.join(str(d) for d in spec.fem_density)}"
    )
    norden_cache: dict = {}

    if figure == "fig1":
        n = n_grid[0]
        params = ModelParams(beta=beta, gamma=gamma, n_pop=n, k_stages=k)
        cols = _select(_COLUMNS[figure], spec.methods)
        i_grid = spec.i_grid or tuple(range(1, n + 1))
        data = FigureData(figure, params_line, ("i",) + cols)
        diff_cols = [c for c in cols if c.startswith("Diff")]
        diff_profile = {}
        if diff_cols:
            vals = diffusion1d.tau_diff_profile(params,
                                                [float(i) for i in i_grid])
            diff_profile = dict(zip(i_grid, vals))
        for i in i_grid:
            row = [float(i)]
            for c in cols:
                if c.startswith("Diff"):
                    row.append(float(diff_profile[i]))
                else:
                    row.append(_subcritical_value(c, params, i, norden_cache))
            data.rows.append(row)
        return data

    if figure in ("fig2", "fig4"):
        cols = _select(_COLUMNS[figure], spec.methods)
        data = FigureData(figure, params_line, ("N",) + cols)
        for n in n_grid:
            params = ModelParams(beta=beta, gamma=gamma, n_pop=n, k_stages=k)
            i = 1 if figure == "fig2" else max(1, math.floor(0.3 * n))
            row = [float(n)]
            row.extend(_subcritical_value(c, params, i, norden_cache)
                       for c in cols)
            data.rows.append(row)
        return data

    if figure in ("fig5", "fig6"):
        cols = _select(_COLUMNS[figure], spec.methods)
        data = FigureData(figure, params_line, ("N",) + cols)
        for n in n_grid:
            params = ModelParams(beta=beta, gamma=gamma, n_pop=n, k_stages=k)
            row = [float(n)]
            row.extend(_qsd_value_k1(c, params) for c in cols)
            data.rows.append(row)
        return data

    if figure == "fig8":
        cols = _select(_COLUMNS[figure], spec.methods)
        data = FigureData(figure, params_line, ("R0",) + cols)
        for r0 in np.linspace(1.0, 3.0, 101)[1:]:
            row = [float(r0)]
            for c in cols:
                if c.startswith("AD"):
                    row.append(1.0 / r0 - 1.0 + math.log(r0))
                else:
                    row.append(formulas.fpe_exponent(float(r0)))
            data.rows.append(row)
        return data

    # fig12 / fig16
    cols = _select(_COLUMNS[figure], spec.methods)
    data = FigureData(figure, params_line, ("N",) + cols)
    for n in n_grid:
        params = ModelParams(beta=beta, gamma=gamma, n_pop=n, k_stages=k)
        row = [float(n)]
        row.extend(_qsd_value_k2(c, params, spec.fem_density) for c in cols)
        data.rows.append(row)
    return data


def run(spec: RunSpec, out) -> Path:
    """Compute a figure and write its CSV.  ``out`` may be a directory (the
    file is named <figure>.csv) or a file path."""
    out = Path(out)
    if out.is_dir() or out.suffix == "":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{spec.figure}.csv"
    return compute_figure(spec).to_csv(out)


# ---------------------------------------------------------------------------
# free-form single-method evaluation (shared by the CLI and the service)
# ---------------------------------------------------------------------------

def evaluate_method(method: str, params: ModelParams, i: int | None = None,
                    seed: int = 0, mc_paths: int = 100_000,
                    fem_density=fem2d.DEFAULT_DENSITIES
                    ) -> formulas.ExtinctionEstimate:
    """Evaluate one named method at the given parameters.

    ``i`` is the initial infective count where the method needs one;
    QSD-based methods (Exact, AD, OU, BBN, FEM) ignore it.
    """
    name = method.strip().lower()
    est = formulas.ExtinctionEstimate
    if name in ("exact", "norden"):
        if i is not None and params.k_stages == 1:
            return est(formulas.Method.EXACT, exact.norden_tau(params, i))
        return est(formulas.Method.EXACT, _tau_q(params))
    if name == "det":
        return est(formulas.Method.DET, formulas.tau_det(params, i or 1))
    if name == "lin":
        return est(formulas.Method.LIN, formulas.tau_lin(params, i or 1))
    if name == "dss":
        return est(formulas.Method.DSS, formulas.tau_dss(params, i or 1))
    if name == "kl":
        return est(formulas.Method.KL, formulas.tau_kl(params, i or 1))
    if name == "ad":
        lv = formulas.log_tau_ad(params)
        return est(formulas.Method.AD, math.exp(lv), log_value=lv)
    if name == "ou":
        lv = formulas.log_tau_ou(params)
        return est(formulas.Method.OU, math.exp(lv), log_value=lv,
                   meta={"valid": formulas.ou_validity(params)})
    if name == "fpe":
        lv = formulas.log_tau_fpe(params)
        return est(formulas.Method.FPE, math.exp(lv), log_value=lv)
    if name == "bbn":
        lv = formulas.log_tau_bbn(params)
        return est(formulas.Method.BBN, math.exp(lv), log_value=lv,
                   meta={"p_q": formulas.p_minor_outbreak(params)})
    if name == "diff":
        if params.k_stages == 1:
            y = float(i) if i is not None else float(
                math.floor(params.n_pop * params.endemic_fraction()))
            return est(formulas.Method.DIFF,
                       diffusion1d.tau_diff_integral(params, y))
        if params.k_stages == 2:
            mesh = fem2d.build_mesh(fem2d.Domain2D(n_pop=params.n_pop),
                                    boundary_densities=fem_density)
            sol = fem2d.solve_backward(params, mesh)
            q = fem2d.query_at_endemic(sol, params)
            return est(formulas.Method.DIFF, q["tau"],
                       meta={"distance": q["distance"],
                             "local_spread": q["local_spread"]})
        raise OutOfDomainError("diffusion methods cover k_stages <= 2")
    if name == "mc":
        k = params.k_stages
        if i is not None:
            state = [0] * k
            state[0] = int(i)
            cfg = simulate.SimConfig(seed=seed, n_paths=mc_paths,
                                     initial_state=tuple(state))
            mc = simulate.simulate_extinction_time(params, cfg)
        else:
            qsd = exact.quasi_stationary(params)
            starts = simulate.sample_qsd_starts(qsd, mc_paths, seed)
            cfg = simulate.SimConfig(seed=seed, n_paths=mc_paths)
            mc = simulate.simulate_extinction_time(params, cfg, starts=starts)
        return est(formulas.Method.MC, mc.mean, std_error=mc.std_error,
                   meta={"n_censored": mc.n_censored, "n_paths": mc.n_paths})
    raise OutOfDomainError(f"unknown method {method!r}")
