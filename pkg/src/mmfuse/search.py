"""Exhaustive configuration sweeps and cross-benchmark evaluation.

Entries are ranked by rho descending, then output dimensionality
ascending (the lowest-dimension winner is preferred among ties), then
canonical configuration order, giving a total deterministic order that is
independent of evaluation scheduling. Configurations that fail
numerically are kept in the report, marked and ranked last, so a sweep is
auditable end to end.

PCA/CCA fits are memoized per (layer-a dim, layer-b dim, ridge) within a
sweep; memoization shares work only and never changes a result.
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .composition import (
    FitProvider,
    apply_configuration,
    canonical_key,
    describe_configuration,
    enumerate_configurations,
    format_configuration,
    output_dimension,
)
from .errors import (
    AlignmentError,
    DimensionError,
    GridError,
    MissingReductionError,
    NoResultError,
    NumericalError,
)
from .evaluation import evaluate
from .numerics import DEFAULT_RIDGE

STATUS_OK = "ok"
STATUS_UNDEFINED = "undefined"
STATUS_FAILED = "failed"

_STATUS_RANK = {STATUS_OK: 0, STATUS_UNDEFINED: 1, STATUS_FAILED: 2}


@dataclass(frozen=True)
class GridSpec:
    """Search-space parameters.

    Dimensions run from ``dim_min`` in steps of ``dim_step`` up to the
    smallest relevant input dimensionality; alphas run over
    ``{0, alpha_step, ..., 1}``. ``motif_filter`` restricts the sweep to
    configurations built only from the named motifs (subset of
    ``{"pca", "cca", "rcca", "concat", "li"}``), which is how the
    single-motif baseline sweeps are expressed.
    """

    dim_step: int = 50
    dim_min: int = 50
    alpha_step: float = 0.1
    ridge: float = DEFAULT_RIDGE
    motif_filter: frozenset = None

    def __post_init__(self):
        if self.dim_step < 1:
            raise GridError(f"dim_step must be >= 1, got {self.dim_step}")
        if self.dim_min < 1:
            raise GridError(f"dim_min must be >= 1, got {self.dim_min}")
        if not 0.0 < self.alpha_step <= 1.0:
            raise GridError(f"alpha_step must be in (0, 1], got {self.alpha_step}")
        if self.ridge < 0:
            raise GridError(f"ridge must be >= 0, got {self.ridge}")
        if self.motif_filter is not None:
            object.__setattr__(self, "motif_filter", frozenset(self.motif_filter))

    def dims_up_to(self, limit):
        return list(range(self.dim_min, limit + 1, self.dim_step))

    def alphas(self):
        out = []
        i = 0
        while True:
            a = round(i * self.alpha_step, 12)
            if a > 1.0:
                break
            out.append(a)
            i += 1
        return out


@dataclass(frozen=True)
class SearchEntry:
    """One evaluated configuration within a sweep."""

    config: object
    result: object            # EvaluationResult, or None when failed
    status: str
    output_dim: int
    order_index: int          # position in canonical enumeration order
    error: str = None

    @property
    def rho(self):
        return self.result.rho if self.result is not None else None


@dataclass(frozen=True)
class SearchReport:
    """Ranked sweep outcome; ``entries[0]`` is the best entry."""

    benchmark_name: str
    grid: GridSpec
    entries: tuple

    @property
    def best(self):
        return self.entries[0]

    def counts(self):
        by = {STATUS_OK: 0, STATUS_UNDEFINED: 0, STATUS_FAILED: 0}
        for e in self.entries:
            by[e.status] += 1
        return by


def _entry_sort_key(entry):
    rho = entry.rho if entry.status == STATUS_OK else None
    return (
        _STATUS_RANK[entry.status],
        -rho if rho is not None else 0.0,
        entry.output_dim,
        entry.order_index,
    )


class _MemoFitProvider(FitProvider):
    """Compute-once fit cache, safe under concurrent evaluation."""

    def __init__(self, textual_matrix, visual_matrix):
        super().__init__(textual_matrix, visual_matrix)
        self._results = {}
        self._master = threading.Lock()
        self._locks = {}

    def _once(self, key, compute):
        with self._master:
            if key in self._results:
                return self._results[key]
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            with self._master:
                if key in self._results:
                    return self._results[key]
            value = compute()
            with self._master:
                self._results[key] = value
            return value

    def reduced(self, side, a_dim):
        if a_dim is None:
            return FitProvider.reduced(self, side, a_dim)
        return self._once(
            ("reduced", side, a_dim),
            lambda: FitProvider.reduced(self, side, a_dim),
        )

    def reducer(self, side, a_dim, dim):
        return self._once(
            ("reducer", side, a_dim, dim),
            lambda: FitProvider.reducer(self, side, a_dim, dim),
        )

    def fusion(self, a_dim, dim, ridge):
        return self._once(
            ("fusion", a_dim, dim, ridge),
            lambda: FitProvider.fusion(self, a_dim, dim, ridge),
        )


def _evaluate_one(order_index, config, textual, visual, bench, fits, normalize_concat):
    out_dim = output_dimension(config, textual.dim, visual.dim)
    try:
        model = apply_configuration(
            config, textual, visual, fits=fits, normalize_concat=normalize_concat
        )
        result = evaluate(model, bench)
    except (NumericalError, DimensionError, MissingReductionError) as exc:
        return SearchEntry(
            config=config, result=None, status=STATUS_FAILED,
            output_dim=out_dim, order_index=order_index, error=str(exc),
        )
    status = STATUS_OK if result.defined else STATUS_UNDEFINED
    return SearchEntry(
        config=config, result=result, status=status,
        output_dim=out_dim, order_index=order_index,
    )


def grid_search(textual, visual, bench, grid, workers=1, progress=None,
                normalize_concat=False):
    """Evaluate every configuration in the grid against one benchmark.

    ``progress``, when given, is called as ``progress(done, total)`` after
    each configuration. Results are independent of ``workers``.
    """
    if textual.vocab != visual.vocab:
        raise AlignmentError("tables must be vocabulary-aligned before searching")
    configs = enumerate_configurations(textual.dim, visual.dim, grid)
    if not configs:
        raise GridError("grid produced no configurations")
    fits = _MemoFitProvider(textual.matrix, visual.matrix)
    total = len(configs)
    done = 0
    tick = threading.Lock()

    def run(item):
        nonlocal done
        i, cfg = item
        entry = _evaluate_one(i, cfg, textual, visual, bench, fits, normalize_concat)
        if progress is not None:
            with tick:
                done += 1
                progress(done, total)
        return entry

    items = list(enumerate(configs))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run, items))
    else:
        entries = [run(item) for item in items]
    entries.sort(key=_entry_sort_key)
    return SearchReport(benchmark_name=bench.name, grid=grid, entries=tuple(entries))


def select_best(report):
    """Top-ranked successful entry; ties already broken by lowest dim."""
    if report.entries and report.entries[0].status == STATUS_OK:
        best = report.entries[0]
        return best.config, best.result
    raise NoResultError(
        f"sweep on {report.benchmark_name!r} has no successful configuration"
    )


def cross_evaluate(config, textual, visual, benches, normalize_concat=False):
    """Apply one configuration once, evaluate it on several benchmarks."""
    model = apply_configuration(
        config, textual, visual, normalize_concat=normalize_concat
    )
    return [(bench.name, evaluate(model, bench)) for bench in benches]


# --- report rendering -------------------------------------------------------

def _fmt_rho(entry):
    if entry.status == STATUS_OK:
        return f"{entry.rho:.2f}"
    if entry.status == STATUS_UNDEFINED:
        return "n/a"
    return "FAIL"


def render_report_table(report, limit=None):
    """Human-readable ranked table (rho shown to 2 decimals)."""
    counts = report.counts()
    lines = [
        f"benchmark: {report.benchmark_name}",
        f"configurations: {counts[STATUS_OK]} ok, "
        f"{counts[STATUS_UNDEFINED]} undefined, {counts[STATUS_FAILED]} failed "
        f"({len(report.entries)} total)",
        "",
        f"{'rank':>5}  {'rho':>5}  {'dim':>5}  {'pairs':>11}  config",
    ]
    shown = report.entries if limit is None else report.entries[:limit]
    for rank, e in enumerate(shown, start=1):
        pairs = f"{e.result.n_evaluated}/{e.result.n_total}" if e.result else "-"
        desc = describe_configuration(e.config)
        if e.status == STATUS_FAILED:
            desc += f"   [{e.error}]"
        lines.append(
            f"{rank:>5}  {_fmt_rho(e):>5}  {e.output_dim:>5}  {pairs:>11}  {desc}"
        )
    return "\n".join(lines) + "\n"


def render_report_machine(report):
    """Line-per-entry TSV: status, rho, coverage, dims, flat configuration."""
    lines = [
        "rank\tstatus\trho\tn_evaluated\tn_total\tcoverage\toutput_dim\tconfig"
    ]
    for rank, e in enumerate(report.entries, start=1):
        if e.result is not None:
            rho = repr(e.rho) if e.rho is not None else "NA"
            n_eval, n_tot = e.result.n_evaluated, e.result.n_total
            cov = repr(e.result.coverage)
        else:
            rho, n_eval, n_tot, cov = "NA", 0, 0, "NA"
        cfg = format_configuration(e.config, sep=" ")
        lines.append(
            f"{rank}\t{e.status}\t{rho}\t{n_eval}\t{n_tot}\t{cov}\t{e.output_dim}\t{cfg}"
        )
    return "\n".join(lines) + "\n"
