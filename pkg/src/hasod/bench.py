"""Known-truth benchmark: six scenarios, five methods, seeded replications.

Each replication draws its own child stream from the master seed, so the full
grid is deterministic end-to-end and order-independent in aggregation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import designs, screening
from .errors import HasodError
from .gp import gp_fit
from .numkit import RandomStream, ridge_fit_with_se, welch_t_test
from .optimize import DEConfig, de_maximize
from .session import PHASE_DONE, SessionConfig, SessionState

NOISE_SIGMA = 2.0
INTERACTION_COEFF = 3.0
QUADRATIC_COEFF = -2.0
K = 6

SCENARIO_NAMES = [
    "sparse_few",
    "sparse_many",
    "moderate",
    "dense",
    "interaction_heavy",
    "quadratic_heavy",
]

METHOD_NAMES = ["HASOD", "Traditional", "StdDSD", "LHS", "Sobol"]


class UnknownScenario(HasodError):
    pass


class InsufficientReplications(HasodError):
    pass


@dataclass
class ScenarioTruth:
    name: str
    main_coeffs: np.ndarray  # length K, zeros beyond the critical count
    interactions: list[tuple[int, int, float]]
    quadratics: list[tuple[int, float]]
    noise_sigma: float
    critical_set: set[int]

    def noiseless(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = X @ self.main_coeffs
        for i, j, c in self.interactions:
            y = y + c * X[:, i] * X[:, j]
        for i, q in self.quadratics:
            y = y + q * X[:, i] ** 2
        return y

    def evaluate(self, X: np.ndarray, stream: RandomStream) -> np.ndarray:
        y = self.noiseless(X)
        return y + self.noise_sigma * stream.normals(len(y))


# (critical count, main coefficient range, interaction count, quadratic count)
_SCENARIO_TABLE = {
    "sparse_few": (2, (8.0, 6.5), 1, 2),
    "sparse_many": (3, (8.0, 5.0), 2, 3),
    "moderate": (4, (7.0, 4.5), 2, 2),
    "dense": (6, (6.0, 3.5), 3, 3),
    "interaction_heavy": (4, (6.0, 4.5), 5, 1),
    "quadratic_heavy": (3, (7.0, 5.0), 1, 3),
}


def make_scenario(name: str) -> ScenarioTruth:
    """Built-in scenario; coefficient ranges realized as linear spacing,
    interactions on the lexicographically first critical pairs, quadratics on
    the lowest-index critical factors."""
    if name not in _SCENARIO_TABLE:
        raise UnknownScenario(f"unknown scenario {name!r}")
    k_c, (hi, lo), n_int, n_quad = _SCENARIO_TABLE[name]
    mains = np.zeros(K)
    mains[:k_c] = np.linspace(hi, lo, k_c)
    pairs = list(itertools.combinations(range(k_c), 2))[:n_int]
    interactions = [(i, j, INTERACTION_COEFF) for i, j in pairs]
    quadratics = [(i, QUADRATIC_COEFF) for i in range(n_quad)]
    return ScenarioTruth(
        name=name,
        main_coeffs=mains,
        interactions=interactions,
        quadratics=quadratics,
        noise_sigma=NOISE_SIGMA,
        critical_set=set(range(k_c)),
    )


def scenario_from_dict(d: dict) -> ScenarioTruth:
    """Scenario override loaded from a JSON definition file."""
    mains = np.zeros(K)
    mc = list(d["main_coeffs"])
    mains[: len(mc)] = mc
    critical = {i for i, c in enumerate(mains) if c != 0.0}
    return ScenarioTruth(
        name=d["name"],
        main_coeffs=mains,
        interactions=[(int(i), int(j), float(c)) for i, j, c in d.get("interactions", [])],
        quadratics=[(int(i), float(c)) for i, c in d.get("quadratics", [])],
        noise_sigma=float(d.get("noise_sigma", NOISE_SIGMA)),
        critical_set=critical,
    )


_TRUE_OPT_SEED = 987654321
_TRUE_OPT_CACHE: dict[str, tuple[np.ndarray, float]] = {}


def true_optimum(truth: ScenarioTruth) -> tuple[np.ndarray, float]:
    """Noiseless argmax over the coded cube via a tightened DE run."""
    cached = _TRUE_OPT_CACHE.get(truth.name)
    if cached is not None:
        return cached
    cfg = DEConfig(population=120, max_generations=400, tol=1e-12, stall_generations=40)
    x, val = de_maximize(
        truth.noiseless,
        -np.ones(K),
        np.ones(K),
        cfg,
        RandomStream(_TRUE_OPT_SEED),
    )
    _TRUE_OPT_CACHE[truth.name] = (x, val)
    return x, val


def detection_accuracy(detected: set[int], truth: ScenarioTruth) -> float:
    if not truth.critical_set:
        return 0.0
    return len(set(detected) & truth.critical_set) / len(truth.critical_set)


def prediction_error(y_pred: float, y_true: float) -> float:
    return abs(y_pred - y_true)


@dataclass
class Metrics:
    method: str
    scenario: str
    seed: int
    da: float
    pe: float
    total_runs: int
    # variance at the Phase-2 optimum before/after refinement conditioning;
    # HASOD only, kept out of the CSV, used for invariant audits
    variance_before: float | None = None
    variance_after: float | None = None


def _run_hasod(
    truth: ScenarioTruth, stream: RandomStream
) -> tuple[set[int], float, int, float, float]:
    session_seed = int(stream.child(0).integers(0, 2**62))
    noise = stream.child(1)
    state = SessionState(SessionConfig(k=K, seed=session_seed))
    while state.phase != PHASE_DONE:
        batch = state.propose_runs()
        levels = np.array([row for _, row in batch])
        ys = truth.evaluate(levels, noise)
        state.ingest_responses([(rid, float(y)) for (rid, _), y in zip(batch, ys)])
    result = state.finalize_report()
    x_true, _ = true_optimum(truth)
    y_pred, _ = state.current_gp_model().predict(x_true)
    return (
        set(result.critical_factors),
        float(y_pred),
        result.total_runs,
        result.variance_before,
        result.variance_after_at_old_xstar,
    )


def _ols_t_stats(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    n, p = X.shape
    XtX_inv = np.linalg.inv(X.T @ X)
    beta = XtX_inv @ X.T @ (y - y.mean())
    resid = (y - y.mean()) - X @ beta
    dof = max(n - p - 1, 1)
    s2 = float(resid @ resid) / dof
    se = np.sqrt(np.maximum(s2 * np.diag(XtX_inv), 1e-300))
    return beta / se


def _run_traditional(truth: ScenarioTruth, stream: RandomStream) -> tuple[set[int], float, int]:
    """Two-stage reconstruction: 16-run resolution-IV screen with a |t| > 2
    cutoff, then a face-centered CCD with a full quadratic least-squares fit
    on the survivors."""
    noise = stream.child(1)
    screen = designs.fractional_factorial(6, [(4, [0, 1, 2]), (5, [1, 2, 3])])
    y_screen = truth.evaluate(screen, noise)
    t = _ols_t_stats(screen, y_screen)
    survivors = sorted(int(i) for i in np.where(np.abs(t) > 2.0)[0])
    if not survivors:
        survivors = [int(np.argmax(np.abs(t)))]
    k_s = len(survivors)

    ccd = designs.baseline_design("CCD", k_s)
    X_sub = ccd.rows
    X_full = np.zeros((ccd.n, K))
    X_full[:, survivors] = X_sub
    y_ccd = truth.evaluate(X_full, noise)

    # full quadratic model in the survivor coordinates
    cols = [X_sub[:, i] for i in range(k_s)]
    for i, j in itertools.combinations(range(k_s), 2):
        cols.append(X_sub[:, i] * X_sub[:, j])
    for i in range(k_s):
        cols.append(X_sub[:, i] ** 2)
    M = np.column_stack([np.ones(ccd.n)] + cols)
    beta, *_ = np.linalg.lstsq(M, y_ccd, rcond=None)

    x_true, _ = true_optimum(truth)
    xt = x_true[survivors]
    feats = [1.0] + [xt[i] for i in range(k_s)]
    for i, j in itertools.combinations(range(k_s), 2):
        feats.append(xt[i] * xt[j])
    for i in range(k_s):
        feats.append(xt[i] ** 2)
    y_pred = float(np.array(feats) @ beta)
    return set(survivors), y_pred, len(screen) + ccd.n


def _run_std_dsd(truth: ScenarioTruth, stream: RandomStream) -> tuple[set[int], float, int]:
    noise = stream.child(1)
    d = designs.baseline_design("StdDSD", K)
    y = truth.evaluate(d.rows, noise)
    report = screening.cwess_scores(d.rows, y)
    cls = screening.classify_factors(report)
    coef, _ = ridge_fit_with_se(d.rows, y, 0.1)
    x_true, _ = true_optimum(truth)
    y_pred = float(x_true @ coef.values + coef.intercept)
    return set(cls.critical_set), y_pred, d.n


def _run_space_filling(
    kind: str, truth: ScenarioTruth, stream: RandomStream
) -> tuple[set[int], float, int]:
    noise = stream.child(1)
    d = designs.space_filling(kind, 17, K, stream.child(0))
    y = truth.evaluate(d.rows, noise)
    model = gp_fit(d.rows, y, stream.child(2))
    x_true, _ = true_optimum(truth)
    y_pred, _ = model.predict(x_true)
    return set(), float(y_pred), d.n


def run_replication(method: str, truth: ScenarioTruth, stream: RandomStream, seed: int) -> Metrics:
    var_before = var_after = None
    if method == "HASOD":
        detected, y_pred, runs, var_before, var_after = _run_hasod(truth, stream)
    elif method == "Traditional":
        detected, y_pred, runs = _run_traditional(truth, stream)
    elif method == "StdDSD":
        detected, y_pred, runs = _run_std_dsd(truth, stream)
    elif method in ("LHS", "Sobol"):
        detected, y_pred, runs = _run_space_filling(method, truth, stream)
    else:
        raise HasodError(f"unknown method {method!r}")
    _, y_true = true_optimum(truth)
    return Metrics(
        method=method,
        scenario=truth.name,
        seed=seed,
        da=detection_accuracy(detected, truth),
        pe=prediction_error(y_pred, y_true),
        total_runs=runs,
        variance_before=var_before,
        variance_after=var_after,
    )


def run_benchmark(
    methods: list[str],
    scenarios: list[ScenarioTruth],
    reps: int,
    master_seed: int,
    progress=None,
) -> list[Metrics]:
    master = RandomStream(master_seed)
    out: list[Metrics] = []
    rep_index = 0
    for method in methods:
        for truth in scenarios:
            for r in range(reps):
                m = run_replication(method, truth, master.child(rep_index), r)
                out.append(m)
                rep_index += 1
                if progress is not None:
                    progress(m)
    return out


CSV_HEADER = "method,scenario,seed,da,pe,runs"


def metrics_to_csv(all_metrics: list[Metrics]) -> str:
    ordered = sorted(all_metrics, key=lambda m: (m.method, m.scenario, m.seed))
    lines = [CSV_HEADER]
    for m in ordered:
        lines.append(
            f"{m.method},{m.scenario},{m.seed},{m.da:.17g},{m.pe:.17g},{m.total_runs}"
        )
    return "\n".join(lines) + "\n"


def aggregate_report(all_metrics: list[Metrics]) -> dict:
    """Per-method pooled means plus Welch t-tests of HASOD DA against each
    other method.  Input order does not matter; everything is sorted first."""
    ordered = sorted(all_metrics, key=lambda m: (m.method, m.scenario, m.seed))
    by_method: dict[str, list[Metrics]] = {}
    by_cell: dict[tuple[str, str], list[Metrics]] = {}
    for m in ordered:
        by_method.setdefault(m.method, []).append(m)
        by_cell.setdefault((m.method, m.scenario), []).append(m)
    for (method, scenario), cell in by_cell.items():
        if len(cell) < 2:
            raise InsufficientReplications(
                f"need >= 2 replications for ({method}, {scenario}), got {len(cell)}"
            )

    summary = {}
    for method, ms in by_method.items():
        summary[method] = {
            "mean_da": float(np.mean([m.da for m in ms])),
            "mean_pe": float(np.mean([m.pe for m in ms])),
            "mean_runs": float(np.mean([m.total_runs for m in ms])),
            "n": len(ms),
        }

    per_scenario = {
        f"{method}/{scenario}": {
            "mean_da": float(np.mean([m.da for m in cell])),
            "mean_pe": float(np.mean([m.pe for m in cell])),
            "mean_runs": float(np.mean([m.total_runs for m in cell])),
        }
        for (method, scenario), cell in sorted(by_cell.items())
    }

    t_tests = {}
    if "HASOD" in by_method:
        hasod_da = [m.da for m in by_method["HASOD"]]
        for method, ms in by_method.items():
            if method == "HASOD":
                continue
            res = welch_t_test(hasod_da, [m.da for m in ms])
            t_tests[method] = {"t": res.t, "df": res.df, "p": res.p}

    return {"summary": summary, "per_scenario": per_scenario, "da_t_tests": t_tests}


def report_markdown(report: dict) -> str:
    lines = [
        "# Benchmark comparison",
        "",
        "| Method | Detection Acc. (%) | Pred. Error | Total Runs |",
        "|---|---|---|---|",
    ]
    for method in sorted(report["summary"]):
        s = report["summary"][method]
        lines.append(
            f"| {method} | {100 * s['mean_da']:.2f} | {s['mean_pe']:.2f} | {s['mean_runs']:.1f} |"
        )
    lines.append("")
    lines.append("## Per-scenario detection accuracy")
    lines.append("")
    lines.append("| Method / Scenario | DA | PE | Runs |")
    lines.append("|---|---|---|---|")
    for key in sorted(report["per_scenario"]):
        s = report["per_scenario"][key]
        lines.append(
            f"| {key} | {s['mean_da']:.3f} | {s['mean_pe']:.2f} | {s['mean_runs']:.1f} |"
        )
    if report["da_t_tests"]:
        lines.append("")
        lines.append("## Welch t-tests: HASOD detection accuracy vs each method")
        lines.append("")
        lines.append("| Method | t | df | p |")
        lines.append("|---|---|---|---|")
        for method in sorted(report["da_t_tests"]):
            t = report["da_t_tests"][method]
            lines.append(f"| {method} | {t['t']:.3f} | {t['df']:.1f} | {t['p']:.3g} |")
    return "\n".join(lines) + "\n"
