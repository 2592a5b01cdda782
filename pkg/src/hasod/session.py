"""Live three-phase session: propose runs, ingest responses, auto-advance.

A session is fully determined by its config (including the seed) and the
sequence of ingested responses, so replaying recorded responses into a fresh
session reproduces every analytic artifact bit-exactly.  All RNG consumers
use fixed child indices of the root stream so the ingestion chunking cannot
perturb results.
"""

from __future__ import annotations

import json
import os
import tempfile

from dataclasses import asdict, dataclass, field

import numpy as np

from . import augment, screening
from .designs import Design
from .errors import (
    DuplicateResponse,
    NonFiniteError,
    NotComplete,
    SessionComplete,
    SessionError,
    UnknownRowId,
)
from .gp import GPModel, KernelParams, condition_on_points, gp_fit, make_model
from .numkit import RNG_ALGORITHM, RandomStream
from .optimize import DEConfig, maximize_posterior_mean, refinement_points
from .designs import mdsd

SCHEMA_VERSION = "hasod-session/1"

# child-stream indices of the session root stream
_CH_DESIGN = 0
_CH_GP_P2 = 1
_CH_DE_P2 = 2
_CH_REFINE = 3
_CH_GP_FINAL = 4
_CH_DE_FINAL = 5

PHASE_P1 = "AwaitP1Responses"
PHASE_P2 = "AwaitP2Responses"
PHASE_P3 = "AwaitP3Responses"
PHASE_DONE = "Complete"


@dataclass
class SessionConfig:
    k: int
    seed: int
    en_lambda: float = 0.01
    en_alpha: float = 0.5
    se_lambda: float = 0.01
    combined_lambda: float = 0.1
    epsilon: float = 1e-8
    n3: int = 6
    region_halfwidth: float = 0.3
    axial_clip: bool = False
    include_quadratics_on_C: bool = True
    de: DEConfig = field(default_factory=DEConfig)

    def validate(self) -> None:
        if not 2 <= self.k <= 20:
            raise SessionError("k must be in [2, 20]")
        if self.n3 < 1:
            raise SessionError("n3 must be >= 1")


@dataclass
class HasodResult:
    x_star: np.ndarray
    predicted_y: float
    predicted_sd: float
    critical_factors: set[int]
    significant_interactions: set[tuple[int, int]]
    total_runs: int
    strategy_used: str
    variance_before: float
    variance_after_at_old_xstar: float


@dataclass
class _Block:
    design: Design
    responses: list  # float or None per row


class SessionState:
    def __init__(self, config: SessionConfig):
        config.validate()
        self.config = config
        self.phase = PHASE_P1
        root = RandomStream(config.seed)
        p1 = mdsd(config.k, root.child(_CH_DESIGN))
        self.blocks: list[_Block] = [_Block(p1, [None] * p1.n)]
        self.screening = None
        self.classification = None
        self.strategy = None
        self.combined = None
        self.gp_params: KernelParams | None = None
        self.optimum = None
        self.result: HasodResult | None = None

    # ----- data access -------------------------------------------------

    def _root(self) -> RandomStream:
        return RandomStream(self.config.seed)

    def _row_offset(self, block_index: int) -> int:
        return sum(b.design.n for b in self.blocks[:block_index])

    def _locate(self, row_id: int) -> tuple[int, int]:
        offset = 0
        for bi, b in enumerate(self.blocks):
            if row_id < offset + b.design.n:
                return bi, row_id - offset
            offset += b.design.n
        raise UnknownRowId(f"row id {row_id} does not exist")

    def all_answered(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) over every answered row, in row-id order."""
        rows, ys = [], []
        for b in self.blocks:
            for i, y in enumerate(b.responses):
                if y is not None:
                    rows.append(b.design.rows[i])
                    ys.append(y)
        return np.array(rows), np.array(ys)

    def total_answered(self) -> int:
        return sum(1 for b in self.blocks for y in b.responses if y is not None)

    def _current_block_index(self) -> int:
        return {PHASE_P1: 0, PHASE_P2: 1, PHASE_P3: 2}[self.phase]

    # ----- protocol ----------------------------------------------------

    def propose_runs(self) -> list[tuple[int, np.ndarray]]:
        """Unanswered rows of the current phase, with stable global row ids."""
        if self.phase == PHASE_DONE:
            raise SessionComplete("session is complete; no runs to propose")
        bi = self._current_block_index()
        b = self.blocks[bi]
        offset = self._row_offset(bi)
        return [
            (offset + i, b.design.rows[i].copy())
            for i in range(b.design.n)
            if b.responses[i] is None
        ]

    def ingest_responses(self, responses: list[tuple[int, float]]) -> "SessionState":
        """Store responses; advance automatically when a phase block completes.

        The batch is validated in full before anything is stored, so a bad
        batch leaves the state untouched.
        """
        if self.phase == PHASE_DONE:
            raise SessionComplete("session is complete")
        seen = set()
        located = []
        for row_id, y in responses:
            row_id = int(row_id)
            if row_id in seen:
                raise DuplicateResponse(f"row id {row_id} appears twice in the batch")
            seen.add(row_id)
            bi, ri = self._locate(row_id)
            if self.blocks[bi].responses[ri] is not None:
                raise DuplicateResponse(f"row id {row_id} already has a response")
            y = float(y)
            if not np.isfinite(y):
                raise NonFiniteError(f"response for row {row_id} is not finite")
            located.append((bi, ri, y))

        for bi, ri, y in located:
            self.blocks[bi].responses[ri] = y

        self._maybe_advance()
        return self

    def _maybe_advance(self) -> None:
        while self.phase != PHASE_DONE:
            bi = self._current_block_index()
            if bi >= len(self.blocks) or any(
                y is None for y in self.blocks[bi].responses
            ):
                return
            if self.phase == PHASE_P1:
                self._complete_phase1()
            elif self.phase == PHASE_P2:
                self._complete_phase2()
            else:
                self._complete_phase3()

    # ----- phase analytics ---------------------------------------------

    def _complete_phase1(self) -> None:
        cfg = self.config
        p1 = self.blocks[0].design
        y1 = np.array(self.blocks[0].responses, dtype=float)
        self.screening = screening.cwess_scores(
            p1.rows,
            y1,
            en_lambda=cfg.en_lambda,
            en_alpha=cfg.en_alpha,
            se_lambda=cfg.se_lambda,
            epsilon=cfg.epsilon,
        )
        cls = screening.classify_factors(self.screening)
        if cls.k_c == 0:
            # empty screen: promote the top-CWESS factor so Phase 2 has work
            top = int(np.argmax(self.screening.cwess))
            cls.critical_set.add(top)
            cls.labels[top] = "Critical"
            cls.k_c = 1
        self.classification = cls
        self.strategy = augment.select_strategy(cls.k_c, cls.n_int)
        p2 = augment.build_augmentation(self.strategy, cls, p1)
        if cfg.axial_clip and self.strategy.kind == "C_Star":
            p2.rows = np.clip(p2.rows, -1.0, 1.0)
        self.blocks.append(_Block(p2, [None] * p2.n))
        self.phase = PHASE_P2

    def _include_quadratics(self) -> bool:
        return (
            self.config.include_quadratics_on_C
            and self.strategy is not None
            and self.strategy.kind == "C_Star"
        )

    def _phase12_data(self) -> tuple[np.ndarray, np.ndarray]:
        rows = np.vstack([self.blocks[0].design.rows, self.blocks[1].design.rows])
        y = np.array(
            self.blocks[0].responses + self.blocks[1].responses, dtype=float
        )
        return rows, y

    def _complete_phase2(self) -> None:
        cfg = self.config
        root = self._root()
        X12, y12 = self._phase12_data()
        self.combined = augment.fit_combined(
            X12,
            y12,
            self.classification,
            include_quadratics=self._include_quadratics(),
            lam=cfg.combined_lambda,
        )
        model = gp_fit(X12, y12, root.child(_CH_GP_P2))
        self.gp_params = model.params
        self.optimum = maximize_posterior_mean(
            model, cfg.k, cfg.de, root.child(_CH_DE_P2)
        )
        p3 = refinement_points(
            model,
            self.optimum.x_star,
            cfg.n3,
            cfg.region_halfwidth,
            cfg.de,
            root.child(_CH_REFINE),
        )
        self.blocks.append(_Block(p3, [None] * p3.n))
        self.phase = PHASE_P3

    def _complete_phase3(self) -> None:
        cfg = self.config
        root = self._root()
        X_all, y_all = self.all_answered()
        final_model = gp_fit(X_all, y_all, root.child(_CH_GP_FINAL))
        final_opt = maximize_posterior_mean(
            final_model, cfg.k, cfg.de, root.child(_CH_DE_FINAL)
        )

        # Variance audit at the Phase-2 optimum: condition the Phase-1/2
        # model (same kernel) on the refinement locations.
        X12, y12 = self._phase12_data()
        p2_model = make_model(X12, y12, self.gp_params)
        old_xstar = self.optimum.x_star
        var_before = p2_model.variance(old_xstar)
        conditioned = condition_on_points(p2_model, self.blocks[2].design.rows)
        var_after = conditioned.variance(old_xstar)

        self.result = HasodResult(
            x_star=final_opt.x_star,
            predicted_y=final_opt.mu_at_x_star,
            predicted_sd=float(np.sqrt(max(final_opt.var_at_x_star, 0.0))),
            critical_factors=set(self.classification.critical_set),
            significant_interactions=set(self.classification.significant_interactions),
            total_runs=self.total_answered(),
            strategy_used=self.strategy.kind,
            variance_before=var_before,
            variance_after_at_old_xstar=var_after,
        )
        self.gp_params = final_model.params
        self.optimum = final_opt
        self.phase = PHASE_DONE

    def finalize_report(self) -> HasodResult:
        if self.phase != PHASE_DONE:
            raise NotComplete("session has not completed all phases")
        return self.result

    def current_gp_model(self) -> GPModel:
        """Rebuild the most recent GP from persisted params and data."""
        if self.gp_params is None:
            raise SessionError("no GP fitted yet (Phase 2 incomplete)")
        if self.phase == PHASE_DONE:
            X, y = self.all_answered()
        else:
            X, y = self._phase12_data()
        return make_model(X, y, self.gp_params)

    # ----- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        d = {
            "schema_version": SCHEMA_VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "config": cfg,
            "phase": self.phase,
            "designs": [
                {
                    "phase_tag": b.design.phase,
                    "rows": [[float(v) for v in row] for row in b.design.rows],
                    "row_tags": list(b.design.row_tags),
                    "responses": [
                        None if y is None else float(y) for y in b.responses
                    ],
                }
                for b in self.blocks
            ],
            "screening": _screening_to_dict(self.screening),
            "classification": _classification_to_dict(self.classification),
            "strategy": (
                None
                if self.strategy is None
                else {"kind": self.strategy.kind, "rationale": self.strategy.rationale}
            ),
            "combined": _combined_to_dict(self.combined),
            "gp": (
                None
                if self.gp_params is None
                else {
                    "sigma_f2": self.gp_params.sigma_f2,
                    "ell": self.gp_params.ell,
                    "sigma_n2": self.gp_params.sigma_n2,
                    "bounds_version": "log10-4/1",
                }
            ),
            "optimum": (
                None
                if self.optimum is None
                else {
                    "x_star": [float(v) for v in self.optimum.x_star],
                    "mu_at_x_star": self.optimum.mu_at_x_star,
                    "var_at_x_star": self.optimum.var_at_x_star,
                }
            ),
            "result": _result_to_dict(self.result),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionState":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SessionError(f"unsupported schema version {d.get('schema_version')!r}")
        cfg_d = dict(d["config"])
        de = DEConfig(**cfg_d.pop("de"))
        config = SessionConfig(de=de, **cfg_d)
        state = cls.__new__(cls)
        state.config = config
        state.phase = d["phase"]
        state.blocks = []
        for block_d in d["designs"]:
            design = Design(
                k=config.k,
                rows=np.array(block_d["rows"], dtype=float),
                row_tags=list(block_d["row_tags"]),
                phase=block_d["phase_tag"],
            )
            responses = [None if y is None else float(y) for y in block_d["responses"]]
            state.blocks.append(_Block(design, responses))
        state.screening = _screening_from_dict(d.get("screening"))
        state.classification = _classification_from_dict(d.get("classification"))
        strat = d.get("strategy")
        state.strategy = (
            None if strat is None else augment.Strategy(strat["kind"], strat["rationale"])
        )
        state.combined = _combined_from_dict(d.get("combined"))
        gp_d = d.get("gp")
        state.gp_params = (
            None
            if gp_d is None
            else KernelParams(gp_d["sigma_f2"], gp_d["ell"], gp_d["sigma_n2"])
        )
        opt_d = d.get("optimum")
        from .optimize import OptimumEstimate

        state.optimum = (
            None
            if opt_d is None
            else OptimumEstimate(
                x_star=np.array(opt_d["x_star"], dtype=float),
                mu_at_x_star=float(opt_d["mu_at_x_star"]),
                var_at_x_star=float(opt_d["var_at_x_star"]),
            )
        )
        state.result = _result_from_dict(d.get("result"))
        return state


def _screening_to_dict(rep) -> dict | None:
    if rep is None:
        return None
    return {
        "cwess": [float(v) for v in rep.cwess],
        "beta_main": [float(v) for v in rep.beta_main],
        "se_main": [float(v) for v in rep.se_main],
        "snr": float(rep.snr),
        "interaction_scores": {
            f"{i},{j}": float(s) for (i, j), s in sorted(rep.interaction_scores.items())
        },
        "w_int": float(rep.w_int),
        "epsilon": float(rep.epsilon),
    }


def _screening_from_dict(d):
    if d is None:
        return None
    scores = {}
    for key, s in d["interaction_scores"].items():
        i, j = key.split(",")
        scores[(int(i), int(j))] = float(s)
    return screening.ScreeningReport(
        cwess=np.array(d["cwess"], dtype=float),
        beta_main=np.array(d["beta_main"], dtype=float),
        se_main=np.array(d["se_main"], dtype=float),
        snr=float(d["snr"]),
        interaction_scores=scores,
        w_int=float(d["w_int"]),
        epsilon=float(d["epsilon"]),
    )


def _classification_to_dict(cls) -> dict | None:
    if cls is None:
        return None
    return {
        "labels": list(cls.labels),
        "critical_set": sorted(int(i) for i in cls.critical_set),
        "k_c": cls.k_c,
        "significant_interactions": [
            [int(i), int(j)] for i, j in sorted(cls.significant_interactions)
        ],
        "n_int": cls.n_int,
        "tau_p": float(cls.tau_p),
        "tau_a": float(cls.tau_a),
        "tau_crit": float(cls.tau_crit),
    }


def _classification_from_dict(d):
    if d is None:
        return None
    return screening.FactorClassification(
        labels=list(d["labels"]),
        critical_set=set(int(i) for i in d["critical_set"]),
        k_c=int(d["k_c"]),
        significant_interactions={(int(i), int(j)) for i, j in d["significant_interactions"]},
        n_int=int(d["n_int"]),
        tau_p=float(d["tau_p"]),
        tau_a=float(d["tau_a"]),
        tau_crit=float(d["tau_crit"]),
    )


def _combined_to_dict(model) -> dict | None:
    if model is None:
        return None
    return {
        "beta": [float(v) for v in model.beta.values],
        "intercept": float(model.beta.intercept),
        "column_spec": list(model.column_spec),
        "lambda": float(model.lam),
        "mse": float(model.diagnostics.mse),
        "se": [float(v) for v in model.diagnostics.se],
        "snr": float(model.diagnostics.snr),
    }


def _combined_from_dict(d):
    if d is None:
        return None
    from .numkit import Coefficients, RegressionDiagnostics

    return augment.CombinedModel(
        beta=Coefficients(np.array(d["beta"], dtype=float), float(d["intercept"])),
        column_spec=list(d["column_spec"]),
        lam=float(d["lambda"]),
        diagnostics=RegressionDiagnostics(
            mse=float(d["mse"]),
            se=np.array(d["se"], dtype=float),
            snr=float(d["snr"]),
        ),
    )


def _result_to_dict(res: HasodResult | None) -> dict | None:
    if res is None:
        return None
    return {
        "x_star": [float(v) for v in res.x_star],
        "predicted_y": float(res.predicted_y),
        "predicted_sd": float(res.predicted_sd),
        "critical_factors": sorted(int(i) for i in res.critical_factors),
        "significant_interactions": [
            [int(i), int(j)] for i, j in sorted(res.significant_interactions)
        ],
        "total_runs": int(res.total_runs),
        "strategy_used": res.strategy_used,
        "variance_before": float(res.variance_before),
        "variance_after_at_old_xstar": float(res.variance_after_at_old_xstar),
    }


def _result_from_dict(d) -> HasodResult | None:
    if d is None:
        return None
    return HasodResult(
        x_star=np.array(d["x_star"], dtype=float),
        predicted_y=float(d["predicted_y"]),
        predicted_sd=float(d["predicted_sd"]),
        critical_factors=set(int(i) for i in d["critical_factors"]),
        significant_interactions={(int(i), int(j)) for i, j in d["significant_interactions"]},
        total_runs=int(d["total_runs"]),
        strategy_used=d["strategy_used"],
        variance_before=float(d["variance_before"]),
        variance_after_at_old_xstar=float(d["variance_after_at_old_xstar"]),
    )


def create_session(config: SessionConfig) -> SessionState:
    return SessionState(config)


# ----- canonical JSON ---------------------------------------------------


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    out: list[str] = []
    _emit(obj, out)
    return "".join(out) + "\n"


def _emit(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError("non-finite float in session state")
        out.append(f"{obj + 0.0:.17g}")  # +0.0 folds -0.0 into 0.0
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError("canonical JSON requires string keys")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(key))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot canonicalize {type(obj)!r}")


def save_session(state: SessionState, path: str) -> None:
    data = canonical_json(state.to_dict())
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_session(path: str) -> SessionState:
    with open(path) as fh:
        return SessionState.from_dict(json.load(fh))
