import numpy as np
import pytest

from hasod import screening
from hasod.errors import (
    DuplicateResponse,
    NonFiniteError,
    NotComplete,
    SessionComplete,
    SessionError,
    UnknownRowId,
)
from hasod.numkit import RandomStream
from hasod.session import (
    PHASE_DONE,
    PHASE_P1,
    PHASE_P2,
    SCHEMA_VERSION,
    SessionConfig,
    SessionState,
    canonical_json,
    create_session,
    load_session,
    save_session,
)

from conftest import drive_session, synthetic_truth


class TestCreation:
    def test_k6_fifteen_rows(self):
        state = create_session(SessionConfig(k=6, seed=42))
        batch = state.propose_runs()
        assert len(batch) == 15
        assert [rid for rid, _ in batch] == list(range(15))
        assert state.phase == PHASE_P1

    def test_k2_seven_rows(self):
        state = create_session(SessionConfig(k=2, seed=0))
        assert len(state.propose_runs()) == 7

    def test_determinism(self):
        a = create_session(SessionConfig(k=6, seed=7))
        b = create_session(SessionConfig(k=6, seed=7))
        assert np.array_equal(a.blocks[0].design.rows, b.blocks[0].design.rows)

    def test_invalid_k(self):
        with pytest.raises(SessionError):
            create_session(SessionConfig(k=1, seed=0))
        with pytest.raises(SessionError):
            create_session(SessionConfig(k=21, seed=0))


class TestIngestion:
    def _fresh(self):
        return create_session(SessionConfig(k=6, seed=42))

    def test_partial_no_transition(self):
        state = self._fresh()
        batch = state.propose_runs()
        state.ingest_responses([(batch[0][0], 1.0), (batch[1][0], 2.0)])
        assert state.phase == PHASE_P1
        assert state.screening is None
        assert len(state.propose_runs()) == 13

    def test_duplicate_in_batch_rejected_atomically(self):
        state = self._fresh()
        with pytest.raises(DuplicateResponse):
            state.ingest_responses([(0, 1.0), (0, 2.0)])
        assert all(y is None for y in state.blocks[0].responses)

    def test_duplicate_of_stored_rejected(self):
        state = self._fresh()
        state.ingest_responses([(0, 1.0)])
        with pytest.raises(DuplicateResponse):
            state.ingest_responses([(0, 5.0)])
        assert state.blocks[0].responses[0] == 1.0

    def test_unknown_row_rejected_atomically(self):
        state = self._fresh()
        with pytest.raises(UnknownRowId):
            state.ingest_responses([(1, 1.0), (999, 2.0)])
        assert all(y is None for y in state.blocks[0].responses)

    def test_non_finite_rejected(self):
        state = self._fresh()
        with pytest.raises(NonFiniteError):
            state.ingest_responses([(0, float("nan"))])
        assert state.blocks[0].responses[0] is None

    def test_append_only(self):
        state = self._fresh()
        state.ingest_responses([(0, 3.5)])
        state.ingest_responses([(1, -1.0), (2, 0.0)])
        assert state.blocks[0].responses[0] == 3.5

    def test_order_free_batches(self):
        a = self._fresh()
        b = self._fresh()
        batch = a.propose_runs()
        ys = {rid: float(i) for i, (rid, _) in enumerate(batch)}
        a.ingest_responses(sorted(ys.items()))
        b.ingest_responses(sorted(ys.items(), reverse=True))
        assert canonical_json(a.to_dict()) == canonical_json(b.to_dict())


class TestPhaseFlow:
    def test_phase1_analytics_appear(self):
        state = create_session(SessionConfig(k=6, seed=42))
        batch = state.propose_runs()
        state.ingest_responses(
            [(rid, float(synthetic_truth(levels))) for rid, levels in batch]
        )
        assert state.phase == PHASE_P2
        assert state.screening is not None
        assert state.classification is not None
        assert state.strategy is not None
        assert state.blocks[1].design.n > 0
        assert state.combined is None  # phase-2 artifact, not yet

    def test_screening_matches_module_recomputation(self):
        state = create_session(SessionConfig(k=6, seed=42))
        batch = state.propose_runs()
        state.ingest_responses(
            [(rid, float(synthetic_truth(levels))) for rid, levels in batch]
        )
        p1 = state.blocks[0]
        report = screening.cwess_scores(
            p1.design.rows, np.array(p1.responses, dtype=float)
        )
        assert np.array_equal(report.cwess, state.screening.cwess)
        assert np.array_equal(report.beta_main, state.screening.beta_main)
        cls = screening.classify_factors(report)
        if cls.k_c > 0:
            assert cls.critical_set == state.classification.critical_set

    def test_row_ids_stable_across_phases(self):
        state = create_session(SessionConfig(k=6, seed=42))
        batch = state.propose_runs()
        state.ingest_responses(
            [(rid, float(synthetic_truth(levels))) for rid, levels in batch]
        )
        batch2 = state.propose_runs()
        assert [rid for rid, _ in batch2] == list(
            range(15, 15 + state.blocks[1].design.n)
        )


class TestCompletedSession:
    def test_complete(self, completed_session):
        state, _ = completed_session
        assert state.phase == PHASE_DONE

    def test_run_envelope(self, completed_session):
        state, _ = completed_session
        result = state.finalize_report()
        assert 25 <= result.total_runs <= 53
        assert result.total_runs == state.total_answered()

    def test_variance_reduction(self, completed_session):
        state, _ = completed_session
        result = state.finalize_report()
        assert result.variance_after_at_old_xstar <= result.variance_before + 1e-9

    def test_result_consistency(self, completed_session):
        state, _ = completed_session
        result = state.finalize_report()
        assert result.critical_factors == state.classification.critical_set
        assert result.strategy_used == state.strategy.kind
        assert np.all(np.abs(result.x_star) <= 1.0)
        assert result.predicted_sd >= 0.0

    def test_propose_after_complete(self, completed_session):
        state, _ = completed_session
        with pytest.raises(SessionComplete):
            state.propose_runs()

    def test_ingest_after_complete(self, completed_session):
        state, _ = completed_session
        with pytest.raises(SessionComplete):
            state.ingest_responses([(0, 1.0)])

    def test_finalize_before_complete_raises(self):
        state = create_session(SessionConfig(k=6, seed=1))
        with pytest.raises(NotComplete):
            state.finalize_report()

    def test_gp_prediction_near_truth_at_center(self, completed_session):
        state, _ = completed_session
        model = state.current_gp_model()
        mean, var = model.predict(np.zeros(6))
        assert abs(mean - synthetic_truth(np.zeros(6))) < 3.0
        assert var >= 0.0


class TestPersistence:
    def test_save_load_save_byte_identical(self, completed_session, tmp_path):
        state, _ = completed_session
        p1 = tmp_path / "s1.json"
        p2 = tmp_path / "s2.json"
        save_session(state, str(p1))
        loaded = load_session(str(p1))
        save_session(loaded, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_schema_version_checked(self, tmp_path):
        state = create_session(SessionConfig(k=2, seed=0))
        d = state.to_dict()
        assert d["schema_version"] == SCHEMA_VERSION
        d["schema_version"] = "hasod-session/999"
        with pytest.raises(SessionError):
            SessionState.from_dict(d)

    def test_roundtrip_midphase(self, tmp_path):
        state = create_session(SessionConfig(k=6, seed=42))
        state.ingest_responses([(0, 1.5), (3, -2.0)])
        path = tmp_path / "mid.json"
        save_session(state, str(path))
        loaded = load_session(str(path))
        assert loaded.phase == PHASE_P1
        assert loaded.blocks[0].responses[0] == 1.5
        assert loaded.blocks[0].responses[1] is None
        assert canonical_json(loaded.to_dict()) == canonical_json(state.to_dict())

    def test_replay_reproduces_analytics(self, completed_session):
        state, recorded = completed_session
        fresh = create_session(SessionConfig(k=6, seed=2718))
        remaining = list(recorded)
        while remaining:
            pending = {rid for rid, _ in fresh.propose_runs()}
            fresh.ingest_responses([(r, y) for r, y in remaining if r in pending])
            remaining = [(r, y) for r, y in remaining if r not in pending]
        assert fresh.phase == PHASE_DONE
        assert canonical_json(fresh.to_dict()) == canonical_json(state.to_dict())

    def test_replay_in_different_chunks(self, completed_session):
        state, recorded = completed_session
        fresh = create_session(SessionConfig(k=6, seed=2718))
        for row_id, y in recorded:
            fresh.ingest_responses([(row_id, y)])
        assert canonical_json(fresh.to_dict()) == canonical_json(state.to_dict())


class TestCanonicalJson:
    def test_sorted_keys_and_format(self):
        s = canonical_json({"b": 1, "a": [1.5, None, True]})
        assert s == '{"a":[1.5,null,true],"b":1}\n'

    def test_float_precision(self):
        s = canonical_json(1.0 / 3.0)
        assert s.strip() == f"{1.0 / 3.0:.17g}"

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            canonical_json(float("inf"))

    def test_non_string_keys_rejected(self):
        with pytest.raises(TypeError):
            canonical_json({1: "x"})
