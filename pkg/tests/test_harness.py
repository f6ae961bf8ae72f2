import math

import numpy as np
import pytest

import hmjb.harness as harness
from hmjb.dataio import load_csv
from hmjb.errors import (
    EmptyFile,
    GrammarError,
    InvalidParam,
    NoCdf,
    NotSampleable,
    NotSymmetric,
    ParseError,
    ReplicationError,
    UnknownTable,
)
from hmjb.families import square_family
from hmjb.harness import (
    CHUNK,
    SimulationConfig,
    TestSpec,
    draw_matrix,
    parse_test,
    run_replications,
    sample_model,
    substream,
)
from hmjb.moments import empirical_moments, laplace_moments, normal_moments
from hmjb.polymoment import monomial, variance
from hmjb.tables import TABLE_IDS, reproduce_table

SQ = square_family()


def config(**kw):
    base = dict(model_true=normal_moments(0, 1), model_null=normal_moments(0, 1), family=SQ,
                k=2, n=50, B=300, seed=4)
    base.update(kw)
    return SimulationConfig(**base)


class TestSampler:
    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["normal", "dexp", "dgamma"])
    def test_raw_moments_within_5_se(self, name, std_normal, laplace1, dgamma_k3):
        model = {"normal": std_normal, "dexp": laplace1, "dgamma": dgamma_k3}[name]
        N = 10**6
        x = sample_model(model, N, substream(2024, 0))
        M = model.raw_moments
        xp = np.ones_like(x)
        for ell in range(1, 9):
            xp *= x
            se = math.sqrt(variance(monomial(ell), M) / N)
            assert abs(xp.mean() - M[ell]) < 5 * se, ell

    def test_shifted_normal(self):
        x = sample_model(normal_moments(5.0, 0.1), 10_000, substream(0, 0))
        assert x.mean() == pytest.approx(5.0, abs=0.01)
        assert x.std() == pytest.approx(0.1, rel=0.05)

    def test_empirical_not_sampleable(self):
        with pytest.raises(NotSampleable):
            sample_model(empirical_moments([1.0, 2.0, 3.0]), 5, substream(0, 0))

    def test_substreams(self):
        a = sample_model(normal_moments(0, 1), 100, substream(1, 0))
        b = sample_model(normal_moments(0, 1), 100, substream(1, 0))
        c = sample_model(normal_moments(0, 1), 100, substream(1, 1))
        d = sample_model(normal_moments(0, 1), 100, substream(2, 0))
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c) and not np.array_equal(a, d)
        assert abs(np.corrcoef(a, c)[0, 1]) < 0.35

    def test_draw_matrix_rows_independent_of_selection(self):
        m = laplace_moments(1.0)
        full = draw_matrix(m, 20, 9, range(10))
        part = draw_matrix(m, 20, 9, [7, 3])
        np.testing.assert_array_equal(part, full[[7, 3]])


class TestParseTest:
    @pytest.mark.parametrize(
        "text, spec",
        [("general", TestSpec("general")), ("jb", TestSpec("jb")), ("ks", TestSpec("ks")),
         ("chi2sym:3", TestSpec("chi2sym", 3)), ("chi2gen", TestSpec("chi2gen", 2))],
    )
    def test_ok(self, text, spec):
        assert parse_test(text) == spec

    @pytest.mark.parametrize("text", ["foo", "chi2sym:1", "chi2gen:x", "jb:2", ""])
    def test_bad(self, text):
        with pytest.raises(GrammarError):
            parse_test(text)

    def test_labels(self):
        assert TestSpec("chi2sym", 3).label == "chi2sym:3"
        assert TestSpec("jb").label == "jb"


class TestRunReplications:
    def test_deterministic(self):
        cfg = config(tests=(TestSpec("general"), TestSpec("jb")))
        r1, r2 = run_replications(cfg), run_replications(cfg)
        assert r1.to_dict() == r2.to_dict()
        for key in r1.values:
            np.testing.assert_array_equal(r1.values[key], r2.values[key])

    def test_prefix_consistency(self):
        small = run_replications(config(B=CHUNK + 10))
        big = run_replications(config(B=2 * CHUNK + 7))
        np.testing.assert_array_equal(
            small.values["general/statistic"], big.values["general/statistic"][: CHUNK + 10]
        )

    def test_workers_identical(self):
        cfg = config(B=2 * CHUNK + 3, tests=(TestSpec("general"), TestSpec("ks")))
        np.testing.assert_array_equal(
            run_replications(cfg, workers=1).values["ks/statistic"],
            run_replications(cfg, workers=2).values["ks/statistic"],
        )
        assert run_replications(cfg, workers=1).to_dict() == run_replications(cfg, workers=2).to_dict()

    def test_matches_single_sample_tests(self):
        from hmjb.stats import chi2_general, classical_jb, general_test, ks_test

        cfg = config(model_true=laplace_moments(1.0), B=5,
                     tests=(TestSpec("general"), TestSpec("jb"), TestSpec("ks"), TestSpec("chi2gen", 2)))
        res = run_replications(cfg)
        for i in range(5):
            x = sample_model(cfg.model_true, cfg.n, substream(cfg.seed, i))
            g = general_test(x, cfg.model_null, SQ, 2)
            assert res.values["general/standardized"][i] == pytest.approx(g.standardized, rel=1e-10)
            assert res.values["jb/statistic"][i] == pytest.approx(classical_jb(x).statistic, rel=1e-10)
            assert res.values["ks/p_value"][i] == pytest.approx(ks_test(x, cfg.model_null).p_value, rel=1e-10)
            assert res.values["chi2gen:2/statistic"][i] == pytest.approx(
                chi2_general(x, cfg.model_null, 2).statistic, rel=1e-10)

    def test_aggregate_fields(self):
        res = run_replications(config(tests=(TestSpec("general"), TestSpec("chi2sym", 2))))
        g = res.aggregate("general")
        t = res.values["general/standardized"]
        assert g.mean_standardized == pytest.approx(t.mean())
        assert g.rejection_rate == pytest.approx(np.mean(res.values["general/p_value"] < 0.05))
        c = res.aggregate("chi2sym:2")
        assert c.mean_standardized is None and c.p_value_convention == "upper_tail"
        with pytest.raises(KeyError):
            res.aggregate("ks")
        doc = res.to_dict()
        assert set(doc) == {"config", "results", "warnings"}
        assert doc["config"]["tests"] == ["general", "chi2sym:2"]

    def test_warnings(self):
        res = run_replications(config(n=20, B=10, variance_source="plugin"))
        assert any("small sample" in w for w in res.warnings)
        assert any("plug-in" in w for w in res.warnings)

    def test_null_calibration(self):
        res = run_replications(config(k=3, n=1000, B=2000, seed=20261015))
        g = res.aggregate("general")
        assert -0.1 <= g.mean_standardized <= 0.1
        assert 0.035 <= g.rejection_rate <= 0.065

    def test_replication_error(self, monkeypatch):
        real = harness.sample_model

        def flaky(model, n, rng):
            x = real(model, n, rng)
            return np.zeros(n) if flaky.calls == 3 else x

        def counting(model, n, rng):
            out = flaky(model, n, rng)
            flaky.calls += 1
            return out

        flaky.calls = 0
        monkeypatch.setattr(harness, "sample_model", counting)
        with pytest.raises(ReplicationError) as info:
            run_replications(config(B=10))
        assert info.value.index == 3

    @pytest.mark.parametrize(
        "kw, exc",
        [
            (dict(n=5), InvalidParam),
            (dict(B=0), InvalidParam),
            (dict(tail="left"), InvalidParam),
            (dict(model_true=empirical_moments([1.0, 2.0])), NotSampleable),
            (dict(model_null=empirical_moments([1.0, 2.0, 2.0]), tests=(TestSpec("chi2sym", 2),)), NotSymmetric),
            (dict(model_null=empirical_moments([1.0, 2.0, 3.0]), tests=(TestSpec("ks"),)), NoCdf),
        ],
    )
    def test_config_errors(self, kw, exc):
        with pytest.raises(exc):
            run_replications(config(**kw))


class TestLoadCsv:
    def test_header_and_blank_lines(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("value\n1.5\n\n-2\n3e1,label\n")
        np.testing.assert_array_equal(load_csv(f), [1.5, -2.0, 30.0])

    def test_bad_line(self, tmp_path):
        f = tmp_path / "b.csv"
        f.write_text("1\n2\nabc\n")
        with pytest.raises(ParseError) as info:
            load_csv(f)
        assert info.value.line == 3

    @pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
    def test_non_finite(self, tmp_path, bad):
        f = tmp_path / "c.csv"
        f.write_text(f"1\n{bad}\n")
        with pytest.raises(ParseError):
            load_csv(f)

    def test_empty(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("header\n\n")
        with pytest.raises(EmptyFile):
            load_csv(f)


class TestTables:
    def test_normal_params(self):
        tab = reproduce_table("normal-params")
        by = {r[0]: r for r in tab.rows}
        assert by["T(f,g,3)"][1] == pytest.approx(234.0)
        assert by["(b_5, a_5)"][-1] == "NO"  # published 946 vs exact 945
        assert by["sigma_3"][1] == pytest.approx(2374.545, rel=1e-6)
        assert by["sigma_3"][-1] == "NO"
        assert "945" in "\n".join(tab.notes)

    def test_dexp_params(self):
        tab = reproduce_table("dexp-params")
        by = {r[0]: r for r in tab.rows}
        assert by["T(f,g,3)"][1] == pytest.approx(8136.0)
        assert all(by[f"(b_{p}, a_{p})"][-1] == "yes" for p in range(2, 7))
        assert "dexp" in tab.render()

    def test_sim_table_small(self):
        tab = reproduce_table("dexp-vs-normal", B=50)
        assert tab.columns[:2] == ["data", "n"] and len(tab.rows) == 2
        assert [r[1] for r in tab.rows] == [11, 22]
        assert tab.to_dict()["table_id"] == "dexp-vs-normal"

    def test_unknown(self):
        with pytest.raises(UnknownTable):
            reproduce_table("nope")
        assert "normal-params" in TABLE_IDS
