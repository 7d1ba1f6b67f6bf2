import itertools
import random
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from graphmcp import UNBOUNDED, ProcedureConfig, run_procedure, validate_graph
from graphmcp.casestudy import data_path
from graphmcp.io import GraphFileError, load_graph
from graphmcp.procedures import PROCEDURES
from graphmcp.sim import (
    GatekeepingSchedule,
    Run,
    SimulationSpec,
    WeightTables,
    equicorrelated_root,
    estimate_error_rates,
    estimate_marginal_power,
    gatekeeping_entangled,
    holm_graph,
    load_spec,
    parse_spec,
    random_graph,
    reject_matrix,
    sample_pvalues,
    sample_test_statistics,
)

F = Fraction


def null_spec(m=4, n_reps=2000, runs=(), rho=0.0, **kw):
    return SimulationSpec(mu_c=(0.0,) * m, mu_e=(0.0,) * m, sigma_c=(1.0,) * m, sigma_e=(1.0,) * m,
                          rho=rho, n_reps=n_reps, seed=kw.pop("seed", 5), runs=tuple(runs),
                          weighting=kw.pop("weighting", holm_graph(m)), **kw)


def test_equicorrelated_root():
    for d, rho in [(1, 0.3), (3, 0.5), (5, -0.2), (9, 0.0)]:
        L = equicorrelated_root(d, rho)
        S = np.full((d, d), rho) + (1 - rho) * np.eye(d)
        np.testing.assert_allclose(L @ L, S, atol=1e-12)
    with pytest.raises(ValueError):
        equicorrelated_root(3, -0.6)


def test_null_calibration_ks():
    spec = null_spec(m=3, n_reps=100_000, rho=0.4, seed=6)
    p = sample_pvalues(spec)
    crit = 1.628 / np.sqrt(len(p))  # 1% critical value of the KS statistic
    for i in range(3):
        assert stats.kstest(p[:, i], "uniform").statistic < crit
    # the 10% rejection rate lands within 3 SE
    se = np.sqrt(0.1 * 0.9 / len(p))
    assert abs((p[:, 0] <= 0.1).mean() - 0.1) < 3 * se


def test_null_calibration_across_seeds():
    # under a calibrated sampler the per-seed KS p-values are themselves uniform
    ks = [stats.kstest(sample_pvalues(null_spec(m=2, n_reps=5000, rho=0.4, seed=s))[:, 1], "uniform").pvalue
          for s in range(100, 200)]
    assert stats.kstest(ks, "uniform").pvalue > 0.01


def test_statistics_match_model():
    spec = SimulationSpec(mu_c=(0.0, 1.0), mu_e=(0.5, 1.0), sigma_c=(1.0, 2.0), sigma_e=(2.0, 2.0),
                          rho=0.3, n=10.0, n_reps=50_000, seed=1,
                          weighting=holm_graph(2))
    from graphmcp.sim.spec import sample_block

    t, p = sample_block(spec, 0, spec.n_reps)
    # T_1 has mean 0.5 / sqrt(5 / 10) and unit variance; T_2 is null
    assert abs(t[:, 0].mean() - 0.5 / np.sqrt(0.5)) < 0.02
    assert abs(t[:, 0].std() - 1) < 0.02
    assert abs(t[:, 1].mean()) < 0.02
    np.testing.assert_allclose(p, stats.norm.sf(t))


def test_replicates_depend_only_on_seed_and_index():
    spec = null_spec(n_reps=3000)
    full = sample_pvalues(spec)
    np.testing.assert_array_equal(sample_pvalues(spec, 1000, 2100), full[1000:2100])
    t, p = sample_test_statistics(spec, 2047)
    np.testing.assert_array_equal(p, full[2047])
    assert not np.array_equal(sample_pvalues(replace(spec, seed=6)), full)


def test_report_reproducible_bytes():
    runs = (Run("kfwer-aug", ProcedureConfig(alpha="0.05", k=2)),
            Run("fdp-gen", ProcedureConfig(alpha="0.05", gamma="0.2")))
    spec = null_spec(n_reps=5000, runs=runs)
    truth = [True, False, True, False]
    a = estimate_error_rates(spec, truth).to_csv()
    b = estimate_error_rates(spec, truth).to_csv()
    assert a == b
    assert a.splitlines()[0] == "run,procedure,alpha,k,gamma,delta,metric,hypothesis,estimate,se"


def test_single_replicate_equals_direct_run():
    g = load_graph(data_path("diabetes.graph"))
    for proc in PROCEDURES:
        cfg = ProcedureConfig(alpha="0.05", k=2, gamma="0.3", delta="0.5")
        spec = replace(null_spec(m=4, n_reps=1, runs=(Run(proc, cfg),), weighting=g),
                       mu_e=(2.0, 1.0, 2.5, 0.0))
        rep = estimate_marginal_power(spec)
        _, p = sample_test_statistics(spec, 0)
        direct = run_procedure(proc, g, [F(float(x)) for x in p], cfg).rejected
        assert [i for i in range(4) if rep.estimates[0].rejections[i]] == sorted(direct)


@pytest.mark.parametrize("seed", range(6))
def test_engine_matches_exact(seed):
    rng = random.Random(seed)
    g = random_graph(seed, rng.randint(2, 6), sparsity=rng.choice([0.0, 0.4]),
                     weight_style=("random", "zero", "deficient")[seed % 3])
    prng = np.random.default_rng(seed)
    p = prng.uniform(0, 0.2, size=(150, g.m))
    tab = WeightTables(g)
    for proc in PROCEDURES:
        for k, gamma, delta, nmax in [(2, "0.2", "0.5", None), (3, "0.3", UNBOUNDED, 2), (1, "0", "1", None)]:
            cfg = ProcedureConfig(alpha="0.05", k=k, gamma=gamma, delta=delta, nmax=nmax)
            got = reject_matrix(tab, p, proc, cfg)
            for row in range(len(p)):
                want = run_procedure(proc, g, [F(float(x)) for x in p[row]], cfg).rejected
                assert set(np.nonzero(got[row])[0]) == set(want), (proc, cfg, row)


def test_engine_family_graph(atmosphere):
    g, _ = atmosphere
    p = np.random.default_rng(3).uniform(0, 0.1, size=(200, g.m))
    for proc in ("fwer", "kfwer-aug", "kfwer-gen", "fdp-aug", "fdp-gen"):
        cfg = ProcedureConfig(alpha="0.025", k=2, gamma="0.3", delta="0.5")
        got = reject_matrix(g, p, proc, cfg)
        for row in range(len(p)):
            want = run_procedure(proc, g, [F(float(x)) for x in p[row]], cfg).rejected
            assert set(np.nonzero(got[row])[0]) == set(want)


def test_null_error_rates():
    runs = (Run("fwer", ProcedureConfig(alpha="0.05")),
            Run("kfwer-aug", ProcedureConfig(alpha="0.05", k=3, delta=1)),
            Run("fdp-aug", ProcedureConfig(alpha="0.05", gamma="0.2")))
    spec = null_spec(m=5, n_reps=20_000, runs=runs)
    rep = estimate_error_rates(spec, [True] * 5)
    for e in rep.estimates:
        f, se = e.kfwer if e.run.procedure != "fdp-aug" else e.fdp_tail
        assert f <= 0.05 + 3 * se


def test_truth_length_mismatch():
    spec = null_spec(runs=(Run("fwer", ProcedureConfig()),))
    with pytest.raises(ValueError):
        estimate_error_rates(spec, [True, False])


@pytest.mark.parametrize("kw", [dict(rho=-0.5), dict(rho=1.0), dict(n_reps=0), dict(n=0.0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        null_spec(**kw)


def test_spec_length_mismatch():
    with pytest.raises(ValueError):
        SimulationSpec(mu_c=(0.0,), mu_e=(0.0, 1.0), sigma_c=(1.0,), sigma_e=(1.0,))


def test_parse_spec_errors():
    with pytest.raises(GraphFileError, match="weighting"):
        parse_spec("mu_c: [0]\nmu_e: [0]\nsigma_c: [1]\nsigma_e: [1]\n")
    with pytest.raises(GraphFileError, match="mu_c"):
        parse_spec("mu_c: 3\n")
    with pytest.raises(GraphFileError, match="unknown procedure"):
        parse_spec("mu_c: [0]\nmu_e: [0]\nsigma_c: [1]\nsigma_e: [1]\n"
                   "weighting: {type: gatekeeping, primaries: 1, required: 1}\n"
                   "extra_stats: [{mean: 1}]\nruns: [{procedure: bogus}]\n")


def test_prerelax_scenario_models():
    spec = load_spec(data_path("prerelax.sim"), {"n_reps": "4000"})
    assert spec.m == 10 and spec.labels[-1] == "H10"
    assert spec.true_nulls() == (False,) * 8 + (True, False)
    p = sample_pvalues(spec)
    # H7: effect 0.143 over se 0.35 / sqrt(200), so P(p <= 0.001) is
    # Phi(0.143 / se - z_0.001)
    want = stats.norm.cdf(0.143 / (0.35 / np.sqrt(200)) - stats.norm.isf(0.001))
    got = (p[:, 6] <= 0.001).mean()
    assert abs(got - want) < 3 * np.sqrt(want * (1 - want) / len(p))
    # H9 is null: super-uniform
    assert stats.kstest(p[:, 8], "uniform").statistic < 1.628 / np.sqrt(len(p))
    # the secondary statistic is N(3, 1)
    t = stats.norm.isf(p[:, 9])
    assert abs(t.mean() - 3) < 0.1


def test_prerelax_k1_rows_identical():
    spec = load_spec(data_path("prerelax.sim"), {"n_reps": "3000"})
    tab = WeightTables(spec.weighting)
    p = sample_pvalues(spec)
    a = reject_matrix(tab, p, "kfwer-gen", ProcedureConfig(alpha="0.1", k=1))
    b = reject_matrix(tab, p, "kfwer-aug", ProcedureConfig(alpha="0.1", k=1))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("u, prim, sec", [
    (9, F(1, 9), 0), (5, F(1, 5), 0), (4, F(1, 4), 0), (3, F(83, 252), F(1, 84)),
    (2, F(11, 24), F(1, 12)), (1, F(2, 3), F(1, 3)), (0, 0, 1),
])
def test_gatekeeping_schedule(u, prim, sec):
    assert GatekeepingSchedule(9, 6).schedule(u) == (prim, sec)


def test_gatekeeping_matches_entangled_for_every_live_set():
    # smaller instance so every live set can be enumerated
    sched = GatekeepingSchedule(5, 3)
    ent = gatekeeping_entangled(5, 3)
    for r in range(1, 7):
        for live in itertools.combinations(range(6), r):
            assert sched.weights(live) == tuple(w.a for w in ent.weights(live))


def test_random_graph_properties():
    for seed in range(100):
        m = 1 + seed % 7
        for style in ("random", "zero", "deficient"):
            g = random_graph(seed, m, sparsity=0.3, weight_style=style)
            assert validate_graph(g).ok
            assert g == random_graph(seed, m, sparsity=0.3, weight_style=style)
        assert not any(any(r) for r in random_graph(seed, m, sparsity=1.0).transition)
    assert random_graph(0, 4, weight_style="holm") == holm_graph(4)
    assert holm_graph(4).weights == (F(1, 4),) * 4
    with pytest.raises(ValueError):
        random_graph(0, 0)
