import math
import random

import numpy as np
import pytest
from sklearn.base import clone

from certpresolve import CertifyingPresolver, bench, opb
from certpresolve.generate import FAMILIES, GeneratorError, corpus, generate
from certpresolve.presolve import ConfigError, PresolveConfig
from certpresolve.validation import check_problem, check_solution

from conftest import FIG1_OPB, holds, solutions


# -- estimator

def test_estimator_params_and_clone():
    est = CertifyingPresolver(prop_cert="pol", rounds=3)
    params = est.get_params()
    assert params["prop_cert"] == "pol" and params["rounds"] == 3
    twin = clone(est)
    assert twin.get_params() == params and twin is not est


def test_estimator_fit_transform_inverse():
    est = CertifyingPresolver(techniques=("implied_free_substitution",))
    reduced = est.fit_transform(FIG1_OPB)
    assert est.n_features_in_ == 5 and len(reduced.constraints) == 1
    assert est.verify().accepted
    x = est.inverse_transform({1: 1, 2: 0, 3: 0, 4: 1})
    assert x.dtype == np.int8 and x.tolist() == [0, 1, 0, 0, 1]
    assert tuple(x.tolist()) in solutions(est.problem_)


def test_estimator_transform_requires_fit_problem():
    est = CertifyingPresolver().fit(FIG1_OPB)
    assert est.transform(FIG1_OPB) is est.reduced_
    with pytest.raises(ValueError):
        est.transform("+1 x1 >= 1 ;\n")


def test_estimator_not_fitted():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        CertifyingPresolver().transform(FIG1_OPB)


def test_estimator_without_proof():
    est = CertifyingPresolver(proof=False).fit(FIG1_OPB)
    assert est.certificate_ is None
    with pytest.raises(ValueError):
        est.verify()


def test_estimator_bad_param_raises_at_fit():
    with pytest.raises(ConfigError):
        CertifyingPresolver(prop_cert="lrat").fit(FIG1_OPB)


# -- config

def test_config_round_trip_and_unknown_key():
    cfg = PresolveConfig(rounds=4, techniques=("probing",))
    assert PresolveConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        PresolveConfig.from_dict({"round": 4})


@pytest.mark.parametrize("kw", [{"prop_cert": "x"}, {"obju_mode": "old"}, {"rounds": -1},
                                {"techniques": ("nope",)}, {"time_limit": -1.0}])
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        PresolveConfig(**kw)


# -- validation

def test_check_problem_inputs(tmp_path):
    path = tmp_path / "f.opb"
    path.write_text(FIG1_OPB)
    p = opb.parse(FIG1_OPB)
    for x in (p, FIG1_OPB, FIG1_OPB.encode(), path, str(path)):
        assert check_problem(x) == p
    with pytest.raises(TypeError):
        check_problem(3)


def test_check_solution():
    assert check_solution([1, 0, 1], 3) == {0: 1, 1: 0, 2: 1}
    assert check_solution({2: 1}, 3) == {2: 1}
    for bad in ([2, 0, 0], [[0, 1]], [0, 1]):
        with pytest.raises(ValueError):
            check_solution(bad, 3)
    with pytest.raises(ValueError):
        check_solution({5: 1}, 3)


# -- generator

@pytest.mark.parametrize("family", FAMILIES)
def test_generator_deterministic(family):
    kw = {"n_obj": 32, "n_fix": 4} if family == "dense-objective" else {}
    a = opb.write(generate(family, 5, **kw))
    assert a == opb.write(generate(family, random.Random(5), **kw))
    assert a != opb.write(generate(family, 6, **kw))


def test_random_instances_are_feasible():
    for _, p in corpus("random", 2, 20, n_vars=8, n_cons=6):
        assert solutions(p)


def test_propagation_family_forces_chain():
    p = generate("propagation", 1, n_vars=20, chain=8)
    sols = solutions(p) if p.n_vars <= 14 else None
    assert sols is None or sols
    from certpresolve.presolve import run
    r = run(p, PresolveConfig(techniques=("bound_strengthening",)))
    assert r.stats["by_kind"]["bound_strengthening"] >= 8


def test_dense_objective_sizes():
    p = generate("dense-objective", 0, n_obj=100, n_fix=10)
    assert len(p.objective.terms) == 100


def test_unknown_family():
    with pytest.raises(GeneratorError):
        generate("sudoku", 0)


def test_corpus_names():
    names = [n for n, _ in corpus("random", 4, 3)]
    assert names == ["random-4-0000", "random-4-0001", "random-4-0002"]


# -- bench

def test_shifted_geomean():
    assert bench.shifted_geomean([0, 3]) == pytest.approx(1.0)
    assert bench.shifted_geomean([]) == 0.0
    assert bench.shifted_geomean([2, 2, 2], shift=0) == pytest.approx(2.0)


def test_par2():
    assert bench.par2(3.0, True, 10) == 3.0
    assert bench.par2(3.0, False, 10) == 20.0


def test_bench_rows_and_aggregates():
    instances = [(n, opb.write(p)) for n, p in corpus("random", 3, 2)]
    rows = bench.run_bench(instances, ("default",))
    assert [r["instance"] for r in rows] == ["random-3-0000", "random-3-0001"]
    assert all(r["verdict"] == "accepted" for r in rows)
    again = bench.load_rows(bench.dump_rows(rows))
    assert again == rows
    a = bench.aggregate(again, "default")
    assert a["size"] == 2 and a["verified"] == 2
    assert a["default"] == pytest.approx(bench.shifted_geomean(r["presolve_default"] for r in rows))
    report = bench.format_report(again, ("default",), name="tiny")
    assert report.count("sgm") == 1 and "presolve overhead" in report


def test_bench_timeout_counts_par2():
    p = generate("propagation", 0)
    row = bench.bench_one("p", opb.write(p), "default", PresolveConfig(), 0.0)
    assert row["verdict"] == "timeout"
    a = bench.aggregate([row], "default")
    assert a["verify"] == pytest.approx(bench.shifted_geomean([0.0]))


def test_bench_parallel_matches_serial():
    instances = [(n, opb.write(p)) for n, p in corpus("random", 8, 3)]
    serial = bench.run_bench(instances, ("rup", "pol"))
    parallel = bench.run_bench(instances, ("rup", "pol"), jobs=2)
    key = ("instance", "cell", "certificate_bytes", "transactions", "verdict")
    assert [tuple(r[k] for k in key) for r in serial] == [tuple(r[k] for k in key) for r in parallel]


def test_bench_bad_instance_row():
    row = bench.bench_one("bad", "+1 x1 >= ;", "default", PresolveConfig(), None)
    assert row["verdict"].startswith("error") and row["presolve_default"] is None
    assert not math.isnan(bench.aggregate([row], "default")["size"])
