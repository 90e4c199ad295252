"""Smoke tests for the _core extension module."""

import math
import os

import pytest

import _core as rbf


def test_sufficient_stats():
    s = rbf.sufficient_stats([0.0, 2.0])
    assert s.n == 2
    assert s.mean == 1.0
    assert s.sd == 1.0


def test_enumerate_models():
    models = rbf.enumerate_models(2)
    assert [m.inclusion() for m in models] == [[0, 0], [1, 0], [0, 1], [1, 1]]
    with pytest.raises(ValueError):
        rbf.enumerate_models(21)


def test_posterior_weights_sum_to_one():
    primary = rbf.SourceSummary(10, 0.3, 1.0)
    supplements = [rbf.SourceSummary(5, 1.0, 1.0), rbf.SourceSummary(12, 0.2, 0.7)]
    weights = rbf.posterior_weights(primary, supplements, rbf.flat_prior(2))
    assert abs(sum(weights) - 1.0) <= 1e-12
    mixture = rbf.posterior_mixture(primary, supplements, rbf.flat_prior(2))
    mean, variance = rbf.mixture_moments(mixture)
    assert variance > 0


def test_conditional_posterior_worked_example():
    primary = rbf.SourceSummary(10, 0.3, 1.0)
    supplements = [rbf.SourceSummary(5, 1.0, 1.0)]
    mean, variance = rbf.conditional_posterior(
        primary, supplements, rbf.ModelConfiguration(1, 1)
    )
    assert math.isclose(mean, 8.0 / 15, rel_tol=1e-12)
    assert math.isclose(variance, 1.0 / 15, rel_tol=1e-12)


def test_worked_prior_values():
    dataset = rbf.Dataset(
        primary=[0.1, -0.2, 0.3, 0.05],
        supplements=[[0.0, 0.2, -0.1], [1.1, 0.9, 1.3], [0.2, -0.3, 0.15]],
        characteristics={"c1": [0.0, 0.1, 1.0, 0.05]},
    )
    config = rbf.RbfConfig()
    config.rho = 0.0
    prior = rbf.build_rbf_prior(dataset, config)
    assert len(prior) == 8
    assert abs(sum(prior) - 1.0) <= 1e-12
    assert prior[0] == 1.0 / 8  # null model pinned under a=1

    config.a = 0.0
    assert rbf.build_rbf_prior(dataset, config) == rbf.flat_prior(3)


def test_jeffreys_and_pearson():
    assert math.isclose(rbf.jeffreys_divergence(0.0, 1.0, 1.0, 1.0), 1.0, rel_tol=1e-12)
    assert math.isclose(
        rbf.pearson_correlation([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]),
        0.98198050606196574,
        rel_tol=1e-12,
    )


def test_run_scenario_deterministic():
    config = rbf.ScenarioConfig()
    config.scenario = 1
    config.reps = 6
    config.seed = 42
    config.rbf.rho = 0.0
    a = rbf.run_scenario(config, 1)
    b = rbf.run_scenario(config, 4)
    assert rbf.rep_csv(a) == rbf.rep_csv(b)
    methods = [m.method for m in a[0].metrics]
    assert methods == [rbf.Method.MEM, rbf.Method.RBF, rbf.Method.NAIVE]
    assert a[0].metrics[2].correct_model_weight is None


def test_summary_json_schema():
    jsonschema = pytest.importorskip("jsonschema")
    import json

    config = rbf.ScenarioConfig()
    config.reps = 8
    config.seed = 3
    records = rbf.run_scenario(config, 2)
    doc = json.loads(rbf.summary_json(records))
    schema_path = os.path.join(
        os.environ["RBF_SOURCE_DIR"], "schemas", "report_summary.schema.json"
    )
    with open(schema_path) as handle:
        schema = json.load(handle)
    jsonschema.validate(doc, schema)


def test_quadrature_matches_closed_form():
    primary = rbf.SourceSummary(4, 0.0, 1.0)
    supplements = [rbf.SourceSummary(4, 0.0, 1.0)]
    model = rbf.ModelConfiguration(1, 1)
    closed = rbf.log_marginal_likelihood(primary, supplements, model)
    spec = rbf.auto_quadrature_spec(primary, supplements)
    quad = rbf.marginal_likelihood_quadrature(primary, supplements, model, spec)
    assert abs(closed - quad) <= 1e-8 * max(1.0, abs(closed))


def test_analyze_fixture():
    config = rbf.AnalyzeConfig()
    config.data_path = os.path.join(os.environ["RBF_SOURCE_DIR"], "data", "app_shaped.csv")
    config.primary_id = "u01"
    config.reps = 5
    config.seed = 2
    result = rbf.run_analyze(config, 2)
    assert len(result.records) == 5
    assert result.source_ids[0] == "u01"
    # a source never supplements itself
    assert result.rbf_borrow_weights[0][0] == 0.0
