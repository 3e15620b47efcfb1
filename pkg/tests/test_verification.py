import dataclasses

import pytest

from singular_chemotaxis.config import VerifyConfig, config_from_dict
from singular_chemotaxis.grid_ops import chemotactic_divergence_array
from singular_chemotaxis.verification import (SUITES, criterion_algebra,
                                              criterion_conservation, criterion_oracle,
                                              criterion_order, criterion_rhs, run_verify)

FAST = SUITES['fast']


@pytest.fixture
def vcfg():
    return VerifyConfig()


def test_oracle_criterion(vcfg):
    result = criterion_oracle(vcfg, FAST)
    assert result.passed, result.measured
    assert result.measured['u_ref'] == pytest.approx(0.3222, abs=1e-4)
    assert result.measured['err_u'] < 1e-10


def test_order_criterion(vcfg):
    result = criterion_order(vcfg, FAST)
    assert result.passed, result.measured
    assert result.measured['laplacian_order'] == pytest.approx(2.0, abs=0.2)
    assert result.measured['time_order'] == pytest.approx(4.0, abs=0.3)


def test_conservation_criterion(vcfg):
    sizes = dataclasses.replace(FAST, conservation_steps=200)
    result = criterion_conservation(vcfg, sizes)
    assert result.passed, result.measured
    assert result.measured['relative_drift'] <= 1e-12


def test_conservation_catches_leaky_divergence(vcfg):
    """Dropping the last cell's transport term must show up as mass drift"""
    def leaky(u, v, chi, h, interface_mean):
        out = chemotactic_divergence_array(u, v, chi, h, interface_mean)
        out[-1] = 0.0
        return out

    sizes = dataclasses.replace(FAST, conservation_steps=50)
    result = criterion_conservation(vcfg, sizes, divergence=leaky)
    assert not result.passed
    assert result.measured['relative_drift'] > 1e-12


def test_algebra_criterion(vcfg):
    result = criterion_algebra(vcfg, FAST)
    assert result.passed, result.measured['errors']


def test_rhs_criterion(vcfg):
    result = criterion_rhs(vcfg, dataclasses.replace(FAST, rhs_states=50))
    assert result.passed, result.measured
    assert result.measured['states'] == 50


def test_run_verify_selected_criteria(tmp_path):
    config = config_from_dict({'mode': 'verify', 'verify': {'criteria': [9, 10]},
                               'output': {'directory': str(tmp_path)}})
    report = run_verify(config)
    assert report.passed
    assert [r.number for r in report.results] == [9, 10]
    assert report.as_dict()['suite'] == 'fast'


@pytest.mark.slow
@pytest.mark.parametrize('criteria', [[4, 5], [6], [7, 8]])
def test_run_verify_simulation_criteria(tmp_path, criteria):
    config = config_from_dict({'mode': 'verify', 'verify': {'criteria': criteria},
                               'output': {'directory': str(tmp_path)}})
    report = run_verify(config, suite='fast')
    assert [r.number for r in report.results] == criteria
    for result in report.results:
        assert result.passed, (result.name, result.measured, result.error)
