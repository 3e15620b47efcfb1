from pathlib import Path

import pytest
from ruamel.yaml import YAML

from singular_chemotaxis.config import (ExperimentConfig, apply_overrides,
                                        config_from_dict, dump_config, load_config)
from singular_chemotaxis.errors import ConfigError
from singular_chemotaxis.integrator import StepControl

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


@pytest.mark.parametrize('path', sorted(CONFIG_DIR.glob('*.yaml')), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    config = load_config(path)
    assert isinstance(config, ExperimentConfig)


def test_defaults():
    config = config_from_dict(None)
    assert config.mode == 'simulate'
    assert config.model.to_params().steady == 0.5
    assert config.grid.to_grid().cells == (64,)
    assert config.step.to_control() == StepControl()
    assert config.run.interface_mean == 'arithmetic'
    assert config.output_dir == Path('results')


def test_overrides():
    config = config_from_dict({'model': {'mu': 2.0}},
                              ['model.mu=4', 'run.snapshot_every=null',
                               'output.directory=out/x', 'step.fixed_step=true'])
    assert config.model.mu == 4.0
    assert config.run.snapshot_every is None
    assert config.output.directory == 'out/x'
    assert config.step.fixed_step is True


def test_override_creates_sections():
    payload = apply_overrides({}, ['sweep.axes.mu.values=[1, 2]'])
    assert payload == {'sweep': {'axes': {'mu': {'values': [1, 2]}}}}
    assert config_from_dict(payload).sweep.axes['mu'].values == [1.0, 2.0]


@pytest.mark.parametrize('override', ['model.mu', '=3', 'model.a.b=1'])
def test_bad_overrides(override):
    with pytest.raises(ConfigError):
        config_from_dict({'model': {'a': 1.0}}, [override])


@pytest.mark.parametrize('data', [
    {'model': {'nu': 1.0}},
    {'mode': 'plot'},
    {'run': {'interface_mean': 'geometric'}},
    {'grid': {'extents': [1.0, 1.0], 'cells': [8]}},
    {'model': {'dim': 2}},
    {'sweep': {'axes': {'mu': {'spacing': 'linear', 'stop': 4.0}}}},
    {'sweep': {'axes': {'kappa': {'values': [1.0]}}}},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_verify_mode_ignores_grid_dimension():
    config = config_from_dict({'mode': 'verify', 'model': {'dim': 2}})
    assert config.verify.suite == 'fast'


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'missing.yaml')
    broken = tmp_path / 'broken.yaml'
    broken.write_text('model: {a: 1.0\n')
    with pytest.raises(ConfigError):
        load_config(broken)
    listing = tmp_path / 'list.yaml'
    listing.write_text('- 1\n- 2\n')
    with pytest.raises(ConfigError):
        load_config(listing)


def test_empty_file_is_default(tmp_path):
    empty = tmp_path / 'empty.yaml'
    empty.write_text('')
    assert load_config(empty) == config_from_dict({})


def test_dump_config_reloads():
    config = config_from_dict({'model': {'mu': 3.0}, 'sweep': {'axes': {'chi': {'values': [0.5]}}}})
    data = YAML(typ='safe').load(dump_config(config))
    assert config_from_dict(data) == config
