"""Experiment configuration: one YAML file per experiment, validated by pydantic.

Every section has working defaults, so an empty file (or no file at all for
`verify`) is a valid configuration. Overrides use dotted paths,
`section.key=value`, with the value parsed as a YAML scalar.
"""

import io
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from .errors import ConfigError
from .grid_ops import Grid
from .integrator import StepControl
from .model_core import Params

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class ModelConfig(_Section):
    a: float = 1.0
    mu: float = 2.0
    chi: float = 0.5
    dim: int = 1

    def to_params(self) -> Params:
        return Params(self.a, self.mu, self.chi, self.dim)


class GridConfig(_Section):
    extents: List[float] = Field(default_factory=lambda: [10.0])
    cells: List[int] = Field(default_factory=lambda: [64])

    def to_grid(self) -> Grid:
        return Grid(tuple(self.extents), tuple(self.cells))


class StepConfig(_Section):
    dt_init: float = 1e-2
    dt_min: float = 1e-10
    safety: float = 0.9
    cfl_diff: float = 0.2
    v_floor: float = 1e-10
    u_cap: float = 1e6
    fixed_step: bool = False
    grow_after: int = 20
    grow_factor: float = 1.25

    def to_control(self) -> StepControl:
        return StepControl(**self.model_dump())


class RunConfig(_Section):
    horizon: float = 50.0
    sample_every: float = 0.5
    tol: float = 1e-6
    stop_on_convergence: bool = True
    snapshot_every: Optional[float] = None
    interface_mean: Literal['arithmetic', 'harmonic'] = 'arithmetic'
    # multiply u0 and v0 by mu**(-1/(kappa-q0))
    scale_initial: bool = False


class FieldSpec(_Section):
    """One initial field. Unused keys of other generators are ignored."""
    generator: Literal['constant', 'gaussian-bump', 'random-fourier'] = 'constant'
    value: float = 1.0
    center: Optional[List[float]] = None
    width: float = 1.0
    height: float = 1.0
    floor: float = 0.0
    offset: float = 1.0
    amplitude: float = 0.3
    modes: int = 3
    scale: float = 1.0
    seed: Optional[int] = None


class InitialConfig(_Section):
    seed: int = 0
    u: FieldSpec = Field(default_factory=FieldSpec)
    v: FieldSpec = Field(default_factory=FieldSpec)


class DiagnosticsConfig(_Section):
    eta0: Optional[float] = None
    L: Optional[float] = None
    lyapunov_slack: float = 0.2
    lyapunov_abs_tol: float = 1e-8
    decay_delta: float = 0.25
    decay_floor: Optional[float] = None
    min_samples: int = 8
    mass_rel_tol: float = 0.01
    dissipation_window: float = 1.0


class OutputConfig(_Section):
    directory: str = 'results'
    trajectory: str = 'trajectory.csv'
    summary: str = 'summary.json'
    sweep: str = 'sweep.csv'
    verify: str = 'verify.json'
    write_fields: bool = False
    # per-point trajectory file name, e.g. 'point_<<index>>_mu<<mu>>.csv'
    point_trajectory: Optional[str] = None


class AxisConfig(_Section):
    """A sweep axis: explicit values, a linear/geometric range, 1-2-5
    decades up to `stop`, or `num` seeded uniform draws."""
    values: Optional[List[float]] = None
    spacing: Literal['linear', 'geometric', 'decades', 'random'] = 'linear'
    start: Optional[float] = None
    stop: Optional[float] = None
    num: int = 2
    seed: Optional[int] = None

    @model_validator(mode='after')
    def _check_range(self):
        if self.values is None:
            if self.stop is None or (self.spacing != 'decades' and self.start is None):
                raise ValueError('axis needs values, or start/stop')
            if self.num < 1:
                raise ValueError('num must be >= 1')
        elif not self.values:
            raise ValueError('axis values must not be empty')
        return self


class SweepConfig(_Section):
    axes: Dict[Literal['a', 'mu', 'chi'], AxisConfig] = Field(default_factory=dict)
    workers: int = 1
    executor: Literal['process', 'thread'] = 'process'


class VerifyConfig(_Section):
    suite: Literal['fast', 'full'] = 'fast'
    criteria: Optional[List[int]] = None
    seeds: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    workers: int = 1
    oracle_tol: float = 1e-6
    space_order: float = 2.0
    space_order_tol: float = 0.2
    time_order: float = 4.0
    time_order_tol: float = 0.3
    conservation_tol: float = 1e-12
    refinement_band: float = 2.0
    eta_rel_tol: float = 0.2
    scaling_band: float = 3.0
    final_dev_tol: float = 1e-6
    algebra_tol: float = 1e-9
    rhs_tol: float = 1e-14


class ExperimentConfig(_Section):
    mode: Literal['simulate', 'sweep', 'check-conditions', 'verify'] = 'simulate'
    model: ModelConfig = Field(default_factory=ModelConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    step: StepConfig = Field(default_factory=StepConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)

    @model_validator(mode='after')
    def _check_grid(self):
        if len(self.grid.extents) != len(self.grid.cells):
            raise ValueError('grid.extents and grid.cells differ in length')
        if self.mode in ('simulate', 'sweep') and len(self.grid.cells) != self.model.dim:
            raise ValueError(
                f'grid has {len(self.grid.cells)} axes but model.dim={self.model.dim}')
        return self

    @property
    def output_dir(self) -> Path:
        return Path(self.output.directory)


###############################################################################
#  LOADING
###############################################################################

def _parse_scalar(text: str) -> Any:
    value = YAML(typ='safe').load(io.StringIO(text))
    return text if value is None and text.strip() not in ('null', '~', '') else value


def apply_overrides(payload: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply `section.key=value` overrides to a raw configuration mapping."""
    for item in overrides or ():
        path, sep, text = item.partition('=')
        parts = [p for p in path.strip().split('.') if p]
        if not sep or not parts:
            raise ConfigError(f"invalid override '{item}'; expected section.key=value")
        target = payload
        for segment in parts[:-1]:
            node = target.get(segment)
            if node is None:
                node = target[segment] = {}
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override '{item}': '{segment}' is not a section")
            target = node
        try:
            target[parts[-1]] = _parse_scalar(text)
        except YAMLError as e:
            raise ConfigError(f"invalid value in override '{item}': {e}") from e
    return payload


def config_from_dict(data: Optional[Dict[str, Any]],
                     overrides: Optional[Sequence[str]] = None) -> ExperimentConfig:
    data = dict(data or {})
    if overrides:
        data = apply_overrides(data, overrides)
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_config(path, overrides: Optional[Sequence[str]] = None) -> ExperimentConfig:
    """Load a YAML configuration file into an ExperimentConfig.

    Raises:
        ConfigError: Missing or unreadable file, YAML syntax error, or a
            value that fails validation.
    """
    source = Path(path)
    try:
        with source.open('r', encoding='utf-8') as fh:
            data = YAML(typ='safe').load(fh)
    except OSError as e:
        raise ConfigError(f'cannot read config {source}: {e}') from e
    except YAMLError as e:
        raise ConfigError(f'invalid YAML in {source}: {e}') from e
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f'{source}: top level must be a mapping')
    logger.info('loaded config %s', source)
    return config_from_dict(data, overrides)


def dump_config(config: ExperimentConfig) -> str:
    buf = io.StringIO()
    yaml = YAML(typ='safe')
    yaml.default_flow_style = False
    yaml.dump(config.model_dump(), buf)
    return buf.getvalue()
