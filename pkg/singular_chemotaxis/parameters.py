import itertools
import random
import re

import numpy as np

from .errors import ConfigError
from .functions import np_gen


###############################################################################
#  PARAMETERS
###############################################################################
#
# Sweep axes over the model parameters (a, mu, chi).
#
# Each axis yields a finite list of values; Parameters combines the axes
# into the cartesian grid of sweep points, numbered in row-major order of
# the axes as they were added.
#
# Example:
#
# parameters = Parameters({
#     "a": 1.0,
#     "mu": Values([1, 2, 4, 8]),
#     "chi": Linear(0.1, 1.5, 8),
# })
#
# Plain values are fixed for the whole sweep. <<key>> in output templates is
# replaced by the value of the point, see format_parameters.
#

def format_parameters(parameters, string):
    re_sub = re.compile(r'<<(\w+)>>')

    def value_str(key):
        p = parameters[key]
        if isinstance(p, float):
            return f'{p:g}'
        return str(p)
    return re_sub.sub(lambda m: value_str(m.group(1)), string)


class Parameter:
    # All values of the axis, in sweep order.
    def values(self):
        raise NotImplementedError

    def __len__(self):
        return len(self.values())

    def __str__(self):
        return ','.join(f'{v:g}' for v in self.values())

    def __repr__(self):
        return 'Parameter{}'


class Values(Parameter):
    def __init__(self, values):
        values = [float(v) for v in values]
        if not values:
            raise ConfigError('an axis needs at least one value')
        self._values = values

    def __repr__(self):
        return f'Values({self._values})'

    def values(self):
        return list(self._values)


class Linear(Parameter):
    def __init__(self, start, stop, num):
        self.start = float(start)
        self.stop = float(stop)
        self.num = int(num)

    def __repr__(self):
        return f'{self.__class__.__name__}(start={self.start}, stop={self.stop}, num={self.num})'

    def values(self):
        return [float(x) for x in np.linspace(self.start, self.stop, self.num)]


class Geometric(Linear):
    def values(self):
        if not (self.start > 0 and self.stop > 0):
            raise ConfigError('geometric axis needs positive start and stop')
        return [float(x) for x in np.geomspace(self.start, self.stop, self.num)]


class Decades(Parameter):
    """1, 2, 5, 10, 20, ... up to and including max_p, times scale."""
    def __init__(self, max_p, scale=1.0):
        self.max_p = max_p
        self.scale = float(scale)

    def __repr__(self):
        return f'Decades(max={self.max_p}, scale={self.scale})'

    def values(self):
        return [self.scale * n for n in np_gen(self.max_p)]


class RandomValue(Parameter):
    # Same seed, same draws
    def __init__(self, lower, upper, num, seed=None):
        self.lower = float(lower)
        self.upper = float(upper)
        self.num = int(num)
        self.seed = seed

    def __repr__(self):
        return f'RandomValue({self.lower}..{self.upper}, num={self.num}, seed={self.seed})'

    def values(self):
        rnd = random.Random(self.seed)
        return [rnd.uniform(self.lower, self.upper) for _ in range(self.num)]


def parse_values(text):
    try:
        values = [float(x) for x in str(text).split(',') if x.strip()]
    except ValueError as e:
        raise ConfigError(f'invalid axis values {text!r}') from e
    if not values:
        raise ConfigError(f'invalid axis values {text!r}')
    return values


def axis_from_config(axis):
    """Build a Parameter from a config.AxisConfig."""
    if axis.values is not None:
        return Values(axis.values)
    if axis.spacing == 'geometric':
        return Geometric(axis.start, axis.stop, axis.num)
    if axis.spacing == 'decades':
        return Decades(axis.stop, axis.start or 1.0)
    if axis.spacing == 'random':
        return RandomValue(axis.start, axis.stop, axis.num, axis.seed)
    return Linear(axis.start, axis.stop, axis.num)


"""
class Parameters is a dict of fixed values and Parameter axes.
points() enumerates the sweep grid; each point is a plain dict that can also
be used to fill <<x>> templates.
"""


class Parameters(dict):
    def set(self, d):
        for k, v in d.items():
            if isinstance(v, str):
                values = parse_values(v)
                self[k] = values[0] if len(values) == 1 else Values(values)
            else:
                self[k] = v

    def __missing__(self, key):
        return "<<" + key + ">>"

    def update_cmdline(self, cmd_p):
        if cmd_p is None:
            return
        if isinstance(cmd_p, str):
            cmd_p = [cmd_p]
        if not isinstance(cmd_p, list):
            raise TypeError(f'Invalid type: {type(cmd_p)}')
        for p in cmd_p:
            k, sep, v = p.partition('=')
            if not sep or not k:
                raise ConfigError(f'invalid axis {p!r}; expected key=v1,v2,...')
            self.set({k.strip(): v})

    def axes(self):
        return {k: v for k, v in self.items() if isinstance(v, Parameter)}

    def points(self):
        """All sweep points as dicts with an 'index' key, row-major over
        the axes in insertion order."""
        keys = list(self.keys())
        columns = [v.values() if isinstance(v, Parameter) else [v]
                   for v in self.values()]
        return [dict(zip(keys, combo), index=i)
                for i, combo in enumerate(itertools.product(*columns))]

    def n_points(self):
        n = 1
        for v in self.values():
            if isinstance(v, Parameter):
                n *= len(v)
        return n
