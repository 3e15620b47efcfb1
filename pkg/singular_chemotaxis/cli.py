"""Command line entry point.

    singular-chemotaxis simulate CONFIG [--set section.key=value ...]
    singular-chemotaxis sweep CONFIG [--axis mu=1,2,4,8 ...] [--workers N]
    singular-chemotaxis check-conditions --a A --chi CHI --n N
    singular-chemotaxis verify [CONFIG] [--suite fast|full]

Exit status: 0 success, 1 verification failure, 2 usage or configuration error.
"""

import argparse
import json
import logging
import sys

from .config import config_from_dict, load_config
from .errors import ChemotaxisError, ConfigError
from .functions import jsonable
from .runner import condition_report, run_simulate, run_sweep, write_json
from .verification import run_verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog='singular-chemotaxis',
        description='Chemotaxis with singular sensitivity and logistic source: '
                    'simulation, parameter sweeps and verification.')
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    def add_config(p, required=True):
        p.add_argument('config', nargs=None if required else '?',
                       help='YAML experiment configuration')
        p.add_argument('--set', dest='overrides', action='append', default=[],
                       metavar='SECTION.KEY=VALUE', help='override a config value')

    p = sub.add_parser('simulate', help='run one simulation')
    add_config(p)

    p = sub.add_parser('sweep', help='run a parameter sweep')
    add_config(p)
    p.add_argument('--axis', action='append', default=[], metavar='KEY=V1,V2,...',
                   help='sweep axis over a, mu or chi')
    p.add_argument('--workers', type=int, default=None)

    p = sub.add_parser('check-conditions', help='evaluate the boundedness conditions')
    p.add_argument('--a', type=float, required=True)
    p.add_argument('--chi', type=float, required=True)
    p.add_argument('--n', type=int, default=1)

    p = sub.add_parser('verify', help='run the acceptance suite')
    add_config(p, required=False)
    p.add_argument('--suite', choices=['fast', 'full'], default=None)
    p.add_argument('--criteria', type=int, nargs='+', default=None)
    return parser


def _load(args):
    if args.config is None:
        return config_from_dict({'mode': args.command}, args.overrides)
    return load_config(args.config, args.overrides)


def _print(data):
    print(json.dumps(jsonable(data), indent=2, sort_keys=True))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        if args.command == 'check-conditions':
            _print(condition_report(args.a, args.chi, args.n))
            return EXIT_OK
        config = _load(args)
        if args.command == 'simulate':
            summary = run_simulate(config)
            _print({'status': summary['status'], 'fit_status': summary['fit_status'],
                    'output': str(config.output_dir)})
            return EXIT_OK
        if args.command == 'sweep':
            frame = run_sweep(config, args.axis, args.workers)
            print(frame.to_string(index=False))
            return EXIT_OK
        if args.criteria:
            config.verify.criteria = args.criteria
        report = run_verify(config, args.suite)
        config.output_dir.mkdir(parents=True, exist_ok=True)
        write_json(report.as_dict(), config.output_dir / config.output.verify)
        for r in report.results:
            print(f"{r.number:2d} {r.name:28s} {'PASS' if r.passed else 'FAIL'}")
        return EXIT_OK if report.passed else EXIT_VERIFY_FAILED
    except ConfigError as e:
        print(f'config error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except ChemotaxisError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f'I/O error: {e}', file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
