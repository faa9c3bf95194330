from mrstab.common.errors import ConfigInvalid
from mrstab.common.profiles import parse_rational, fraction_str

import argparse
import configparser
from dataclasses import dataclass, field
import hashlib
import json
import os
from pathlib import Path

SCENARIOS = ['recurrence', 'stability', 'contraction', 'property5', 'pullback', 'relhyp_criterion']
COMMANDS = ['run', 'cache', 'report']
CACHE_ENV_VAR = 'MRSTAB_CACHE_DIR'
# Config fields that determine the results; anything else (output location, threads) does not enter the hash
CONFIG_KEYS_TO_HASH = ['scenario', 'group', 'tiling', 'peripherals', 'subgroup', 't', 'C', 'kappa', 'lam', 'eps',
                       'radii', 'lengths', 'layers', 'mode', 'target', 'margin', 'seed', 'vertex_cap',
                       'distance_matrix_limit', 'delta_samples']


def default_cache_dir():
    return Path(os.environ.get(CACHE_ENV_VAR, Path.home() / '.cache' / 'mrstab'))


def get_arguments(additional_args=[], argv=None):
    """
    Arguments for the mrstab command line
    :return: argparse namespace
    """
    parser = argparse.ArgumentParser(description='Effective stability experiments on finite metric graphs')
    parser.add_argument('command', type=str, choices=COMMANDS,
                        help='"run <config>", "cache ls|rm" or "report <run dir>"')
    parser.add_argument('target', type=str, nargs='?', default='',
                        help='Config path for run, ls/rm for cache, run directory for report')
    parser.add_argument('--threads', type=int, default=1, help='Worker processes for independent measurements')
    parser.add_argument('--budget-seconds', type=float, default=600,
                        help='Wall-clock budget; estimators return partial profiles when it runs out')
    parser.add_argument('--output', type=str, default=None,
                        help='Directory that receives run subdirectories. Default: the config\'s output, else runs')
    parser.add_argument('--no-cache', action='store_true', help='Build every graph from scratch')
    parser.add_argument('--cache-dir', type=str, default=None,
                        help=f'Graph cache root. Default: ${CACHE_ENV_VAR} or ~/.cache/mrstab')
    parser.add_argument('--wandb-mode', type=str, default='disabled',
                        help='Wandb mode. One of ["online", "offline", "disabled"]')
    parser.add_argument('--wandb-ent', type=str, default=None, help='Wandb entity to log to.')

    for parser_arg, parser_kwargs in additional_args:
        parser.add_argument(parser_arg, **parser_kwargs)

    args = parser.parse_args(argv)
    args.output = Path(args.output) if args.output else None
    args.cache_dir = Path(args.cache_dir) if args.cache_dir else default_cache_dir()
    if args.threads < 1:
        raise ValueError(f'--threads must be at least 1, got {args.threads}')
    if args.budget_seconds <= 0:
        raise ValueError(f'--budget-seconds must be positive, got {args.budget_seconds}')
    if args.wandb_mode not in ['online', 'offline', 'disabled']:
        raise ValueError(f'Unknown wandb mode {args.wandb_mode}')
    if args.command in ['run', 'report'] and not args.target:
        raise ValueError(f'{args.command} needs a target')
    if args.command == 'cache' and args.target not in ['ls', 'rm']:
        raise ValueError(f'cache takes ls or rm, got {args.target!r}')
    return args


def _split(value, cast=str):
    return [cast(v.strip()) for v in value.split(',') if v.strip()]


@dataclass
class ExperimentConfig:
    """
    One scenario with its spaces, parameter grids, seed and budgets.
    Spaces are either a group (ball radii, optional path lengths) or a {p,q} tiling (layer counts, path lengths).
    Rationals are held as Fractions.
    """
    scenario: str
    group: str = None
    tiling: tuple = None
    peripherals: list = field(default_factory=list)
    subgroup: list = field(default_factory=list)
    t: list = field(default_factory=lambda: [parse_rational('1/3')])
    C: list = field(default_factory=lambda: [parse_rational(2), parse_rational(3), parse_rational(5)])
    kappa: list = field(default_factory=lambda: [parse_rational(1)])
    lam: list = field(default_factory=lambda: [parse_rational(0)])
    eps: list = field(default_factory=lambda: [1])
    radii: list = field(default_factory=list)
    lengths: list = field(default_factory=list)
    layers: list = field(default_factory=list)
    mode: str = 'probe'
    target: str = 'cusp'
    margin: object = None
    seed: int = 0
    vertex_cap: int = 200000
    time_seconds: float = None
    distance_matrix_limit: int = 20000
    delta_samples: int = 2000
    output: str = None
    source: str = ''

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigInvalid(f'Unknown scenario {self.scenario!r}. try: {", ".join(SCENARIOS)}')
        for name in ['t', 'C', 'kappa', 'lam', 'eps']:
            if not getattr(self, name):
                raise ConfigInvalid(f'Grid dimension {name} is empty')
        sizes = self.layers if self.tiling else self.radii
        if not sizes:
            raise ConfigInvalid('Need radii (group scenarios) or layers (tiling scenarios)')
        if any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
            raise ConfigInvalid(f'Radii and layers must be positive and increasing, got {sizes}')
        if self.group is None and self.tiling is None:
            raise ConfigInvalid('Config needs a [group] spec or a [tiling] section')
        if self.scenario in ['pullback', 'relhyp_criterion']:
            if self.group is None or not self.peripherals or not self.subgroup:
                raise ConfigInvalid(f'{self.scenario} needs a group, at least one peripheral and subgroup generators')
        if self.time_seconds is not None and self.time_seconds <= 0:
            raise ConfigInvalid(f'time_seconds must be positive, got {self.time_seconds}')
        if self.group is not None:
            # import here: spaces depend on common, not the other way around
            from mrstab.spaces.group_spec import GroupSpec
            try:
                GroupSpec.parse(self.group)
            except (ValueError, NotImplementedError) as e:
                raise ConfigInvalid(f'Could not resolve group spec {self.group!r}\nFull Error: {e}')
        return self

    def to_dict(self):
        def plain(v):
            if isinstance(v, (list, tuple)):
                return [plain(x) for x in v]
            return fraction_str(v) if hasattr(v, 'denominator') and not isinstance(v, int) else v
        return {k: plain(getattr(self, k)) for k in CONFIG_KEYS_TO_HASH}

    @property
    def config_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode()).hexdigest()


def load_config(path):
    """
    Read an INI experiment config.
    Sections: [experiment] scenario, seed, mode, target, margin, output; [group] spec; [tiling] p, q;
    [peripheral] peripheral / peripheral_1 / ...; [subgroup] generators; [grid] t, C, kappa, lambda, eps, radii,
    lengths, layers; [budget] vertex_cap, time_seconds, distance_matrix_limit, delta_samples.
    :return: validated ExperimentConfig
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        text = path.read_text()
        parser.read_string(text, source=str(path))
    except (OSError, configparser.Error) as e:
        raise ConfigInvalid(f'Could not read config {path}\nFull Error: {e}')
    if not parser.has_section('experiment'):
        raise ConfigInvalid(f'{path} has no [experiment] section')
    try:
        exp = parser['experiment']
        cfg = ExperimentConfig(scenario=exp.get('scenario', '').strip(), source=text)
        cfg.seed = exp.getint('seed', 0)
        cfg.mode = exp.get('mode', cfg.mode).strip()
        cfg.target = exp.get('target', cfg.target).strip()
        cfg.output = exp.get('output', None)
        if 'margin' in exp:
            cfg.margin = parse_rational(exp['margin'])
        if parser.has_section('group'):
            cfg.group = parser['group']['spec'].strip()
        if parser.has_section('tiling'):
            cfg.tiling = (parser['tiling'].getint('p'), parser['tiling'].getint('q'))
        if parser.has_section('peripheral'):
            cfg.peripherals = [v.strip() for k, v in sorted(parser['peripheral'].items()) if k.startswith('peripheral')]
        if parser.has_section('subgroup'):
            cfg.subgroup = _split(parser['subgroup']['generators'])
        if parser.has_section('grid'):
            grid = parser['grid']
            for key, name in [('t', 't'), ('C', 'C'), ('kappa', 'kappa'), ('lambda', 'lam')]:
                if key in grid:
                    setattr(cfg, name, _split(grid[key], parse_rational))
            for key in ['eps', 'radii', 'lengths', 'layers']:
                if key in grid:
                    setattr(cfg, key, _split(grid[key], int))
        if parser.has_section('budget'):
            budget = parser['budget']
            cfg.vertex_cap = budget.getint('vertex_cap', cfg.vertex_cap)
            cfg.time_seconds = budget.getfloat('time_seconds', None)
            cfg.distance_matrix_limit = budget.getint('distance_matrix_limit', cfg.distance_matrix_limit)
            cfg.delta_samples = budget.getint('delta_samples', cfg.delta_samples)
    except (KeyError, ValueError) as e:
        if isinstance(e, ConfigInvalid):
            raise
        raise ConfigInvalid(f'Bad value in {path}\nFull Error: {e}')
    return cfg.validate()


def get_config_to_save(cfg):
    return cfg.to_dict()


def set_config_from_load(loaded, cfg):
    ''' Restore hashed fields from a stored report '''
    for key in CONFIG_KEYS_TO_HASH:
        value = loaded[key]
        if key in ['t', 'C', 'kappa', 'lam', 'margin'] and value is not None:
            value = [parse_rational(v) for v in value] if isinstance(value, list) else parse_rational(value)
        if key == 'tiling' and value is not None:
            value = tuple(value)
        setattr(cfg, key, value)
    return cfg
