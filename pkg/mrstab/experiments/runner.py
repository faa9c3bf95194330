from mrstab.common.errors import MarginViolation
from mrstab.common.metric_graph import path_from_vertices
from mrstab.common.profiles import is_bounded, fraction_str
from mrstab.estimators.base_estimator import Deadline
from mrstab.estimators.contraction import contraction_profile, contraction_chain_check
from mrstab.estimators.criterion import build_graph_cached, criterion_runner, pullback
from mrstab.estimators.recurrence import RecurrenceProfile, Property5Profile, recurrence_profile, \
    recurrence_constant, property5_constant
from mrstab.estimators.stability import StabilityProfile, stability_profile
from mrstab.experiments.cache import GraphCache
from mrstab.experiments.tables import RunReport
from mrstab.spaces.group_spec import GroupSpec, cayley_ball
from mrstab.spaces.orbits import ambient_oracle
from mrstab.spaces.tilings import tiling_graph, central_segment

from fractions import Fraction
import math
from multiprocessing import Pool
import time

from tqdm import tqdm
import wandb

EXIT_OK = 0
EXIT_CRASH = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_VERDICT = 4
PATH_SCENARIOS = ['recurrence', 'stability', 'contraction', 'property5']


def default_margin(radius, margin=None):
    return Fraction(radius, 4) if margin is None else Fraction(margin)


def axis_path(ball, length):
    """
    The path s^-h, ..., s^(length-h) along the first generator s, h = length // 2, through the identity.
    :return: PathRec in the ball
    """
    oracle = ambient_oracle(ball)
    s = oracle.letters[0]
    half = length // 2
    labels = [oracle.alphabet.format(oracle.normal_form((s,) * k if k >= 0 else (-s,) * -k))
              for k in range(-half, length - half + 1)]
    missing = [l for l in labels if not ball.has_label(l)]
    if missing:
        raise MarginViolation(f'Axis path of length {length} leaves the ball of radius {ball.metadata["radius"]}')
    return path_from_vertices(ball, [ball.vertex_of(l) for l in labels])


def plan_spaces(cfg):
    """
    (tag, size, length) per measured path.
    Groups: every (radius, length) pair whose endpoints stay margin inside the ball; without lengths, the longest
    axis path that does. Tilings: every (layers, length) pair; without lengths, the full central diameter.
    """
    plan = []
    if cfg.tiling is not None:
        for layers in cfg.layers:
            for length in cfg.lengths or [None]:
                plan.append((f'layers{layers}' + ('' if length is None else f'_L{length}'), layers, length))
        return plan
    for R in cfg.radii:
        reach = math.floor(R - default_margin(R, cfg.margin))
        lengths = [L for L in cfg.lengths if L - L // 2 <= reach] if cfg.lengths else [2 * reach]
        plan += [(f'R{R}_L{L}', R, L) for L in lengths if L >= 1]
    if not plan:
        raise MarginViolation(f'No path length in {cfg.lengths} fits the radii {cfg.radii}')
    return plan


def build_space(cfg, size, length, cache):
    ''' The graph and the path a path scenario measures on '''
    if cfg.tiling is not None:
        p, q = cfg.tiling
        g = build_graph_cached(cache, 'tiling', {'p': p, 'q': q, 'layers': size},
                               lambda: tiling_graph(p, q, size, cfg.vertex_cap))
        if length is None:
            length = len(g.metadata['diameter']) - 1
        path = path_from_vertices(g, central_segment(g, length))
    else:
        spec = GroupSpec.parse(cfg.group)
        g = build_graph_cached(cache, 'cayley_ball', {'spec': str(spec), 'radius': size},
                               lambda: cayley_ball(spec, size, cfg.vertex_cap))
        path = axis_path(g, length)
    g.distance_matrix_limit = cfg.distance_matrix_limit
    return g, path


def _measure_path(scenario, cfg, tag, g, p, deadline):
    out = {'profiles': [], 'extra': {}, 'raw': []}
    if scenario == 'recurrence':
        profile = recurrence_profile(g, p, cfg.t, cfg.C, cfg.margin, deadline, RecurrenceProfile(f'recurrence_{tag}'))
        out['profiles'].append(profile)
        first = profile.values(cfg.t[0], cfg.C[0])
        out['raw'].append(first[0] if first else None)
    elif scenario == 'stability':
        profile = StabilityProfile(cfg.mode, name=f'stability_{tag}')
        out['profiles'].append(stability_profile(g, p, cfg.kappa, cfg.lam, cfg.mode, cfg.margin, deadline, profile,
                                                 length=p.endpoint_dist))
    elif scenario == 'contraction':
        for eps in cfg.eps:
            profile = contraction_profile(g, p.verts, eps, margin=cfg.margin, deadline=deadline,
                                          name=f'contraction_{tag}_eps{eps}')
            out['profiles'].append(profile)
            out['extra'][f'{profile.name}_rho'] = profile.contraction_frame()
            chain = None
            if profile.radii:
                chain = contraction_chain_check(profile.envelope(), cfg.t[0], cfg.kappa[0], cfg.lam[0], cfg.C[0],
                                                p.endpoint_dist)
            out['raw'].append((profile.name, profile.verdicts(), chain))
    elif scenario == 'property5':
        for C in cfg.C:
            result = property5_constant(g, p, C, cfg.t[0], cfg.margin, deadline)
            sample = recurrence_constant(g, p, cfg.t[0], C, cfg.margin, deadline)
            out['raw'].append((C, p.endpoint_dist, result, sample))
    return out


def _run_path_job(job):
    ''' One (space, path) measurement; runs in a worker process '''
    scenario, cfg, tag, size, length, cache_root, seconds = job
    cache = GraphCache(cache_root) if cache_root is not None else None
    deadline = Deadline(seconds)
    g, p = build_space(cfg, size, length, cache)
    out = _measure_path(scenario, cfg, tag, g, p, deadline)
    out['tag'] = tag
    out['cache'] = (cache.hits, cache.misses) if cache is not None else (0, 0)
    return out


def _path_report(scenario, cfg, outputs):
    profiles, extra, verdicts = [], {}, {}
    for out in outputs:
        profiles += out['profiles']
        extra.update(out['extra'])
    if scenario == 'recurrence':
        series = [v for out in outputs for v in out['raw'] if v is not None]
        verdicts['m_hat_series'] = series
        verdicts['recurrence'] = 'bounded' if is_bounded(series) else 'unbounded'
    elif scenario == 'stability':
        verdicts['D_hat_max'] = max((s.d_hat for p in profiles for s in p.samples), default=0)
    elif scenario == 'contraction':
        for out in outputs:
            for name, contraction_verdicts, chain in out['raw']:
                verdicts[name] = {**contraction_verdicts, 'chain_check': chain}
    elif scenario == 'property5':
        for C in cfg.C:
            profile = Property5Profile(cfg.t[0], C)
            profile.name = f'property5_C{fraction_str(C)}'
            for out in outputs:
                for C2, distance, result, sample in out['raw']:
                    if C2 == C:
                        profile.add(distance, result, sample)
            profiles.append(profile)
            verdicts[profile.name] = profile.verdicts()
    return profiles, extra, verdicts


def run_scenario(cfg, args):
    """
    Run one validated ExperimentConfig.
    Path scenarios fan out over (space, path) jobs on a worker pool; pullback and relhyp_criterion sweep their radii
    in order. Every job gets what is left of the budget and returns partial profiles when it runs out.
    :return: RunReport
    """
    start = time.monotonic()
    budget = min(args.budget_seconds, cfg.time_seconds or math.inf)
    deadline = Deadline(budget)
    cache = None if args.no_cache else GraphCache(args.cache_dir)
    run_name = f'{cfg.scenario}_{cfg.config_hash[:12]}'
    (args.output / 'wandb').mkdir(parents=True, exist_ok=True)
    run = wandb.init(project='mrstab', entity=args.wandb_ent, dir=str(args.output / 'wandb'), reinit=True,
                     name=run_name, mode=args.wandb_mode, config=cfg.to_dict())
    print(f'Running {cfg.scenario} ({run_name})')

    extra, failure, cache_counts = {}, False, [0, 0]
    if cfg.scenario in PATH_SCENARIOS:
        plan = plan_spaces(cfg)
        jobs = [(cfg.scenario, cfg, tag, size, length, None if cache is None else cache.root, deadline.remaining())
                for tag, size, length in plan]
        outputs = []
        with tqdm(total=len(jobs)) as pbar:
            if args.threads > 1:
                with Pool(args.threads) as pool:
                    for out in pool.imap(_run_path_job, jobs):
                        outputs.append(out)
                        pbar.update(1)
            else:
                for job in jobs:
                    outputs.append(_run_path_job(job))
                    pbar.update(1)
        for i, out in enumerate(outputs):
            cache_counts = [cache_counts[0] + out['cache'][0], cache_counts[1] + out['cache'][1]]
            wandb.log({'job': i, 'n_profiles': len(out['profiles'])})
        profiles, extra, verdicts = _path_report(cfg.scenario, cfg, outputs)
    else:
        with tqdm(total=len(cfg.radii)) as pbar:
            if cfg.scenario == 'pullback':
                report = pullback(cfg.group, cfg.peripherals, cfg.subgroup, cfg.radii, cfg.target, cfg.t[0], cfg.C[0],
                                  cfg.margin, cache, cfg.vertex_cap, deadline, progress=lambda: pbar.update(1))
            else:
                report = criterion_runner(cfg.group, cfg.peripherals, cfg.subgroup, cfg.radii, cfg.t[0], cfg.C[0],
                                          cfg.margin, cfg.delta_samples, cfg.seed, cache, cfg.vertex_cap, deadline,
                                          progress=lambda: pbar.update(1))
                extra = {f'peripheral_diam_R{R}': table.to_frame() for R, table in report.diam_tables.items()}
        for record in report.records:
            wandb.log({k: float(v) for k, v in record.items() if k != 'witness_id'})
        profiles = [report]
        verdicts = {report.name: report.verdicts()}
        failure = verdicts[report.name]['failure']

    wall = time.monotonic() - start
    flat = {f'{name}/{k}': v for name, vs in verdicts.items() if isinstance(vs, dict)
            for k, v in vs.items() if isinstance(v, (int, float, str, bool))}
    wandb.log({**flat, 'wall_seconds': wall})
    run.finish()
    if cache is not None:
        cache_counts = [cache_counts[0] + cache.hits, cache_counts[1] + cache.misses]
    timings = {'wall_seconds': round(wall, 3), 'budget_seconds': budget, 'cache_hits': cache_counts[0],
               'cache_misses': cache_counts[1]}
    return RunReport.from_profiles(cfg.scenario, cfg, profiles, extra, verdicts, failure, timings)


def exit_status(report):
    if report.failure:
        return EXIT_VERDICT
    if not report.complete:
        return EXIT_BUDGET
    return EXIT_OK
