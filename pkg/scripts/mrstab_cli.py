from mrstab.common.arguments import get_arguments, load_config
from mrstab.common.errors import ConfigInvalid, BudgetExceeded
from mrstab.experiments.cache import GraphCache
from mrstab.experiments.runner import run_scenario, exit_status, EXIT_OK, EXIT_CRASH, EXIT_CONFIG, EXIT_BUDGET
from mrstab.experiments.tables import emit_tables, load_report

from pathlib import Path
import sys
import traceback


def run(args):
    cfg = load_config(args.target)
    args.output = args.output or Path(cfg.output or 'runs')
    report = run_scenario(cfg, args)
    run_dir = emit_tables(report, args.output)
    print(f'Wrote {run_dir}')
    for name, verdicts in report.verdicts.items():
        print(f'  {name}: {verdicts}')
    if not report.complete:
        print('Budget ran out: some profiles are partial')
    return exit_status(report)


def cache(args):
    store = GraphCache(args.cache_dir)
    if args.target == 'ls':
        entries = store.ls()
        for name, size in entries:
            print(f'{size:>12}  {name}')
        print(f'{len(entries)} cached graphs in {store.root}')
    else:
        print(f'Removed {store.rm()} cached graphs from {store.root}')
    return EXIT_OK


def report(args):
    stored = load_report(args.target)
    args.output = args.output or Path(args.target).parent
    run_dir = emit_tables(stored, args.output)
    print(f'Re-emitted {stored.run_name} into {run_dir}')
    return exit_status(stored)


def main(argv=None):
    try:
        args = get_arguments(argv=argv)
    except ValueError as e:
        print(f'Invalid arguments: {e}')
        return EXIT_CONFIG
    try:
        return {'run': run, 'cache': cache, 'report': report}[args.command](args)
    except ConfigInvalid as e:
        print(f'Invalid config: {e}')
        return EXIT_CONFIG
    except BudgetExceeded as e:
        print(f'Budget exceeded: {e}')
        return EXIT_BUDGET
    except Exception:
        traceback.print_exc()
        return EXIT_CRASH


if __name__ == '__main__':
    sys.exit(main())
