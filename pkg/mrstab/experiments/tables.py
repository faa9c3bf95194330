from mrstab.common.errors import IoFailure
from mrstab.estimators.base_estimator import PROFILE_COLUMNS, PLOT_COLUMNS, format_value

import json
from pathlib import Path

import pandas as pd

# Bump when a CSV column set or the summary.json layout changes (documented in docs/OUTPUTS.md)
SCHEMA_VERSION = 1
REPORT_FILE = 'report.json'
SUMMARY_FILE = 'summary.json'
PLOT_FILE = 'plot_data.csv'
WITNESS_FILE = 'witnesses.txt'


class RunReport:
    """
    Everything a run produced, already rendered to text cells: one profile table per measured profile, extra tables
    (contraction r/rho_hat/rho_bar, peripheral diameters), long-format plot data, the witness index and the verdicts.
    :param config: echo of the hashed config fields
    :param timings: wall-clock and budget accounting (kept out of the CSVs)
    """
    def __init__(self, scenario, config, config_hash, tables, extra_tables, plot, witnesses, verdicts,
                 complete=True, failure=False, timings=None):
        self.scenario = scenario
        self.config = config
        self.config_hash = config_hash
        self.tables = tables
        self.extra_tables = extra_tables
        self.plot = plot
        self.witnesses = witnesses
        self.verdicts = verdicts
        self.complete = complete
        self.failure = failure
        self.timings = timings or {}

    @classmethod
    def from_profiles(cls, scenario, cfg, profiles, extra_tables=None, verdicts=None, failure=False, timings=None):
        tables = {p.name: p.to_frame() for p in profiles}
        plots = [p.plot_frame() for p in profiles]
        plot = pd.concat(plots, ignore_index=True) if plots else pd.DataFrame(columns=PLOT_COLUMNS)
        witnesses = {}
        for p in profiles:
            witnesses.update(p.witnesses)
        if verdicts is None:
            verdicts = {p.name: p.verdicts() for p in profiles}
        return cls(scenario, cfg.to_dict(), cfg.config_hash, tables, extra_tables or {}, plot, witnesses, verdicts,
                   all(p.complete for p in profiles), failure, timings)

    @property
    def run_name(self):
        return f'{self.scenario}_{self.config_hash[:12]}'

    def to_json(self):
        def records(frames):
            return {name: {'columns': list(df.columns), 'rows': df.astype(str).values.tolist()}
                    for name, df in frames.items()}
        payload = {'schema_version': SCHEMA_VERSION, 'scenario': self.scenario, 'config': self.config,
                   'config_hash': self.config_hash, 'tables': records(self.tables),
                   'extra_tables': records(self.extra_tables), 'plot': records({'plot': self.plot})['plot'],
                   'witnesses': self.witnesses, 'verdicts': self.verdicts, 'complete': self.complete,
                   'failure': self.failure, 'timings': self.timings}
        return json.dumps(payload, sort_keys=True, indent=2, default=format_value)

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        if payload.get('schema_version') != SCHEMA_VERSION:
            raise IoFailure(f'Stored report has schema version {payload.get("schema_version")}, '
                            f'this version reads {SCHEMA_VERSION}')
        frames = lambda d: {name: pd.DataFrame(t['rows'], columns=t['columns']) for name, t in d.items()}
        plot = pd.DataFrame(payload['plot']['rows'], columns=payload['plot']['columns'])
        return cls(payload['scenario'], payload['config'], payload['config_hash'], frames(payload['tables']),
                   frames(payload['extra_tables']), plot, payload['witnesses'], payload['verdicts'],
                   payload['complete'], payload['failure'], payload['timings'])


def _write_csv(df, path, columns):
    df = df if len(df.columns) else pd.DataFrame(columns=columns)
    df.to_csv(path, index=False)
    return len(df)


def emit_tables(report, output):
    """
    Write a run into output/<scenario>_<config hash>/:
      <profile>.csv     columns quantity,param_1,param_2,value,witness_id
      <extra>.csv       e.g. contraction tables with columns r,rho_hat,rho_bar sorted by r
      plot_data.csv     columns quantity,x,y,series
      witnesses.txt     one "<witness id>: v0 v1 ..." line per witness
      summary.json      verdicts, row counts and the tables that came out empty
      report.json       the whole report, readable by load_report
    Empty tables are written header-only and listed under zero_row_tables.
    :return: the run directory
    """
    run_dir = Path(output) / report.run_name
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        row_counts = {}
        for name, df in sorted(report.tables.items()):
            row_counts[f'{name}.csv'] = _write_csv(df, run_dir / f'{name}.csv', PROFILE_COLUMNS)
        for name, df in sorted(report.extra_tables.items()):
            row_counts[f'{name}.csv'] = _write_csv(df, run_dir / f'{name}.csv', list(df.columns))
        row_counts[PLOT_FILE] = _write_csv(report.plot, run_dir / PLOT_FILE, PLOT_COLUMNS)
        lines = [f'{w}: {" ".join(str(v) for v in verts)}' for w, verts in report.witnesses.items()]
        (run_dir / WITNESS_FILE).write_text('\n'.join(lines) + ('\n' if lines else ''))
        summary = {'schema_version': SCHEMA_VERSION, 'scenario': report.scenario, 'config_hash': report.config_hash,
                   'verdicts': report.verdicts, 'complete': report.complete, 'failure': report.failure,
                   'row_counts': row_counts, 'zero_row_tables': sorted(k for k, v in row_counts.items() if v == 0)}
        (run_dir / SUMMARY_FILE).write_text(json.dumps(summary, sort_keys=True, indent=2, default=format_value) + '\n')
        (run_dir / REPORT_FILE).write_text(report.to_json() + '\n')
    except OSError as e:
        raise IoFailure(f'Could not write run tables to {run_dir}\nFull Error: {e}')
    return run_dir


def load_report(run_dir):
    path = Path(run_dir) / REPORT_FILE
    try:
        return RunReport.from_json(path.read_text())
    except (OSError, ValueError, KeyError) as e:
        if isinstance(e, IoFailure):
            raise
        raise IoFailure(f'Could not load a stored report from {run_dir}\nFull Error: {e}')
