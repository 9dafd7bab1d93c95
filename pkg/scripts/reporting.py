"""
Run report: collect per-bug report rows and aggregate them with pandas.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List

import pandas as pd

from .errors import NoReports

logger = logging.getLogger(__name__)

ROW_FILENAME = 'report_row.json'
ROW_COLUMNS = ['id', 'status', 'queryCount', 'plausibleCount', 'wallSeconds']
# absent in rows written before restarts were recorded
RESTART_COLUMN = 'plausibleRestart'
PASS_AT = (5, 10, 20, 30, 40)
TABLE_HEADERS = {'id': 'id', 'status': 'status', 'queryCount': '#Query',
                 'plausibleCount': '#Plausible', 'wallSeconds': 'seconds'}


def collect_report_rows(in_dir) -> List[dict]:
    """
    Read every report_row.json under `in_dir`, recursively, in path order.

    Raises:
        NoReports: the directory is missing or holds no rows
    """
    in_dir = Path(in_dir)
    if not in_dir.is_dir():
        raise NoReports(f'{in_dir} is not a directory')
    rows = []
    for path in sorted(in_dir.rglob(ROW_FILENAME)):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                row = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f'Invalid report row in {path}') from e
        missing = [column for column in ROW_COLUMNS if column not in row]
        if missing:
            raise ValueError(f'Report row {path} lacks {", ".join(missing)}')
        rows.append({column: row[column] for column in ROW_COLUMNS} | {RESTART_COLUMN: row.get(RESTART_COLUMN)})
    if not rows:
        raise NoReports(f'No {ROW_FILENAME} found under {in_dir}')
    logger.info(f'Collected {len(rows)} report rows from {in_dir}')
    return rows


@dataclass
class RunReport:
    rows: pd.DataFrame

    def pass_at(self, m: int) -> int:
        """Bugs whose first plausible patch came within m restarts."""
        restart = self.rows[RESTART_COLUMN]
        return int(((self.rows['status'] == 'plausible') & restart.notna() & (restart <= m)).sum())

    @property
    def aggregate(self) -> dict:
        return {'bugs': int(len(self.rows)),
                'plausibleBugs': int((self.rows['status'] == 'plausible').sum()),
                'avgQuery': float(self.rows['queryCount'].mean()),
                'passAt': {str(m): self.pass_at(m) for m in PASS_AT}}

    def to_json(self) -> dict:
        return {'rows': self.rows[ROW_COLUMNS].to_dict(orient='records'), 'aggregate': self.aggregate}

    def to_table(self) -> str:
        table = self.rows[ROW_COLUMNS].rename(columns=TABLE_HEADERS)
        # correctness needs manual review of the plausible patches
        table['#Correct'] = ''
        agg = self.aggregate
        pass_at = '  '.join(f'pass@{m}: {count}' for m, count in agg['passAt'].items())
        return (table.to_string(index=False) + '\n\n'
                + f"bugs: {agg['bugs']}  plausible: {agg['plausibleBugs']}  "
                + f"avgQuery: {agg['avgQuery']:.2f}\n{pass_at}")


def build_report(rows: List[dict]) -> RunReport:
    if not rows:
        raise NoReports('No report rows to aggregate')
    frame = pd.DataFrame(rows, columns=ROW_COLUMNS + [RESTART_COLUMN])
    frame['queryCount'] = frame['queryCount'].astype(int)
    frame['plausibleCount'] = frame['plausibleCount'].astype(int)
    frame['wallSeconds'] = frame['wallSeconds'].astype(float)
    frame[RESTART_COLUMN] = pd.to_numeric(frame[RESTART_COLUMN], errors='coerce')
    return RunReport(frame)
