"""
Check records, JSON reports and CSV exports.
JSON output is deterministic for a given config and seed: keys are sorted,
floats are rounded to 12 decimals and no timestamps are written.
"""

import csv
import json
import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np


SCHEMA_VERSION = "1"
PRECISION = 12

logger = logging.getLogger(__name__)


@dataclass
class CheckRecord:
    check_id: str
    anchor: str
    measured: Any
    tolerance: Optional[float]
    passed: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'check': self.check_id,
            'anchor': self.anchor,
            'measured': self.measured,
            'tolerance': self.tolerance,
            'pass': bool(self.passed),
            'detail': self.detail,
        }


def at_most(check_id: str, anchor: str, measured: float, tolerance: float, **detail) -> CheckRecord:
    """Record passing when measured <= tolerance"""
    value = float(measured)
    return CheckRecord(check_id, anchor, value, tolerance, bool(np.isfinite(value) and value <= tolerance), detail)


def holds(check_id: str, anchor: str, condition: bool, measured: Any = None, **detail) -> CheckRecord:
    return CheckRecord(check_id, anchor, condition if measured is None else measured, None, bool(condition), detail)


def _clean(value: Any) -> Any:
    """Convert numpy scalars and arrays to JSON types, rounding floats"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not np.isfinite(value):
            return str(value)
        rounded = round(value, PRECISION)
        return 0.0 if rounded == 0.0 else rounded
    return value


class Report:
    """Ordered collection of check records plus free-form sections"""

    def __init__(self, command: str, config):
        self.command = command
        self.config = config
        self.records: List[CheckRecord] = []
        self.sections: Dict[str, Any] = {}
        self.skipped: List[Dict[str, Any]] = []

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        if not record.passed:
            logger.info("check %s failed: measured %s, tolerance %s", record.check_id, record.measured,
                        record.tolerance)
        return record

    def skip(self, where: Any, reason: str):
        self.skipped.append({'point': where, 'reason': reason})

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    @property
    def failures(self) -> List[CheckRecord]:
        return [record for record in self.records if not record.passed]

    def environment(self) -> Dict[str, Any]:
        return {
            'python': platform.python_version(),
            'numpy': np.__version__,
            'threads': self.config.threads,
        }

    def to_dict(self) -> Dict[str, Any]:
        ordered = sorted(self.records, key=lambda r: r.check_id)
        return _clean({
            'schema': SCHEMA_VERSION,
            'command': self.command,
            'surface': self.config.surface,
            'seed': self.config.seed,
            'environment': self.environment(),
            'checks': [record.to_dict() for record in ordered],
            'sections': self.sections,
            'skipped': self.skipped,
            'pass': self.passed,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write(self, filepath: str):
        with open(filepath, 'w') as f:
            f.write(self.to_json())
            f.write('\n')


def write_csv(filepath: str, columns: Sequence[str], rows: Iterable[Dict[str, Any]]):
    """Write sample rows with a fixed column order; missing values are empty"""
    with open(filepath, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(column)) for column in columns])


def _format_cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(_clean(value))
    return str(value)


def parallel_map(func: Callable, items: Sequence, threads: int = 1) -> List:
    """Map preserving input order; runs serially for a single thread"""
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
