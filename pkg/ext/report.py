from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ext.algebra import AlgebraValue
from ext.fixedpoint import IterationTrace
from ext.semigroup import Element

VERSION = '1.0.0'


class Verdict(str, Enum):
    HUR_STABLE = 'hur-stable'
    CHUR_STABLE = 'chur-stable'
    BOUNDED = 'bounded-with-bound'
    EXPONENTIAL = 'exponential-within-tol'
    VIOLATION = 'violation-found'
    HYPERSTABLE = 'hyperstable-certified'
    CONDITIONS_MET = 'conditions-met'
    CONDITIONS_NOT_MET = 'conditions-not-met'
    CAUCHY = 'cauchy-certified'
    LOGARITHMIC = 'logarithmic-certified'
    ASYMPTOTIC = 'asymptotically-additive'
    NOT_ASYMPTOTIC = 'not-asymptotically-additive'
    ADDITIVE = 'additive-certified'
    PEXIDER = 'pexider-certified'
    IDENTITY = 'identity-verified'
    DEFECT = 'defect-measured'
    ORACLE_PASSED = 'oracle-passed'
    ORACLE_VIOLATIONS = 'oracle-violations'
    BOUNDS = 'bounds-evaluated'
    HYPOTHESES_NOT_MET = 'hypotheses-not-met'
    PRECONDITION_FAILED = 'precondition-failed'
    NO_CERTIFICATE = 'no-certificate'
    NOT_APPLICABLE = 'not-applicable'
    NOT_CERTIFIED = 'not-certified'
    ENGINE_FAILURE = 'engine-failure'
    CONFIG_ERROR = 'config-error'

    def __str__(self) -> str:
        return self.value

    @property
    def needs_witness(self) -> bool:
        return self in (Verdict.VIOLATION, Verdict.HYPOTHESES_NOT_MET, Verdict.PRECONDITION_FAILED, Verdict.ORACLE_VIOLATIONS, Verdict.CONDITIONS_NOT_MET, Verdict.NOT_ASYMPTOTIC)


def jsonable(obj: Any) -> Any:
    """Converts report values into deterministic JSON-compatible data"""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Element):
        return repr(obj)
    if isinstance(obj, AlgebraValue):
        return jsonable(obj.components[0] if obj.spec.dimension == 1 else list(obj.components))
    if isinstance(obj, IterationTrace):
        return jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(jsonable(k)) if not isinstance(k, str) else k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=repr) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(i) for i in items]
    if hasattr(obj, 'to_json'):
        return jsonable(obj.to_json())
    return repr(obj)


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return '%.17g' % value
    if isinstance(value, complex):
        return '%.17g%+.17gj' % (value.real, value.imag)
    if value is None:
        return ''
    return str(jsonable(value)) if not isinstance(value, (str, int)) else str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, 'w', newline='', encoding='utf8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(c) for c in row])


@dataclass
class RunReport:
    """Everything one scenario run produces.

    ``payload`` is the deterministic part; timing lives in ``metadata``.
    """
    scenario: Dict[str, Any]
    kind: str
    verdict: Optional[Verdict] = None
    witness: Any = None
    window: Dict[str, Any] = field(default_factory=dict)
    bound_profile: List[Dict[str, Any]] = field(default_factory=list)
    traces: Dict[str, IterationTrace] = field(default_factory=dict)
    conditions: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def note(self, text: str) -> None:
        if text not in self.notes:
            self.notes.append(text)

    def payload(self) -> Dict[str, Any]:
        return jsonable({
            'scenario': self.scenario,
            'kind': self.kind,
            'verdict': self.verdict,
            'expect': self.scenario.get('expect'),
            'witness': self.witness,
            'window': self.window,
            'bound_profile': self.bound_profile,
            'traces': self.traces,
            'conditions': self.conditions,
            'details': self.details,
            'notes': self.notes,
            'version': VERSION,
        })

    def dumps(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, indent=2, ensure_ascii=False) + '\n'

    def write(self, directory: Path, csv_tables: bool=True) -> List[Path]:
        directory.mkdir(parents=True, exist_ok=True)
        written = [directory / 'report.json', directory / 'metadata.json']
        written[0].write_text(self.dumps(), encoding='utf8')
        written[1].write_text(json.dumps(jsonable(self.metadata), sort_keys=True, indent=2) + '\n', encoding='utf8')
        if not csv_tables:
            return written

        if self.bound_profile:
            header: List[str] = []
            for row in self.bound_profile:
                header.extend(k for k in row if k not in header)
            path = directory / 'bound_profile.csv'
            write_csv(path, header, [[row.get(k) for k in header] for row in self.bound_profile])
            written.append(path)
        for name, trace in sorted(self.traces.items()):
            path = directory / f'trace_{name}.csv'
            write_csv(path, ('step', 'distance', 'ratio'), trace.csv_rows())
            written.append(path)
        for name, table in sorted(self.conditions.items()):
            if not table:
                continue
            header = []
            for row in table:
                header.extend(k for k in row if k not in header)
            path = directory / f'conditions_{name}.csv'
            write_csv(path, header, [[row.get(k) for k in header] for row in table])
            written.append(path)
        return written
