"""Aggregated evaluation report plus JSON/CSV emission."""

import csv
import json
import os
from dataclasses import dataclass, field, fields

from ..errors import MetricInputError

# fields that must stay inside [0, 100]
_RATE_FIELDS = (
    "fr", "coll_fr", "offroad_fr", "coll_any", "coll_front", "coll_rear",
    "coll_side", "offroad_fraction", "speed_dist", "lon_acc_dist",
    "lat_acc_dist", "jerk_dist",
)


@dataclass
class MetricReport:
    """One policy's evaluation summary over a set of scenes and trials."""

    policy: str = ""
    n_scenes: int = 0
    n_trials: int = 0
    fr: float = 0.0
    coll_fr: float = 0.0
    offroad_fr: float = 0.0
    coll_any: float = 0.0
    coll_front: float = 0.0
    coll_rear: float = 0.0
    coll_side: float = 0.0
    offroad_fraction: float = 0.0
    coverage_drivable: int = 0
    coverage_nondrivable: int = 0
    diversity: float = 0.0
    speed_dist: float = 0.0
    lon_acc_dist: float = 0.0
    lat_acc_dist: float = 0.0
    jerk_dist: float = 0.0
    sade: float = 0.0
    sfde: float = 0.0
    likelihood: float = None    # None until the learned scorer has run
    extras: dict = field(default_factory=dict)

    def validate(self):
        for name in _RATE_FIELDS:
            v = getattr(self, name)
            if not (0.0 <= v <= 100.0):
                raise MetricInputError(f"{name}={v} outside [0, 100]")
        if self.diversity < 0:
            raise MetricInputError("diversity must be non-negative")
        if min(self.coverage_drivable, self.coverage_nondrivable) < 0:
            raise MetricInputError("coverage counts must be non-negative")
        return self

    def as_dict(self):
        out = {}
        for f in fields(self):
            out[f.name] = getattr(self, f.name)
        return out


def report_from_dict(d):
    known = {f.name for f in fields(MetricReport)}
    return MetricReport(**{k: v for k, v in d.items() if k in known})


def write_reports_json(path, reports):
    """Reports as a JSON list, written atomically."""
    payload = [r.as_dict() for r in reports]
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_reports_json(path):
    with open(path, encoding="utf-8") as fh:
        return [report_from_dict(d) for d in json.load(fh)]


def write_reports_csv(path, reports):
    """Flat CSV table, one row per report; extras serialized as JSON."""
    cols = [f.name for f in fields(MetricReport)]
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in reports:
            row = []
            for name in cols:
                v = getattr(r, name)
                row.append(json.dumps(v, sort_keys=True) if isinstance(v, dict)
                           else v)
            w.writerow(row)
    os.replace(tmp, path)
