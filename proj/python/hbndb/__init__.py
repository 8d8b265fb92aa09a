"""hBN defect database: derivation, ingest and lookup from Python."""

import json as _json

from ._hbndb import (
    HbndbError,
    compute_zpl,
    ev_to_nm,
    hr_factor,
    misalignment_deg,
    pl_spectrum,
    polarization,
    quantum_efficiency,
    radiative_rate,
    transition_dipole,
)
from . import _hbndb

__all__ = [
    "Database",
    "HbndbError",
    "compute_zpl",
    "ev_to_nm",
    "hr_factor",
    "ingest",
    "load_records",
    "misalignment_deg",
    "pl_spectrum",
    "polarization",
    "quantum_efficiency",
    "radiative_rate",
    "transition_dipole",
]


def _records(text):
    return [_json.loads(line) for line in text.splitlines() if line]


def ingest(manifest, out_dir, *, strict=False, jobs=1, refractive_index=1.85):
    """Ingest a manifest into a bundle; returns records, failures and whether anything was written."""
    res = _hbndb.ingest(str(manifest), str(out_dir), strict, jobs, refractive_index)
    res["records"] = _records(res["records"])
    return res


def load_records(bundle):
    return _records(_hbndb.load_records(str(bundle)))


class Database:
    """Read-only query view over a bundle directory."""

    def __init__(self, bundle):
        self._db = _hbndb.Database(str(bundle))

    def __len__(self):
        return len(self._db)

    @property
    def transition_count(self):
        return self._db.transition_count

    def ids(self):
        return self._db.ids()

    def get(self, defect_id):
        return _json.loads(self._db.get(defect_id))

    def identify(self, **signature):
        return _json.loads(self._db.identify(_json.dumps(signature)))

    def histogram(self, prop, bin_width):
        return _json.loads(self._db.histogram(prop, bin_width))
