import math
from pathlib import Path

import pytest

import hbndb

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle") / "b"
    res = hbndb.ingest(FIXTURES / "anchor" / "manifest.ini", out, jobs=2)
    assert res["written"] and not res["failures"]
    return out


def test_zpl_and_conversion():
    assert hbndb.compute_zpl(-7.92, -5.84) == pytest.approx(2.08, rel=1e-12)
    assert hbndb.ev_to_nm(2.08) == pytest.approx(1239.84198 / 2.08, rel=1e-15)
    with pytest.raises(hbndb.HbndbError) as err:
        hbndb.compute_zpl(0.0, 0.0)
    assert err.value.code == "non_positive_zpl"


def test_radiative_rate():
    r = hbndb.radiative_rate(2.0, 25.0, 1.85)
    assert r["rate"] == pytest.approx(60884239.971714766, rel=1e-9)
    assert r["lifetime"] == pytest.approx(1.0 / r["rate"], rel=1e-12)
    assert math.isinf(hbndb.radiative_rate(2.0, 0.0)["lifetime"])


def test_polarization_examples():
    p = hbndb.polarization([1, 0, 0])
    assert p["angle_deg"] == 30.0 and p["visibility"] == 1.0
    z = hbndb.polarization([0, 0, 1])
    assert z["out_of_plane"] and z["angle_deg"] is None
    assert hbndb.misalignment_deg(5.0, 55.0) == 10.0


def test_dipole_from_fixture_wavefunctions():
    d = FIXTURES / "anchor" / "VB"
    mu = hbndb.transition_dipole(d / "gocc.wfc", d / "gunocc.wfc")
    assert len(mu["mu"]) == 3
    assert mu["mu_sq_debye2"] == pytest.approx(sum(abs(c) ** 2 for c in mu["mu"]) * 4.80320471**2, rel=1e-6)


def test_pl_spectrum_is_peak_normalized():
    s = hbndb.pl_spectrum([(0.1, 1.0)], 2.0, 0.005)
    assert max(s["intensities"]) == 1.0
    assert len(s["energies"]) == len(s["intensities"])
    assert hbndb.hr_factor(0.1, 1.0) == pytest.approx(11.961266684743806, rel=1e-9)


def test_bundle_and_identify(bundle):
    records = hbndb.load_records(bundle)
    assert [r["id"] for r in records] == ["CBVN_q0_triplet", "CN_q0_doublet", "VB_q-1_triplet"]
    db = hbndb.Database(bundle)
    assert len(db) == 3 and db.transition_count == 3
    assert db.get("VB_q-1_triplet")["transitions"][0]["spin_channel"] == "down"
    assert [m["defect_id"] for m in db.identify(zpl=2.0, tol=0.1)] == ["VB_q-1_triplet"]
    assert [m["defect_id"] for m in db.identify(zpl=2.0, tol=0.4)] == ["VB_q-1_triplet", "CBVN_q0_triplet"]
    with pytest.raises(hbndb.HbndbError):
        db.identify(tol=0.1)
    h = db.histogram("zpl", 0.5)
    assert h["total"] == 3


def test_strict_ingest_failure(tmp_path):
    res = hbndb.ingest(FIXTURES / "degenerate" / "manifest.ini", tmp_path / "s", strict=True)
    assert not res["written"]
    assert res["failures"][0]["code"] == "degenerate_levels"
    assert not (tmp_path / "s").exists()
