import numpy as np
import pytest

from wedgeiso.errors import DomainError
from wedgeiso.profile import IsoperimetricProfile, profile_power_case
from wedgeiso.verification import ShapeFamily, optimize_shape, profile_scan, random_sweep, report_csv, scan_csv
from wedgeiso.wedge_geometry import WedgeWeight


def test_family_has_flat_ends():
    fam = ShapeFamily(J=4)
    a = np.array([0.1, 0.3, -0.2, 0.05, 0.1])
    np.testing.assert_allclose(fam.dlog_rho(a, np.array([0.0, np.pi / 2])), 0.0, atol=1e-14)
    shape = fam.shape(a)
    assert np.all(shape.rho > 0)
    with pytest.raises(DomainError):
        fam.shape(np.zeros(3))


def test_zero_amplitude_gives_quarter_discs():
    rep = random_sweep(WedgeWeight(2, 0.5, (1, 2)), 5, seed=1, amplitude=0.0)
    assert all(abs(r["slack"]) < 1e-8 for r in rep.records)


@pytest.mark.parametrize("lk, c", [((1, 1), 0.0), ((0.5, 2), 1.0)])
def test_sweep_has_no_violations(lk, c):
    rep = random_sweep(WedgeWeight(2, c, lk), 30, seed=5, amplitude=0.3)
    assert rep.violations == 0 and rep.min_slack > -1e-7


def test_sweep_is_deterministic(monkeypatch):
    w = WedgeWeight(2, 0, (1, 1))
    a = random_sweep(w, 6, seed=9, amplitude=0.3).to_dict()
    monkeypatch.setenv("WEDGE_ISO_THREADS", "3")
    b = random_sweep(w, 6, seed=9, amplitude=0.3).to_dict()
    assert a == b
    assert a["rng"] == "numpy.random.PCG64"


def test_sweep_csv_format():
    rep = random_sweep(WedgeWeight(2, 0, (0, 0)), 3, seed=2, amplitude=0.2)
    lines = report_csv(rep).splitlines()
    assert lines[0] == "idx,m,P,I,slack"
    assert len(lines) == 4
    assert float(lines[1].split(",")[2]) == rep.records[0]["perimeter"]


def test_optimizer_stationary_at_quarter_disc():
    w = WedgeWeight(2, 0, (1, 1))
    out = optimize_shape(w, 0.125, J=4, start=np.zeros(4))
    assert out["gap"] <= 1e-8
    assert out["sup_distance"] <= 1e-8


@pytest.mark.parametrize("lk, c, m", [((1, 1), 0.0, 0.125), ((0, 0), 1.0, 0.5)])
def test_optimizer_recovers_quarter_disc(lk, c, m):
    out = optimize_shape(WedgeWeight(2, c, lk), m, seed=11)
    assert -1e-6 <= out["gap"] <= 5e-3
    assert out["sup_distance"] <= 1e-2
    assert out["measure"] == pytest.approx(m, rel=1e-10)
    h = np.array(out["history"])
    assert np.all(np.diff(h) <= 1e-15 * h[0])


def test_profile_scan():
    w = WedgeWeight(2, 0, (1, 1))
    m = np.array([0.1, 0.2, 1.6])
    table = profile_scan(w, m)
    p = IsoperimetricProfile(w)
    np.testing.assert_allclose(table["I"], profile_power_case(p, m), rtol=1e-12)
    scaled = profile_scan(w, 16 * m)
    np.testing.assert_allclose(np.array(scaled["I"]) / table["I"], 8.0, rtol=1e-12)
    assert profile_scan(WedgeWeight(2, 0, (0, 0)), [np.pi / 4])["I"][0] == pytest.approx(np.pi / 2)
    assert scan_csv(table).splitlines()[0] == "m,R,I"
    with pytest.raises(DomainError):
        profile_scan(w, [0.2, 0.1])
