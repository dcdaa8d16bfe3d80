"""HTTP API contracts: endpoints, validation, determinism, static UI."""

import concurrent.futures
import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from moonlab import __version__, service
from moonlab.engine import ArchitectureSpec
from moonlab.oracles import SurvivalFunction, global_ccf_reliability
from moonlab.streams import DistributionSpec


@pytest.fixture(scope="module")
def client():
    return TestClient(service.create_app(ui_dir=None))


def strip_compute_time(doc):
    doc = dict(doc)
    doc.pop("compute_time", None)
    return doc


class TestHealth:
    def test_status_ok(self, client):
        r = client.get("/api/v1/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_version_matches_build(self, client):
        assert client.get("/api/v1/health").json()["version"] == __version__

    def test_responds_quickly(self, client):
        start = time.perf_counter()
        client.get("/api/v1/health")
        assert time.perf_counter() - start < 0.1


class TestSimulate:
    def test_series_mean_at_p_zero(self, client):
        r = client.post(
            "/api/v1/simulate",
            json={"model": "linear", "n": 3, "m": 3, "p": 0, "samples": 10**6, "seed": 1},
        )
        assert r.status_code == 200
        doc = r.json()
        assert abs(doc["stats"]["mean"] - 1 / 3) <= 0.001
        assert doc["request"]["samples"] == 10**6

    def test_zero_m_is_rejected_with_field_location(self, client):
        r = client.post("/api/v1/simulate", json={"model": "linear", "m": 0, "p": 0.5})
        assert r.status_code == 422
        assert any("m" in err["loc"] for err in r.json()["detail"])

    def test_m_above_n_is_rejected_with_field_location(self, client):
        r = client.post("/api/v1/simulate", json={"model": "linear", "n": 3, "m": 4, "p": 0.5})
        assert r.status_code == 422
        assert any("m" in err["loc"] for err in r.json()["detail"])

    def test_missing_p_is_rejected(self, client):
        r = client.post("/api/v1/simulate", json={"model": "linear", "samples": 1000})
        assert r.status_code == 422
        assert any("p" in err["loc"] for err in r.json()["detail"])

    def test_oracle_overlay_is_exact_passthrough(self, client):
        r = client.post(
            "/api/v1/simulate",
            json={
                "model": "global-ccf", "n": 3, "m": 2, "p": 0.5,
                "samples": 50_000, "seed": 4, "include_oracle": True,
            },
        )
        doc = r.json()
        t = np.array(doc["reliability"]["t_grid"])
        got = np.array(doc["oracle"]["reliability"])
        s = SurvivalFunction(DistributionSpec(1.0, 1.0))
        want = global_ccf_reliability(t, 0.5, ArchitectureSpec(3, 2), s)
        assert np.max(np.abs(got - want)) <= 1e-9

    def test_curve_lengths_consistent_and_finite(self, client):
        r = client.post(
            "/api/v1/simulate",
            json={"model": "marginal-ccf", "p": 0.3, "samples": 20_000, "kde_grid": 256},
        )
        doc = r.json()
        assert len(doc["density"]["grid"]) == len(doc["density"]["density"]) <= 1024
        assert len(doc["reliability"]["t_grid"]) == len(doc["reliability"]["survival"]) <= 1024
        assert all(v is not None for v in doc["density"]["density"])

    def test_sample_cap_is_enforced(self, client, monkeypatch):
        monkeypatch.setenv("MOONLAB_SAMPLE_CAP", "5000")
        r = client.post(
            "/api/v1/simulate", json={"model": "linear", "p": 0.5, "samples": 6000}
        )
        assert r.status_code == 413
        assert r.json()["detail"]["max_samples"] == 5000

    def test_idempotent_payloads(self, client):
        body = {"model": "linear", "p": 0.7, "samples": 30_000, "seed": 9}
        a = client.post("/api/v1/simulate", json=body).json()
        b = client.post("/api/v1/simulate", json=body).json()
        assert strip_compute_time(a) == strip_compute_time(b)

    def test_concurrent_identical_requests_agree(self, client):
        body = {"model": "global-ccf", "p": 0.2, "samples": 20_000, "seed": 2}
        with concurrent.futures.ThreadPoolExecutor(4) as pool:
            docs = list(
                pool.map(lambda _: client.post("/api/v1/simulate", json=body).json(), range(4))
            )
        stripped = [strip_compute_time(d) for d in docs]
        assert all(d == stripped[0] for d in stripped)


@pytest.fixture(scope="module")
def default_sweep(client):
    r = client.post(
        "/api/v1/sweep",
        json={
            "model": "global-ccf", "n": 3, "m": 2, "p_grid": 20,
            "samples": 10**6, "seed": 3,
        },
    )
    assert r.status_code == 200
    return r.json()


class TestSweep:
    def test_twenty_entries_spanning_unit_interval(self, default_sweep):
        ps = [e["p"] for e in default_sweep["sweep"]]
        assert len(ps) == 20
        assert ps[0] == 0.0 and ps[-1] == 1.0

    def test_relative_mean_is_one_at_baseline(self, default_sweep):
        assert default_sweep["relative"]["rel_mean"][0] == 1.0

    def test_median_invariance_at_full_samples(self, default_sweep):
        medians = [e["median"] for e in default_sweep["sweep"]]
        assert max(abs(m - math.log(2)) for m in medians) <= 0.01

    def test_per_p_curves_attached(self, default_sweep):
        assert len(default_sweep["curves"]) == 20
        first = default_sweep["curves"][0]
        assert len(first["density"]["grid"]) <= 1024

    def test_missing_grid_rejected(self, client):
        r = client.post("/api/v1/sweep", json={"model": "linear", "samples": 1000})
        assert r.status_code == 422

    def test_oracle_means_track_line_for_global(self, client):
        r = client.post(
            "/api/v1/sweep",
            json={
                "model": "global-ccf", "n": 3, "m": 3,
                "p_grid": [0.0, 0.5, 1.0], "samples": 5000, "include_oracle": True,
            },
        )
        means = r.json()["oracle"]["mean"]
        assert means == pytest.approx([1 / 3, 2 / 3, 1.0], abs=1e-9)


class TestOracleEndpoint:
    def test_reliability_value(self, client):
        r = client.post(
            "/api/v1/oracle",
            json={"model": "global-ccf", "n": 3, "m": 3, "p": 0.5, "t": 1.0},
        )
        assert r.status_code == 200
        want = 0.5 * math.exp(-3) + 0.5 * math.exp(-1)
        assert r.json()["reliability"] == pytest.approx(want, rel=1e-12)

    def test_mean_value(self, client):
        r = client.post(
            "/api/v1/oracle", json={"model": "linear", "n": 3, "m": 2, "p": 0.5, "mean": True}
        )
        assert r.json()["mean"] == pytest.approx(11 / 12, rel=1e-12)

    def test_needs_exactly_one_of_t_or_mean(self, client):
        r = client.post("/api/v1/oracle", json={"model": "linear", "p": 0.5})
        assert r.status_code == 422
        r = client.post(
            "/api/v1/oracle", json={"model": "linear", "p": 0.5, "t": 1.0, "mean": True}
        )
        assert r.status_code == 422


class TestStaticUi:
    def test_bundle_served_when_present(self, tmp_path):
        (tmp_path / "index.html").write_text("<html><body>ui</body></html>")
        app = service.create_app(ui_dir=tmp_path)
        client = TestClient(app)
        r = client.get("/")
        assert r.status_code == 200
        assert "ui" in r.text
        # API still wins over the static mount
        assert client.get("/api/v1/health").status_code == 200
