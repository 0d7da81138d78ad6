import json
import threading
import urllib.error
import urllib.request

import pytest

from ratbench.records import STATIC_INDOOR, record_to_line
from ratbench.service import IngestService
from ratbench.simulate import CampaignConfig, run_campaign


@pytest.fixture(scope="module")
def service(models, tmp_path_factory):
    svc = IngestService(tmp_path_factory.mktemp("data"), addr="127.0.0.1", port=0, models=models)
    svc.start_background()
    yield svc
    svc.shutdown()


@pytest.fixture(scope="module")
def base_url(service):
    host, port = service.address
    return f"http://{host}:{port}"


@pytest.fixture(scope="module")
def campaign_lines(models):
    cfg = CampaignConfig(scenario=STATIC_INDOOR, cycles=120, seed=31)
    return [record_to_line(r) for r in run_campaign(cfg, models).records]


def http(method: str, url: str, body: str | None = None):
    request = urllib.request.Request(url, method=method)
    data = body.encode() if body is not None else None
    if data is not None:
        request.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(request, data=data, timeout=10) as response:
            return response.status, response.read().decode()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode()


WHATIF_BODY = {
    "workload": {
        "duration_h": 24.0,
        "context": {"scenario": "static-indoor"},
        "messages": [{"payload_bytes": 8, "rate_per_hour": 1.0}],
    },
    "policy_a": {"objective": "min_energy_per_byte"},
    "policy_b": {"objective": "min_energy_per_byte", "allowed": ["NBIoT"]},
    "seed": 5,
}


class TestRoutes:
    def test_post_batch_and_idempotent_repost(self, base_url, campaign_lines):
        batch = "\n".join(campaign_lines)
        status, body = http("POST", f"{base_url}/v1/records", batch)
        assert status == 200
        first = json.loads(body)
        assert len(first["ids"]) == len(campaign_lines)
        assert first["created"] == len(campaign_lines)
        status, body = http("POST", f"{base_url}/v1/records", batch)
        assert status == 200
        again = json.loads(body)
        assert again["created"] == 0
        assert again["ids"] == first["ids"]

    def test_get_records_filtered(self, base_url, campaign_lines):
        status, body = http("GET", f"{base_url}/v1/records?tech=Sigfox&max_payload=12")
        assert status == 200
        lines = [json.loads(l) for l in body.strip().splitlines()]
        assert lines and all(l["technology"] == "Sigfox" for l in lines)

    def test_get_aggregate_table(self, base_url):
        status, body = http("GET", f"{base_url}/v1/aggregate?group=table")
        assert status == 200
        cells = json.loads(body)["cells"]
        assert cells
        sigfox = [c for c in cells if c["technology"] == "Sigfox"]
        assert sigfox and sigfox[0]["scenario"] == "static-indoor"

    def test_get_aggregate_speed(self, base_url):
        status, body = http("GET", f"{base_url}/v1/aggregate?group=speed&tech=Sigfox")
        assert status == 200
        series = json.loads(body)["series"]["Sigfox"]
        assert isinstance(series, list)

    def test_whatif_default_comparison(self, base_url):
        status, body = http("POST", f"{base_url}/v1/whatif", json.dumps(WHATIF_BODY))
        assert status == 200
        result = json.loads(body)
        assert result["savings_factor"] >= 4
        assert result["summary_a"]["total"]["energy_uwh"] > 0

    def test_whatif_infeasible_surfaces_422(self, base_url):
        bad = json.loads(json.dumps(WHATIF_BODY))
        bad["workload"]["messages"][0]["payload_bytes"] = 1000
        bad["policy_a"]["allowed"] = ["Sigfox"]
        status, body = http("POST", f"{base_url}/v1/whatif", json.dumps(bad))
        assert status == 422
        err = json.loads(body)
        assert err["code"] == "no_feasible_technology"
        assert "message" in err

    def test_error_shapes(self, base_url):
        status, body = http("POST", f"{base_url}/v1/records", "{broken")
        assert status == 400 and json.loads(body)["code"] == "parse_error"
        status, body = http("GET", f"{base_url}/v1/aggregate?group=sideways")
        assert status == 400 and json.loads(body)["code"] == "bad_group"
        status, body = http("GET", f"{base_url}/v1/nothing")
        assert status == 404 and json.loads(body)["code"] == "not_found"
        status, body = http("GET", f"{base_url}/v1/records?tech=Carrier-Pigeon")
        assert status == 400 and json.loads(body)["code"] == "bad_filter"

    def test_validation_error_shape(self, base_url, campaign_lines):
        obj = json.loads(campaign_lines[0])
        obj["record_id"] = "poison-1"
        obj["energy_uwh"] = -5.0
        status, body = http("POST", f"{base_url}/v1/records", json.dumps(obj))
        assert status == 400 and json.loads(body)["code"] == "validation_error"


class TestConcurrency:
    def test_concurrent_ingest_and_query(self, models, tmp_path):
        svc = IngestService(tmp_path, addr="127.0.0.1", port=0, models=models)
        svc.start_background()
        try:
            host, port = svc.address
            url = f"http://{host}:{port}"
            batches = []
            for seed in range(6):
                cfg = CampaignConfig(scenario=STATIC_INDOOR, cycles=25, seed=100 + seed)
                batches.append(
                    "\n".join(record_to_line(r) for r in run_campaign(cfg, models).records)
                )
            errors: list[Exception] = []

            def post(batch: str):
                try:
                    status, _ = http("POST", f"{url}/v1/records", batch)
                    assert status == 200
                except Exception as exc:  # pragma: no cover - surfaced below
                    errors.append(exc)

            def query():
                try:
                    status, _ = http("GET", f"{url}/v1/aggregate?group=table")
                    assert status == 200
                except Exception as exc:  # pragma: no cover
                    errors.append(exc)

            threads = [threading.Thread(target=post, args=(b,)) for b in batches]
            threads += [threading.Thread(target=query) for _ in range(6)]
            for t in threads:
                t.start()
            for t in threads:
                t.join(timeout=30)
            assert not errors
            status, body = http("GET", f"{url}/v1/records")
            total = len(body.strip().splitlines())
            assert total == 6 * 25 * 3
            # store file holds the same records the API reports
            assert len(svc.store) == total
        finally:
            svc.shutdown()
