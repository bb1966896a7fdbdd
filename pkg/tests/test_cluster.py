import json

import pytest
from hypothesis import given, strategies as st

from ompfpga.catalog import DEFAULT_CAPACITY, IP_CATALOG, PUBLISHED_PERCENT, Resources
from ompfpga.cluster import (ConfigError, FpgaDesc, HostLink, ClusterDesc, load_config, load_config_file,
                             ring_cluster, validate_resources)
from ompfpga.stencil import KernelKind


def doc(c):
    return json.loads(c.to_json())


def minimal():
    return {
        "fpgas": [{"id": 0, "bitstream": "b0.bit", "macs": ["02:00:00:00:00:01"],
                   "ips": [{"kernel": "laplace2d", "port": 3}]}],
        "links": [],
    }


def test_minimal_single_board():
    c = load_config(json.dumps(minimal()))
    assert len(c.fpgas) == 1 and c.n_ips == 1 and c.links == ()
    assert c.clock_hz == 200_000_000
    assert c.fpgas[0].ips[0].cost == IP_CATALOG[KernelKind.LAPLACE2D].cost
    assert c.host_link == HostLink(3, 8, 7.88e9)


def test_six_by_four_ring():
    c = load_config(ring_cluster(6, 4).to_json())
    assert [f.id for f in c.fpgas] == list(range(6))
    assert c.n_ips == 24
    assert all(l.bandwidth_bps == 10e9 for l in c.links)


def test_ring_order_matches_hop_distance():
    c = ring_cluster(6, 1)
    nxt = {l.a: l.b for l in c.links}
    k, hops = 0, {0: 0}
    for step in range(1, 6):
        k = nxt[k]
        hops[k] = step
    assert hops == {k: k for k in range(6)}


def test_config_file_and_repo_configs(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(ring_cluster(2, 2).to_json())
    assert load_config_file(p).n_ips == 4
    assert load_config_file("configs/ring6.json").n_ips == 24
    assert load_config_file("configs/fig1.json").n_ips == 4


@pytest.mark.parametrize("mutate,message", [
    (lambda d: d["fpgas"][0]["ips"].__setitem__(1, dict(d["fpgas"][0]["ips"][0])), "duplicate switch port"),
    (lambda d: d["fpgas"][1]["macs"].__setitem__(0, d["fpgas"][0]["macs"][0]), "duplicate MAC"),
    (lambda d: d["links"].pop(2), "broken ring"),
    (lambda d: d["fpgas"][0]["ips"][0].__setitem__("kernel", "sobel"), "unknown kernel"),
    (lambda d: d.__setitem__("bogus", 1), "bogus"),
    (lambda d: d["fpgas"][0].pop("bitstream"), "bitstream"),
    (lambda d: d["fpgas"][0].__setitem__("bitstream", ""), "bitstream"),
    (lambda d: d["fpgas"][0].__setitem__("ips", []), None),
    (lambda d: d["links"][0].__setitem__("port_a", 7), None),
    (lambda d: d["fpgas"][0]["ips"][0].__setitem__("port", 16), None),
    (lambda d: d["fpgas"][0]["ips"][0].__setitem__("cost", {"luts": 1, "brams": 1, "dsps": 1}), "cost"),
])
def test_invalid_configs(mutate, message):
    d = doc(ring_cluster(3, 2))
    mutate(d)
    with pytest.raises(ConfigError, match=message):
        load_config(json.dumps(d))


def test_malformed_json_reports_location():
    with pytest.raises(ConfigError, match="line 2 column"):
        load_config('{"fpgas": [\n  {"id": 0,,}]}')


def test_resource_budget_ok_for_four_laplace():
    c = ring_cluster(1, 4)
    assert validate_resources(c) == []
    assert sum(s.cost.luts for s in c.fpgas[0].ips) == 48552


def test_four_jacobi_over_budget():
    c = ring_cluster(1, 4, "jacobi9pt2d")
    v = validate_resources(c)
    assert [x.resource for x in v] == ["luts"]
    assert v[0].percent == pytest.approx(113.0, abs=0.1)


def test_zero_ips_is_within_budget():
    f = FpgaDesc(0, "b.bit", ("02:00:00:00:00:01",), ())
    assert validate_resources(ClusterDesc((f,))) == []


def test_published_percentages():
    for kind, pct in PUBLISHED_PERCENT.items():
        got = IP_CATALOG[kind].cost.percent_of(DEFAULT_CAPACITY)
        for r in ("luts", "brams", "dsps"):
            assert abs(got[r] - pct[r]) <= 0.1, (kind, r)


def test_pcie_presets():
    assert HostLink.preset(1).bytes_per_sec == pytest.approx(1.6e9)
    assert HostLink.preset(3).bytes_per_sec == pytest.approx(7.88e9)
    with pytest.raises(ConfigError):
        HostLink.preset(7)


def test_restrict_recloses_ring():
    c = ring_cluster(6, 4).restrict(3, 2)
    assert len(c.fpgas) == 3 and c.n_ips == 6
    assert {(l.a, l.b) for l in c.links} == {(0, 1), (1, 2), (2, 0)}
    with pytest.raises(ConfigError):
        ring_cluster(2, 2).restrict(3)
    with pytest.raises(ConfigError):
        ring_cluster(2, 2).restrict(2, 5)


@given(st.integers(1, 6), st.integers(1, 13), st.sampled_from(list(KernelKind)))
def test_round_trip(n, ips, kind):
    c = ring_cluster(n, ips, kind.value, capacity=Resources(10**7, 10**5, 10**5))
    assert load_config(c.to_json()) == c
