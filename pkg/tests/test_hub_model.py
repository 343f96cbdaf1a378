from dataclasses import replace

import numpy as np
import pytest

from hubplan.fixtures import desk_a_spec, five_energy_spec, random_spec, spec_with_dims
from hubplan.hub_model import (Converter, HubSpecError, build_topology, dump_hub, parse_hub,
                               pairwise_branch_count, validate_spec, validate_topology)


def test_five_energy_hub_electricity_bus_counts():
    spec = five_energy_spec()
    topo = build_topology(spec)
    assert len(topo.bus_branches("elec")) == 10
    assert pairwise_branch_count(spec, "elec") == 23
    assert validate_topology(topo) == []


def test_desk_topology(desk):
    spec, topo, _ = desk
    assert validate_topology(topo) == []
    assert topo.energies == ["elec", "gas", "heat"]
    # bus-port incidence has one head and one tail per branch
    assert np.all(np.abs(topo.A).sum(axis=0) == 2)
    np.testing.assert_allclose(topo.Z, topo.H @ topo.A)
    assert topo.n_real == topo.n_branches


@pytest.mark.parametrize("seed", range(8))
def test_random_topologies_validate(seed):
    spec = random_spec(np.random.default_rng(seed))
    assert validate_topology(build_topology(spec)) == []


def test_dims_match_requested_sizes():
    spec = spec_with_dims(M=3, G_C=2, G_S=1, N_A=2, N_B=3, N_C=1, N_D=2)
    d = build_topology(spec).dims()
    assert (d["M"], d["G_C"], d["G_S"]) == (3, 2, 1)
    assert (d["N_A"], d["N_B"], d["N_C"], d["N_D"]) == (2, 3, 1, 2)


def test_yaml_round_trip():
    for spec in (desk_a_spec(), five_energy_spec()):
        again = parse_hub(dump_hub(spec))
        assert again == spec


def test_yaml_unknown_field_reports_line():
    text = dump_hub(desk_a_spec()).replace("  unit_rating: 2.0", "  unit_rating: 2.0\n  colour: red")
    with pytest.raises(HubSpecError) as exc:
        parse_hub(text, "hub.yaml")
    msg = str(exc.value)
    assert "colour" in msg and "hub.yaml: line" in msg


def test_yaml_syntax_error_reports_position():
    with pytest.raises(HubSpecError, match="YAML syntax error at line 3, column 1"):
        parse_hub("energies:\n - id: [unclosed\n", "bad.yaml")


def test_yaml_semantic_errors_carry_line_numbers():
    text = dump_hub(desk_a_spec()).replace("heat: 0.9", "heat: -0.9")
    with pytest.raises(HubSpecError) as exc:
        parse_hub(text, "hub.yaml")
    (problem,) = exc.value.problems
    assert problem.startswith("hub.yaml: line ")
    assert "converter 'AB'" in problem and "must be > 0" in problem


def test_multi_input_converter_rejected():
    text = dump_hub(desk_a_spec()).replace("input: gas", "input: [gas, elec]")
    with pytest.raises(HubSpecError, match="single-input"):
        parse_hub(text)


def test_validate_spec_findings():
    spec = desk_a_spec()
    assert validate_spec(spec) == []
    bad = replace(spec, converters=spec.converters + (Converter("EB", "coal", (("heat", 1.0),),
                                                                1.0, 1.0, 1),))
    found = validate_spec(bad)
    assert any("duplicate device ids" in p for p in found)
    assert any("unknown input energy 'coal'" in p for p in found)
    no_source = replace(spec, grid=(), converters=())
    assert validate_spec(no_source) == ["energy 'heat' is demanded but has no source path"]
    with pytest.raises(HubSpecError):
        build_topology(no_source)
