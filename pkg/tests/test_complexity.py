import numpy as np
import pytest

from hubplan.engine import ComplexityCounts, count_complexity, tally_model
from hubplan.fixtures import spec_with_dims
from hubplan.frameworks import build_bilevel, build_cooperative
from hubplan.hub_model import build_topology
from hubplan.scenarios import single_day


def _built_dims(d, T=2):
    topo = build_topology(spec_with_dims(**d))
    scen = single_day(topo.energies, T=T, price={m: 1.0 for m in topo.energies},
                      demand={topo.energies[0]: 0.1})
    dims = topo.dims()
    dims.update(S=1, T=T, Y=1)
    return topo, scen, dims


def test_desk_integer_count(desk):
    _, topo, _ = desk
    dims = topo.dims()
    assert (dims["M"], dims["G_S"], dims["G_C"]) == (3, 0, 2)
    assert count_complexity(dims).integer == 5


def test_formula_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        count_complexity({"M": -1})
    with pytest.raises(ValueError):
        count_complexity({"Q": 1})
    with pytest.raises(ValueError):
        ComplexityCounts(-1, 0, 0, 0)


def test_formula_scales_with_periods():
    base = dict(M=2, G_C=1, G_S=1, N_A=2, N_B=2, N_C=2, N_D=2, L=6, P_out=3, S=1, T=1, Y=1)
    one = count_complexity(base)
    many = count_complexity({**base, "S": 3, "T": 4, "Y": 2})
    assert many.continuous == 24 * one.continuous
    assert many.constraints == 24 * one.constraints
    assert (many.integer, many.binary) == (one.integer, one.binary)


@pytest.mark.parametrize("seed", range(5))
def test_tally_equals_formula_without_storage(seed):
    rng = np.random.default_rng(seed)
    d = dict(M=int(rng.integers(1, 4)), G_C=int(rng.integers(0, 3)), G_S=0,
             N_A=int(rng.integers(1, 4)), N_B=1, N_C=1, N_D=int(rng.integers(1, 4)))
    topo, scen, dims = _built_dims(d)
    assert tally_model(build_bilevel(topo, scen).model) == count_complexity(dims)


@pytest.mark.parametrize("seed", range(5))
def test_storage_energy_bits_need_one_product_not_two(seed):
    # only the state-of-charge upper bound multiplies the energy-capacity bits,
    # so the built model is smaller than the closed form by G_S * N_B per period
    rng = np.random.default_rng(100 + seed)
    d = dict(M=int(rng.integers(1, 4)), G_C=int(rng.integers(0, 3)), G_S=int(rng.integers(1, 3)),
             N_A=int(rng.integers(1, 4)), N_B=int(rng.integers(1, 4)), N_C=int(rng.integers(1, 4)),
             N_D=int(rng.integers(1, 4)))
    topo, scen, dims = _built_dims(d)
    got = tally_model(build_bilevel(topo, scen).model)
    want = count_complexity(dims)
    extra = d["G_S"] * d["N_B"] * dims["T"]
    assert (got.integer, got.binary) == (want.integer, want.binary)
    assert want.continuous - got.continuous == extra
    assert want.constraints - got.constraints == 3 * extra


def test_cooperative_model_has_no_dual_block(desk):
    _, topo, scen = desk
    coop = tally_model(build_cooperative(topo, scen).model)
    bilevel = tally_model(build_bilevel(topo, scen).model)
    # identical discretization in every framework
    assert (coop.integer, coop.binary) == (bilevel.integer, bilevel.binary) == (4, 12)
    assert coop.continuous < bilevel.continuous
    assert coop.constraints < bilevel.constraints
