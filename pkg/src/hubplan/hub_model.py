"""Hub description and its compilation into the energy-bus network.

A :class:`HubSpec` lists energies, grid connections, converters and storage
devices.  :func:`build_topology` turns it into ports, branches and the
connection matrices used by the operation model:

``A`` (ports x branches)
    -1 where a branch leaves a port, +1 where it enters one.
``H`` (output ports x ports)
    conservation coefficients; ``Z = H @ A`` gives one balance row per
    converter output, storage discharge port and energy bus.
``J`` (devices x ports)
    selects the port whose flow is capacity-limited: the converter input,
    or the storage state-of-charge port.
``K`` (branches)
    1 for real branches, 0 for the storage virtual branch.
``U``, ``W`` (energies x branches)
    select grid-import branches and hub-output branches.

Every source of an energy (grid import, converter output, storage discharge)
feeds that energy's bus, and the bus feeds every sink (converter input,
storage charge, hub output).  An energy may declare ``bus: <other>`` to feed
another energy's bus, which is how on-site PV joins the electricity bus while
keeping its own availability profile and capacity cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml


class HubSpecError(ValueError):
    """Hub description failed validation; ``problems`` lists every finding."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# ---------------------------------------------------------------------------
# declarative description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyType:
    id: str
    demanded: bool = False
    bus: str | None = None  # feed another energy's bus instead of an own one

    @property
    def bus_energy(self) -> str:
        return self.bus or self.id


@dataclass(frozen=True)
class GridConnection:
    energy: str
    cap_cost: float  # per MW of connection capacity
    step: float  # MW per capacity step
    bits: int
    exportable: bool = False

    @property
    def max_capacity(self) -> float:
        return (2 ** self.bits - 1) * self.step


@dataclass(frozen=True)
class Converter:
    id: str
    input: str
    outputs: tuple[tuple[str, float], ...]  # (energy, efficiency) pairs
    unit_rating: float  # MW of input per unit
    unit_cost: float
    bits: int

    @property
    def max_units(self) -> int:
        return 2 ** self.bits - 1


@dataclass(frozen=True)
class Storage:
    id: str
    energy: str
    eta_charge: float
    eta_discharge: float
    power_cost: float  # per MW
    energy_cost: float  # per MWh
    power_step: float
    energy_step: float
    power_bits: int
    energy_bits: int


@dataclass(frozen=True)
class HubSpec:
    name: str
    energies: tuple[EnergyType, ...]
    grid: tuple[GridConnection, ...] = ()
    converters: tuple[Converter, ...] = ()
    storages: tuple[Storage, ...] = ()

    def energy(self, m: str) -> EnergyType:
        for e in self.energies:
            if e.id == m:
                return e
        raise KeyError(f"unknown energy {m!r}")

    def grid_for(self, m: str) -> GridConnection | None:
        for g in self.grid:
            if g.energy == m:
                return g
        return None

    def importable(self, m: str) -> bool:
        return self.grid_for(m) is not None

    def exportable(self, m: str) -> bool:
        g = self.grid_for(m)
        return bool(g and g.exportable)

    def has_output(self, m: str) -> bool:
        return self.energy(m).demanded or self.exportable(m)

    @property
    def energy_ids(self) -> list[str]:
        return [e.id for e in self.energies]


def validate_spec(spec: HubSpec) -> list[str]:
    """Return a list of problems with ``spec``; empty when it is usable."""
    problems: list[str] = []
    ids = spec.energy_ids
    if len(set(ids)) != len(ids):
        problems.append(f"duplicate energy ids: {sorted({i for i in ids if ids.count(i) > 1})}")
    known = set(ids)
    by_id = {e.id: e for e in spec.energies}
    if not any(e.demanded for e in spec.energies):
        problems.append("no end-use (demanded) energy")
    for e in spec.energies:
        if e.bus is not None:
            if e.bus not in known:
                problems.append(f"energy {e.id!r}: bus {e.bus!r} is not a declared energy")
            elif by_id[e.bus].bus is not None:
                problems.append(f"energy {e.id!r}: bus {e.bus!r} is itself an alias")
            if e.demanded:
                problems.append(f"energy {e.id!r}: an aliased energy cannot be demanded")
    seen_grid = set()
    for g in spec.grid:
        if g.energy not in known:
            problems.append(f"grid connection for unknown energy {g.energy!r}")
        if g.energy in seen_grid:
            problems.append(f"duplicate grid connection for {g.energy!r}")
        seen_grid.add(g.energy)
        if not g.step > 0:
            problems.append(f"grid {g.energy!r}: step must be > 0")
        if g.bits < 1:
            problems.append(f"grid {g.energy!r}: bits must be >= 1")
        if g.cap_cost < 0:
            problems.append(f"grid {g.energy!r}: cap_cost must be >= 0")
        if g.exportable and g.energy in by_id and by_id[g.energy].bus is not None:
            problems.append(f"grid {g.energy!r}: an aliased energy cannot be exported")
    dev_ids = [c.id for c in spec.converters] + [s.id for s in spec.storages]
    if len(set(dev_ids)) != len(dev_ids):
        problems.append(f"duplicate device ids: {sorted({i for i in dev_ids if dev_ids.count(i) > 1})}")
    for c in spec.converters:
        tag = f"converter {c.id!r}"
        if c.input not in known:
            problems.append(f"{tag}: unknown input energy {c.input!r}")
        if not c.outputs:
            problems.append(f"{tag}: no outputs")
        outs = [m for m, _ in c.outputs]
        if len(set(outs)) != len(outs):
            problems.append(f"{tag}: duplicate output energy")
        for m, eta in c.outputs:
            if m not in known:
                problems.append(f"{tag}: unknown output energy {m!r}")
            if not (np.isfinite(eta) and eta > 0):
                problems.append(f"{tag}: efficiency for {m!r} must be > 0, got {eta}")
        if not c.unit_rating > 0:
            problems.append(f"{tag}: unit_rating must be > 0")
        if c.unit_cost < 0:
            problems.append(f"{tag}: unit_cost must be >= 0")
        if c.bits < 1:
            problems.append(f"{tag}: bits must be >= 1")
    for s in spec.storages:
        tag = f"storage {s.id!r}"
        if s.energy not in known:
            problems.append(f"{tag}: unknown energy {s.energy!r}")
        for name in ("eta_charge", "eta_discharge"):
            v = getattr(s, name)
            if not (0 < v <= 1):
                problems.append(f"{tag}: {name} must be in (0, 1], got {v}")
        for name in ("power_step", "energy_step"):
            if not getattr(s, name) > 0:
                problems.append(f"{tag}: {name} must be > 0")
        for name in ("power_bits", "energy_bits"):
            if getattr(s, name) < 1:
                problems.append(f"{tag}: {name} must be >= 1")
        for name in ("power_cost", "energy_cost"):
            if getattr(s, name) < 0:
                problems.append(f"{tag}: {name} must be >= 0")
    if problems:
        return problems
    # every demanded energy needs something that can produce it
    for e in spec.energies:
        if not e.demanded:
            continue
        bus = e.bus_energy
        fed = any(by_id[g.energy].bus_energy == bus for g in spec.grid)
        fed |= any(by_id[m].bus_energy == bus for c in spec.converters for m, _ in c.outputs)
        if not fed:
            problems.append(f"energy {e.id!r} is demanded but has no source path")
    return problems


# ---------------------------------------------------------------------------
# compiled network
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Port:
    id: str
    owner: str  # "bus:<m>", "grid:<m>", "out:<m>" or a device id
    kind: str  # bus | grid | output | converter | storage
    direction: str  # "input" (energy enters owner) or "output"
    energy: str
    virtual: bool = False


@dataclass(frozen=True)
class Branch:
    id: str
    tail: int  # port index the flow leaves
    head: int  # port index the flow enters
    real: bool
    energy: str


@dataclass
class HubTopology:
    spec: HubSpec
    energies: list[str]
    ports: list[Port]
    branches: list[Branch]
    out_ports: list[int]  # P^out, row order of H and Z
    devices: list[str]  # converters then storages, row order of J
    bus_port: dict[str, int]
    A: np.ndarray
    H: np.ndarray
    J: np.ndarray
    K: np.ndarray
    U: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    converter_ports: dict[str, dict[str, int]] = field(default_factory=dict)
    storage_ports: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def n_real(self) -> int:
        return int(self.K.sum())

    @property
    def converters(self) -> tuple[Converter, ...]:
        return self.spec.converters

    @property
    def storages(self) -> tuple[Storage, ...]:
        return self.spec.storages

    def port_index(self, pid: str) -> int:
        for i, p in enumerate(self.ports):
            if p.id == pid:
                return i
        raise KeyError(pid)

    def branch_index(self, bid: str) -> int:
        for i, b in enumerate(self.branches):
            if b.id == bid:
                return i
        raise KeyError(bid)

    def energy_index(self, m: str) -> int:
        return self.energies.index(m)

    def capacity_row(self, device: str) -> np.ndarray:
        """``J_g A``: coefficients of the capacity-limited flow of a device over branches."""
        return self.J[self.devices.index(device)] @ self.A

    def bus_branches(self, m: str) -> list[int]:
        p = self.bus_port[m]
        return [l for l, b in enumerate(self.branches) if b.tail == p or b.head == p]

    def dims(self) -> dict[str, int]:
        """Set cardinalities used in size accounting (per-period quantities)."""
        spec = self.spec
        na = {g.bits for g in spec.grid}
        nb = {s.energy_bits for s in spec.storages}
        nc = {s.power_bits for s in spec.storages}
        nd = {c.bits for c in spec.converters}
        one = lambda s: s.pop() if len(s) == 1 else (0 if not s else -1)  # noqa: E731
        return {
            "L": len(self.branches), "M": len(self.energies), "P_out": len(self.out_ports),
            "G_C": len(spec.converters), "G_S": len(spec.storages),
            "N_A": one(set(na)), "N_B": one(set(nb)), "N_C": one(set(nc)), "N_D": one(set(nd)),
        }


def build_topology(spec: HubSpec) -> HubTopology:
    """Compile ``spec`` into the bus network and its matrices."""
    problems = validate_spec(spec)
    if problems:
        raise HubSpecError(problems)
    by_id = {e.id: e for e in spec.energies}
    ports: list[Port] = []
    branches: list[Branch] = []

    def add_port(*args, **kw) -> int:
        ports.append(Port(*args, **kw))
        return len(ports) - 1

    bus_port: dict[str, int] = {}
    for e in spec.energies:
        if e.bus is None:
            bus_port[e.id] = add_port(f"bus:{e.id}", f"bus:{e.id}", "bus", "input", e.id)

    def connect(tail: int, head: int, energy: str, real: bool = True) -> None:
        bid = f"{ports[tail].id}->{ports[head].id}"
        branches.append(Branch(bid, tail, head, real, energy))

    # sources into buses, in declaration order
    for g in spec.grid:
        bus = by_id[g.energy].bus_energy
        p = add_port(f"grid:{g.energy}", f"grid:{g.energy}", "grid", "output", g.energy)
        connect(p, bus_port[bus], bus)
    converter_ports: dict[str, dict[str, int]] = {}
    for c in spec.converters:
        pin = add_port(f"{c.id}.in", c.id, "converter", "input", c.input)
        connect(bus_port[by_id[c.input].bus_energy], pin, by_id[c.input].bus_energy)
        cp = {"in": pin}
        for m, _ in c.outputs:
            pout = add_port(f"{c.id}.out.{m}", c.id, "converter", "output", m)
            connect(pout, bus_port[by_id[m].bus_energy], by_id[m].bus_energy)
            cp[m] = pout
        converter_ports[c.id] = cp
    storage_ports: dict[str, dict[str, int]] = {}
    virtual: list[tuple[int, int, str]] = []
    for s in spec.storages:
        bus = by_id[s.energy].bus_energy
        pc = add_port(f"{s.id}.charge", s.id, "storage", "input", s.energy)
        pd = add_port(f"{s.id}.discharge", s.id, "storage", "output", s.energy)
        pt = add_port(f"{s.id}.tank", s.id, "storage", "output", s.energy, virtual=True)
        pv = add_port(f"{s.id}.soc", s.id, "storage", "input", s.energy, virtual=True)
        connect(bus_port[bus], pc, bus)
        connect(pd, bus_port[bus], bus)
        virtual.append((pt, pv, s.energy))
        storage_ports[s.id] = {"charge": pc, "discharge": pd, "tank": pt, "soc": pv}
    for e in spec.energies:
        if e.bus is None and spec.has_output(e.id):
            po = add_port(f"out:{e.id}", f"out:{e.id}", "output", "input", e.id)
            connect(bus_port[e.id], po, e.id)
    for pt, pv, m in virtual:
        connect(pt, pv, m, real=False)

    P, L = len(ports), len(branches)
    A = np.zeros((P, L))
    for l, b in enumerate(branches):
        A[b.tail, l] = -1.0
        A[b.head, l] = 1.0

    out_ports: list[int] = []
    H_rows: list[np.ndarray] = []
    for c in spec.converters:
        cp = converter_ports[c.id]
        for m, eta in c.outputs:
            row = np.zeros(P)
            row[cp[m]] = 1.0
            row[cp["in"]] = eta
            out_ports.append(cp[m])
            H_rows.append(row)
    for s in spec.storages:
        sp = storage_ports[s.id]
        row = np.zeros(P)
        row[sp["charge"]] = s.eta_charge
        row[sp["discharge"]] = 1.0 / s.eta_discharge
        row[sp["soc"]] = 1.0
        out_ports.append(sp["discharge"])
        H_rows.append(row)
    for e in spec.energies:
        if e.bus is None:
            row = np.zeros(P)
            row[bus_port[e.id]] = 1.0
            out_ports.append(bus_port[e.id])
            H_rows.append(row)
    H = np.array(H_rows).reshape(len(H_rows), P)

    devices = [c.id for c in spec.converters] + [s.id for s in spec.storages]
    J = np.zeros((len(devices), P))
    for gi, c in enumerate(spec.converters):
        J[gi, converter_ports[c.id]["in"]] = 1.0
    for k, s in enumerate(spec.storages):
        J[len(spec.converters) + k, storage_ports[s.id]["soc"]] = 1.0

    energies = spec.energy_ids
    K = np.array([1.0 if b.real else 0.0 for b in branches])
    U = np.zeros((len(energies), L))
    W = np.zeros((len(energies), L))
    for l, b in enumerate(branches):
        tail, head = ports[b.tail], ports[b.head]
        if tail.kind == "grid":
            U[energies.index(tail.energy), l] = 1.0
        if head.kind == "output":
            W[energies.index(head.energy), l] = 1.0
    Z = H @ A
    topo = HubTopology(spec, energies, ports, branches, out_ports, devices, bus_port,
                       A, H, J, K, U, W, Z, converter_ports, storage_ports)
    for arr in (A, H, J, K, U, W, Z):
        arr.setflags(write=False)
    return topo


def validate_topology(topo: HubTopology) -> list[str]:
    """Check structural invariants; returns findings, empty iff valid."""
    out: list[str] = []
    A, ports, branches = topo.A, topo.ports, topo.branches
    by_id = {e.id: e for e in topo.spec.energies}

    def carrier(p: Port) -> str:
        e = by_id.get(p.energy)
        return e.bus_energy if e else p.energy

    if not np.all(np.isin(A, (-1.0, 0.0, 1.0))):
        out.append("A has entries outside {-1, 0, 1}")
    for l, b in enumerate(branches):
        col = A[:, l]
        heads, tails = int((col == 1).sum()), int((col == -1).sum())
        if heads > 1:
            out.append(f"branch {b.id} has two heads")
        if tails > 1:
            out.append(f"branch {b.id} has two tails")
        if heads == 0:
            out.append(f"branch {b.id} has no head")
        if tails == 0:
            out.append(f"branch {b.id} has no tail")
        if abs(col.sum()) > 0:
            out.append(f"branch {b.id}: column of A does not sum to zero")
        if heads != 1 or tails != 1:
            continue
        t, h = ports[int(np.flatnonzero(col == -1)[0])], ports[int(np.flatnonzero(col == 1)[0])]
        if carrier(t) != carrier(h):
            out.append(f"branch {b.id} joins mismatched energies {t.energy!r} and {h.energy!r}")
        if b.real != bool(topo.K[l]):
            out.append(f"branch {b.id}: K={topo.K[l]:g} disagrees with real={b.real}")
        if b.real:
            n_bus = (t.kind == "bus") + (h.kind == "bus")
            if n_bus != 1:
                out.append(f"branch {b.id} touches {n_bus} energy buses (expected 1)")
            if t.virtual or h.virtual:
                out.append(f"branch {b.id} is real but uses a virtual port")
        elif not (t.virtual and h.virtual):
            out.append(f"branch {b.id} is virtual but joins non-virtual ports")
    for p in ports:
        if p.virtual and p.kind != "storage":
            out.append(f"port {p.id} is virtual but not owned by a storage device")
    for name in ("U", "W"):
        M = getattr(topo, name)
        if not np.all(np.isin(M, (0.0, 1.0))):
            out.append(f"{name} has entries outside {{0, 1}}")
    if topo.Z.shape != (len(topo.out_ports), len(branches)):
        out.append("Z shape does not match output ports x branches")
    elif not np.allclose(topo.Z, topo.H @ A):
        out.append("Z differs from H @ A")
    for p in topo.out_ports:
        if ports[p].direction != "output" and ports[p].kind != "bus":
            out.append(f"port {ports[p].id} has a Z row but is not an output or bus port")
    expected = {i for i, p in enumerate(ports)
                if (p.kind in ("converter", "storage") and p.direction == "output" and not p.virtual)
                or p.kind == "bus"}
    missing = expected - set(topo.out_ports)
    for p in sorted(missing):
        out.append(f"output port {ports[p].id} has no Z row")
    return out


def pairwise_branch_count(spec: HubSpec, energy: str) -> int:
    """Branches needed to join every source to every sink of ``energy`` without a bus.

    Pairs owned by the same device (a storage unit feeding itself) are not
    counted.  An aliased energy is counted on the bus it feeds.
    """
    ids = spec.energy_ids
    if energy not in ids:
        raise KeyError(f"unknown energy {energy!r}")
    by_id = {e.id: e for e in spec.energies}
    bus = by_id[energy].bus_energy
    on_bus = lambda m: by_id[m].bus_energy == bus  # noqa: E731
    sources: list[str] = [f"grid:{g.energy}" for g in spec.grid if on_bus(g.energy)]
    sinks: list[str] = []
    for c in spec.converters:
        if on_bus(c.input):
            sinks.append(c.id)
        sources += [c.id for m, _ in c.outputs if on_bus(m)]
    for s in spec.storages:
        if on_bus(s.energy):
            sources.append(s.id)
            sinks.append(s.id)
    for e in spec.energies:
        if e.bus is None and on_bus(e.id) and spec.has_output(e.id):
            sinks.append(f"out:{e.id}")
    return sum(1 for a in sources for b in sinks if a != b)


# ---------------------------------------------------------------------------
# YAML file format
# ---------------------------------------------------------------------------


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=True)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _take(d: Mapping, key: str, kind, where: str, problems: list[str], default: Any = ...):
    line = d.get("__line__", "?")
    if key not in d:
        if default is ...:
            problems.append(f"line {line}: {where}: missing field {key!r}")
            return None
        return default
    v = d[key]
    try:
        if kind is bool:
            if not isinstance(v, bool):
                raise TypeError
            return v
        if kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            return int(v)
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        return kind(v)
    except (TypeError, ValueError):
        problems.append(f"line {line}: {where}: field {key!r} has invalid value {v!r}")
        return None


_FIELDS = {
    "energies": {"id", "demanded", "bus"},
    "grid": {"energy", "cap_cost", "step", "bits", "exportable"},
    "converters": {"id", "input", "outputs", "unit_rating", "unit_cost", "bits"},
    "storages": {"id", "energy", "eta_charge", "eta_discharge", "power_cost", "energy_cost",
                 "power_step", "energy_step", "power_bits", "energy_bits"},
}


def parse_hub(text: str, source: str = "<hub>") -> HubSpec:
    """Parse a YAML hub description; errors carry line numbers."""
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise HubSpecError([f"{source}: YAML syntax error at {where}: {getattr(exc, 'problem', exc)}"])
    if not isinstance(doc, dict):
        raise HubSpecError([f"{source}: top level must be a mapping"])
    problems: list[str] = []
    for key in doc:
        if key not in ("name", "__line__", *_FIELDS):
            problems.append(f"{source}: unknown section {key!r}")
    sections: dict[str, list] = {}
    for key in _FIELDS:
        items = doc.get(key) or []
        if not isinstance(items, list):
            problems.append(f"{source}: section {key!r} must be a list")
            items = []
        for it in items:
            if not isinstance(it, dict):
                problems.append(f"{source}: entries of {key!r} must be mappings")
                continue
            extra = set(it) - _FIELDS[key] - {"__line__"}
            if extra:
                problems.append(f"{source}: line {it['__line__']}: {key}: unknown fields {sorted(extra)}")
        sections[key] = [it for it in items if isinstance(it, dict)]

    energies = []
    for it in sections["energies"]:
        w = f"energy {it.get('id', '?')!r}"
        energies.append(EnergyType(
            id=_take(it, "id", str, w, problems),
            demanded=_take(it, "demanded", bool, w, problems, False),
            bus=_take(it, "bus", str, w, problems, None),
        ))
    grid = []
    for it in sections["grid"]:
        w = f"grid {it.get('energy', '?')!r}"
        grid.append(GridConnection(
            energy=_take(it, "energy", str, w, problems),
            cap_cost=_take(it, "cap_cost", float, w, problems),
            step=_take(it, "step", float, w, problems),
            bits=_take(it, "bits", int, w, problems),
            exportable=_take(it, "exportable", bool, w, problems, False),
        ))
    converters = []
    for it in sections["converters"]:
        w = f"converter {it.get('id', '?')!r}"
        outs = it.get("outputs")
        pairs: list[tuple[str, float]] = []
        if isinstance(outs, dict):
            for m, eta in outs.items():
                if m == "__line__":
                    continue
                try:
                    pairs.append((str(m), float(eta)))
                except (TypeError, ValueError):
                    problems.append(f"line {it['__line__']}: {w}: efficiency for {m!r} is not a number")
        else:
            problems.append(f"line {it['__line__']}: {w}: outputs must map energy -> efficiency")
        inp = it.get("input")
        if isinstance(inp, list):
            problems.append(f"line {it['__line__']}: {w}: only single-input converters are supported")
            inp = None
        converters.append(Converter(
            id=_take(it, "id", str, w, problems),
            input=str(inp) if inp is not None else _take(it, "input", str, w, problems),
            outputs=tuple(pairs),
            unit_rating=_take(it, "unit_rating", float, w, problems),
            unit_cost=_take(it, "unit_cost", float, w, problems),
            bits=_take(it, "bits", int, w, problems),
        ))
    storages = []
    for it in sections["storages"]:
        w = f"storage {it.get('id', '?')!r}"
        storages.append(Storage(
            id=_take(it, "id", str, w, problems),
            energy=_take(it, "energy", str, w, problems),
            eta_charge=_take(it, "eta_charge", float, w, problems),
            eta_discharge=_take(it, "eta_discharge", float, w, problems),
            power_cost=_take(it, "power_cost", float, w, problems),
            energy_cost=_take(it, "energy_cost", float, w, problems),
            power_step=_take(it, "power_step", float, w, problems),
            energy_step=_take(it, "energy_step", float, w, problems),
            power_bits=_take(it, "power_bits", int, w, problems),
            energy_bits=_take(it, "energy_bits", int, w, problems),
        ))
    if problems:
        raise HubSpecError([f"{source}: {p}" if not p.startswith(source) else p for p in problems])
    spec = HubSpec(str(doc.get("name", "hub")), tuple(energies), tuple(grid),
                   tuple(converters), tuple(storages))
    lines = {("energies", e.id): it["__line__"] for e, it in zip(energies, sections["energies"])}
    lines.update({("converters", c.id): it["__line__"] for c, it in zip(converters, sections["converters"])})
    lines.update({("storages", s.id): it["__line__"] for s, it in zip(storages, sections["storages"])})
    lines.update({("grid", g.energy): it["__line__"] for g, it in zip(grid, sections["grid"])})
    found = validate_spec(spec)
    if found:
        raise HubSpecError([_locate(p, lines, source) for p in found])
    return spec


def _locate(problem: str, lines: dict, source: str) -> str:
    for (section, key), line in lines.items():
        singular = {"energies": "energy", "converters": "converter",
                    "storages": "storage", "grid": "grid"}[section]
        if problem.startswith(f"{singular} {key!r}"):
            return f"{source}: line {line}: {problem}"
    return f"{source}: {problem}"


def load_hub(path) -> HubSpec:
    path = Path(path)
    return parse_hub(path.read_text(encoding="utf-8"), str(path))


def hub_to_dict(spec: HubSpec) -> dict:
    return {
        "name": spec.name,
        "energies": [{k: v for k, v in (("id", e.id), ("demanded", e.demanded), ("bus", e.bus))
                      if v not in (None, False) or k == "id"} for e in spec.energies],
        "grid": [{"energy": g.energy, "cap_cost": g.cap_cost, "step": g.step, "bits": g.bits,
                  "exportable": g.exportable} for g in spec.grid],
        "converters": [{"id": c.id, "input": c.input, "outputs": dict(c.outputs),
                        "unit_rating": c.unit_rating, "unit_cost": c.unit_cost, "bits": c.bits}
                       for c in spec.converters],
        "storages": [{f: getattr(s, f) for f in ("id", "energy", "eta_charge", "eta_discharge",
                                                  "power_cost", "energy_cost", "power_step",
                                                  "energy_step", "power_bits", "energy_bits")}
                     for s in spec.storages],
    }


def dump_hub(spec: HubSpec) -> str:
    return yaml.safe_dump(hub_to_dict(spec), sort_keys=False)
