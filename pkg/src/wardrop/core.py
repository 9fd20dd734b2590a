"""Core data model: game instances, sensitivity classes, flows, deviations.

An instance is a finite set of resources with load-dependent latencies plus
one commodity per traffic population.  A commodity carries a demand and an
explicitly enumerated list of strategies; each strategy is a set of resource
ids (a path when a graph annotation is attached, a matroid basis otherwise).

A population may be split into sensitivity classes: pairs (class demand,
sensitivity) with strictly increasing sensitivities inside a commodity.  The
same container doubles as a per-class tolerance profile when the second
member is read as an approximation factor instead of a sensitivity.

All types are immutable; operations are pure functions of their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isfinite
from typing import Iterable, Mapping, Sequence

from .errors import InputError, InvariantError, WardropError
from .latency import DeviationFn, LatencyFn
from .tolerances import TAU_ABS, tau_rel


@dataclass(frozen=True)
class Resource:
    id: str
    latency: LatencyFn


@dataclass(frozen=True)
class NetworkAnnotation:
    """Optional directed-graph view: one arc per resource, two terminals."""

    nodes: tuple[str, ...]
    arcs: tuple[tuple[str, str, str], ...]  # (resource id, tail, head)
    source: str
    sink: str

    def arc_map(self) -> dict[str, tuple[str, str]]:
        return {rid: (tail, head) for rid, tail, head in self.arcs}


@dataclass(frozen=True)
class Commodity:
    demand: float
    strategies: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class GameInstance:
    resources: tuple[Resource, ...]
    commodities: tuple[Commodity, ...]
    graph: NetworkAnnotation | None = None
    meta: Mapping | None = None

    def resource_index(self) -> dict[str, int]:
        return {res.id: k for k, res in enumerate(self.resources)}

    def latency_of(self, rid: str) -> LatencyFn:
        for res in self.resources:
            if res.id == rid:
                return res.latency
        raise InputError(f"unknown resource id {rid!r}")

    @property
    def is_parallel_link(self) -> bool:
        """Single commodity whose strategies are all singleton resources."""
        if len(self.commodities) != 1:
            return False
        return all(len(s) == 1 for s in self.commodities[0].strategies)


@dataclass(frozen=True)
class SensitivityProfile:
    """Per commodity: classes of (demand, value), values strictly increasing.

    ``values`` are deviation sensitivities by default; several verifiers read
    them as per-class approximation factors instead.
    """

    classes: tuple[tuple[tuple[float, float], ...], ...]

    @classmethod
    def homogeneous(cls, instance: GameInstance, value: float = 1.0) -> "SensitivityProfile":
        return cls(tuple(((c.demand, float(value)),) for c in instance.commodities))

    @classmethod
    def single_commodity(
        cls, demands: Sequence[float], values: Sequence[float]
    ) -> "SensitivityProfile":
        if len(demands) != len(values):
            raise InputError(
                f"class demands and values differ in length: {len(demands)} vs {len(values)}"
            )
        return cls((tuple(zip(map(float, demands), map(float, values))),))

    def validate(self, instance: GameInstance) -> None:
        if len(self.classes) != len(instance.commodities):
            raise InvariantError(
                f"profile covers {len(self.classes)} commodities, "
                f"instance has {len(instance.commodities)}"
            )
        for i, (classes, commodity) in enumerate(zip(self.classes, instance.commodities)):
            if not classes:
                raise InvariantError(f"commodity {i} has no sensitivity classes")
            total = 0.0
            for j, (dem, val) in enumerate(classes):
                if not (isfinite(dem) and isfinite(val)):
                    raise InvariantError(f"commodity {i} class {j} has non-finite entries")
                if dem < 0:
                    raise InvariantError(f"commodity {i} class {j} demand {dem} is negative")
                if val < 0:
                    raise InvariantError(f"commodity {i} class {j} value {val} is negative")
                total += dem
            values = [val for _, val in classes]
            if any(v1 >= v2 for v1, v2 in zip(values, values[1:])):
                raise InvariantError(
                    f"commodity {i} class values must be strictly increasing, got {values}"
                )
            slack = TAU_ABS + tau_rel() * max(1.0, abs(commodity.demand))
            if abs(total - commodity.demand) > slack:
                raise InvariantError(
                    f"commodity {i} class demands sum to {total}, expected {commodity.demand}"
                )

    def n_classes(self, i: int) -> int:
        return len(self.classes[i])

    def scaled(self, factor: float) -> "SensitivityProfile":
        """Same classes with every value multiplied by ``factor``."""
        return SensitivityProfile(
            tuple(tuple((d, factor * v) for d, v in cls_) for cls_ in self.classes)
        )


def _as_strategy(path: Iterable[str]) -> tuple[str, ...]:
    return tuple(path)


def validate_instance(instance: GameInstance) -> list[str]:
    """Collect every violated instance invariant; empty list iff well formed."""
    report: list[str] = []
    seen: set[str] = set()
    for res in instance.resources:
        if not res.id:
            report.append("resource ids must be nonempty strings")
        if res.id in seen:
            report.append(f"duplicate resource id {res.id!r}")
        seen.add(res.id)
        try:
            res.latency.validate()
        except WardropError as exc:
            report.append(f"resource {res.id!r}: {exc}")
    if not instance.commodities:
        report.append("instance has no commodities")
    for i, commodity in enumerate(instance.commodities):
        if not (isfinite(commodity.demand) and commodity.demand > 0):
            report.append(f"commodity {i} demand must be positive, got {commodity.demand}")
        if not commodity.strategies:
            report.append(f"commodity {i} has no strategies")
        canon = set()
        for strat in commodity.strategies:
            if not strat:
                report.append(f"commodity {i} has an empty strategy")
                continue
            if len(set(strat)) != len(strat):
                report.append(f"commodity {i} strategy {strat} repeats a resource")
            missing = [rid for rid in strat if rid not in seen]
            if missing:
                report.append(
                    f"commodity {i} strategy uses unknown resource {missing[0]!r}"
                )
            key = frozenset(strat)
            if key in canon:
                report.append(f"commodity {i} lists strategy {sorted(strat)} twice")
            canon.add(key)
    if instance.graph is not None:
        report.extend(_graph_violations(instance))
    return report


def require_valid_instance(instance: GameInstance) -> None:
    """Raise InvariantError carrying the first violation, if any."""
    report = validate_instance(instance)
    if report:
        raise InvariantError(report[0])


def _graph_violations(instance: GameInstance) -> list[str]:
    graph = instance.graph
    assert graph is not None
    report: list[str] = []
    node_set = set(graph.nodes)
    if len(node_set) != len(graph.nodes):
        report.append("graph annotation repeats a node")
    if graph.source not in node_set or graph.sink not in node_set:
        report.append("graph terminals must be listed nodes")
    if graph.source == graph.sink:
        report.append("graph source and sink must differ")
    arc_ids = [rid for rid, _, _ in graph.arcs]
    if set(arc_ids) != {res.id for res in instance.resources} or len(arc_ids) != len(
        set(arc_ids)
    ):
        # Path checks below would chase missing arcs; stop at the mismatch.
        report.append("graph arcs must match the resource set one-to-one")
        return report
    arc_map = graph.arc_map()
    for rid, tail, head in graph.arcs:
        if tail not in node_set or head not in node_set:
            report.append(f"arc {rid!r} references an unknown node")
    for i, commodity in enumerate(instance.commodities):
        for strat in commodity.strategies:
            msg = _path_violation(arc_map, strat, graph.source, graph.sink, i)
            if msg:
                report.append(msg)
    return report


def _path_violation(
    arc_map: dict[str, tuple[str, str]],
    strat: tuple[str, ...],
    source: str,
    sink: str,
    commodity: int,
) -> str | None:
    at = source
    visited = {source}
    for rid in strat:
        tail, head = arc_map[rid]
        if tail != at:
            return (
                f"commodity {commodity} strategy {strat} is not a contiguous "
                f"source-sink path (arc {rid!r} starts at {tail!r}, expected {at!r})"
            )
        if head in visited:
            return f"commodity {commodity} strategy {strat} revisits node {head!r}"
        visited.add(head)
        at = head
    if at != sink:
        return f"commodity {commodity} strategy {strat} ends at {at!r}, not the sink"
    return None


@dataclass(frozen=True)
class Flow:
    """Class-resolved strategy flows with cached per-resource loads.

    ``values[i][j][p]`` is the amount class j of commodity i routes over
    strategy p.  Loads are cached at construction; ``recompute_loads``
    repeats the identical summation so the cache can be audited bit for bit.
    """

    instance: GameInstance
    values: tuple[tuple[tuple[float, ...], ...], ...]
    class_demands: tuple[tuple[float, ...], ...]
    loads: tuple[float, ...] = field(compare=False)
    commodity_loads: tuple[tuple[float, ...], ...] = field(compare=False)

    @classmethod
    def build(
        cls,
        instance: GameInstance,
        values: Sequence[Sequence[Sequence[float]]],
        profile: SensitivityProfile | None = None,
    ) -> "Flow":
        if len(values) != len(instance.commodities):
            raise InputError(
                f"flow covers {len(values)} commodities, instance has {len(instance.commodities)}"
            )
        if profile is not None:
            profile.validate(instance)
            demands = tuple(tuple(d for d, _ in cl) for cl in profile.classes)
        else:
            demands = tuple((c.demand,) for c in instance.commodities)
        cleaned: list[tuple[tuple[float, ...], ...]] = []
        for i, commodity in enumerate(instance.commodities):
            per_class = values[i]
            if len(per_class) != len(demands[i]):
                raise InputError(
                    f"commodity {i}: flow has {len(per_class)} classes, profile has {len(demands[i])}"
                )
            rows = []
            for j, row in enumerate(per_class):
                if len(row) != len(commodity.strategies):
                    raise InputError(
                        f"commodity {i} class {j}: {len(row)} strategy flows for "
                        f"{len(commodity.strategies)} strategies"
                    )
                vals = []
                for p, v in enumerate(row):
                    v = float(v)
                    if v < 0.0:
                        if v < -TAU_ABS:
                            raise InvariantError(
                                f"commodity {i} class {j} strategy {p} flow {v} is negative"
                            )
                        v = 0.0
                    vals.append(v)
                total = sum(vals)
                slack = TAU_ABS + tau_rel() * max(1.0, demands[i][j])
                if abs(total - demands[i][j]) > slack:
                    raise InvariantError(
                        f"commodity {i} class {j} routes {total}, demand is {demands[i][j]}"
                    )
                rows.append(tuple(vals))
            cleaned.append(tuple(rows))
        values_t = tuple(cleaned)
        per_comm, total_loads = _edge_loads(instance, values_t)
        return cls(
            instance=instance,
            values=values_t,
            class_demands=demands,
            loads=total_loads,
            commodity_loads=per_comm,
        )

    @classmethod
    def single_class(
        cls, instance: GameInstance, per_commodity: Sequence[Sequence[float]]
    ) -> "Flow":
        return cls.build(instance, [[row] for row in per_commodity])

    @classmethod
    def spread_classes(
        cls,
        instance: GameInstance,
        per_commodity: Sequence[Sequence[float]],
        profile: SensitivityProfile,
    ) -> "Flow":
        """Split commodity-level strategy flows across classes pro rata."""
        values = []
        for i, commodity in enumerate(instance.commodities):
            rows = []
            for dem, _ in profile.classes[i]:
                share = dem / commodity.demand
                rows.append([share * v for v in per_commodity[i]])
            values.append(rows)
        return cls.build(instance, values, profile)

    def strategy_totals(self, i: int) -> tuple[float, ...]:
        """Commodity-level flow per strategy (classes summed)."""
        n = len(self.instance.commodities[i].strategies)
        out = [0.0] * n
        for row in self.values[i]:
            for p, v in enumerate(row):
                out[p] += v
        return tuple(out)

    def recompute_loads(self) -> tuple[float, ...]:
        """Re-derive total loads with the construction-time summation order."""
        return _edge_loads(self.instance, self.values)[1]

    def used(self, i: int, j: int, threshold: float = TAU_ABS) -> list[int]:
        return [p for p, v in enumerate(self.values[i][j]) if v > threshold]


def _edge_loads(
    instance: GameInstance,
    values: tuple[tuple[tuple[float, ...], ...], ...],
) -> tuple[tuple[tuple[float, ...], ...], tuple[float, ...]]:
    index = instance.resource_index()
    n = len(instance.resources)
    per_comm: list[tuple[float, ...]] = []
    for i, commodity in enumerate(instance.commodities):
        loads_i = [0.0] * n
        for row in values[i]:
            for p, strat in enumerate(commodity.strategies):
                v = row[p]
                if v != 0.0:
                    for rid in strat:
                        loads_i[index[rid]] += v
        per_comm.append(tuple(loads_i))
    totals = [0.0] * n
    for loads_i in per_comm:
        for k in range(n):
            totals[k] += loads_i[k]
    return tuple(per_comm), tuple(totals)


def path_latency(
    instance: GameInstance, strategy: Sequence[str], loads: Sequence[float]
) -> float:
    """Latency of a strategy under the given per-resource loads."""
    index = instance.resource_index()
    total = 0.0
    for rid in strategy:
        if rid not in index:
            raise InputError(f"unknown resource id {rid!r}")
        total += instance.resources[index[rid]].latency(loads[index[rid]])
    return total


def strategy_latencies(instance: GameInstance, i: int, loads: Sequence[float]) -> list[float]:
    """Latency of every strategy of commodity i under the given loads."""
    index = instance.resource_index()
    lat = [instance.resources[k].latency(loads[k]) for k in range(len(instance.resources))]
    return [sum(lat[index[rid]] for rid in strat) for strat in instance.commodities[i].strategies]


def social_cost(instance: GameInstance, flow: Flow) -> float:
    """Total travel cost: sum over resources of load * latency(load)."""
    _check_feasible(instance, flow)
    total = 0.0
    for k, res in enumerate(instance.resources):
        load = flow.loads[k]
        total += load * res.latency(load)
    return total


def _check_feasible(instance: GameInstance, flow: Flow) -> None:
    if flow.instance is not instance and flow.instance != instance:
        raise InputError("flow was built for a different instance")
    for i, commodity in enumerate(instance.commodities):
        routed = sum(sum(row) for row in flow.values[i])
        slack = TAU_ABS + tau_rel() * max(1.0, commodity.demand)
        if abs(routed - commodity.demand) > slack:
            raise InvariantError(
                f"commodity {i} routes {routed}, demand is {commodity.demand}"
            )


@dataclass(frozen=True)
class DeviationProfile:
    """Bounded strategy deviations.

    Two representations:
      * explicit -- ``strategy_values[i][p]`` is the deviation of strategy p
        of commodity i *at the flow under inspection*;
      * edge-induced -- ``edge_fns[rid]`` gives a per-resource deviation
        function and a strategy's deviation is the sum over its resources.

    Membership in the bounded set requires 0 <= delta_P <= beta * latency_P
    at the inspected flow (checked per resource in the edge-induced case).
    """

    beta: float
    strategy_values: tuple[tuple[float, ...], ...] | None = None
    edge_fns: Mapping[str, DeviationFn] | None = None

    def __post_init__(self):
        if (self.strategy_values is None) == (self.edge_fns is None):
            raise InputError("exactly one of strategy_values / edge_fns must be given")
        if not (isfinite(self.beta) and self.beta >= 0):
            raise InputError(f"beta must be a nonnegative float, got {self.beta}")

    @property
    def edge_induced(self) -> bool:
        return self.edge_fns is not None

    def edge_value(self, instance: GameInstance, rid: str, load: float) -> float:
        assert self.edge_fns is not None
        fn = self.edge_fns.get(rid)
        if fn is None:
            return 0.0
        return fn(load, instance.latency_of(rid))

    def strategy_value(
        self, instance: GameInstance, i: int, p: int, loads: Sequence[float]
    ) -> float:
        """Deviation of strategy p of commodity i at the given loads."""
        if self.strategy_values is not None:
            return self.strategy_values[i][p]
        index = instance.resource_index()
        strat = instance.commodities[i].strategies[p]
        total = 0.0
        for rid in strat:
            fn = self.edge_fns.get(rid)  # type: ignore[union-attr]
            if fn is not None:
                total += fn(loads[index[rid]], instance.resources[index[rid]].latency)
        return total

    def check_membership(
        self, instance: GameInstance, flow: Flow, *, atol: float = TAU_ABS
    ) -> None:
        """Raise InputError when some deviation leaves [0, beta * latency]."""
        if self.edge_fns is not None:
            index = instance.resource_index()
            for rid in sorted(self.edge_fns):
                k = index.get(rid)
                if k is None:
                    raise InputError(f"deviation references unknown resource {rid!r}")
                load = flow.loads[k]
                dv = self.edge_fns[rid](load, instance.resources[k].latency)
                cap = self.beta * instance.resources[k].latency(load)
                if dv < -atol or dv > cap + atol + tau_rel() * cap:
                    raise InputError(
                        f"deviation on resource {rid!r} is {dv} at load {load}, "
                        f"outside [0, {cap}]"
                    )
            return
        assert self.strategy_values is not None
        if len(self.strategy_values) != len(instance.commodities):
            raise InputError("explicit deviations do not match the commodity list")
        for i, commodity in enumerate(instance.commodities):
            if len(self.strategy_values[i]) != len(commodity.strategies):
                raise InputError(f"commodity {i}: deviation list does not match strategies")
            for p, strat in enumerate(commodity.strategies):
                dv = self.strategy_values[i][p]
                cap = self.beta * path_latency(instance, strat, flow.loads)
                if dv < -atol or dv > cap + atol + tau_rel() * cap:
                    raise InputError(
                        f"deviation on commodity {i} strategy {list(strat)} is {dv}, "
                        f"outside [0, {cap}]"
                    )

    def to_obj(self) -> dict:
        if self.edge_fns is not None:
            return {
                "beta": self.beta,
                "edges": {rid: fn.to_obj() for rid, fn in sorted(self.edge_fns.items())},
            }
        return {
            "beta": self.beta,
            "strategies": [list(row) for row in self.strategy_values],  # type: ignore[union-attr]
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "DeviationProfile":
        if not isinstance(obj, dict) or "beta" not in obj:
            raise InputError("deviation block must be a dict with a 'beta'")
        if "edges" in obj:
            fns = {rid: DeviationFn.from_obj(o) for rid, o in obj["edges"].items()}
            return cls(beta=float(obj["beta"]), edge_fns=fns)
        if "strategies" in obj:
            vals = tuple(tuple(map(float, row)) for row in obj["strategies"])
            return cls(beta=float(obj["beta"]), strategy_values=vals)
        raise InputError("deviation block needs 'edges' or 'strategies'")
