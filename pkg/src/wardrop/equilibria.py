"""Equilibrium solvers and verifiers for enumerated-strategy games.

Solvers
-------
``compute_nash_flow`` minimizes the convex routing potential
sum_e integral_0^{x_e} l_e(u) du.  Parallel-link instances are solved
exactly by bisecting on the common latency level; everything else runs a
linearize / best-strategy / line-search loop over the product of demand
simplices, moving mass from the costliest used strategy to the cheapest
strategy of one commodity at a time with an exact line search (closed form
on piecewise-linear latencies, bisection otherwise).  Termination is by
relative duality gap.

``heterogeneous_parallel_equilibrium`` computes equilibria under bounded
deviations for populations with several sensitivity classes on parallel
links, by damped iterated best response in descending sensitivity order.
The returned flow must pass ``verify_deviated_nash``; that verification is
the correctness contract, not the iteration count.

Verifiers
---------
``verify_approx_nash`` checks the per-class condition
l_P(f) <= (1 + eps_ij) * l_P'(f) on used strategies;
``verify_deviated_nash`` checks the analogous condition on deviated costs
l_P(f) + gamma_ij * delta_P(f).  Both return a certificate holding the
worst slack per class.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb, isfinite

import numpy as np

from .bounds import BoundValue
from .core import (
    DeviationProfile,
    Flow,
    GameInstance,
    SensitivityProfile,
    social_cost,
    strategy_latencies,
    require_valid_instance,
)
from .errors import ConvergenceError, InputError, InvariantError, RefusalError
from .tolerances import TAU_ABS, tau_rel

SEARCH_VARIABLE_CAP = 8
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class ViolationRecord:
    """Worst equilibrium-condition slack for one (commodity, class)."""

    commodity: int
    cls: int
    path: tuple[str, ...]
    witness: tuple[str, ...]
    lhs: float
    rhs: float
    slack: float

    def to_obj(self) -> dict:
        return {
            "commodity": self.commodity,
            "class": self.cls,
            "path": list(self.path),
            "witness": list(self.witness),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
        }


@dataclass(frozen=True)
class EquilibriumCertificate:
    kind: str
    records: tuple[ViolationRecord, ...]
    passed: bool
    atol: float
    rtol: float

    @property
    def worst_slack(self) -> float:
        return min((rec.slack for rec in self.records), default=0.0)

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "worst_violations": [rec.to_obj() for rec in self.records],
            "pass": self.passed,
        }


@dataclass(frozen=True)
class RatioReport:
    """Measured cost ratio next to the bound it is compared against."""

    ratio: float
    bound: BoundValue | None = None
    slack: float | None = None

    def to_obj(self) -> dict:
        return {
            "ratio": self.ratio,
            "bound": None if self.bound is None else self.bound.to_obj(),
            "slack": self.slack,
        }


# -- profile plumbing ----------------------------------------------------


def _resolve_profile(
    instance: GameInstance, flow: Flow, profile: SensitivityProfile | float | None
) -> SensitivityProfile:
    """Coerce a profile argument into classes matching the flow's shape."""
    if profile is None or isinstance(profile, (int, float)):
        value = 0.0 if profile is None else float(profile)
        if value < 0 or not isfinite(value):
            raise InputError(f"class value must be a nonnegative float, got {profile}")
        return SensitivityProfile(
            tuple(
                tuple((d, value) for d in flow.class_demands[i])
                for i in range(len(instance.commodities))
            )
        )
    profile.validate(instance)
    for i in range(len(instance.commodities)):
        if len(profile.classes[i]) != len(flow.class_demands[i]):
            raise InputError(
                f"commodity {i}: profile has {len(profile.classes[i])} classes, "
                f"flow has {len(flow.class_demands[i])}"
            )
        for j, (dem, _) in enumerate(profile.classes[i]):
            slack = TAU_ABS + tau_rel() * max(1.0, dem)
            if abs(dem - flow.class_demands[i][j]) > slack:
                raise InputError(
                    f"commodity {i} class {j}: profile demand {dem} does not match "
                    f"flow class demand {flow.class_demands[i][j]}"
                )
    return profile


def _passes(slack: float, rhs: float, atol: float, rtol: float) -> bool:
    return slack >= -(atol + rtol * abs(rhs))


# -- verification ---------------------------------------------------------


def verify_approx_nash(
    instance: GameInstance,
    flow: Flow,
    eps: SensitivityProfile | float,
    *,
    atol: float | None = None,
    rtol: float = 0.0,
) -> EquilibriumCertificate:
    """Check l_P(f) <= (1 + eps_ij) * l_P'(f) for every used P and every P'.

    ``eps`` is either a single factor shared by all classes or a profile
    whose values are read as per-class approximation factors.
    """
    atol = TAU_ABS if atol is None else atol
    profile = _resolve_profile(instance, flow, eps)
    records: list[ViolationRecord] = []
    passed = True
    for i, commodity in enumerate(instance.commodities):
        lat = strategy_latencies(instance, i, flow.loads)
        min_lat = min(lat)
        witness_p = lat.index(min_lat)
        for j, (_, eps_j) in enumerate(profile.classes[i]):
            used = flow.used(i, j)
            if not used:
                continue
            rhs = (1.0 + eps_j) * min_lat
            worst_p = max(used, key=lambda p: lat[p])
            slack = rhs - lat[worst_p]
            records.append(
                ViolationRecord(
                    commodity=i,
                    cls=j,
                    path=commodity.strategies[worst_p],
                    witness=commodity.strategies[witness_p],
                    lhs=lat[worst_p],
                    rhs=rhs,
                    slack=slack,
                )
            )
            passed = passed and _passes(slack, rhs, atol, rtol)
    return EquilibriumCertificate("approx-nash", tuple(records), passed, atol, rtol)


def verify_deviated_nash(
    instance: GameInstance,
    flow: Flow,
    deviations: DeviationProfile,
    profile: SensitivityProfile | float | None = None,
    *,
    atol: float | None = None,
    rtol: float = 0.0,
) -> EquilibriumCertificate:
    """Check the bounded-deviation equilibrium condition per class:
    used strategies minimize l_P(f) + gamma_ij * delta_P(f).

    Deviations must lie in the bounded set at this flow (InputError if not).
    ``profile`` defaults to homogeneous sensitivity 1.
    """
    atol = TAU_ABS if atol is None else atol
    if profile is None:
        profile = 1.0
    prof = _resolve_profile(instance, flow, profile)
    deviations.check_membership(instance, flow, atol=atol)
    records: list[ViolationRecord] = []
    passed = True
    for i, commodity in enumerate(instance.commodities):
        lat = strategy_latencies(instance, i, flow.loads)
        dev = [
            deviations.strategy_value(instance, i, p, flow.loads)
            for p in range(len(commodity.strategies))
        ]
        for j, (_, gamma_j) in enumerate(prof.classes[i]):
            qvals = [lat[p] + gamma_j * dev[p] for p in range(len(lat))]
            used = flow.used(i, j)
            if not used:
                continue
            rhs = min(qvals)
            witness_p = qvals.index(rhs)
            worst_p = max(used, key=lambda p: qvals[p])
            slack = rhs - qvals[worst_p]
            records.append(
                ViolationRecord(
                    commodity=i,
                    cls=j,
                    path=commodity.strategies[worst_p],
                    witness=commodity.strategies[witness_p],
                    lhs=qvals[worst_p],
                    rhs=rhs,
                    slack=slack,
                )
            )
            passed = passed and _passes(slack, rhs, atol, rtol)
    return EquilibriumCertificate("deviated-nash", tuple(records), passed, atol, rtol)


def deviations_from_approx(
    instance: GameInstance, flow: Flow, eps: float, gamma: float = 1.0
) -> DeviationProfile:
    """Construct explicit deviations that support an approximate equilibrium.

    Single commodity, homogeneous population.  Used strategies receive the
    gap to the costliest used strategy (divided by the sensitivity), unused
    strategies receive the maximal allowed deviation beta * l_P(f) with
    beta = eps / gamma.  The result always passes ``verify_deviated_nash``.
    """
    if len(instance.commodities) != 1 or len(flow.values[0]) != 1:
        raise InputError("deviation construction needs one commodity and one class")
    if not (isfinite(eps) and eps >= 0):
        raise InputError(f"eps must be nonnegative, got {eps}")
    if not (isfinite(gamma) and gamma > 0):
        raise InputError(f"gamma must be positive, got {gamma}")
    cert = verify_approx_nash(instance, flow, eps, atol=TAU_ABS, rtol=tau_rel())
    if not cert.passed:
        raise InputError(
            f"flow is not {eps}-approximate (worst slack {cert.worst_slack})"
        )
    beta = eps / gamma
    lat = strategy_latencies(instance, 0, flow.loads)
    used = set(flow.used(0, 0))
    l_max = max(lat[p] for p in used)
    values = []
    for p in range(len(lat)):
        if p in used:
            values.append(max(0.0, (l_max - lat[p]) / gamma))
        else:
            values.append(beta * lat[p])
    return DeviationProfile(beta=beta, strategy_values=(tuple(values),))


def verify_deviation_implies_approx(
    instance: GameInstance,
    flow: Flow,
    deviations: DeviationProfile,
    profile: SensitivityProfile | float | None = None,
    *,
    atol: float | None = None,
    rtol: float = 0.0,
) -> EquilibriumCertificate:
    """Re-verify a deviated equilibrium as approximate with eps = beta*gamma.

    Requires the flow to pass ``verify_deviated_nash`` first; the returned
    approximate certificate then holds by inclusion of the deviation model
    in the approximation model.
    """
    atol = TAU_ABS if atol is None else atol
    cert = verify_deviated_nash(
        instance, flow, deviations, profile, atol=atol, rtol=rtol
    )
    if not cert.passed:
        raise InputError(
            f"flow is not a bounded-deviation equilibrium (worst slack {cert.worst_slack})"
        )
    if profile is None or isinstance(profile, (int, float)):
        gamma = 1.0 if profile is None else float(profile)
        eps_profile: SensitivityProfile | float = deviations.beta * gamma
    elif deviations.beta == 0.0:
        # scaling a profile by zero would tie all class values
        eps_profile = 0.0
    else:
        eps_profile = profile.scaled(deviations.beta)
    return verify_approx_nash(instance, flow, eps_profile, atol=atol, rtol=rtol)


# -- exact parallel-link solver -------------------------------------------


def _parallel_link_loads(instance: GameInstance) -> list[float]:
    """Equilibrium strategy flows on parallel links by common-level bisection."""
    commodity = instance.commodities[0]
    r = commodity.demand
    index = instance.resource_index()
    fns = [instance.resources[index[s[0]]].latency for s in commodity.strategies]

    def take(fn, level: float) -> float:
        # largest load in [0, r] whose latency stays <= level
        if fn(0.0) > level:
            return 0.0
        if fn(r) <= level:
            return r
        a, b = 0.0, r
        for _ in range(100):
            mid = 0.5 * (a + b)
            if fn(mid) <= level:
                a = mid
            else:
                b = mid
        return a

    lo = min(fn(0.0) for fn in fns)
    hi = min(fn(r) for fn in fns)
    if sum(take(fn, lo) for fn in fns) >= r:
        hi = lo
        lo = lo - max(TAU_ABS, 1e-13 * max(1.0, abs(lo)))
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if sum(take(fn, mid) for fn in fns) >= r:
                hi = mid
            else:
                lo = mid
    base = [take(fn, lo) for fn in fns]
    caps = [take(fn, hi) for fn in fns]
    surplus = r - sum(base)
    den = sum(c - b for c, b in zip(caps, base))
    if den <= 0.0:
        # no headroom between the bracketing levels; fall back to the caps
        flows = list(caps)
    else:
        flows = [b + surplus * (c - b) / den for b, c in zip(base, caps)]
    drift = r - sum(flows)
    widest = max(range(len(flows)), key=lambda p: caps[p] - base[p])
    flows[widest] += drift
    return flows


# -- potential minimization ------------------------------------------------


def _latency_vector(fns, loads: np.ndarray) -> np.ndarray:
    return np.array([fn(x) for fn, x in zip(fns, loads)])


def _line_search(fns, loads: np.ndarray, delta: np.ndarray, tmax: float) -> float:
    """argmin over t in [0, tmax] of the potential along loads + t*delta."""
    touched = np.flatnonzero(delta)

    def dphi(t: float) -> float:
        total = 0.0
        for e in touched:
            total += delta[e] * fns[e](loads[e] + t * delta[e])
        return total

    d0 = dphi(0.0)
    if d0 >= 0.0:
        return 0.0
    if all(fns[e].is_piecewise for e in touched):
        ts = set()
        for e in touched:
            for bx in fns[e].breakpoint_loads():
                t = (bx - loads[e]) / delta[e]
                if 0.0 < t < tmax:
                    ts.add(t)
        prev, dprev = 0.0, d0
        for t in sorted(ts) + [tmax]:
            dt = dphi(t)
            if dt >= 0.0:
                return prev + (t - prev) * (-dprev) / (dt - dprev)
            prev, dprev = t, dt
        return tmax
    if dphi(tmax) <= 0.0:
        return tmax
    a, b = 0.0, tmax
    for _ in range(100):
        mid = 0.5 * (a + b)
        if dphi(mid) < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _frank_wolfe(
    instance: GameInstance, target_gap: float, max_iter: int
) -> tuple[list[np.ndarray], float]:
    """Minimize the routing potential; returns per-commodity strategy flows
    and the achieved relative duality gap."""
    index = instance.resource_index()
    n = len(instance.resources)
    fns = [res.latency for res in instance.resources]
    incidences: list[np.ndarray] = []
    demands: list[float] = []
    for commodity in instance.commodities:
        inc = np.zeros((len(commodity.strategies), n))
        for p, strat in enumerate(commodity.strategies):
            for rid in strat:
                inc[p, index[rid]] = 1.0
        incidences.append(inc)
        demands.append(commodity.demand)

    flows = [np.zeros(inc.shape[0]) for inc in incidences]
    loads = np.zeros(n)
    latv = _latency_vector(fns, loads)
    for i, inc in enumerate(incidences):
        best = int(np.argmin(inc @ latv))
        flows[i][best] = demands[i]
        loads = loads + demands[i] * inc[best]

    def progress() -> tuple[float, float]:
        """(relative duality gap, worst per-strategy residual).

        The residual is the amount by which some flow-carrying strategy
        exceeds the certificate margin over the cheapest strategy; the
        aggregate gap alone can hide crumbs of flow on costly strategies.
        """
        latv = _latency_vector(fns, loads)
        gap = 0.0
        cost = 0.0
        resid = 0.0
        margin_rel = 0.5 * tau_rel()
        for i, inc in enumerate(incidences):
            c = inc @ latv
            cost += float(flows[i] @ c)
            cmin = float(np.min(c))
            gap += float(flows[i] @ c) - demands[i] * cmin
            active = np.flatnonzero(flows[i] > TAU_ABS)
            if active.size:
                worst = float(np.max(c[active]))
                resid = max(resid, (worst - cmin) - (TAU_ABS + margin_rel * cmin))
        return gap / max(cost, TAU_ABS), resid

    steps = 0
    while True:
        moved = False
        for i, inc in enumerate(incidences):
            latv = _latency_vector(fns, loads)
            c = inc @ latv
            best = int(np.argmin(c))
            active = np.flatnonzero(flows[i] > 0.0)
            worst = int(active[np.argmax(c[active])])
            if worst == best or c[worst] - c[best] <= 0.0:
                continue
            delta = inc[best] - inc[worst]
            t = _line_search(fns, loads, delta, float(flows[i][worst]))
            steps += 1
            if t > 0.0:
                flows[i][best] += t
                flows[i][worst] -= t
                if flows[i][worst] < 0.0:
                    flows[i][worst] = 0.0
                loads = loads + t * delta
                moved = True
            if steps > max_iter:
                loads = _recompute(incidences, flows, n)
                achieved, _ = progress()
                raise ConvergenceError(
                    f"potential minimization exceeded {max_iter} iterations "
                    f"(relative duality gap {achieved:.3e}, target {target_gap:.3e})",
                    achieved=achieved,
                )
        loads = _recompute(incidences, flows, n)
        np.maximum(loads, 0.0, out=loads)
        rel, resid = progress()
        if rel <= target_gap and resid <= 0.0:
            return flows, rel
        if not moved:
            raise ConvergenceError(
                f"potential minimization stalled at relative duality gap {rel:.3e} "
                f"(target {target_gap:.3e})",
                achieved=rel,
            )


def _recompute(incidences, flows, n) -> np.ndarray:
    loads = np.zeros(n)
    for inc, f in zip(incidences, flows):
        loads += f @ inc
    return loads


def relative_duality_gap(instance: GameInstance, flow: Flow) -> float:
    """Relative duality gap of a flow for the routing potential:
    (sum_P f_P l_P - sum_i r_i min_P l_P) / total cost."""
    gap = 0.0
    cost = 0.0
    for i in range(len(instance.commodities)):
        lat = strategy_latencies(instance, i, flow.loads)
        totals = flow.strategy_totals(i)
        commodity_cost = sum(v * lat[p] for p, v in enumerate(totals))
        cost += commodity_cost
        gap += commodity_cost - instance.commodities[i].demand * min(lat)
    return gap / max(cost, TAU_ABS)


def beckmann_potential(instance: GameInstance, flow: Flow) -> float:
    """Value of the routing potential sum_e integral_0^{x_e} l_e."""
    return sum(
        res.latency.integral(flow.loads[k]) for k, res in enumerate(instance.resources)
    )


def compute_nash_flow(
    instance: GameInstance,
    profile: SensitivityProfile | None = None,
    *,
    method: str = "auto",
    rel_gap: float | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Flow:
    """Equilibrium flow of the plain game (deviations ignored).

    ``method``: "auto" picks the exact parallel-link solver when the
    instance is a single commodity over singleton strategies, otherwise the
    potential minimizer; "exact-parallel" and "potential" force a choice.
    The returned flow passes ``verify_approx_nash`` with eps = 0 at the
    relative tolerance.  When ``profile`` is given the equilibrium is split
    across classes pro rata (sensitivities do not matter without
    deviations).
    """
    require_valid_instance(instance)
    if method not in ("auto", "exact-parallel", "potential"):
        raise InputError(f"unknown method {method!r}")
    if method == "exact-parallel" and not instance.is_parallel_link:
        raise InputError("exact-parallel applies only to parallel-link instances")
    use_exact = method == "exact-parallel" or (
        method == "auto" and instance.is_parallel_link
    )
    if use_exact:
        per_commodity = [_parallel_link_loads(instance)]
    else:
        target = min(tau_rel(), 1e-11) if rel_gap is None else rel_gap
        flows, _ = _frank_wolfe(instance, target, max_iter)
        per_commodity = [list(map(float, f)) for f in flows]
    if profile is None:
        flow = Flow.single_class(instance, per_commodity)
    else:
        flow = Flow.spread_classes(instance, per_commodity, profile)
    cert = verify_approx_nash(instance, flow, 0.0, atol=TAU_ABS, rtol=tau_rel())
    if not cert.passed:
        raise ConvergenceError(
            f"solver output fails the equilibrium check (worst slack {cert.worst_slack})",
            achieved=cert.worst_slack,
        )
    return flow


# -- deviated equilibria on parallel links ---------------------------------


def heterogeneous_parallel_equilibrium(
    instance: GameInstance,
    deviations: DeviationProfile,
    profile: SensitivityProfile,
    *,
    damping: float = 0.5,
    tol: float | None = None,
    max_rounds: int = DEFAULT_MAX_ITER,
) -> Flow:
    """Bounded-deviation equilibrium of a multi-class parallel-link game.

    Damped iterated best response over classes in descending sensitivity
    order.  Stops when every class's relative regret under deviated costs
    drops below ``tol`` (default: the relative tolerance); the result is
    then certified with ``verify_deviated_nash``.
    """
    require_valid_instance(instance)
    if not instance.is_parallel_link:
        raise InputError("heterogeneous solver requires a parallel-link instance")
    if not deviations.edge_induced:
        raise InputError("heterogeneous solver requires edge-induced deviations")
    profile.validate(instance)
    tol = tau_rel() if tol is None else tol
    if not 0.0 < damping <= 1.0:
        raise InputError(f"damping must lie in (0, 1], got {damping}")

    commodity = instance.commodities[0]
    index = instance.resource_index()
    arcs = [index[s[0]] for s in commodity.strategies]
    fns = [instance.resources[k].latency for k in arcs]
    rids = [instance.resources[k].id for k in arcs]
    classes = list(profile.classes[0])
    order = sorted(range(len(classes)), key=lambda j: -classes[j][1])
    n = len(arcs)

    f = np.zeros((len(classes), n))

    def costs(loads: np.ndarray, gamma: float) -> np.ndarray:
        return np.array(
            [
                fns[p](loads[p]) + gamma * deviations.edge_value(instance, rids[p], loads[p])
                for p in range(n)
            ]
        )

    loads = np.zeros(n)
    for j in order:
        dem, gamma = classes[j]
        best = int(np.argmin(costs(loads, gamma)))
        f[j, best] = dem
        loads = f.sum(axis=0)

    rounds = 0
    while True:
        for j in order:
            dem, gamma = classes[j]
            q = costs(loads, gamma)
            best = int(np.argmin(q))
            target = np.zeros(n)
            target[best] = dem
            f[j] = (1.0 - damping) * f[j] + damping * target
            loads = f.sum(axis=0)
        rounds += 1
        worst = 0.0
        for j in order:
            dem, gamma = classes[j]
            if dem <= 0.0:
                continue
            q = costs(loads, gamma)
            used = f[j] > max(TAU_ABS, 1e-15 * dem)
            regret = float(np.max(q[used])) - float(np.min(q))
            worst = max(worst, regret / max(TAU_ABS, float(np.min(q))))
        if worst <= tol:
            break
        if rounds >= max_rounds:
            raise ConvergenceError(
                f"best-response iteration did not meet regret {tol:.3e} in "
                f"{max_rounds} rounds (achieved {worst:.3e})",
                achieved=worst,
            )

    values = [[list(map(float, f[j])) for j in range(len(classes))]]
    flow = Flow.build(instance, values, profile)
    cert = verify_deviated_nash(
        instance, flow, deviations, profile, atol=TAU_ABS, rtol=tol
    )
    if not cert.passed:
        raise ConvergenceError(
            f"best-response fixed point fails verification (worst slack {cert.worst_slack})",
            achieved=cert.worst_slack,
        )
    return flow


# -- exhaustive search and ratios ------------------------------------------


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total``, in
    lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def worst_approx_search(
    instance: GameInstance,
    eps: SensitivityProfile | float,
    grid: float,
) -> tuple[Flow, RatioReport]:
    """Costliest approximate equilibrium on a demand grid, by enumeration.

    The grid places ``round(demand / grid)`` equal steps per class simplex.
    Refuses instances with more than 8 strategy-class variables.  Ties are
    broken toward the lexicographically smallest flow vector.
    """
    require_valid_instance(instance)
    if not (0.0 < grid <= 0.5):
        raise InputError(
            f"grid step must lie in (0, 0.5] (two points per unit demand), got {grid}"
        )
    if isinstance(eps, SensitivityProfile):
        eps.validate(instance)
        class_specs = [list(eps.classes[i]) for i in range(len(instance.commodities))]
        profile: SensitivityProfile | None = eps
    else:
        value = float(eps)
        class_specs = [[(c.demand, value)] for c in instance.commodities]
        profile = None
    dims = sum(
        len(specs) * len(c.strategies)
        for specs, c in zip(class_specs, instance.commodities)
    )
    if dims > SEARCH_VARIABLE_CAP:
        raise RefusalError(
            f"search space has {dims} strategy-class variables, cap is {SEARCH_VARIABLE_CAP}"
        )

    index = instance.resource_index()
    n = len(instance.resources)
    fns = [res.latency for res in instance.resources]
    strat_idx = [
        [[index[rid] for rid in strat] for strat in c.strategies]
        for c in instance.commodities
    ]

    blocks = []  # (commodity, class demand, eps, candidate rows)
    for i, specs in enumerate(class_specs):
        parts = len(instance.commodities[i].strategies)
        for dem, eps_j in specs:
            steps = max(1, round(dem / grid))
            rows = [
                tuple(dem * k / steps for k in comp)
                for comp in _compositions(steps, parts)
            ]
            blocks.append((i, dem, eps_j, rows))

    best_cost = -1.0
    best_choice = None
    for choice in product(*(rows for _, _, _, rows in blocks)):
        loads = [0.0] * n
        for (i, _, _, _), row in zip(blocks, choice):
            for p, v in enumerate(row):
                if v:
                    for e in strat_idx[i][p]:
                        loads[e] += v
        lat = [fns[e](loads[e]) for e in range(n)]
        strat_lat = [
            [sum(lat[e] for e in ids) for ids in strat_idx[i]]
            for i in range(len(instance.commodities))
        ]
        ok = True
        for (i, _, eps_j, _), row in zip(blocks, choice):
            bar = (1.0 + eps_j) * min(strat_lat[i])
            for p, v in enumerate(row):
                if v > TAU_ABS and strat_lat[i][p] > bar + TAU_ABS:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        cost = sum(loads[e] * lat[e] for e in range(n))
        if cost > best_cost:
            best_cost = cost
            best_choice = choice
    if best_choice is None:
        raise InvariantError("no grid flow satisfies the approximation condition")

    values: list[list[list[float]]] = [[] for _ in instance.commodities]
    for (i, _, _, _), row in zip(blocks, best_choice):
        values[i].append(list(row))
    flow = Flow.build(instance, values, profile)
    cert = verify_approx_nash(instance, flow, eps)
    if not cert.passed:
        raise InvariantError(
            "grid search selected a flow that fails verification "
            f"(worst slack {cert.worst_slack})"
        )
    reference = compute_nash_flow(instance)
    return flow, empirical_ratio(instance, flow, reference)


def empirical_ratio(instance: GameInstance, tested: Flow, reference: Flow) -> RatioReport:
    """Cost of the tested flow over the cost of the reference flow.

    Attaches the bound recorded in the instance metadata when present.
    """
    cost_ref = social_cost(instance, reference)
    if cost_ref <= TAU_ABS:
        raise InputError(f"reference flow has near-zero cost {cost_ref}")
    ratio = social_cost(instance, tested) / cost_ref
    bound = None
    slack = None
    if instance.meta and "bound" in instance.meta:
        bound = BoundValue.from_obj(instance.meta["bound"])
        if not bound.infinite:
            slack = bound.as_float - ratio
    return RatioReport(ratio=ratio, bound=bound, slack=slack)
