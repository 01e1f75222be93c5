"""Monte Carlo engine: spatial realizations x fading slots driving one policy."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from d2dsched import channel, policies
from d2dsched.analytics import regularized_gamma_p
from d2dsched.grouping import Group, GroupStructure, build_conflict_graph, fixed_grouping, \
    greedy_coloring, with_cellular_singletons
from d2dsched.model import SpatialRealization, SystemConfig, cellular_downlink, d2d_direct, \
    sample_spatial
from d2dsched.weights import PolicyWeights, ecs_weights, solve_group_weights

GROUP_POLICIES = ("gfs", "ecs", "pfs", "grr")
DEFAULT_RESERVOIR = 100_000


@dataclass(frozen=True)
class ContenderSet:
    """The resource contenders of one realization: cellular users then pairs.

    Both devices of a pair share one direct channel, hence one contender with
    a single SNR draw per slot.
    """

    is_pair: np.ndarray           # (C,) bool
    shape_m: np.ndarray           # (C,) Nakagami shapes
    mean_snr: np.ndarray          # (C,) linear mean SNR
    members: tuple[tuple[int, ...], ...]   # user ids per contender

    @property
    def n_contenders(self) -> int:
        return len(self.members)

    @property
    def n_users(self) -> int:
        return sum(len(m) for m in self.members)

    def snr_cdfs(self) -> list[channel.GammaSnrCdf]:
        return [channel.GammaSnrCdf(m, c) for m, c in zip(self.shape_m, self.mean_snr)]

    def user_kinds(self) -> list[str]:
        kinds = [""] * self.n_users
        for j, mem in enumerate(self.members):
            for uid in mem:
                kinds[uid] = "d2d" if self.is_pair[j] else "cellular"
        return kinds


def contenders_from_spatial(config: SystemConfig, spatial: SpatialRealization) -> ContenderSet:
    """Downlink contender set: per-user mean SNR from the sampled geometry."""
    shapes = config.shapes_per_contender()
    means = np.empty(config.n_contenders)
    members = []
    for k in range(config.K1):
        means[k] = channel.mean_snr(cellular_downlink(config, spatial.cellular_distances[k]), config)
        members.append((k,))
    for p in range(config.K2):
        j = config.K1 + p
        means[j] = channel.mean_snr(d2d_direct(config, spatial.pair_direct_distances[p]), config)
        members.append((config.K1 + 2 * p, config.K1 + 2 * p + 1))
    is_pair = np.concatenate((np.zeros(config.K1, bool), np.ones(config.K2, bool)))
    return ContenderSet(is_pair, shapes, means, tuple(members))


def standalone_contenders(mean_snrs, shapes) -> ContenderSet:
    """Contender set for table-driven scenarios: one user per contender."""
    means = np.asarray(mean_snrs, dtype=float)
    m = np.asarray(shapes, dtype=float)
    members = tuple((i,) for i in range(means.size))
    return ContenderSet(np.zeros(means.size, bool), m, means, members)


def build_structure(config: SystemConfig, spatial: SpatialRealization) -> GroupStructure:
    """Mixed-system structure: cellular singletons plus D2D groups from the
    configured fixed sizes or greedy conflict-graph coloring."""
    if config.K2 == 0:
        return with_cellular_singletons(GroupStructure(()), config.K1)
    if config.group_sizes is not None:
        d2d = fixed_grouping(config.group_sizes, config.K2, nu=0.5, id_offset=config.K1)
    else:
        colored = greedy_coloring(build_conflict_graph(spatial, config.interference_radius_m))
        d2d = GroupStructure(tuple(
            Group(tuple(config.K1 + v for v in g.members), 0.5) for g in colored.groups))
    return with_cellular_singletons(d2d, config.K1)


# ---------------------------------------------------------------------------
# accumulators

@dataclass
class UserMetrics:
    """Per-user accumulators over granted (active) slots."""

    grant_count: int = 0
    upi_accumulator: float = 0.0      # sum of u over granted slots
    rate_sum: float = 0.0             # sum of Shannon rates over granted slots


def upi_estimate(metrics: UserMetrics, total_slots: int) -> float:
    """2 * E[u * granted-indicator], estimated over all slots."""
    if total_slots < 1:
        raise ValueError("total_slots must be >= 1")
    return 2.0 * metrics.upi_accumulator / total_slots


@dataclass
class SimResult:
    slots: int
    user_grants: np.ndarray
    user_u_sum: np.ndarray
    user_rate_sum: np.ndarray
    cont_grants: np.ndarray
    group_grants: np.ndarray | None
    selected_snr: list            # per contender: list of arrays
    structure: GroupStructure | None
    weights: PolicyWeights | None

    def selected_snr_arrays(self) -> list[np.ndarray]:
        return [np.concatenate(b) if b else np.empty(0) for b in self.selected_snr]


def _u_from_gains(shape_m: np.ndarray, gains: np.ndarray) -> np.ndarray:
    if np.all(shape_m == 1.0):
        return -np.expm1(-gains)
    return regularized_gamma_p(shape_m, shape_m * gains)


def simulate_policy(cs: ContenderSet, policy: str, slots: int, rng: np.random.Generator,
                    structure: GroupStructure | None = None,
                    weights: PolicyWeights | None = None,
                    rate_log_base: float = 2.0, pf_time_const: float = 1000.0,
                    cfs_d2d_random: bool = False, chunk: int = 200_000) -> SimResult:
    """Run one realization of `slots` fading slots under the given policy."""
    C = cs.n_contenders
    nU = cs.n_users
    K1 = int(np.sum(~cs.is_pair))
    K2 = C - K1
    log_base = np.log(rate_log_base)
    if policy in GROUP_POLICIES:
        if structure is None:
            raise ValueError(f"{policy} requires a group structure")
        if policy == "gfs" and weights is None:
            weights = solve_group_weights(structure)
        if policy == "ecs":
            weights = ecs_weights(structure)
    res = SimResult(
        slots=slots,
        user_grants=np.zeros(nU, dtype=np.int64),
        user_u_sum=np.zeros(nU),
        user_rate_sum=np.zeros(nU),
        cont_grants=np.zeros(C, dtype=np.int64),
        group_grants=np.zeros(structure.n_groups, dtype=np.int64) if structure is not None else None,
        selected_snr=[[] for _ in range(C)],
        structure=structure,
        weights=weights,
    )
    pair_altern = np.zeros(C, dtype=np.int64)
    cfs_state = policies.CfsState()
    pf_state = policies.PfState(t_c=pf_time_const)
    done = 0

    def account_contender(j: int, sl: np.ndarray, u: np.ndarray, snr: np.ndarray):
        if sl.size == 0:
            return
        res.cont_grants[j] += sl.size
        res.selected_snr[j].append(snr[sl, j])
        rates = np.log1p(snr[sl, j]) / log_base
        if not cs.is_pair[j]:
            uid = cs.members[j][0]
            res.user_grants[uid] += sl.size
            res.user_u_sum[uid] += u[sl, j].sum()
            res.user_rate_sum[uid] += rates.sum()
        else:
            # strict alternation between the two members on the pair's grants
            pos = (pair_altern[j] + np.arange(sl.size)) % 2
            for t in (0, 1):
                mask = pos == t
                uid = cs.members[j][t]
                res.user_grants[uid] += int(mask.sum())
                res.user_u_sum[uid] += u[sl[mask], j].sum()
                res.user_rate_sum[uid] += rates[mask].sum()
            pair_altern[j] = (pair_altern[j] + sl.size) % 2

    while done < slots:
        n = min(chunk, slots - done)
        gains = rng.gamma(cs.shape_m, 1.0 / cs.shape_m, size=(n, C))
        snr = gains * cs.mean_snr
        u = _u_from_gains(cs.shape_m, gains)

        if policy == "bcs":
            win = policies.bcs_select(u, np.full(C, 1.0 / C))
            for j in range(C):
                account_contender(j, np.flatnonzero(win == j), u, snr)
        elif policy == "dfs":
            win = policies.dfs_select(u, K1, K2)
            for j in range(C):
                account_contender(j, np.flatnonzero(win == j), u, snr)
        elif policy == "cfs":
            cell_winner, d2d_user = policies.cfs_select(
                u[:, :K1], K1, K2, cfs_state, rng=rng, random_pick=cfs_d2d_random)
            for k in range(K1):
                account_contender(k, np.flatnonzero(cell_winner == k), u, snr)
            for du in range(2 * K2):
                sl = np.flatnonzero(d2d_user == du)
                if sl.size == 0:
                    continue
                j = K1 + du // 2
                uid = cs.members[j][du % 2]
                res.cont_grants[j] += sl.size
                res.selected_snr[j].append(snr[sl, j])
                res.user_grants[uid] += sl.size
                res.user_u_sum[uid] += u[sl, j].sum()
                res.user_rate_sum[uid] += (np.log1p(snr[sl, j]) / log_base).sum()
        elif policy in ("gfs", "ecs"):
            win = policies.mws_select(u, structure, weights)
        elif policy == "pfs":
            rates_all = np.log1p(snr) / log_base
            win = policies.pfs_select(rates_all, structure, pf_state)
        elif policy == "grr":
            win = policies.grr_select(n, structure.n_groups, offset=done)
        else:
            raise ValueError(f"unknown policy {policy!r}")

        if policy in GROUP_POLICIES:
            for gi, g in enumerate(structure.groups):
                sl = np.flatnonzero(win == gi)
                if sl.size == 0:
                    continue
                res.group_grants[gi] += sl.size
                for j in g.members:
                    account_contender(j, sl, u, snr)
        done += n
    return res


# ---------------------------------------------------------------------------
# experiment driver

@dataclass
class ExperimentReport:
    """Aggregated per-user and per-group results of one experiment."""

    policy: str
    seed: int
    total_slots: int
    user_kinds: list
    user_group: np.ndarray
    access_prob: np.ndarray
    upi: np.ndarray
    selected_rate: np.ndarray
    effective_rate: np.ndarray
    group_access_prob: np.ndarray | None
    selected_snr: list            # per contender
    structure: GroupStructure | None
    weights: PolicyWeights | None
    config_digest: str = ""

    @property
    def n_users(self) -> int:
        return len(self.user_kinds)

    def user_metrics(self, uid: int) -> UserMetrics:
        grants = int(self.access_prob[uid] * self.total_slots + 0.5)
        return UserMetrics(grants, self.upi[uid] * self.total_slots / 2.0,
                           self.effective_rate[uid] * self.total_slots)


def _merge_reservoir(parts: list[np.ndarray], cap: int, rng: np.random.Generator) -> np.ndarray:
    allsamp = np.concatenate(parts) if parts else np.empty(0)
    if allsamp.size <= cap:
        return allsamp
    idx = np.sort(rng.choice(allsamp.size, cap, replace=False))
    return allsamp[idx]


def _realization_task(args):
    config, resource, realization = args
    ss = np.random.SeedSequence(entropy=config.rng_seed, spawn_key=(resource, realization))
    rng = np.random.default_rng(ss)
    spatial = sample_spatial(config, rng)
    cs = contenders_from_spatial(config, spatial)
    structure = None
    weights = None
    if config.policy in GROUP_POLICIES:
        structure = build_structure(config, spatial)
    return simulate_policy(cs, config.policy, config.slots_per_realization, rng,
                           structure=structure, weights=weights,
                           rate_log_base=config.rate_log_base,
                           pf_time_const=config.pf_time_const,
                           cfs_d2d_random=config.cfs_d2d_random), cs


def _n_workers(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("D2DSCHED_THREADS")
    return max(1, int(env)) if env else 1


def run_experiment(config: SystemConfig, n_workers: int | None = None,
                   reservoir_capacity: int = DEFAULT_RESERVOIR) -> ExperimentReport:
    """Outer loop over spatial realizations (and independent resources), inner
    loop over fading slots; results reduce identically for any worker count."""
    tasks = [(config, res, real)
             for res in range(config.resources)
             for real in range(config.spatial_realizations)]
    workers = _n_workers(n_workers)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_realization_task, tasks))
    else:
        outputs = [_realization_task(t) for t in tasks]

    cs0 = outputs[0][1]
    nU, C = cs0.n_users, cs0.n_contenders
    total_slots = config.slots_per_realization * len(tasks)
    user_grants = np.zeros(nU, dtype=np.int64)
    u_sum = np.zeros(nU)
    rate_sum = np.zeros(nU)
    snr_parts: list[list[np.ndarray]] = [[] for _ in range(C)]
    group_counts = None
    group_ok = True
    structure = None
    weights = None
    for result, _ in outputs:
        user_grants += result.user_grants
        u_sum += result.user_u_sum
        rate_sum += result.user_rate_sum
        for j in range(C):
            arrays = result.selected_snr[j]
            if arrays:
                snr_parts[j].extend(arrays)
        if result.group_grants is not None:
            if group_counts is None:
                group_counts = result.group_grants.astype(np.int64)
            elif group_counts.shape == result.group_grants.shape:
                group_counts = group_counts + result.group_grants
            else:
                group_ok = False   # greedy grouping changed the group count
        structure = result.structure
        weights = result.weights

    res_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.rng_seed, spawn_key=(987654321,)))
    selected_snr = [_merge_reservoir(snr_parts[j], reservoir_capacity, res_rng) for j in range(C)]

    with np.errstate(invalid="ignore", divide="ignore"):
        selected_rate = np.where(user_grants > 0, rate_sum / np.maximum(user_grants, 1), 0.0)
    user_group = np.full(nU, -1)
    if structure is not None:
        cont_group = structure.group_of()
        for j, mem in enumerate(cs0.members):
            for uid in mem:
                user_group[uid] = cont_group.get(j, -1)
    group_access = None
    if group_counts is not None and group_ok:
        group_access = group_counts / total_slots
    return ExperimentReport(
        policy=config.policy, seed=config.rng_seed, total_slots=total_slots,
        user_kinds=cs0.user_kinds(), user_group=user_group,
        access_prob=user_grants / total_slots,
        upi=2.0 * u_sum / total_slots,
        selected_rate=selected_rate,
        effective_rate=rate_sum / total_slots,
        group_access_prob=group_access,
        selected_snr=selected_snr,
        structure=structure, weights=weights,
        config_digest=config.digest(),
    )


def run_standalone(mean_snrs, shapes, structure: GroupStructure, policy: str, slots: int,
                   seed: int, weights: PolicyWeights | None = None,
                   pf_time_const: float = 1000.0, rate_log_base: float = 2.0,
                   reservoir_capacity: int = DEFAULT_RESERVOIR) -> ExperimentReport:
    """Table-driven scenario: per-user SNR distributions, no geometry."""
    cs = standalone_contenders(mean_snrs, shapes)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0, 0)))
    result = simulate_policy(cs, policy, slots, rng, structure=structure, weights=weights,
                             rate_log_base=rate_log_base, pf_time_const=pf_time_const)
    res_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(987654321,)))
    selected = [_merge_reservoir(b, reservoir_capacity, res_rng)
                for b in [[np.concatenate(x)] if x else [] for x in result.selected_snr]]
    with np.errstate(invalid="ignore", divide="ignore"):
        sel_rate = np.where(result.user_grants > 0,
                            result.user_rate_sum / np.maximum(result.user_grants, 1), 0.0)
    user_group = np.full(cs.n_users, -1)
    if structure is not None:
        cont_group = structure.group_of()
        for j, mem in enumerate(cs.members):
            for uid in mem:
                user_group[uid] = cont_group.get(j, -1)
    return ExperimentReport(
        policy=policy, seed=seed, total_slots=slots,
        user_kinds=cs.user_kinds(), user_group=user_group,
        access_prob=result.user_grants / slots,
        upi=2.0 * result.user_u_sum / slots,
        selected_rate=sel_rate,
        effective_rate=result.user_rate_sum / slots,
        group_access_prob=None if result.group_grants is None else result.group_grants / slots,
        selected_snr=selected,
        structure=structure, weights=result.weights,
    )


def ks_distance(empirical, analytic) -> float:
    """Sup over the analytic grid of |F_emp - F_theory|.

    `empirical` is either an array of samples (>= 2 required) or any object
    with an evaluate() method.
    """
    if hasattr(empirical, "evaluate"):
        emp_vals = np.asarray(empirical.evaluate(analytic.grid))
    else:
        samples = np.sort(np.asarray(empirical, dtype=float))
        if samples.size < 2:
            raise ValueError("need at least 2 empirical samples")
        emp_vals = np.searchsorted(samples, analytic.grid, side="right") / samples.size
    return float(np.max(np.abs(emp_vals - analytic.values)))
