"""AP field generation, grouping and intra-group fronthaul topologies.

Two connection schemes are supported for the shared (Tier-1) fiber inside a
group of APs:

* radio stripe (``Scheme.RS``): a serial chain, i.e. an open Hamiltonian path
  of minimum length, fed through one of its endpoints;
* hierarchical (``Scheme.HS``): a Euclidean minimum spanning tree fed through
  a maximum-degree node.

:func:`nofac` ties everything together: k-means grouping, split/merge
refinement, intra-group construction, DU placement and the iterative
leading-AP / DU association until the DU positions stop moving.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

KMEANS_MAX_ITER = 300


class Scheme(str, enum.Enum):
    RS = "rs"
    HS = "hs"


@dataclass(frozen=True)
class TopologyConfig:
    L: int = 1000
    W: int = 4
    G_initial: int = 150
    g_s: int = 15
    g_m: int = 3
    L_max: int = 9
    epsilon: float = 1e-3
    scheme: Scheme = Scheme.RS
    max_iterations: int = 100
    region_side: float = 2000.0

    def errors(self) -> list[str]:
        out = []
        if self.L < 1:
            out.append("topology.L must be >= 1")
        if self.W < 1:
            out.append("topology.W must be >= 1")
        if self.W > self.L:
            out.append("topology.W must be <= topology.L")
        if not 1 <= self.G_initial <= self.L:
            out.append("topology.G_initial must be in [1, L]")
        if self.g_m < 1:
            out.append("topology.g_m must be >= 1")
        if self.g_m >= self.g_s:
            out.append("topology.g_m must be < topology.g_s")
        if self.L_max < 2:
            out.append("topology.L_max must be >= 2")
        if not self.epsilon > 0:
            out.append("topology.epsilon must be > 0")
        if self.max_iterations < 1:
            out.append("topology.max_iterations must be >= 1")
        if not self.region_side > 0:
            out.append("topology.region_side must be > 0")
        return out


@dataclass(frozen=True)
class APField:
    region_side: float
    aps: np.ndarray  # (L, 2) meters
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.aps)


@dataclass(frozen=True)
class Group:
    id: int
    members: tuple[int, ...]
    centroid: tuple[float, float]
    # set when the group stays below g_m because no merge partner fits under g_s
    undersized: bool = False

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class IntraGroupTopology:
    scheme: Scheme
    members: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]
    total_length: float
    # RS only: AP indices in stripe order
    order: tuple[int, ...] = ()
    leading_ap: int | None = None

    def degrees(self) -> dict[int, int]:
        deg = {m: 0 for m in self.members}
        for a, b, _ in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def parents(self) -> dict[int, int]:
        """Parent of every member when the edges are oriented away from the leading AP."""
        if self.leading_ap is None:
            raise ValueError("leading AP not selected")
        adj: dict[int, list[int]] = {m: [] for m in self.members}
        for a, b, _ in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        parent = {self.leading_ap: -1}
        queue = [self.leading_ap]
        for node in queue:
            for nxt in sorted(adj[node]):
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        return parent


@dataclass(frozen=True)
class DUPlacement:
    positions: np.ndarray  # (W, 2)
    group_assignment: tuple[int, ...]  # group id -> DU index
    leading_sets: tuple[tuple[int, ...], ...]
    nonleading_sets: tuple[tuple[int, ...], ...]
    converged: bool
    iterations: int
    final_displacement: float


@dataclass(frozen=True)
class DeploymentScenario:
    field: APField
    config: TopologyConfig
    groups: tuple[Group, ...]
    topologies: tuple[IntraGroupTopology, ...]
    placement: DUPlacement
    seed: int | None = None

    @property
    def coords(self) -> np.ndarray:
        return self.field.aps

    @property
    def scheme(self) -> Scheme:
        return self.config.scheme

    @property
    def L(self) -> int:
        return len(self.field.aps)

    @property
    def W(self) -> int:
        return len(self.placement.positions)

    @property
    def G(self) -> int:
        return len(self.groups)

    @property
    def leading_aps(self) -> tuple[int, ...]:
        return tuple(t.leading_ap for t in self.topologies)

    def du_of_group(self, gid: int) -> int:
        return self.placement.group_assignment[gid]

    def group_lengths(self) -> np.ndarray:
        return np.array([t.total_length for t in self.topologies])

    def to_dict(self) -> dict:
        return scenario_to_dict(self)


# --------------------------------------------------------------------------
# AP field and k-means


def generate_ap_field(config: TopologyConfig, region_side: float | None = None,
                      seed: int = 0) -> APField:
    """Draw ``config.L`` AP positions uniformly over the square ``[0, R]^2``."""
    side = config.region_side if region_side is None else float(region_side)
    if config.L < 1 or side <= 0:
        raise ValueError("need L >= 1 and region_side > 0")
    rng = np.random.default_rng(seed)
    aps = rng.uniform(0.0, side, size=(config.L, 2))
    return APField(region_side=side, aps=aps, seed=seed)


def _as_points(coords) -> np.ndarray:
    if isinstance(coords, APField):
        return coords.aps
    if isinstance(coords, DeploymentScenario):
        return coords.field.aps
    return np.asarray(coords, dtype=float)


def _sqdist(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kmeans(points, k: int, seed: int = 0,
           max_iter: int = KMEANS_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's k-means with k-means++ seeding.

    Returns ``(labels, centers)``. A cluster that loses all its points is
    re-seeded at the point farthest from its current center.
    """
    pts = _as_points(points)
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be in [1, {n}]")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, 2))
    centers[0] = pts[rng.integers(n)]
    closest = _sqdist(pts, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(np.argmax(closest))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[c] = pts[idx]
        closest = np.minimum(closest, _sqdist(pts, centers[c:c + 1])[:, 0])

    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = _sqdist(pts, centers)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            own = d2[np.arange(n), new]
            far = int(np.argmax(own))
            new[far] = empty
            centers[empty] = pts[far]
            counts = np.bincount(new, minlength=k)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = pts[labels == c].mean(axis=0)
    return labels, centers


def _make_groups(points: np.ndarray, member_lists: Iterable[Sequence[int]],
                 undersized: Iterable[bool] | None = None) -> list[Group]:
    lists = [tuple(sorted(int(m) for m in ms)) for ms in member_lists]
    flags = list(undersized) if undersized is not None else [False] * len(lists)
    order = sorted(range(len(lists)), key=lambda i: lists[i][0])
    groups = []
    for new_id, i in enumerate(order):
        c = points[list(lists[i])].mean(axis=0)
        groups.append(Group(new_id, lists[i], (float(c[0]), float(c[1])), flags[i]))
    return groups


def kmeans_cluster(points, k: int, seed: int = 0) -> list[Group]:
    """Partition ``points`` into ``k`` non-empty groups with k-means.

    Groups are numbered by their smallest member index.
    """
    pts = _as_points(points)
    labels, _ = kmeans(pts, k, seed)
    return _make_groups(pts, [np.flatnonzero(labels == c) for c in range(k)])


# --------------------------------------------------------------------------
# split / merge refinement


def _bisect(points: np.ndarray, members: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``members`` in two halves along the axis found by 2-means."""
    sub = points[members]
    centre = sub.mean(axis=0)
    a = sub[np.argmax(((sub - centre) ** 2).sum(axis=1))]
    b = sub[np.argmax(((sub - a) ** 2).sum(axis=1))]
    cents = np.array([a, b], dtype=float)
    labels = None
    for _ in range(KMEANS_MAX_ITER):
        new = np.argmin(_sqdist(sub, cents), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in (0, 1):
            if np.any(labels == c):
                cents[c] = sub[labels == c].mean(axis=0)
    axis = cents[1] - cents[0]
    if not np.any(axis):
        axis = np.array([1.0, 0.0])
    proj = sub @ axis
    order = np.lexsort((members, proj))
    half = len(members) // 2
    return members[order[:half]], members[order[half:]]


def split_merge_refine(groups: Sequence[Group], points, g_s: int, g_m: int) -> list[Group]:
    """Bring group sizes into ``[g_m, g_s]``.

    Oversized groups are bisected recursively. Undersized groups are merged,
    smallest first, into the nearest group (by centroid) whose merged size
    stays within ``g_s``; a group with no such partner is kept and flagged.
    """
    if not g_m < g_s:
        raise ValueError("g_m must be < g_s")
    pts = _as_points(points)

    pieces: list[np.ndarray] = []
    stack = [np.array(g.members) for g in groups]
    while stack:
        ms = stack.pop()
        if len(ms) > g_s:
            stack.extend(_bisect(pts, ms))
        else:
            pieces.append(np.sort(ms))

    work = {i: list(map(int, p)) for i, p in enumerate(pieces)}

    def centroid(i):
        return pts[work[i]].mean(axis=0)

    while True:
        touched: set[int] = set()
        merged_any = False
        small = sorted((i for i in work if len(work[i]) < g_m),
                       key=lambda i: (len(work[i]), min(work[i])))
        for i in small:
            if i in touched or i not in work or len(work[i]) >= g_m:
                continue
            ci = centroid(i)
            options = []
            for j in work:
                if j == i or j in touched or len(work[i]) + len(work[j]) > g_s:
                    continue
                options.append((float(np.sum((centroid(j) - ci) ** 2)), min(work[j]), j))
            if not options:
                continue
            _, _, j = min(options)
            work[j] = work[j] + work.pop(i)
            touched.update((i, j))
            merged_any = True
        if not merged_any:
            break

    lists = list(work.values())
    return _make_groups(pts, lists, [len(m) < g_m for m in lists])


# --------------------------------------------------------------------------
# radio stripe: open-path TSP


def _distance_matrix(p: np.ndarray) -> np.ndarray:
    return np.sqrt(_sqdist(p, p))


@functools.lru_cache(maxsize=None)
def _held_karp_layers(n: int) -> tuple[tuple[tuple[np.ndarray, np.ndarray], ...], ...]:
    masks = np.arange(1 << n)
    popcount = np.array([bin(m).count("1") for m in masks])
    layers = []
    for size in range(2, n + 1):
        layer = masks[popcount == size]
        per_j = []
        for j in range(n):
            sel = layer[(layer >> j) & 1 == 1]
            per_j.append((sel, sel ^ (1 << j)))
        layers.append(tuple(per_j))
    return tuple(layers)


def shortest_open_path(dist: np.ndarray) -> tuple[list[int], float]:
    """Exact minimum-length Hamiltonian path (free endpoints) by Held-Karp DP."""
    n = len(dist)
    if n == 1:
        return [0], 0.0
    full = (1 << n) - 1
    dp = np.full((1 << n, n), np.inf)
    parent = np.full((1 << n, n), -1, dtype=np.int64)
    for j in range(n):
        dp[1 << j, j] = 0.0
    for layer in _held_karp_layers(n):
        for j, (sel, prev) in enumerate(layer):
            cand = dp[prev] + dist[:, j]
            best = np.argmin(cand, axis=1)
            dp[sel, j] = cand[np.arange(len(sel)), best]
            parent[sel, j] = best
    end = int(np.argmin(dp[full]))
    length = float(dp[full, end])
    path = [end]
    mask = full
    while parent[mask, path[-1]] >= 0:
        prev = int(parent[mask, path[-1]])
        mask ^= 1 << path[-1]
        path.append(prev)
    path.reverse()
    return path, length


def nearest_neighbor_path(dist: np.ndarray, start: int) -> tuple[list[int], float]:
    n = len(dist)
    path = [start]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    length = 0.0
    for _ in range(n - 1):
        row = np.where(seen, np.inf, dist[path[-1]])
        nxt = int(np.argmin(row))
        length += float(row[nxt])
        path.append(nxt)
        seen[nxt] = True
    return path, length


def multistart_nearest_neighbor(dist: np.ndarray) -> tuple[list[int], float]:
    best = None
    for s in range(len(dist)):
        path, length = nearest_neighbor_path(dist, s)
        if best is None or length < best[1]:
            best = (path, length)
    return best


def _path_edges(points: np.ndarray, order: Sequence[int]) -> tuple[tuple[int, int, float], ...]:
    return tuple(
        (a, b, float(np.hypot(*(points[a] - points[b]))))
        for a, b in zip(order[:-1], order[1:])
    )


def build_radio_stripe(group: Group, coords, L_max: int = 9) -> IntraGroupTopology:
    pts = _as_points(coords)
    members = np.array(group.members)
    dist = _distance_matrix(pts[members])
    if len(members) <= L_max:
        local, _ = shortest_open_path(dist)
    else:
        local, _ = multistart_nearest_neighbor(dist)
    order = tuple(int(members[i]) for i in local)
    edges = _path_edges(pts, order)
    return IntraGroupTopology(
        scheme=Scheme.RS,
        members=group.members,
        edges=edges,
        total_length=float(sum(e[2] for e in edges)),
        order=order,
    )


# --------------------------------------------------------------------------
# hierarchical: MST


def build_mst(group: Group, coords) -> IntraGroupTopology:
    """Prim's algorithm on the complete Euclidean graph of the group."""
    pts = _as_points(coords)
    members = np.array(group.members)
    n = len(members)
    dist = _distance_matrix(pts[members])
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    link = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        edges.append((int(members[link[v]]), int(members[v]), float(dist[link[v], v])))
        in_tree[v] = True
        closer = dist[v] < best
        best = np.where(closer, dist[v], best)
        link = np.where(closer, v, link)
    return IntraGroupTopology(
        scheme=Scheme.HS,
        members=group.members,
        edges=tuple(edges),
        total_length=float(sum(e[2] for e in edges)),
    )


def build_intra_group(group: Group, coords, scheme: Scheme, L_max: int = 9) -> IntraGroupTopology:
    if Scheme(scheme) is Scheme.RS:
        return build_radio_stripe(group, coords, L_max)
    return build_mst(group, coords)


def select_leading_ap(topology: IntraGroupTopology, coords, du) -> int:
    """Pick the AP that carries the group's Tier-2 link.

    Stripe: the endpoint closer to the DU. Tree: a maximum-degree node,
    ties broken by DU distance and then by the lowest AP index.
    """
    pts = _as_points(coords)
    du = np.asarray(du, dtype=float)
    if len(topology.members) == 1:
        return topology.members[0]
    if topology.scheme is Scheme.RS:
        candidates = {topology.order[0], topology.order[-1]}
    else:
        deg = topology.degrees()
        top = max(deg.values())
        candidates = {m for m, d in deg.items() if d == top}
    return min(candidates, key=lambda m: (float(np.hypot(*(pts[m] - du))), m))


# --------------------------------------------------------------------------
# NOFAC


def _associate(groups: Sequence[Group], topologies: Sequence[IntraGroupTopology],
               pts: np.ndarray, mu: np.ndarray):
    cents = np.array([g.centroid for g in groups])
    assign = np.argmin(_sqdist(cents, mu), axis=1)
    leading = [select_leading_ap(t, pts, mu[w]) for t, w in zip(topologies, assign)]
    return assign, leading


def nofac(config: TopologyConfig, field: APField, seed: int = 0) -> DeploymentScenario:
    """Group the APs, build the intra-group topology and place the DUs.

    Iterates group-to-DU association, leading-AP selection and DU
    re-centering until no DU moves by ``epsilon`` or more. If
    ``max_iterations`` is hit the last placement is returned with
    ``converged=False``.
    """
    pts = field.aps
    L = len(pts)
    rng = np.random.default_rng(seed)
    group_seed, du_seed = (int(s) for s in rng.integers(0, 2**63 - 1, size=2))

    groups = kmeans_cluster(pts, min(config.G_initial, L), group_seed)
    groups = split_merge_refine(groups, pts, config.g_s, config.g_m)
    topologies = [build_intra_group(g, pts, config.scheme, config.L_max) for g in groups]

    W = min(config.W, L)
    _, mu_old = kmeans(pts, W, du_seed)
    sizes = np.array([g.size for g in groups], dtype=float)
    cents = np.array([g.centroid for g in groups])

    converged = False
    displacement = np.inf
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        assign, _ = _associate(groups, topologies, pts, mu_old)
        mu_new = mu_old.copy()
        for w in range(W):
            sel = assign == w
            if sel.any():
                mu_new[w] = (cents[sel] * sizes[sel, None]).sum(axis=0) / sizes[sel].sum()
        displacement = float(np.max(np.hypot(*(mu_new - mu_old).T)))
        mu_old = mu_new
        if displacement < config.epsilon:
            converged = True
            break
    if not converged:
        logger.warning("NOFAC stopped after %d iterations (max DU move %.3g m)",
                       iterations, displacement)

    assign, leading = _associate(groups, topologies, pts, mu_old)
    topologies = [dataclasses.replace(t, leading_ap=int(l)) for t, l in zip(topologies, leading)]
    lead_sets = [[] for _ in range(W)]
    rest_sets = [[] for _ in range(W)]
    for g, t, w in zip(groups, topologies, assign):
        lead_sets[w].append(t.leading_ap)
        rest_sets[w].extend(m for m in g.members if m != t.leading_ap)
    placement = DUPlacement(
        positions=mu_old,
        group_assignment=tuple(int(w) for w in assign),
        leading_sets=tuple(tuple(sorted(s)) for s in lead_sets),
        nonleading_sets=tuple(tuple(sorted(s)) for s in rest_sets),
        converged=converged,
        iterations=iterations,
        final_displacement=displacement,
    )
    return DeploymentScenario(field=field, config=config, groups=tuple(groups),
                              topologies=tuple(topologies), placement=placement, seed=seed)


# --------------------------------------------------------------------------
# serialization


def scenario_to_dict(s: DeploymentScenario) -> dict:
    cfg = dataclasses.asdict(s.config)
    cfg["scheme"] = s.config.scheme.value
    return {
        "scheme": s.scheme.value,
        "seed": s.seed,
        "config": cfg,
        "region_side": s.field.region_side,
        "field_seed": s.field.seed,
        "aps": s.field.aps.tolist(),
        "dus": s.placement.positions.tolist(),
        "converged": s.placement.converged,
        "iterations": s.placement.iterations,
        "final_displacement": s.placement.final_displacement,
        "groups": [
            {
                "id": g.id,
                "members": list(g.members),
                "undersized": g.undersized,
                "du": s.placement.group_assignment[g.id],
                "leading_ap": t.leading_ap,
                "order": list(t.order),
                "length_m": t.total_length,
                "edges": [[a, b, d] for a, b, d in t.edges],
            }
            for g, t in zip(s.groups, s.topologies)
        ],
    }


def scenario_from_dict(d: dict) -> DeploymentScenario:
    cfg = dict(d["config"])
    cfg["scheme"] = Scheme(cfg["scheme"])
    config = TopologyConfig(**cfg)
    aps = np.array(d["aps"], dtype=float).reshape(-1, 2)
    fld = APField(region_side=float(d["region_side"]), aps=aps, seed=d.get("field_seed"))
    scheme = Scheme(d["scheme"])
    groups, topologies, assign = [], [], []
    for gd in d["groups"]:
        members = tuple(gd["members"])
        c = aps[list(members)].mean(axis=0)
        groups.append(Group(gd["id"], members, (float(c[0]), float(c[1])), gd["undersized"]))
        edges = tuple((int(a), int(b), float(w)) for a, b, w in gd["edges"])
        topologies.append(IntraGroupTopology(scheme, members, edges, float(gd["length_m"]),
                                             tuple(gd["order"]), gd["leading_ap"]))
        assign.append(int(gd["du"]))
    mu = np.array(d["dus"], dtype=float).reshape(-1, 2)
    W = len(mu)
    lead_sets = [[] for _ in range(W)]
    rest_sets = [[] for _ in range(W)]
    for g, t, w in zip(groups, topologies, assign):
        lead_sets[w].append(t.leading_ap)
        rest_sets[w].extend(m for m in g.members if m != t.leading_ap)
    placement = DUPlacement(mu, tuple(assign), tuple(tuple(sorted(s)) for s in lead_sets),
                            tuple(tuple(sorted(s)) for s in rest_sets), bool(d["converged"]),
                            int(d["iterations"]), float(d["final_displacement"]))
    return DeploymentScenario(fld, config, tuple(groups), tuple(topologies), placement, d.get("seed"))


def with_scheme(config: TopologyConfig, scheme: Scheme) -> TopologyConfig:
    return dataclasses.replace(config, scheme=Scheme(scheme))
