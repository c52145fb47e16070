"""Hierarchical inner graph for dynamic community detection.

The structure holds three kinds of nodes:

* **ground** nodes (level 0) — one per input-graph node;
* **refined** nodes (levels 1..levels) — each represents a subcommunity,
  i.e. a set of input nodes inside one community;
* **community** nodes — each represents a whole community; the exposed
  partition is the map ground node -> community node.

Edges connect nodes of the same level only, and the weight of an edge
between two aggregate nodes is always the sum of the input-graph edge
weights between their member sets.  Every non-community node carries
exactly one reference: either to a *parent* node one level up, or
directly to a community node.  Following the chain of parents from any
node always ends at a community node.

The graph also maintains the three global aggregates needed for O(1)
modularity evaluation: the total edge weight, the sum of community
self-loop weights, and the sum of ``k_in * k_out`` over communities.
Callers (the dynamics and move machinery) keep those aggregates current
via before/after windows; this module only stores them.
"""

from __future__ import annotations

from typing import Iterator

NodeId = int

GROUND = "ground"
REFINED = "refined"
COMMUNITY = "community"

#: ID space matches a 32-bit unsigned node index.
MAX_NODES = 2**32


class BrokenChainError(RuntimeError):
    """A parent/community reference chain ended nowhere.

    This signals internal corruption, never a user error.
    """


class HierGraph:
    """Multi-level graph with parent/community references and weighted edges.

    Parameters
    ----------
    levels:
        Number of refinable levels (the maximum level a refined node may
        occupy).  Community nodes live in their own stratum above.
    weight_mode:
        ``"int"`` (default) keeps all weights and aggregates as exact
        integers; ``"float"`` allows real-valued weights.
    max_nodes:
        Capacity guard for node allocation (tests shrink it).
    """

    def __init__(self, levels: int = 4, weight_mode: str = "int",
                 max_nodes: int = MAX_NODES):
        if levels < 1:
            raise ValueError(f"levels must be >= 1, got {levels}")
        if weight_mode not in ("int", "float"):
            raise ValueError(f"unknown weight_mode {weight_mode!r}")
        self.levels = levels
        self.weight_mode = weight_mode
        self.max_nodes = max_nodes

        # Community nodes sit one stratum above the top refinable level so
        # the same-level edge rule covers community-community edges too.
        self.community_level = levels + 1

        # Node fields, indexed by NodeId.
        self.level: list[int] = []
        self.parent: list[NodeId | None] = []
        self.community_ref: list[NodeId | None] = []
        self.k_in: list = []
        self.k_out: list = []
        self.out_w: list[dict[NodeId, int | float]] = []
        self.in_w: list[dict[NodeId, int | float]] = []
        # Number of nodes referencing this node (as parent or community).
        self.ref_count: list[int] = []
        self.alive: list[bool] = []

        # Community registry (the "top" node set).
        self.communities: set[NodeId] = set()

        # Global aggregates: total edge weight, sum of community
        # self-loop weights, sum of k_in*k_out over communities.
        self.total_weight = 0
        self.intra_weight = 0
        self.degree_product = 0

        # resolve_community cache: value + epoch stamp; bumping the epoch
        # lazily invalidates every cached value.
        self._cached_community: list[NodeId | None] = []
        self._cache_stamp: list[int] = []
        self.cache_epoch = 0
        self.resolve_walks = 0  # instrumentation: full chain walks

        # Recycling: freed IDs keyed by level; IDs freed inside an
        # aggregate window are quarantined until release_freed().
        self._free: dict[int, list[NodeId]] = {}
        self._quarantine: list[NodeId] = []

    # ------------------------------------------------------------------
    # node allocation

    def _alloc(self, level: int) -> NodeId:
        free = self._free.get(level)
        if free:
            nid = free.pop()
            self.level[nid] = level
            self.alive[nid] = True
            return nid
        nid = len(self.level)
        if nid >= self.max_nodes:
            raise MemoryError(f"node capacity exhausted ({self.max_nodes})")
        self.level.append(level)
        self.parent.append(None)
        self.community_ref.append(None)
        self.k_in.append(0)
        self.k_out.append(0)
        self.out_w.append({})
        self.in_w.append({})
        self.ref_count.append(0)
        self.alive.append(True)
        self._cached_community.append(None)
        self._cache_stamp.append(-1)
        return nid

    def add_ground_node(self) -> NodeId:
        """Allocate a fresh level-0 node with zero weights and no references."""
        return self._alloc(0)

    def add_node(self, level: int) -> NodeId:
        """Allocate a refined node at ``level`` (1..levels)."""
        if not 1 <= level <= self.levels:
            raise ValueError(
                f"refined level must be in [1, {self.levels}], got {level}")
        return self._alloc(level)

    def add_community_node(self) -> NodeId:
        """Allocate a community node; it contributes nothing until it gains members."""
        nid = self._alloc(self.community_level)
        self.communities.add(nid)
        return nid

    def remove_node(self, v: NodeId) -> None:
        """Explicitly free a fully detached node.

        The node must carry no edges and have no referrers; its own
        outgoing reference (if any) is dropped first.
        """
        if self.out_w[v] or self.in_w[v]:
            raise ValueError(f"node {v} still has edges")
        if self.ref_count[v]:
            raise ValueError(f"node {v} still has {self.ref_count[v]} referrers")
        self._drop_own_refs(v)
        self._release(v)

    def _drop_own_refs(self, v: NodeId) -> None:
        p = self.parent[v]
        if p is not None:
            self.parent[v] = None
            self._deref(p)
        c = self.community_ref[v]
        if c is not None:
            self.community_ref[v] = None
            self._deref(c)

    def _deref(self, target: NodeId) -> None:
        self.ref_count[target] -= 1
        if (self.ref_count[target] == 0 and not self.out_w[target]
                and not self.in_w[target]
                and self.level[target] > 0):
            # Empty aggregate node: detach and recycle.  Ground nodes are
            # never auto-freed (isolated input nodes persist).
            if self.level[target] == self.community_level:
                self.communities.discard(target)
            self._drop_own_refs(target)
            self._release(target, quarantine=True)

    def _release(self, v: NodeId, quarantine: bool = False) -> None:
        self.alive[v] = False
        self.parent[v] = None
        self.community_ref[v] = None
        self.k_in[v] = 0
        self.k_out[v] = 0
        self._cached_community[v] = None
        self._cache_stamp[v] = -1
        if quarantine:
            self._quarantine.append(v)
        else:
            self._free.setdefault(self.level[v], []).append(v)

    def release_freed(self) -> None:
        """Move quarantined IDs to the free lists.

        Called at the end of an operation whose aggregate window must not
        see a freed ID recycled mid-flight.
        """
        for v in self._quarantine:
            self._free.setdefault(self.level[v], []).append(v)
        self._quarantine.clear()

    # ------------------------------------------------------------------
    # node inspection

    def node_count(self) -> int:
        return sum(self.alive)

    def is_community(self, v: NodeId) -> bool:
        return self.level[v] == self.community_level

    def kind(self, v: NodeId) -> str:
        lvl = self.level[v]
        if lvl == self.community_level:
            return COMMUNITY
        return GROUND if lvl == 0 else REFINED

    def node_ids(self, level: int | None = None) -> Iterator[NodeId]:
        """Iterate live node IDs, optionally restricted to one level."""
        for v, ok in enumerate(self.alive):
            if ok and (level is None or self.level[v] == level):
                yield v

    # ------------------------------------------------------------------
    # references

    def set_parent(self, v: NodeId, p: NodeId) -> None:
        """Make ``p`` the parent of ``v``, replacing any previous reference."""
        if self.level[p] != self.level[v] + 1:
            raise ValueError(
                f"parent must be one level up: node {v} at level "
                f"{self.level[v]}, candidate {p} at level {self.level[p]}")
        self.ref_count[p] += 1
        self._drop_own_refs(v)
        self.parent[v] = p
        self._cached_community[v] = None

    def set_reference_to_community(self, v: NodeId, c: NodeId) -> None:
        """Point ``v`` directly at community ``c``, replacing any previous reference."""
        if not self.is_community(c):
            raise ValueError(f"node {c} is not a community node")
        self.ref_count[c] += 1
        self._drop_own_refs(v)
        self.community_ref[v] = c
        self._cached_community[v] = None

    def resolve_community(self, u: NodeId) -> NodeId:
        """Community reached by following parent references from ``u``.

        The value is cached per node and reused until the node's own
        reference changes or the graph-wide cache epoch is bumped.
        """
        epoch = self.cache_epoch
        cached = self._cached_community
        stamp = self._cache_stamp
        if stamp[u] == epoch and cached[u] is not None:
            return cached[u]
        self.resolve_walks += 1
        chain = []
        v = u
        parent = self.parent
        community_ref = self.community_ref
        while True:
            c = community_ref[v]
            if c is not None:
                break
            chain.append(v)
            nxt = parent[v]
            if nxt is None:
                raise BrokenChainError(
                    f"node {v} (reached from {u}) has neither parent nor "
                    f"community reference")
            v = nxt
        cached[v] = c
        stamp[v] = epoch
        for w in chain:
            cached[w] = c
            stamp[w] = epoch
        return c

    def bump_cache_epoch(self) -> None:
        """Lazily invalidate every cached community resolution."""
        self.cache_epoch += 1

    # ------------------------------------------------------------------
    # edges

    def set_edge(self, u: NodeId, v: NodeId, w) -> None:
        """Set the weight of the edge (u, v) to exactly ``w``; 0 removes it."""
        if self.level[u] != self.level[v]:
            raise ValueError(
                f"cross-level edge ({u}@{self.level[u]} -> {v}@{self.level[v]})")
        if w == 0:
            self.out_w[u].pop(v, None)
            self.in_w[v].pop(u, None)
        else:
            self.out_w[u][v] = w
            self.in_w[v][u] = w

    def adjust_edge(self, u: NodeId, v: NodeId, dw) -> None:
        """Add ``dw`` to the weight of (u, v), removing the edge at zero."""
        if dw == 0:
            return
        row = self.out_w[u]
        w = row.get(v, 0) + dw
        if w == 0:
            del row[v]
            del self.in_w[v][u]
        else:
            if self.level[u] != self.level[v]:
                raise ValueError(
                    f"cross-level edge ({u}@{self.level[u]} -> "
                    f"{v}@{self.level[v]})")
            row[v] = w
            self.in_w[v][u] = w

    def edge_weight(self, u: NodeId, v: NodeId):
        return self.out_w[u].get(v, 0)

    def neighbors(self, u: NodeId) -> set[NodeId]:
        """Distinct neighbors over both directions, excluding ``u`` itself."""
        nbrs = set(self.out_w[u])
        nbrs.update(self.in_w[u])
        nbrs.discard(u)
        return nbrs

    def incident_edges(self, u: NodeId) -> list[tuple[NodeId, NodeId, int | float]]:
        """All directed edges touching ``u``; a self-loop appears once."""
        edges = [(u, v, w) for v, w in self.out_w[u].items()]
        edges.extend((x, u, w) for x, w in self.in_w[u].items() if x != u)
        return edges

    def degree(self, u: NodeId) -> int:
        return len(self.neighbors(u))
