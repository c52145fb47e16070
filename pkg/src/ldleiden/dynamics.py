"""Applying batch updates and propagating weight changes between levels.

A batch update is a list of ``(src, dst, delta)`` edge-weight deltas at
one time step, expressed in external node labels.  ``update_ground``
applies it to level 0 (creating fresh nodes with singleton communities
as needed) and mirrors the deltas onto the community level.  ``lift``
aggregates a same-level update list one level up, materialising parent
nodes on demand.  ``up_edge`` propagates a single edge-weight change to
the parent and community levels and is the workhorse of move
application.

Pending (lifted) updates are carried as a dict ``{(u, v): w}`` so that
duplicate pairs stay merged by summation; entries cancelling to zero
disappear.
"""

from __future__ import annotations

from .hiergraph import HierGraph, NodeId
from .modularity import aggregates_window

PendingUpdate = dict  # {(NodeId, NodeId): weight}


def merge_deltas(batch) -> dict:
    """Sum duplicate ``(src, dst)`` deltas; drop pairs cancelling to zero."""
    merged: dict[tuple, int | float] = {}
    for src, dst, delta in batch:
        key = (src, dst)
        w = merged.get(key, 0) + delta
        if w == 0:
            merged.pop(key, None)
        else:
            merged[key] = w
    return merged


def update_ground(graph: HierGraph, batch, label_map: dict,
                  labels: list) -> tuple[set[NodeId], PendingUpdate]:
    """Apply a batch update to level 0 and the community level.

    New labels get a fresh ground node plus a fresh singleton community.
    Returns the set of touched ground nodes and the merged ground-level
    update list.  In integer mode a delta that would drive an edge weight
    negative raises ``ValueError`` before anything is mutated.
    """
    touched_labels = set()
    for src, dst, delta in batch:
        if delta == 0:
            raise ValueError(f"zero delta for edge ({src}, {dst})")
        touched_labels.add(src)
        touched_labels.add(dst)
    merged = merge_deltas(batch)

    if graph.weight_mode == "int":
        for (src, dst), w in merged.items():
            if w < 0:
                u = label_map.get(src)
                v = label_map.get(dst)
                have = graph.edge_weight(u, v) if u is not None and v is not None else 0
                if have + w < 0:
                    raise ValueError(
                        f"edge ({src}, {dst}) would get negative weight "
                        f"{have + w}")

    old_nodes = [label_map[x] for x in touched_labels if x in label_map]
    window = {graph.resolve_community(v) for v in old_nodes}

    with aggregates_window(graph, window):
        # Fresh labels get dense IDs in first-seen order.
        for src, dst, _ in batch:
            for x in (src, dst):
                if x not in label_map:
                    v = graph.add_ground_node()
                    c = graph.add_community_node()
                    graph.set_reference_to_community(v, c)
                    label_map[x] = v
                    labels.append(x)
                    window.add(c)

        pending: PendingUpdate = {}
        resolve = graph.resolve_community
        k_in = graph.k_in
        k_out = graph.k_out
        total = 0
        for (src, dst), w in merged.items():
            u = label_map[src]
            v = label_map[dst]
            pending[(u, v)] = w
            graph.adjust_edge(u, v, w)
            k_out[u] += w
            k_in[v] += w
            c = resolve(u)
            b = resolve(v)
            graph.adjust_edge(c, b, w)
            k_out[c] += w
            k_in[b] += w
            total += w
        graph.total_weight += total

    affected = {label_map[x] for x in touched_labels}
    return affected, pending


def ensure_parent(graph: HierGraph, u: NodeId) -> NodeId:
    """Parent of ``u``, materialising a fresh singleton parent if missing.

    A new parent inherits the node's community reference, exactly as the
    lift step would have built it.
    """
    p = graph.parent[u]
    if p is None:
        c = graph.resolve_community(u)
        p = graph.add_node(graph.level[u] + 1)
        graph.set_parent(u, p)
        graph.set_reference_to_community(p, c)
    return p


def lift(graph: HierGraph, update: PendingUpdate) -> PendingUpdate:
    """Aggregate a same-level update one level up.

    Endpoints without a parent get one (a fresh singleton inheriting the
    community reference); parent-level edges and degree weights are
    adjusted by the summed deltas.  Returns the merged parent-level
    update.  Endpoints at the top refinable level are an error.
    """
    if not update:
        return {}
    touched: set[NodeId] = set()
    for u, v in update:
        touched.add(u)
        touched.add(v)
    top = graph.levels
    for u in sorted(touched):
        if graph.level[u] >= top:
            raise ValueError(f"cannot lift above level {top} (node {u})")
        ensure_parent(graph, u)

    lifted: PendingUpdate = {}
    parent = graph.parent
    for (u, v), w in update.items():
        key = (parent[u], parent[v])
        nw = lifted.get(key, 0) + w
        if nw == 0:
            lifted.pop(key, None)
        else:
            lifted[key] = nw
    k_in = graph.k_in
    k_out = graph.k_out
    for (p, q), w in lifted.items():
        graph.adjust_edge(p, q, w)
        k_out[p] += w
        k_in[q] += w
    return lifted


def up_edge(graph: HierGraph, pending: PendingUpdate, v1: NodeId, v2: NodeId,
            w) -> None:
    """Adjust the community- and parent-level images of edge ``(v1, v2)`` by ``w``.

    Below the top refinable level the parent-level delta is also merged
    into ``pending`` for the next lift.
    """
    if w == 0:
        return
    c = graph.resolve_community(v1)
    b = graph.resolve_community(v2)
    graph.adjust_edge(c, b, w)
    graph.k_out[c] += w
    graph.k_in[b] += w
    if graph.level[v1] != graph.levels:
        p = graph.parent[v1]
        q = graph.parent[v2]
        graph.adjust_edge(p, q, w)
        graph.k_out[p] += w
        graph.k_in[q] += w
        key = (p, q)
        nw = pending.get(key, 0) + w
        if nw == 0:
            pending.pop(key, None)
        else:
            pending[key] = nw
