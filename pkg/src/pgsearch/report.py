"""Figure rendering for search trees.

Matches the conventions of the DOT output: node labels are order exponents,
squares are candidates, circles pruned or dead branches, diamonds leaves cut
off by the class limit, and dots interior nodes with live descendants.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.collections import LineCollection

from .search import (
    STATUS_CANDIDATE,
    STATUS_CLASS_LIMIT,
    STATUS_DEAD,
    STATUS_PRUNED,
    SearchResult,
    natural_key,
)

_MARKER = {
    STATUS_CANDIDATE: ("s", "#2f9e44", 90),
    STATUS_CLASS_LIMIT: ("D", "#e8590c", 70),
    STATUS_PRUNED: ("o", "#adb5bd", 45),
    STATUS_DEAD: ("o", "#868e96", 45),
    "open": (".", "#1c7ed6", 60),
}


def _layout(result: SearchResult) -> dict:
    """Leaf-counting layout: x from post-order leaf positions, y by depth."""
    children: dict = {}
    for node in result.nodes.values():
        if node.parent_id is not None:
            children.setdefault(node.parent_id, []).append(node.node_id)
    for kids in children.values():
        kids.sort(key=natural_key)
    pos: dict = {}
    next_x = [0.0]

    def place(node_id: str, depth: int) -> float:
        kids = children.get(node_id, [])
        if not kids:
            x = next_x[0]
            next_x[0] += 1.0
        else:
            xs = [place(k, depth + 1) for k in kids]
            x = sum(xs) / len(xs)
        pos[node_id] = (x, -depth)
        return x

    root = min(result.nodes, key=natural_key)
    place(root, 0)
    return pos


def render_tree_figure(result: SearchResult, path) -> None:
    """Draw the search tree and write it to ``path`` (format by suffix)."""
    pos = _layout(result)
    n_nodes = len(result.nodes)
    width = max(4.0, min(24.0, 0.42 * max(x for x, _ in pos.values()) + 2.0))
    depth = max(-y for _, y in pos.values()) + 1
    height = max(3.0, min(18.0, 0.9 * depth + 1.0))
    fig, ax = plt.subplots(figsize=(width, height))

    segments = []
    for node in result.nodes.values():
        if node.parent_id is not None:
            segments.append([pos[node.parent_id], pos[node.node_id]])
    if segments:
        ax.add_collection(
            LineCollection(segments, colors="#ced4da", linewidths=0.8, zorder=1)
        )

    by_status: dict = {}
    for node_id, node in result.nodes.items():
        by_status.setdefault(node.status, []).append(node_id)
    for status, ids in sorted(by_status.items()):
        marker, color, size = _MARKER.get(status, _MARKER["open"])
        xs = [pos[i][0] for i in ids]
        ys = [pos[i][1] for i in ids]
        ax.scatter(xs, ys, marker=marker, c=color, s=size, zorder=2, label=status)
    if n_nodes <= 400:
        for node_id, node in result.nodes.items():
            x, y = pos[node_id]
            ax.annotate(
                str(node.order_exponent),
                (x, y),
                textcoords="offset points",
                xytext=(5, 4),
                fontsize=7,
                color="#343a40",
            )
    ax.legend(loc="lower left", fontsize=8, frameon=False)
    ax.set_axis_off()
    title = f"descendant tree: {result.verdict}, {len(result.candidates)} candidate(s)"
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150, metadata={})
    plt.close(fig)
