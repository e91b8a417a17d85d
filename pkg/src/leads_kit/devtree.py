"""Device registry organized as a forest of rooted trees.

Every device carries a globally unique tag. Controllers are devices that
hold children in a local registry; the resulting parent chains are the
dependency paths along which failures propagate: marking a node failed
flags every descendant as suspect, because a broken dependency makes their
readings untrustworthy without proving them wrong.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import DuplicateTagError, TreeStructureError, UnknownTagError

KINDS = ("device", "controller")
STATUSES = ("ok", "failed", "suspect")


@dataclass
class DeviceNode:
    tag: str
    kind: str
    parent: str | None = None
    children: list[str] = field(default_factory=list)
    status: str = "ok"

    @property
    def is_controller(self) -> bool:
        return self.kind == "controller"


class DeviceTree:
    """Global registry of :class:`DeviceNode` records.

    Mutations are single-writer; concurrent readers are safe between
    mutations.
    """

    def __init__(self) -> None:
        self._nodes: dict[str, DeviceNode] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, tag: str) -> bool:
        return tag in self._nodes

    def __iter__(self) -> Iterator[DeviceNode]:
        return iter(self._nodes.values())

    def node(self, tag: str) -> DeviceNode:
        try:
            return self._nodes[tag]
        except KeyError:
            raise UnknownTagError(f"no device tagged {tag!r}") from None

    def roots(self) -> list[str]:
        return [n.tag for n in self._nodes.values() if n.parent is None]

    def register(self, tag: str, kind: str, parent: str | None = None) -> DeviceNode:
        """Insert a node under ``parent`` (or as a root when parent is None)."""
        if kind not in KINDS:
            raise TreeStructureError(f"kind must be one of {KINDS}, got {kind!r}")
        if tag in self._nodes:
            raise DuplicateTagError(f"tag {tag!r} is already registered")
        if parent is not None:
            parent_node = self.node(parent)
            if not parent_node.is_controller:
                raise TreeStructureError(
                    f"parent {parent!r} is a plain device and cannot hold children"
                )
        node = DeviceNode(tag=tag, kind=kind, parent=parent)
        self._nodes[tag] = node
        if parent is not None:
            self._nodes[parent].children.append(tag)
            # A child of a failed/suspect controller starts life suspect.
            if self._nodes[parent].status in ("failed", "suspect"):
                node.status = "suspect"
        return node

    def dependency_path(self, tag: str) -> list[str]:
        """Tags from the root down to ``tag`` (inclusive)."""
        node = self.node(tag)
        path = [node.tag]
        while node.parent is not None:
            node = self.node(node.parent)
            path.append(node.tag)
        path.reverse()
        return path

    def mark_failed(self, tag: str) -> None:
        """Set ``tag`` failed and every descendant suspect (failed dominates)."""
        node = self.node(tag)
        node.status = "failed"
        stack = list(node.children)
        while stack:
            child = self._nodes[stack.pop()]
            if child.status != "failed":
                child.status = "suspect"
            stack.extend(child.children)

    def status(self, tag: str) -> str:
        return self.node(tag).status

    def to_config(self) -> list[dict[str, Any]]:
        """Registration order list of {tag, kind, parent} records."""
        return [
            {"tag": n.tag, "kind": n.kind, "parent": n.parent} for n in self._nodes.values()
        ]

    @classmethod
    def from_config(cls, records: list[dict[str, Any]]) -> "DeviceTree":
        """Build a tree from config records; parents must appear before children."""
        tree = cls()
        for record in records:
            tree.register(record["tag"], record["kind"], record.get("parent"))
        return tree
