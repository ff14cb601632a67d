"""Disjoint-set forest with path compression and union by rank."""

from __future__ import annotations


class UnionFind:
    def __init__(self):
        self.parent: dict = {}
        self.rank: dict = {}

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x):
        self.add(x)
        # iterative path compression, no recursion limit worries
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1

    def connected(self, x, y) -> bool:
        return self.find(x) == self.find(y)

    def groups(self) -> dict:
        """Map smallest member -> sorted members, one entry per component."""
        by_root: dict = {}
        for x in self.parent:
            by_root.setdefault(self.find(x), []).append(x)
        out = {}
        for members in by_root.values():
            members.sort()
            out[members[0]] = members
        return out
