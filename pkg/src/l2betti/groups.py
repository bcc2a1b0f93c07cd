"""Small finite group multiplication tables used throughout the tests
and the bundled corpus."""

from __future__ import annotations

import itertools


def cyclic_table(n: int):
    """(table, unit, elements) for Z/n with elements g0..g{n-1}."""
    els = ["g%d" % k for k in range(n)]
    table = {(els[a], els[b]): els[(a + b) % n]
             for a in range(n) for b in range(n)}
    return table, els[0], els


def symmetric_table(n: int):
    """(table, unit, elements) for the symmetric group on n letters (n <= 4)."""
    perms = sorted(itertools.permutations(range(n)))
    names = {p: "s" + "".join(str(i) for i in p) for p in perms}
    table = {}
    for p in perms:
        for q in perms:
            pq = tuple(p[q[i]] for i in range(n))
            table[(names[p], names[q])] = names[pq]
    unit = names[tuple(range(n))]
    return table, unit, [names[p] for p in perms]


def klein_table():
    els = ["e", "a", "b", "c"]
    idx = {e: i for i, e in enumerate(els)}
    table = {}
    for x in els:
        for y in els:
            table[(x, y)] = els[idx[x] ^ idx[y]]
    return table, "e", els


def group_table(name: str):
    if name.startswith("C") and name[1:].isdigit():
        return cyclic_table(int(name[1:]))
    if name == "S3":
        return symmetric_table(3)
    if name in ("V4", "K4"):
        return klein_table()
    raise ValueError("unknown group %r" % name)
