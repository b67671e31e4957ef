"""Brute-force oracles shared by the unit tests and the acceptance suite.

These deliberately avoid the library's DP machinery: alignments are found by
exhaustive enumeration, and the preferred one is selected by comparing the
op sequences read from the end (mirroring a MATCH > SUB > INS > DEL
backtrace) instead of by any backtracking table.
"""

from functools import lru_cache

_RANK = {"match": 0, "sub": 1, "ins": 2, "del": 3}


def enumerate_minimal_alignments(ref, hyp):
    """All minimal-cost alignments as lists of (kind, ref_i, hyp_j) tuples."""
    ref = tuple(ref)
    hyp = tuple(hyp)

    @lru_cache(maxsize=None)
    def dist(i, j):
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        sub_cost = 0 if ref[i] == hyp[j] else 1
        return min(dist(i + 1, j + 1) + sub_cost,
                   dist(i, j + 1) + 1,
                   dist(i + 1, j) + 1)

    results = []

    def walk(i, j, acc):
        if i == len(ref) and j == len(hyp):
            results.append(list(acc))
            return
        here = dist(i, j)
        if i < len(ref) and j < len(hyp):
            kind = "match" if ref[i] == hyp[j] else "sub"
            if dist(i + 1, j + 1) + (0 if kind == "match" else 1) == here:
                acc.append((kind, i, j))
                walk(i + 1, j + 1, acc)
                acc.pop()
        if j < len(hyp) and dist(i, j + 1) + 1 == here:
            acc.append(("ins", None, j))
            walk(i, j + 1, acc)
            acc.pop()
        if i < len(ref) and dist(i + 1, j) + 1 == here:
            acc.append(("del", i, None))
            walk(i + 1, j, acc)
            acc.pop()

    walk(0, 0, [])
    return results


def preferred_alignment(ref, hyp):
    """The minimal alignment a MATCH > SUB > INS > DEL end-first backtrace picks."""
    candidates = enumerate_minimal_alignments(ref, hyp)
    return min(candidates,
               key=lambda ops: tuple(_RANK[kind] for kind, _, _ in reversed(ops)))


def wder_counts_oracle(ref_words, ref_roles, hyp_words, hyp_roles):
    """(s_is, c_is, s, c) computed from the preferred brute-force alignment."""
    s = c = s_is = c_is = 0
    for kind, i, j in preferred_alignment(ref_words, hyp_words):
        if kind == "match":
            c += 1
            c_is += ref_roles[i] != hyp_roles[j]
        elif kind == "sub":
            s += 1
            s_is += ref_roles[i] != hyp_roles[j]
    return s_is, c_is, s, c
