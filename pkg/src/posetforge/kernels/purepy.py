"""Pure-Python relation-matrix kernels (bitset based).

Matrices are flat row-major buffers of length n*n holding relation codes
0 = incomparable, 1 = strictly less, 2 = strictly greater.  The compiled
backend in `_core.pyx` implements the same three entry points.
"""

INC, LT, GT = 0, 1, 2


def _lt_rows(rel, n):
    rows = []
    for i in range(n):
        base = i * n
        row = 0
        for j in range(n):
            if rel[base + j] == LT:
                row |= 1 << j
        rows.append(row)
    return rows


def check_strict(rel, n):
    """Scan a relation matrix for strict-poset coherence.

    Returns -1 when the matrix has a zero diagonal, LT/GT mirror symmetry
    and a transitive LT part; otherwise the flat index of the first
    offending cell.
    """
    for i in range(n):
        base = i * n
        if rel[base + i] != INC:
            return base + i
        for j in range(i + 1, n):
            a = rel[base + j]
            b = rel[j * n + i]
            if (a == LT and b != GT) or (a == GT and b != LT) or (a == INC and b != INC):
                return j * n + i
    lt = _lt_rows(rel, n)
    for i in range(n):
        row = lt[i]
        m = row
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            extra = lt[j] & ~row
            if extra:
                k = (extra & -extra).bit_length() - 1
                return i * n + k
    return -1


def close_strict(rel, n):
    """Transitively close the LT part of `rel` in place (Warshall).

    GT cells are rewritten as mirrors of the closed LT part.  Returns -1 on
    success, or the flat diagonal index i*n+i of a cycle.
    """
    lt = _lt_rows(rel, n)
    for k in range(n):
        bit = 1 << k
        lk = lt[k]
        for i in range(n):
            if lt[i] & bit:
                lt[i] |= lk
    for i in range(n):
        if (lt[i] >> i) & 1:
            return i * n + i
    for i in range(n):
        base = i * n
        row = lt[i]
        for j in range(n):
            if (row >> j) & 1:
                rel[base + j] = LT
                rel[j * n + i] = GT
    return -1


def automorphisms(rel, n, limit=0):
    """All relation-preserving permutations of {0..n-1}, identity first.

    Backtracking with in/out-degree pruning; candidates are tried in
    ascending order so the identity is always emitted before any other
    automorphism.  `limit` > 0 stops after that many results.
    """
    indeg = [0] * n
    outdeg = [0] * n
    for i in range(n):
        base = i * n
        for j in range(n):
            c = rel[base + j]
            if c == LT:
                outdeg[i] += 1
            elif c == GT:
                indeg[i] += 1
    result = []
    img = [-1] * n
    used = [False] * n

    def bt(i):
        if i == n:
            result.append(tuple(img))
            return limit <= 0 or len(result) < limit
        for c in range(n):
            if used[c] or indeg[c] != indeg[i] or outdeg[c] != outdeg[i]:
                continue
            ibase = i * n
            cbase = c * n
            ok = True
            for j in range(i):
                if rel[ibase + j] != rel[cbase + img[j]]:
                    ok = False
                    break
            if ok:
                img[i] = c
                used[c] = True
                if not bt(i + 1):
                    return False
                used[c] = False
                img[i] = -1
        return True

    bt(0)
    return result
