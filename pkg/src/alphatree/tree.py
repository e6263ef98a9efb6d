"""Tree shapes grown under Ford's alpha model.

Shapes are unlabelled: cherry and pitchfork counts do not depend on leaf
labels, so the random labelling of the growth process is dropped. A shape is
kept in flat index arrays. Vertex 0 is the degree-1 root and every other
vertex names the edge that enters it, so edge ids are child-vertex ids.
"""

from fractions import Fraction
from numbers import Real

import numba
import numpy as np

from alphatree._rng import nb_next_double, nb_stream_key

PENDANT_COLORS = (1, 2, 3, 4)
INTERNAL_COLORS = (5, 6)
ROOT = 0


def check_alpha(alpha):
    """Return ``alpha`` unchanged if it is a real number in [0, 1]."""
    if isinstance(alpha, bool) or not isinstance(alpha, Real):
        raise TypeError(f"alpha must be a real number, got {alpha!r}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def parse_alpha(text):
    """Parse ``"0.25"`` or ``"1/4"``; rationals come back as ``Fraction``."""
    text = str(text).strip()
    try:
        value = Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse alpha {text!r}") from exc
    return check_alpha(value)


class TreeShape:
    """Rooted binary tree shape.

    ``left``/``right`` hold child ids (-1 for leaves, and ``right`` is -1 for
    the root, which has a single child). ``leaves`` and ``internals`` list the
    pendant and non-pendant edges; the root edge is internal.
    """

    __slots__ = ("parent", "left", "right", "leaves", "internals")

    def __init__(self, parent, left, right, leaves, internals):
        self.parent = parent
        self.left = left
        self.right = right
        self.leaves = leaves
        self.internals = internals

    @property
    def n_leaves(self):
        return len(self.leaves)

    @property
    def n_edges(self):
        return len(self.parent) - 1

    def edges(self):
        return range(1, len(self.parent))

    def is_pendant(self, edge):
        self._check_edge(edge)
        return self.left[edge] == -1

    def copy(self):
        return TreeShape(
            list(self.parent),
            list(self.left),
            list(self.right),
            list(self.leaves),
            list(self.internals),
        )

    def children(self, v):
        return [c for c in (self.left[v], self.right[v]) if c != -1]

    def _check_edge(self, edge):
        if not isinstance(edge, (int, np.integer)) or not 1 <= edge < len(self.parent):
            raise KeyError(f"unknown edge id {edge!r}")

    def subdivide(self, edge):
        """Return T[e]: ``edge`` is split by a new vertex carrying a new leaf."""
        out = self.copy()
        out._subdivide_inplace(edge)
        return out

    def _subdivide_inplace(self, edge):
        self._check_edge(edge)
        p = self.parent[edge]
        w = len(self.parent)
        leaf = w + 1
        if self.left[p] == edge:
            self.left[p] = w
        else:
            self.right[p] = w
        self.parent += [p, w]
        self.left += [edge, -1]
        self.right += [leaf, -1]
        self.parent[edge] = w
        self.internals.append(w)
        self.leaves.append(leaf)

    def to_newick(self):
        """Nested-parenthesis shape string, e.g. ``"((,),)"`` for the pitchfork."""

        def rec(v):
            if self.left[v] == -1:
                return ""
            return "(" + ",".join(rec(c) for c in self.children(v)) + ")"

        return rec(self.left[ROOT])

    def canonical(self):
        """Order-independent shape key; equal for isomorphic shapes."""
        keys = [None] * len(self.parent)
        for v in postorder(self):
            if self.left[v] == -1:
                keys[v] = "L"
            else:
                a, b = sorted(keys[c] for c in self.children(v))
                keys[v] = f"({a},{b})"
        return keys[self.left[ROOT]]

    def __repr__(self):
        return f"TreeShape(n_leaves={self.n_leaves}, newick={self.to_newick()!r})"


def initial_tree():
    """The 2-leaf shape: a single cherry below the root edge."""
    return TreeShape(
        parent=[-1, 0, 1, 1],
        left=[1, 2, -1, -1],
        right=[-1, 3, -1, -1],
        leaves=[2, 3],
        internals=[1],
    )


def edge_weight(tree, edge, alpha):
    check_alpha(alpha)
    return 1 - alpha if tree.is_pendant(edge) else alpha


def select_edge(tree, alpha, u):
    """Map a uniform draw ``u`` in [0, 1) to an edge with Ford weights.

    Pendant edges occupy the first n(1-alpha) of the total mass n - alpha,
    internal edges the rest. One draw per step; the batch kernel uses the
    identical mapping.
    """
    n = tree.n_leaves
    total = n - alpha
    if total <= 0:
        raise ValueError("total edge weight is zero")
    x = u * total
    pend = n * (1 - alpha)
    if alpha == 0 or (alpha < 1 and x < pend):
        idx = min(int(x / (1 - alpha)), n - 1)
        return tree.leaves[idx]
    idx = min(int((x - pend) / alpha), len(tree.internals) - 1)
    return tree.internals[idx]


def grow_step(tree, alpha, rng):
    """One Ford insertion; ``rng`` is anything with a ``random()`` method."""
    check_alpha(alpha)
    return tree.subdivide(select_edge(tree, alpha, rng.random()))


def simulate_ford(n, alpha, rng):
    """Grow a Ford(alpha) shape with ``n`` leaves from the 2-leaf tree."""
    check_alpha(alpha)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    tree = initial_tree()
    for _ in range(n - 2):
        tree._subdivide_inplace(select_edge(tree, alpha, rng.random()))
    return tree


def postorder(tree):
    """Non-root vertices, children before parents."""
    order = []
    stack = [tree.left[ROOT]]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(tree.children(v))
    order.reverse()
    return order


def subtree_sizes(tree):
    """Leaf count below every vertex; the root gets 0 since no edge enters it."""
    sizes = [0] * len(tree.parent)
    for v in postorder(tree):
        if tree.left[v] == -1:
            sizes[v] = 1
        else:
            sizes[v] = sum(sizes[c] for c in tree.children(v))
    return sizes


def edge_colors(tree):
    """Colour (1..6) of every edge, as a dict keyed by edge id.

    1 pendant edge of a cherry inside a pitchfork, 2 pendant edge of an
    essential cherry, 3 pendant edge of a pitchfork outside its cherry,
    4 any other pendant edge, 5 internal edge of an essential cherry,
    6 any other internal edge.
    """
    sizes = subtree_sizes(tree)
    colors = {}
    for v in tree.edges():
        p = tree.parent[v]
        if tree.left[v] == -1:
            if sizes[p] == 2:
                colors[v] = 1 if sizes[tree.parent[p]] == 3 else 2
            elif sizes[p] == 3:
                colors[v] = 3
            else:
                colors[v] = 4
        else:
            colors[v] = 5 if sizes[v] == 2 and sizes[p] != 3 else 6
    return colors


def classify_edges(tree):
    """(|E1|, ..., |E6|)."""
    counts = [0] * 6
    for c in edge_colors(tree).values():
        counts[c - 1] += 1
    return tuple(counts)


def count_stats(tree):
    """(pitchforks, cherries) counted over fringe subtrees."""
    sizes = subtree_sizes(tree)
    return sizes.count(3), sizes.count(2)


# batch kernel ----------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _simulate_counts(n, alpha, seed, first, count):
    """Pitchfork/cherry counts for trials ``first .. first+count-1``."""
    size = 2 * n
    parent = np.empty(size, np.int64)
    left = np.empty(size, np.int64)
    right = np.empty(size, np.int64)
    leaves = np.empty(n, np.int64)
    internals = np.empty(n, np.int64)
    sizes = np.empty(size, np.int64)
    stack = np.empty(size, np.int64)
    order = np.empty(size, np.int64)
    state = np.empty(1, np.uint64)
    out_a = np.empty(count, np.int64)
    out_c = np.empty(count, np.int64)
    for t in range(count):
        state[0] = nb_stream_key(seed, first + t)
        parent[0] = -1
        left[0] = 1
        right[0] = -1
        parent[1] = 0
        left[1] = 2
        right[1] = 3
        for v in (2, 3):
            parent[v] = 1
            left[v] = -1
            right[v] = -1
        leaves[0] = 2
        leaves[1] = 3
        internals[0] = 1
        nl = 2
        ni = 1
        nv = 4
        while nl < n:
            u = nb_next_double(state)
            x = u * (nl - alpha)
            pend = nl * (1.0 - alpha)
            if alpha == 0.0 or (alpha < 1.0 and x < pend):
                idx = min(int(x / (1.0 - alpha)), nl - 1)
                e = leaves[idx]
            else:
                idx = min(int((x - pend) / alpha), ni - 1)
                e = internals[idx]
            p = parent[e]
            w = nv
            lf = nv + 1
            nv += 2
            if left[p] == e:
                left[p] = w
            else:
                right[p] = w
            parent[w] = p
            left[w] = e
            right[w] = lf
            parent[e] = w
            parent[lf] = w
            left[lf] = -1
            right[lf] = -1
            leaves[nl] = lf
            internals[ni] = w
            nl += 1
            ni += 1
        # preorder then reverse for subtree sizes
        top = 0
        stack[0] = left[0]
        k = 0
        while top >= 0:
            v = stack[top]
            top -= 1
            order[k] = v
            k += 1
            if left[v] != -1:
                top += 1
                stack[top] = left[v]
                top += 1
                stack[top] = right[v]
        a = 0
        c = 0
        for j in range(k - 1, -1, -1):
            v = order[j]
            if left[v] == -1:
                sizes[v] = 1
            else:
                s = sizes[left[v]] + sizes[right[v]]
                sizes[v] = s
                if s == 2:
                    c += 1
                elif s == 3:
                    a += 1
        out_a[t] = a
        out_c[t] = c
    return out_a, out_c


def simulate_counts(n, alpha, seed, first, count):
    """(a, c) arrays for a block of tree-engine trials."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    check_alpha(alpha)
    return _simulate_counts(
        int(n), float(alpha), np.uint64(seed & ((1 << 64) - 1)), int(first), int(count)
    )
