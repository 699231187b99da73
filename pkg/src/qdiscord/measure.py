"""Rank-1 projective measurements on blocks, conditional trees, and products.

A block of subsystems is measured as a single particle of its product
dimension d. Bases are parameterized by d(d-1) real angles through a fixed
product of Givens rotations with embedded phases; column phases drop out of
the projectors, so the parameterization covers every basis without
redundant search directions and can be inverted (up to those phases) from
any unitary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qstate import DensityMatrix, partial_trace, von_neumann_entropy


def n_basis_params(dim):
    """Number of real angles parameterizing a basis on a dim-level particle."""
    return dim * (dim - 1)


def _givens_pairs(dim):
    return [(c, r) for c in range(dim - 1) for r in range(c + 1, dim)]


def unitary_from_params(dim, params):
    """Basis unitary from d(d-1) angles; columns are the basis kets."""
    params = np.asarray(params, dtype=float)
    if params.shape != (n_basis_params(dim),):
        raise ValueError(f"expected {n_basis_params(dim)} parameters, got {params.shape}")
    u = np.eye(dim, dtype=complex)
    for k, (c, r) in enumerate(_givens_pairs(dim)):
        th, ph = params[2 * k], params[2 * k + 1]
        g = np.eye(dim, dtype=complex)
        cs, sn = np.cos(th), np.sin(th)
        g[c, c] = cs
        g[c, r] = -np.exp(1j * ph) * sn
        g[r, c] = np.exp(-1j * ph) * sn
        g[r, r] = cs
        u = u @ g
    return u


def params_from_unitary(u):
    """Angles reproducing the projectors of `u` (column phases are dropped)."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    a = u.copy()
    params = np.zeros(n_basis_params(dim))
    for k, (c, r) in enumerate(_givens_pairs(dim)):
        x, y = a[c, c], a[r, c]
        if abs(y) < 1e-15:
            th, ph = 0.0, 0.0
        else:
            ph = np.angle(x) - np.angle(y)
            th = np.arctan2(abs(y), abs(x))
        params[2 * k], params[2 * k + 1] = th, ph
        rot = np.eye(dim, dtype=complex)
        cs, sn = np.cos(th), np.sin(th)
        rot[c, c] = cs
        rot[c, r] = np.exp(1j * ph) * sn
        rot[r, c] = -np.exp(-1j * ph) * sn
        rot[r, r] = cs
        a = rot @ a
    return params


@dataclass(frozen=True)
class ProjectiveBasis:
    """A rank-1 projective measurement on one block of subsystems.

    target: names of the block's subsystems (index order), treated as a
    single particle of dimension prod(dims).
    """

    target: tuple
    dims: tuple
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        if len(self.target) != len(self.dims):
            raise ValueError("target and dims must align")
        if len(self.params) != n_basis_params(self.dim):
            raise ValueError(
                f"block of dimension {self.dim} needs {n_basis_params(self.dim)} angles"
            )

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def unitary(self):
        return unitary_from_params(self.dim, np.array(self.params))

    def projectors(self):
        """The rank-1 projectors U|j><j|U+; they resolve the identity."""
        u = self.unitary()
        return [np.outer(u[:, j], u[:, j].conj()) for j in range(self.dim)]


def random_basis(target, dims, rng):
    p = rng.uniform(0.0, 2.0 * np.pi, n_basis_params(int(np.prod(dims))))
    return ProjectiveBasis(tuple(target), tuple(dims), tuple(p))


def computational_basis(target, dims):
    d = int(np.prod(dims))
    return ProjectiveBasis(tuple(target), tuple(dims), (0.0,) * n_basis_params(d))


# ---------------------------------------------------------------------------
# embedding a block operator into the full space


@lru_cache(maxsize=None)
def _embedding_index(dims, positions):
    dims = tuple(dims)
    n = len(dims)
    d_total = int(np.prod(dims))
    rest = [i for i in range(n) if i not in positions]
    perm = list(positions) + rest
    multi = np.array(np.unravel_index(np.arange(d_total), dims))
    idx = np.ravel_multi_index(tuple(multi[p] for p in perm), tuple(dims[p] for p in perm))
    rest_dim = int(np.prod([dims[i] for i in rest])) if rest else 1
    return idx, rest_dim


def embed_operator(op, positions, dims):
    """Lift an operator on the listed tensor positions to the full space."""
    idx, rest_dim = _embedding_index(tuple(dims), tuple(positions))
    big = np.kron(op, np.eye(rest_dim, dtype=complex))
    return big[np.ix_(idx, idx)]


@lru_cache(maxsize=None)
def _block_digit_mask(dims, positions):
    """mask[i, j] = 1 where basis states i, j share their block component."""
    idx, rest_dim = _embedding_index(dims, positions)
    digit = idx // rest_dim
    return (digit[:, None] == digit[None, :]).astype(float)


def pinch_with_unitary(mat, dims, positions, u):
    """sum_j (Pi_j x I) mat (Pi_j x I) for the basis with kets u[:, j].

    Rotates into the measurement basis, drops coherences across block
    outcomes, and rotates back; one embedding instead of one per outcome.
    """
    v = embed_operator(u, tuple(positions), tuple(dims))
    mask = _block_digit_mask(tuple(dims), tuple(positions))
    rot = v.conj().T @ mat @ v
    rot *= mask
    return v @ rot @ v.conj().T


def _positions(rho, names):
    out = []
    for n in names:
        if n not in rho.names:
            raise ValueError(f"subsystem {n!r} not in state {rho.names}")
        out.append(rho.names.index(n))
    return tuple(out)


def embedded_projectors(rho, basis):
    pos = _positions(rho, basis.target)
    for p, want in zip(pos, basis.dims):
        if rho.dims[p] != want:
            raise ValueError("basis dims do not match the state")
    return [embed_operator(pj, pos, rho.dims) for pj in basis.projectors()]


def _pinch(mat, projectors):
    out = np.zeros_like(mat)
    for e in projectors:
        out += e @ mat @ e
    return out


def apply_basis(rho, basis):
    """Dephase `rho` in the given block basis: sum_j (Pi_j x I) rho (Pi_j x I)."""
    return DensityMatrix(rho.labels, _pinch(rho.data, embedded_projectors(rho, basis)))


# ---------------------------------------------------------------------------
# conditional measurement trees


@dataclass(frozen=True)
class MeasurementTree:
    """Outcome-conditioned measurement rounds on an ordered run of blocks.

    nodes[t] holds one ProjectiveBasis per outcome prefix (j_1..j_t),
    indexed by the row-major ravel of the prefix; nodes[0] has the single
    root basis.
    """

    ordering: tuple
    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "ordering", tuple(tuple(b) for b in self.ordering))
        object.__setattr__(self, "nodes", tuple(tuple(level) for level in self.nodes))
        if len(self.nodes) != len(self.ordering):
            raise ValueError("one node level per measured block")
        width = 1
        for t, level in enumerate(self.nodes):
            if len(level) != width:
                raise ValueError(f"depth {t} needs {width} nodes, got {len(level)}")
            for b in level:
                if b.target != self.ordering[t]:
                    raise ValueError("node target does not match the ordering")
            width *= level[0].dim

    @property
    def depth(self):
        return len(self.ordering)


@dataclass(frozen=True)
class TreeLayout:
    """Shape of a measurement tree: the measured blocks and their dims."""

    blocks: tuple
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))
        object.__setattr__(self, "dims", tuple(tuple(d) for d in self.dims))

    def block_dim(self, t):
        return int(np.prod(self.dims[t]))

    def n_nodes(self, t):
        w = 1
        for s in range(t):
            w *= self.block_dim(s)
        return w

    def params_size(self):
        return sum(self.n_nodes(t) * n_basis_params(self.block_dim(t)) for t in range(len(self.blocks)))

    def tree_from_params(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.params_size(),):
            raise ValueError(f"expected {self.params_size()} parameters")
        nodes = []
        at = 0
        for t, block in enumerate(self.blocks):
            per = n_basis_params(self.block_dim(t))
            level = []
            for _ in range(self.n_nodes(t)):
                level.append(ProjectiveBasis(block, self.dims[t], tuple(params[at : at + per])))
                at += per
            nodes.append(tuple(level))
        return MeasurementTree(self.blocks, tuple(nodes))

    def params_from_tree(self, tree):
        out = []
        for level in tree.nodes:
            for b in level:
                out.extend(b.params)
        return np.array(out)


def tree_layout(rho, measured_blocks):
    blocks = tuple(tuple(b) for b in measured_blocks)
    dims = tuple(tuple(rho.dims[rho.names.index(n)] for n in b) for b in blocks)
    return TreeLayout(blocks, dims)


def uniform_tree(rho, measured_blocks, basis_for_block):
    """Tree whose conditional bases at each depth all equal one basis."""
    layout = tree_layout(rho, measured_blocks)
    nodes = []
    for t, block in enumerate(layout.blocks):
        b = basis_for_block(block, layout.dims[t])
        nodes.append(tuple(b for _ in range(layout.n_nodes(t))))
    return MeasurementTree(layout.blocks, tuple(nodes))


def _tree_branches(rho, tree, depth):
    """Unnormalized branch states after `depth` rounds, prefix-major order."""
    branches = [rho.data]
    for t in range(depth):
        level = tree.nodes[t]
        new = []
        for bi, mat in enumerate(branches):
            for e in embedded_projectors(rho, level[bi]):
                new.append(e @ mat @ e)
        branches = new
    return branches


def apply_tree(rho, tree, depth=None):
    """State after the first `depth` conditional rounds (default: all)."""
    if depth is None:
        depth = tree.depth
    if not 0 <= depth <= tree.depth:
        raise ValueError(f"depth must be in [0, {tree.depth}]")
    if depth == 0:
        return rho
    total = sum(_tree_branches(rho, tree, depth))
    return DensityMatrix(rho.labels, total)


def conditional_entropy_post(rho, tree, k):
    """Conditional entropy of round-k block given the first k-1 measured rounds.

    Equals the ensemble average over outcome branches because the branches
    are orthogonal on the measured blocks; computed as an entropy difference
    of the post-measurement state. k = depth+1 refers to the remaining
    unmeasured subsystems of `rho`.
    """
    if not 1 <= k <= tree.depth + 1:
        raise ValueError(f"k must be in [1, {tree.depth + 1}]")
    post = apply_tree(rho, tree, k - 1)
    prev = [n for b in tree.ordering[: k - 1] for n in b]
    if k <= tree.depth:
        cur = prev + list(tree.ordering[k - 1])
    else:
        cur = list(rho.names)
    s_cur = von_neumann_entropy(partial_trace(post, cur))
    s_prev = von_neumann_entropy(partial_trace(post, prev)) if prev else 0.0
    return s_cur - s_prev


# ---------------------------------------------------------------------------
# unconditioned local products


@dataclass(frozen=True)
class ProductMeasurement:
    """One basis per block of a full partition, applied without conditioning."""

    bases: tuple

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        seen = set()
        for b in self.bases:
            for n in b.target:
                if n in seen:
                    raise ValueError(f"subsystem {n!r} measured twice")
                seen.add(n)


def product_from_params(blocks, dims, params):
    """Assemble a ProductMeasurement from a flat parameter vector."""
    params = np.asarray(params, dtype=float)
    bases = []
    at = 0
    for block, bd in zip(blocks, dims):
        per = n_basis_params(int(np.prod(bd)))
        bases.append(ProjectiveBasis(tuple(block), tuple(bd), tuple(params[at : at + per])))
        at += per
    if at != params.size:
        raise ValueError("parameter vector length does not match the blocks")
    return ProductMeasurement(tuple(bases))


def apply_product(rho, m):
    """Full local dephasing channel: every subsystem must be covered."""
    covered = [n for b in m.bases for n in b.target]
    if sorted(covered) != sorted(rho.names):
        raise ValueError("product measurement must cover every subsystem exactly once")
    mat = rho.data
    for b in m.bases:
        mat = _pinch(mat, embedded_projectors(rho, b))
    return DensityMatrix(rho.labels, mat)
