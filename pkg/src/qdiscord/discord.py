"""Bipartite, ordered-multipartite, and global discord on labeled states.

Every measure first traces the state down to the partition's subsystems,
then minimizes its defining entropy gap over measurement parameters. The
ordered measure follows the partition's block order, measuring all blocks
but the last through an outcome-conditioned tree; the global measure
dephases every block at once. Negative optimizer outcomes inside a small
window below zero are clamped to zero and flagged; anything lower raises,
since these quantities are nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import measure as ms
from .optimizer import OptimizerConfig, OptResult, minimize
from .partition import Partition
from .qstate import partial_trace, permute_subsystems, relative_entropy, tensor

EIG_FLOOR = 1e-14


class ConsistencyError(Exception):
    """An internal nonnegativity or cross-check failed beyond tolerance."""


class MeasureKind(str, Enum):
    QD = "qd"
    MQD = "mqd"
    GQD = "gqd"


@dataclass(frozen=True)
class DiscordResult:
    kind: MeasureKind
    partition: Partition
    measured: tuple  # measured block name-tuples, in measurement order
    value: float
    clamped: bool
    opt: OptResult

    @property
    def ordering_note(self):
        steps = ["".join(b) for b in self.measured]
        return " -> ".join(steps) if steps else "(none)"


# ---------------------------------------------------------------------------
# raw linear-algebra helpers (hot path, plain ndarrays)


def _entropy(mat):
    w = np.linalg.eigvalsh(mat)
    w = w[w > EIG_FLOOR]
    return float(-(w * np.log2(w)).sum()) if w.size else 0.0


def _ptrace(mat, dims, keep):
    n = len(dims)
    if len(keep) == n:
        return mat
    t = mat.reshape(dims + dims)
    for ax in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def _entropy_of(eigs):
    w = eigs[eigs > EIG_FLOOR]
    return float(-(w * np.log2(w)).sum()) if w.size else 0.0


# ---------------------------------------------------------------------------
# structural seeding: bases suggested by the state itself


def _weight_schemes(dr):
    base = np.arange(dr, dtype=float)
    return [np.ones(dr), 1.0 + base / max(dr, 1), (1.0 + base) ** 2]


def _conditional_block_operator(mat, dims, positions, weights):
    """sum_c w_c <c|rho|c> on the block, c running over the complement."""
    n = len(dims)
    rest = [i for i in range(n) if i not in positions]
    order = list(positions) + rest
    t = mat.reshape(dims + dims).transpose(order + [n + i for i in order])
    db = int(np.prod([dims[i] for i in positions]))
    dr = int(np.prod([dims[i] for i in rest])) if rest else 1
    arr = t.reshape(db, dr, db, dr)
    return np.einsum("irjr,r->ij", arr, weights)


def _block_seed(mat, dims, positions, scheme_index):
    db = int(np.prod([dims[i] for i in positions]))
    dr = int(np.prod([d for i, d in enumerate(dims) if i not in positions])) if len(positions) < len(dims) else 1
    w = _weight_schemes(dr)[scheme_index]
    m = _conditional_block_operator(mat, dims, positions, w)
    _, v = np.linalg.eigh(m)
    return ms.params_from_unitary(v), v


# ---------------------------------------------------------------------------
# objectives


PRUNE_WEIGHT = 1e-12  # branches lighter than this contribute nothing


class _TreeObjective:
    """Entropy-gap objective for an ordered measurement over blocks.

    blocks: name-tuples in measurement order; the last block is unmeasured.
    The parameter layout matches TreeLayout over blocks[:-1]. Branches are
    tracked as unnormalized conditional states on the not-yet-measured
    subsystems; because branches are orthogonal on the measured blocks,
    each entropy term is the spectrum of those conditionals against the
    branch weights, which matches the post-state entropy difference exactly
    while keeping every matrix small.
    """

    def __init__(self, rho, blocks):
        self.rho = rho
        self.blocks = tuple(tuple(b) for b in blocks)
        names = rho.names
        dims = rho.dims
        block_dims = [tuple(dims[names.index(n)] for n in b) for b in self.blocks]
        self.layout = ms.TreeLayout(self.blocks[:-1], tuple(block_dims[:-1]))
        n = len(self.blocks)

        # per-round geometry on the shrinking conditional states
        self.rounds = []
        rest_names = list(names)
        rest_dims = list(dims)
        for t in range(n - 1):
            pos = tuple(rest_names.index(x) for x in self.blocks[t])
            other = [i for i in range(len(rest_names)) if i not in pos]
            d_blk = int(np.prod([rest_dims[i] for i in pos]))
            d_rest = int(np.prod([rest_dims[i] for i in other])) if other else 1
            axes = list(pos) + other
            shift = len(rest_names)
            transpose = axes + [shift + i for i in axes]
            next_names = [rest_names[i] for i in other]
            next_dims = tuple(rest_dims[i] for i in other)
            keep_next = tuple(sorted(next_names.index(x) for x in self.blocks[t + 1]))
            per = ms.n_basis_params(d_blk)
            self.rounds.append(
                dict(
                    shape=tuple(rest_dims) + tuple(rest_dims),
                    transpose=tuple(transpose),
                    d_blk=d_blk,
                    d_rest=d_rest,
                    next_dims=next_dims,
                    keep_next=keep_next,
                    per=per,
                    rest_dims=tuple(rest_dims),
                    pos=pos,
                )
            )
            rest_names, rest_dims = next_names, list(next_dims)
        # parameter offsets per depth follow the layout's node counts
        self.offsets = []
        at = 0
        for t in range(n - 1):
            self.offsets.append(at)
            at += self.layout.n_nodes(t) * self.rounds[t]["per"]
        first = tuple(sorted(names.index(x) for x in self.blocks[0]))
        self.const = -(_entropy(rho.data) - _entropy(_ptrace(rho.data, dims, first)))

    @property
    def dim_params(self):
        return self.layout.params_size()

    def _project(self, mat, r, u):
        """Unnormalized conditionals <u_j| mat |u_j>, stacked over outcomes j."""
        db, dr = r["d_blk"], r["d_rest"]
        arr = mat.reshape(r["shape"]).transpose(r["transpose"])
        arr = np.ascontiguousarray(arr).reshape(db, dr, db, dr)
        m1 = (u.conj().T @ arr.reshape(db, -1)).reshape(db, dr, db, dr)
        m2 = m1.transpose(0, 1, 3, 2) @ u  # (j, b, d, k) = sum_c m1[j,b,c,d] u[c,k]
        j = np.arange(db)
        return m2[j, :, :, j]

    def __call__(self, params):
        params = np.asarray(params, dtype=float)
        branches = {0: self.rho.data}
        total = self.const
        for t, r in enumerate(self.rounds):
            per, base = r["per"], self.offsets[t]
            new = {}
            conds_all = []
            for prefix, mat in branches.items():
                sl = params[base + prefix * per : base + (prefix + 1) * per]
                u = ms.unitary_from_params(r["d_blk"], sl)
                conds = self._project(mat, r, u)
                for j in range(r["d_blk"]):
                    w = float(conds[j].trace().real)
                    if w >= PRUNE_WEIGHT:
                        conds_all.append(conds[j])
                        new[prefix * r["d_blk"] + j] = conds[j]
            stack = np.stack(conds_all)
            weights = np.trace(stack, axis1=1, axis2=2).real
            nd = r["next_dims"]
            sub = stack.reshape((len(conds_all),) + nd + nd)
            for ax in sorted(set(range(len(nd))) - set(r["keep_next"]), reverse=True):
                sub = np.trace(sub, axis1=1 + ax, axis2=1 + ax + (sub.ndim - 1) // 2)
            dk = int(np.prod([nd[i] for i in r["keep_next"]]))
            eigs = np.linalg.eigvalsh(sub.reshape(len(conds_all), dk, dk))
            total += _entropy_of(eigs.ravel()) - _entropy_of(weights)
            branches = new
        return total

    def seeds(self):
        """Parameter vectors built from conditional eigenbases of the state."""
        out = []
        for scheme in range(3):
            vec = np.zeros(self.dim_params)
            branches = {0: self.rho.data}
            for t, r in enumerate(self.rounds):
                per, base = r["per"], self.offsets[t]
                new = {}
                for prefix, mat in branches.items():
                    p, u = _block_seed(mat, r["rest_dims"], r["pos"], scheme)
                    vec[base + prefix * per : base + (prefix + 1) * per] = p
                    conds = self._project(mat, r, u)
                    for j in range(r["d_blk"]):
                        if float(conds[j].trace().real) >= PRUNE_WEIGHT:
                            new[prefix * r["d_blk"] + j] = conds[j]
                branches = new
            out.append(vec)
        return out


class _ProductObjective:
    """Mutual-information loss under an unconditioned product measurement."""

    def __init__(self, rho, blocks):
        self.rho = rho
        self.blocks = tuple(tuple(b) for b in blocks)
        self.dims = rho.dims
        names = rho.names
        self.positions = [tuple(names.index(n) for n in b) for b in self.blocks]
        self.block_dims = [tuple(self.dims[p] for p in pos) for pos in self.positions]
        self.i_pre = self._mutual_information(rho.data)

    def _mutual_information(self, mat):
        total = -_entropy(mat)
        for pos in self.positions:
            total += _entropy(_ptrace(mat, self.dims, sorted(pos)))
        return total

    @property
    def dim_params(self):
        return sum(ms.n_basis_params(int(np.prod(bd))) for bd in self.block_dims)

    def channel(self, params):
        params = np.asarray(params, dtype=float)
        mat = self.rho.data
        at = 0
        for pos, bd in zip(self.positions, self.block_dims):
            d = int(np.prod(bd))
            per = ms.n_basis_params(d)
            u = ms.unitary_from_params(d, params[at : at + per])
            at += per
            mat = ms.pinch_with_unitary(mat, self.dims, pos, u)
        return mat

    def __call__(self, params):
        return self.i_pre - self._mutual_information(self.channel(params))

    def seeds(self):
        out = []
        for scheme in range(3):
            vec = []
            for pos in self.positions:
                p, _ = _block_seed(self.rho.data, self.dims, pos, scheme)
                vec.extend(p)
            out.append(np.array(vec))
        # polish the most promising candidates; keep the raw ones as backups
        ranked = sorted(out, key=self)
        return [self.refine(v) for v in ranked[:2]] + out

    def _offsets(self):
        offs = []
        at = 0
        for bd in self.block_dims:
            offs.append(at)
            at += ms.n_basis_params(int(np.prod(bd)))
        return offs

    def refine(self, params, sweeps=2, grid_pts=13):
        """Deterministic block-coordinate polish of a start vector.

        Each sweep re-optimizes one block's angles on a coarse grid while
        the other blocks stay pinched at their current bases; the joint
        minimizer still runs afterwards, this only improves its start.
        """
        params = np.array(params, dtype=float)
        offs = self._offsets()
        axis = np.linspace(0.0, 2.0 * np.pi, grid_pts, endpoint=False)
        for _ in range(sweeps):
            for b, (pos, bd) in enumerate(zip(self.positions, self.block_dims)):
                d = int(np.prod(bd))
                per = ms.n_basis_params(d)
                if d != 2:
                    continue  # grid polish only pays off on qubit blocks
                sigma = self.rho.data
                for b2, (pos2, bd2) in enumerate(zip(self.positions, self.block_dims)):
                    if b2 == b:
                        continue
                    d2 = int(np.prod(bd2))
                    u2 = ms.unitary_from_params(
                        d2, params[offs[b2] : offs[b2] + ms.n_basis_params(d2)]
                    )
                    sigma = ms.pinch_with_unitary(sigma, self.dims, pos2, u2)
                # entropies of the untouched marginals do not move with block b
                other_s = sum(
                    _entropy(_ptrace(sigma, self.dims, sorted(p2)))
                    for b2, p2 in enumerate(self.positions)
                    if b2 != b
                )
                best = (np.inf, None)
                for th in axis:
                    for ph in axis:
                        u = ms.unitary_from_params(2, np.array([th, ph]))
                        mat = ms.pinch_with_unitary(sigma, self.dims, pos, u)
                        s_b = _entropy(_ptrace(mat, self.dims, sorted(pos)))
                        i_post = other_s + s_b - _entropy(mat)
                        val = self.i_pre - i_post
                        if val < best[0]:
                            best = (val, (th, ph))
                params[offs[b] : offs[b] + per] = best[1]
        return params


# ---------------------------------------------------------------------------
# public measures


def _finalize(value, cfg):
    if value < -10.0 * cfg.f_tol:
        raise ConsistencyError(f"negative discord {value}: optimizer and clamp window disagree")
    if value < 0.0:
        return 0.0, True
    return float(value), False


def _as_partition(prt, rho):
    if isinstance(prt, Partition):
        return prt
    return Partition.parse(prt, rho.names)


def _block_names(prt):
    return tuple(tuple(prt.universe[i] for i in b) for b in prt.blocks)


def _names_tuple(block):
    if isinstance(block, str):
        return (block,)
    return tuple(block)


def qd_bipartite(rho, measured, unmeasured, cfg=None):
    """Original bipartite discord, measuring `measured` and keeping `unmeasured`.

    The state is first reduced to the union of the two blocks. The measured
    block may follow the unmeasured one in index order, so both orderings of
    the same pair are directly computable.
    """
    cfg = cfg or OptimizerConfig()
    measured = _names_tuple(measured)
    unmeasured = _names_tuple(unmeasured)
    if set(measured) & set(unmeasured):
        raise ValueError("measured and unmeasured blocks overlap")
    rho_r = partial_trace(rho, measured + unmeasured)
    uni = rho_r.names
    blocks = sorted(
        [tuple(uni.index(n) for n in measured), tuple(uni.index(n) for n in unmeasured)]
    )
    prt = Partition(uni, tuple(blocks))  # interleaved pairs are not representable
    obj = _TreeObjective(rho_r, (measured, unmeasured))
    opt = minimize(obj, obj.dim_params, cfg, extra_starts=obj.seeds())
    value, clamped = _finalize(opt.value, cfg)
    return DiscordResult(MeasureKind.QD, prt, (measured,), value, clamped, opt)


def mqd(rho, prt, cfg=None):
    """Ordered multipartite discord over the partition's block sequence.

    Blocks are measured in partition order through an outcome-conditioned
    tree, except the last; on two blocks this is exactly the bipartite
    measure. Other measurement orders are obtained by relabeling the state.
    """
    cfg = cfg or OptimizerConfig()
    prt = _as_partition(prt, rho)
    if prt.n_blocks() < 2:
        raise ValueError("discord needs at least two blocks")
    blocks = _block_names(prt)
    rho_r = partial_trace(rho, prt.names)
    obj = _TreeObjective(rho_r, blocks)
    opt = minimize(obj, obj.dim_params, cfg, extra_starts=obj.seeds())
    value, clamped = _finalize(opt.value, cfg)
    return DiscordResult(MeasureKind.MQD, prt, blocks[:-1], value, clamped, opt)


def gqd(rho, prt, cfg=None):
    """Global discord: mutual-information loss under the best local product."""
    cfg = cfg or OptimizerConfig()
    prt = _as_partition(prt, rho)
    if prt.n_blocks() < 2:
        raise ValueError("discord needs at least two blocks")
    blocks = _block_names(prt)
    rho_r = partial_trace(rho, prt.names)
    obj = _ProductObjective(rho_r, blocks)
    opt = minimize(obj, obj.dim_params, cfg, extra_starts=obj.seeds())
    value, clamped = _finalize(opt.value, cfg)
    return DiscordResult(MeasureKind.GQD, prt, blocks, value, clamped, opt)


def evaluate(rho, kind, prt, cfg=None):
    """Dispatch a measure by kind on the given partition."""
    kind = MeasureKind(kind)
    if kind is MeasureKind.GQD:
        return gqd(rho, prt, cfg)
    if kind is MeasureKind.MQD:
        return mqd(rho, prt, cfg)
    prt = _as_partition(prt, rho)
    if prt.n_blocks() != 2:
        raise ValueError("bipartite discord needs exactly two blocks")
    blocks = _block_names(prt)
    return qd_bipartite(rho, blocks[0], blocks[1], cfg)


def tree_from_result(rho, result):
    """Rebuild the optimal measurement tree recorded in an ordered result."""
    rho_r = partial_trace(rho, result.partition.names)
    obj = _TreeObjective(rho_r, _block_names(result.partition))
    return obj.layout.tree_from_params(result.opt.params)


def product_from_result(rho, result):
    """Rebuild the optimal product measurement recorded in a global result."""
    prt = result.partition
    rho_r = partial_trace(rho, prt.names)
    blocks = _block_names(prt)
    dims = [tuple(rho_r.dims[rho_r.names.index(n)] for n in b) for b in blocks]
    return ms.product_from_params(blocks, dims, result.opt.params)


# ---------------------------------------------------------------------------
# measurement-induced changes of conditional entropy


def d_quantity(rho, measured_prefix, next_block, tree):
    """Conditional-entropy increase of `next_block` caused by the given tree.

    Not minimized: evaluates the change at exactly the supplied measurement,
    on the state reduced to prefix + next_block. Nonnegative because local
    measurement cannot raise mutual information.
    """
    prefix = tuple(_names_tuple(b) for b in measured_prefix)
    next_block = _names_tuple(next_block)
    if tree.ordering != prefix:
        raise ValueError("tree ordering does not match the measured prefix")
    prefix_names = [n for b in prefix for n in b]
    rho_r = partial_trace(rho, prefix_names + list(next_block))
    post = ms.apply_tree(rho_r, tree, len(prefix))
    dims = rho_r.dims
    keep_prefix = sorted(rho_r.names.index(n) for n in prefix_names)
    s_post = _entropy(post.data) - _entropy(_ptrace(post.data, dims, keep_prefix))
    s_pre = _entropy(rho_r.data) - _entropy(_ptrace(rho_r.data, dims, keep_prefix))
    return s_post - s_pre


def gqd_defect(rho, prt, sub_blocks, m):
    """Drop of the product-measurement defect from the full partition to a
    sub-list of its blocks, paired with the relative-entropy form.

    Returns (defect_difference, relative_entropy_difference); the two are
    equal analytically, and the second is computed through the independent
    relative-entropy routine as a cross-check.
    """
    prt = _as_partition(prt, rho)
    blocks = _block_names(prt)
    sub = tuple(tuple(_names_tuple(b)) for b in sub_blocks)
    for b in sub:
        if b not in blocks:
            raise ValueError(f"{b} is not a block of the partition")
    rho_r = partial_trace(rho, prt.names)
    rho_post = ms.apply_product(rho_r, m)

    def info(mat_state, groups):
        total = -_entropy(mat_state.data)
        for g in groups:
            total += _entropy(partial_trace(mat_state, g).data)
        return total

    d_full = info(rho_r, blocks) - info(rho_post, blocks)
    sub_names = [n for b in sub for n in b]
    if len(sub) >= 2:
        rho_sub = partial_trace(rho_r, sub_names)
        post_sub = partial_trace(rho_post, sub_names)
        d_sub = info(rho_sub, sub) - info(post_sub, sub)
    else:
        d_sub = 0.0  # a single block has no internal mutual information
    lhs = d_full - d_sub

    others = [b for b in blocks if b not in sub]

    def relent_to_split(state):
        product = partial_trace(state, sub_names)
        for b in others:
            product = tensor(product, partial_trace(state, b))
        product = permute_subsystems(product, state.names)
        return relative_entropy(state, product)

    rhs = relent_to_split(rho_r) - relent_to_split(rho_post)
    return lhs, rhs
