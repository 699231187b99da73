"""Dense multipartite density matrices with entropic primitives.

States live on a labeled tensor product of finite-dimensional subsystems.
All entropies are in bits (log base 2). Matrices are validated once at
construction (Hermitian, unit trace, positive semidefinite up to tolerance)
and treated as immutable afterwards, so every operation here is a pure
function that is safe to call from concurrent workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_EIG = 1e-10

STATE_FORMAT = "qdiscord-state"
STATE_VERSION = 1

NAMED_STATES = (
    "ghz",
    "w",
    "bell",
    "paper_cx_1p11",
    "paper_cx_p11",
    "classical_random",
    "product_random",
)


class InvariantError(Exception):
    """A density-matrix invariant (Hermiticity, trace, positivity) failed."""


@dataclass(frozen=True)
class SubsystemLabel:
    """One tensor factor: a short name, its position, and local dimension."""

    name: str
    index: int
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"subsystem {self.name!r}: dim must be >= 2, got {self.dim}")


def make_labels(dims, names=None):
    """Build a label tuple for the given local dimensions.

    Names default to 'A', 'B', 'C', ... in order.
    """
    if names is None:
        if len(dims) > 26:
            raise ValueError("default names support at most 26 subsystems")
        names = [chr(ord("A") + i) for i in range(len(dims))]
    if len(names) != len(dims):
        raise ValueError("names and dims must have equal length")
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate subsystem names in {names}")
    return tuple(SubsystemLabel(n, i, int(d)) for i, (n, d) in enumerate(zip(names, dims)))


class DensityMatrix:
    """A labeled density operator on the tensor product of its subsystems.

    Parameters
    ----------
    labels : sequence of SubsystemLabel
        Ordered subsystems; indices must be 0..n-1 in order.
    data : array_like
        Complex square matrix of side prod(dims).
    """

    __slots__ = ("labels", "data")

    def __init__(self, labels, data):
        labels = tuple(labels)
        if not labels:
            raise ValueError("need at least one subsystem")
        if [l.index for l in labels] != list(range(len(labels))):
            raise ValueError("label indices must be contiguous from 0 in order")
        if len({l.name for l in labels}) != len(labels):
            raise ValueError("duplicate subsystem names")
        data = np.asarray(data, dtype=complex)
        d = int(np.prod([l.dim for l in labels]))
        if data.shape != (d, d):
            raise ValueError(f"matrix shape {data.shape} does not match total dimension {d}")
        if np.abs(data - data.conj().T).max() > TOL_HERM:
            raise InvariantError("matrix is not Hermitian within tolerance")
        tr = data.trace()
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvariantError(f"trace is {tr}, expected 1")
        w = np.linalg.eigvalsh(data)
        if w.min() < -TOL_EIG:
            raise InvariantError(f"negative eigenvalue {w.min()}")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def dims(self):
        return tuple(l.dim for l in self.labels)

    @property
    def names(self):
        return tuple(l.name for l in self.labels)

    @property
    def dim(self):
        return self.data.shape[0]

    def label(self, name):
        for l in self.labels:
            if l.name == name:
                return l
        raise ValueError(f"unknown subsystem {name!r}")

    def as_tensor(self):
        """The matrix reshaped to 2n axes: row indices first, then columns."""
        return self.data.reshape(self.dims + self.dims)

    def __repr__(self):
        return f"DensityMatrix({'|'.join(self.names)}, dims={self.dims})"


def _names_of(labels_or_names):
    out = []
    for x in labels_or_names:
        out.append(x.name if isinstance(x, SubsystemLabel) else str(x))
    return out


def entropy_of_spectrum(w):
    """Shannon entropy in bits of a spectrum, with 0 log 0 = 0.

    Eigenvalues in [-TOL_EIG, 0) are clamped to zero; anything more negative
    is an invariant violation.
    """
    w = np.asarray(w, dtype=float)
    if w.min() < -TOL_EIG:
        raise InvariantError(f"negative eigenvalue {w.min()} beyond tolerance")
    w = w[w > 0.0]
    if w.size == 0:
        return 0.0
    return float(-(w * np.log2(w)).sum())


def von_neumann_entropy(rho):
    """S(rho) = -Tr rho log2 rho, in bits."""
    return entropy_of_spectrum(np.linalg.eigvalsh(rho.data))


def partial_trace(rho, keep):
    """Reduce `rho` to the subsystems in `keep`, preserving label order.

    `keep` may contain SubsystemLabel objects or names; it must be a
    nonempty subset of rho's subsystems.
    """
    keep_names = _names_of(keep)
    if not keep_names:
        raise ValueError("keep must be nonempty")
    names = rho.names
    for n in keep_names:
        if n not in names:
            raise ValueError(f"unknown subsystem {n!r}")
    keep_idx = sorted(names.index(n) for n in set(keep_names))
    if len(keep_idx) == len(names):
        return rho
    n = len(names)
    t = rho.as_tensor()
    # trace out axes from the back so earlier axis numbers stay valid
    for ax in sorted(set(range(n)) - set(keep_idx), reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    new_labels = make_labels(
        [rho.labels[i].dim for i in keep_idx],
        [rho.labels[i].name for i in keep_idx],
    )
    d = int(np.prod([l.dim for l in new_labels]))
    return DensityMatrix(new_labels, t.reshape(d, d))


def tensor(rho1, rho2):
    """Kronecker product with concatenated labels. Names must be disjoint."""
    clash = set(rho1.names) & set(rho2.names)
    if clash:
        raise ValueError(f"label collision: {sorted(clash)}")
    labels = make_labels(rho1.dims + rho2.dims, rho1.names + rho2.names)
    return DensityMatrix(labels, np.kron(rho1.data, rho2.data))


def permute_subsystems(rho, order):
    """Reorder subsystems; `order` lists the current names in their new order.

    The returned state carries the same names, re-indexed, so that the k-th
    subsystem of the result is the one called order[k].
    """
    order = _names_of(order)
    if sorted(order) != sorted(rho.names):
        raise ValueError("order must be a permutation of the subsystem names")
    perm = [rho.names.index(n) for n in order]
    n = len(perm)
    t = rho.as_tensor().transpose(perm + [p + n for p in perm])
    labels = make_labels([rho.dims[p] for p in perm], order)
    d = rho.dim
    return DensityMatrix(labels, t.reshape(d, d))


def relative_entropy(rho, sigma, support_tol=1e-9):
    """S(rho || sigma) = Tr(rho log2 rho - rho log2 sigma), in bits.

    Returns math.inf when rho has weight outside the support of sigma
    (beyond `support_tol`). Both states must share labels and dimensions.
    """
    if rho.names != sigma.names or rho.dims != sigma.dims:
        raise ValueError("states must share subsystem labels and dimensions")
    ws, vs = np.linalg.eigh(sigma.data)
    # weights of rho in sigma's eigenbasis
    diag = np.einsum("ij,jk,ki->i", vs.conj().T, rho.data, vs).real
    null = ws <= TOL_EIG
    if diag[null].sum() > support_tol:
        return math.inf
    wr = np.linalg.eigvalsh(rho.data)
    tr_rho_log_rho = -entropy_of_spectrum(wr)
    tr_rho_log_sigma = float((diag[~null] * np.log2(ws[~null])).sum())
    return tr_rho_log_rho - tr_rho_log_sigma


def mutual_information(rho, blocks):
    """I(rho) = sum_k S(block_k) - S(rho) across a full partition into blocks.

    `blocks` is a sequence of label groups (names or SubsystemLabel) that
    together cover every subsystem exactly once.
    """
    seen = []
    groups = []
    for b in blocks:
        g = _names_of(b if isinstance(b, (list, tuple, set, frozenset)) else [b])
        groups.append(g)
        seen.extend(g)
    if sorted(seen) != sorted(rho.names):
        raise ValueError("blocks must partition all subsystems of rho")
    total = -von_neumann_entropy(rho)
    for g in groups:
        total += von_neumann_entropy(partial_trace(rho, g))
    return total


# ---------------------------------------------------------------------------
# constructors


def _ket(bits):
    v = np.array([1.0 + 0j])
    lut = {
        "0": np.array([1.0, 0.0], dtype=complex),
        "1": np.array([0.0, 1.0], dtype=complex),
        "+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
        "-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    }
    for b in bits:
        v = np.kron(v, lut[b])
    return v


def pure_state(kets, names=None):
    """Density matrix of an equal-weight mixture of orthonormal ket strings.

    `kets` is a string like "000" for a single pure state, or a list of
    (weight, string) pairs for a mixture. Characters: 0, 1, +, -.
    """
    if isinstance(kets, str):
        kets = [(1.0, kets)]
    n = len(kets[0][1])
    mat = np.zeros((2**n, 2**n), dtype=complex)
    for w, s in kets:
        v = _ket(s)
        mat += w * np.outer(v, v.conj())
    return DensityMatrix(make_labels([2] * n, names), mat)


def make_named_state(name, params=()):
    """Construct one of the catalogued states.

    Catalogue: ghz [n], w [n], bell, paper_cx_1p11, paper_cx_p11,
    classical_random [n, seed], product_random [n, seed]. Bracketed
    parameters are optional reals, truncated to integers.
    """
    params = list(params)

    def arg(pos, default):
        return int(params[pos]) if len(params) > pos else default

    if name == "bell":
        v = (_ket("00") + _ket("11")) / np.sqrt(2.0)
        return DensityMatrix(make_labels([2, 2]), np.outer(v, v.conj()))
    if name == "ghz":
        n = arg(0, 3)
        v = (_ket("0" * n) + _ket("1" * n)) / np.sqrt(2.0)
        return DensityMatrix(make_labels([2] * n), np.outer(v, v.conj()))
    if name == "w":
        n = arg(0, 3)
        v = np.zeros(2**n, dtype=complex)
        for i in range(n):
            v += _ket("0" * i + "1" + "0" * (n - i - 1))
        v /= np.sqrt(n)
        return DensityMatrix(make_labels([2] * n), np.outer(v, v.conj()))
    if name == "paper_cx_1p11":
        return pure_state([(0.5, "000"), (0.5, "1+1")])
    if name == "paper_cx_p11":
        return pure_state([(0.5, "000"), (0.5, "+11")])
    if name == "classical_random":
        n, seed = arg(0, 3), arg(1, 0)
        rng = np.random.default_rng(seed)
        p = rng.random(2**n)
        p /= p.sum()
        return DensityMatrix(make_labels([2] * n), np.diag(p.astype(complex)))
    if name == "product_random":
        n, seed = arg(0, 3), arg(1, 0)
        rng = np.random.default_rng(seed)
        out = None
        for i in range(n):
            g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            m = g @ g.conj().T
            m /= m.trace()
            one = DensityMatrix(make_labels([2], [chr(ord("A") + i)]), m)
            out = one if out is None else tensor(out, one)
        return out
    raise ValueError(f"unknown named state {name!r}; choose from {NAMED_STATES}")


def sample_random_state(dims, rank, seed):
    """Ginibre-ensemble mixed state of the given rank, deterministic per seed."""
    d = int(np.prod(dims))
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    m /= m.trace()
    return DensityMatrix(make_labels(dims), m)


# ---------------------------------------------------------------------------
# state files


def state_to_dict(rho):
    return {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "labels": [[l.name, l.dim] for l in rho.labels],
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rho.data],
    }


def state_from_dict(doc):
    if doc.get("format") != STATE_FORMAT:
        raise ValueError(f"not a {STATE_FORMAT} document")
    if doc.get("version") != STATE_VERSION:
        raise ValueError(f"unsupported state file version {doc.get('version')}")
    labels = make_labels([d for _, d in doc["labels"]], [n for n, _ in doc["labels"]])
    mat = np.array([[complex(re, im) for re, im in row] for row in doc["matrix"]])
    return DensityMatrix(labels, mat)


def save_state(rho, path):
    """Write a state to the versioned text format (JSON with re/im pairs)."""
    with open(path, "w") as f:
        json.dump(state_to_dict(rho), f)
        f.write("\n")


def load_state(path):
    """Load a state written by save_state; exact entrywise round trip."""
    with open(path) as f:
        return state_from_dict(json.load(f))
