import numpy as np
import pytest

from qdiscord.measure import (
    MeasurementTree,
    ProductMeasurement,
    ProjectiveBasis,
    apply_basis,
    apply_product,
    apply_tree,
    computational_basis,
    conditional_entropy_post,
    n_basis_params,
    params_from_unitary,
    random_basis,
    tree_layout,
    unitary_from_params,
    uniform_tree,
)
from qdiscord.qstate import (
    DensityMatrix,
    make_labels,
    make_named_state,
    mutual_information,
    partial_trace,
    pure_state,
    sample_random_state,
    tensor,
    von_neumann_entropy,
)

SX = ProjectiveBasis(("A",), (2,), (np.pi / 4, 0.0))  # the +/- basis on one qubit


def dm(vec):
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


class TestBasisParameterization:
    @pytest.mark.parametrize("dim", [2, 3, 4, 6])
    def test_projectors_resolve_identity(self, dim):
        rng = np.random.default_rng(dim)
        params = rng.uniform(0, 2 * np.pi, n_basis_params(dim))
        names = tuple("XYZW"[: 1 if dim != 6 else 2])
        dims = (dim,) if dim != 6 else (2, 3)
        basis = ProjectiveBasis(names[:len(dims)], dims, tuple(params))
        pj = basis.projectors()
        total = sum(pj)
        assert np.abs(total - np.eye(dim)).max() < 1e-10
        for i in range(dim):
            for j in range(dim):
                want = pj[i] if i == j else np.zeros((dim, dim))
                assert np.abs(pj[i] @ pj[j] - want).max() < 1e-10

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_inversion_reproduces_projectors(self, dim):
        rng = np.random.default_rng(dim + 10)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        u, _ = np.linalg.qr(g)
        u2 = unitary_from_params(dim, params_from_unitary(u))
        for j in range(dim):
            assert np.abs(dm(u[:, j]) - dm(u2[:, j])).max() < 1e-10

    def test_qubit_bloch_form(self):
        u = unitary_from_params(2, np.array([0.3, 1.1]))
        expect0 = np.array([np.cos(0.3), np.exp(-1.1j) * np.sin(0.3)])
        assert np.abs(u[:, 0] - expect0).max() < 1e-12

    def test_param_count_validation(self):
        with pytest.raises(ValueError):
            ProjectiveBasis(("A",), (2,), (0.1,))


class TestApplyBasis:
    def test_computational_fixed_point(self):
        rho = make_named_state("classical_random", [2, 3])
        out = apply_basis(rho, computational_basis(("A",), (2,)))
        assert np.abs(out.data - rho.data).max() < 1e-12

    def test_bell_dephasing(self):
        out = apply_basis(make_named_state("bell"), computational_basis(("A",), (2,)))
        expect = 0.5 * (dm([1, 0, 0, 0]) + dm([0, 0, 0, 1]))
        assert np.abs(out.data - expect).max() < 1e-12

    def test_unbiased_basis_mixes(self):
        out = apply_basis(pure_state("0"), SX)
        assert np.abs(out.data - np.eye(2) / 2).max() < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for seed in range(5):
            rho = sample_random_state([2, 2], 4, seed)
            b = random_basis(("B",), (2,), rng)
            once = apply_basis(rho, b)
            twice = apply_basis(once, b)
            assert np.abs(once.data - twice.data).max() < 1e-10

    def test_joint_block_measurement(self):
        rho = sample_random_state([2, 2, 2], 8, 1)
        rng = np.random.default_rng(0)
        b = random_basis(("A", "B"), (2, 2), rng)
        out = apply_basis(rho, b)
        assert von_neumann_entropy(out) >= von_neumann_entropy(rho) - 1e-10

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            apply_basis(make_named_state("bell"), computational_basis(("Z",), (2,)))

    def test_data_processing_mutual_information(self):
        # one-sided measurement never raises mutual information
        rng = np.random.default_rng(42)
        for seed in range(40):
            dims = [2, 2] if seed % 2 else [2, 2, 2]
            rho = sample_random_state(dims, int(np.prod(dims)), seed)
            name = rho.names[seed % len(dims)]
            b = random_basis((name,), (2,), rng)
            out = apply_basis(rho, b)
            for k in range(len(dims)):
                left = list(rho.names[: k + 1])
                right = list(rho.names[k + 1 :])
                if not right:
                    continue
                before = mutual_information(rho, [left, right])
                after = mutual_information(out, [left, right])
                assert after <= before + 1e-9


class TestMeasurementTree:
    def layout_tree(self, rho, rng):
        layout = tree_layout(rho, (("A",), ("B",)))
        params = rng.uniform(0, 2 * np.pi, layout.params_size())
        return layout.tree_from_params(params)

    def test_node_count_validation(self):
        b = computational_basis(("A",), (2,))
        with pytest.raises(ValueError):
            MeasurementTree((("A",), ("B",)), ((b,),))
        with pytest.raises(ValueError):
            MeasurementTree((("A",),), ((b, b),))

    def test_depth_zero_is_identity(self):
        rho = make_named_state("ghz", [3])
        tree = uniform_tree(rho, (("A",), ("B",)), computational_basis)
        out = apply_tree(rho, tree, 0)
        assert np.abs(out.data - rho.data).max() < 1e-15

    def test_depth_one_equals_apply_basis(self):
        rho = sample_random_state([2, 2, 2], 8, 3)
        rng = np.random.default_rng(1)
        tree = self.layout_tree(rho, rng)
        out = apply_tree(rho, tree, 1)
        ref = apply_basis(rho, tree.nodes[0][0])
        assert np.abs(out.data - ref.data).max() < 1e-12

    def test_plus_zero_product_oracle(self):
        # |+><+| x |0><0| measured in the computational tree: first factor mixes
        plus = pure_state("+", names=["A"])
        zero = pure_state("0", names=["B"])
        rho = tensor(plus, zero)
        tree = uniform_tree(rho, (("A",),), computational_basis)
        out = apply_tree(rho, tree, 1)
        expect = np.kron(np.eye(2) / 2, dm([1, 0]))
        assert np.abs(out.data - expect).max() < 1e-12

    def test_uniform_tree_equals_sequential_bases(self):
        rho = sample_random_state([2, 2, 2], 8, 9)
        rng = np.random.default_rng(2)
        ba = random_basis(("A",), (2,), rng)
        bb = random_basis(("B",), (2,), rng)
        tree = MeasurementTree((("A",), ("B",)), ((ba,), (bb, bb)))
        out = apply_tree(rho, tree, 2)
        ref = apply_basis(apply_basis(rho, ba), bb)
        assert np.abs(out.data - ref.data).max() < 1e-10

    def test_tree_params_roundtrip(self):
        rho = sample_random_state([2, 2, 2], 8, 4)
        layout = tree_layout(rho, (("A",), ("B",)))
        rng = np.random.default_rng(3)
        params = rng.uniform(0, 2 * np.pi, layout.params_size())
        tree = layout.tree_from_params(params)
        assert np.abs(layout.params_from_tree(tree) - params).max() < 1e-15

    def test_depth_out_of_range(self):
        rho = make_named_state("ghz", [3])
        tree = uniform_tree(rho, (("A",),), computational_basis)
        with pytest.raises(ValueError):
            apply_tree(rho, tree, 2)


class TestConditionalEntropy:
    def test_product_state_gives_marginal_entropy(self):
        a = sample_random_state([2], 2, 0)
        b_raw = sample_random_state([2], 2, 1)
        b = DensityMatrix(make_labels([2], ["B"]), b_raw.data)
        rho = tensor(a, b)
        rng = np.random.default_rng(4)
        tree = MeasurementTree((("A",),), ((random_basis(("A",), (2,), rng),),))
        got = conditional_entropy_post(rho, tree, 2)
        assert got == pytest.approx(von_neumann_entropy(b), abs=1e-10)

    def test_bell_z_basis_zero(self):
        rho = make_named_state("bell")
        tree = uniform_tree(rho, (("A",),), computational_basis)
        assert conditional_entropy_post(rho, tree, 2) == pytest.approx(0.0, abs=1e-10)

    def test_k_one_is_first_block_entropy(self):
        rho = sample_random_state([2, 2], 4, 7)
        tree = uniform_tree(rho, (("A",),), computational_basis)
        got = conditional_entropy_post(rho, tree, 1)
        assert got == pytest.approx(von_neumann_entropy(partial_trace(rho, "A")), abs=1e-10)

    def test_classical_quantum_ensemble_oracle(self):
        # sum_k p_k S(rho_k^B) for a state classical on A, measured in its basis
        rng = np.random.default_rng(8)
        p = rng.random(2)
        p /= p.sum()
        parts = [sample_random_state([2], 2, s).data for s in (20, 21)]
        mat = sum(p[k] * np.kron(dm(np.eye(2)[k]), parts[k]) for k in range(2))
        rho = DensityMatrix(make_labels([2, 2]), mat)
        tree = uniform_tree(rho, (("A",),), computational_basis)
        got = conditional_entropy_post(rho, tree, 2)

        def s_of(m):
            w = np.linalg.eigvalsh(m)
            w = w[w > 1e-14]
            return float(-(w * np.log2(w)).sum())

        expect = sum(p[k] * s_of(parts[k]) for k in range(2))
        assert got == pytest.approx(expect, abs=1e-10)

    def test_index_out_of_range(self):
        rho = make_named_state("bell")
        tree = uniform_tree(rho, (("A",),), computational_basis)
        with pytest.raises(ValueError):
            conditional_entropy_post(rho, tree, 3)


class TestProductMeasurement:
    def rng_product(self, rho, rng):
        bases = tuple(random_basis((n,), (2,), rng) for n in rho.names)
        return ProductMeasurement(bases)

    def test_classical_state_unchanged(self):
        rho = make_named_state("classical_random", [3, 5])
        m = ProductMeasurement(tuple(computational_basis((n,), (2,)) for n in "ABC"))
        out = apply_product(rho, m)
        assert np.abs(out.data - rho.data).max() < 1e-12

    def test_ghz_dephasing(self):
        rho = make_named_state("ghz", [3])
        m = ProductMeasurement(tuple(computational_basis((n,), (2,)) for n in "ABC"))
        out = apply_product(rho, m)
        expect = 0.5 * (dm(np.eye(8)[0]) + dm(np.eye(8)[7]))
        assert np.abs(out.data - expect).max() < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        rho = sample_random_state([2, 2, 2], 8, 5)
        m = self.rng_product(rho, rng)
        once = apply_product(rho, m)
        twice = apply_product(once, m)
        assert np.abs(once.data - twice.data).max() < 1e-10

    def test_marginal_consistency(self):
        # measuring everything then reducing equals measuring the kept block alone
        rng = np.random.default_rng(12)
        rho = sample_random_state([2, 2, 2], 8, 6)
        m = self.rng_product(rho, rng)
        out = apply_product(rho, m)
        for k, name in enumerate(rho.names):
            lhs = partial_trace(out, name)
            single = apply_basis(rho, m.bases[k])
            rhs = partial_trace(single, name)
            assert np.abs(lhs.data - rhs.data).max() < 1e-12

    def test_coverage_required(self):
        rho = make_named_state("ghz", [3])
        m = ProductMeasurement((computational_basis(("A",), (2,)),))
        with pytest.raises(ValueError):
            apply_product(rho, m)

    def test_blocks_disjoint(self):
        with pytest.raises(ValueError):
            ProductMeasurement(
                (computational_basis(("A",), (2,)), computational_basis(("A",), (2,)))
            )
