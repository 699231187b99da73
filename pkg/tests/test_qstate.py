import json
import math

import numpy as np
import pytest

from qdiscord.qstate import (
    DensityMatrix,
    InvariantError,
    load_state,
    make_labels,
    make_named_state,
    mutual_information,
    partial_trace,
    permute_subsystems,
    pure_state,
    relative_entropy,
    sample_random_state,
    save_state,
    state_from_dict,
    state_to_dict,
    tensor,
    von_neumann_entropy,
)


def dm(vec):
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def ptrace_oracle(mat, dims, keep):
    """Direct index-summation partial trace, independent of the library path."""
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    out = np.zeros((dk, dk), dtype=complex)
    for i in range(mat.shape[0]):
        mi = np.unravel_index(i, dims)
        for j in range(mat.shape[1]):
            mj = np.unravel_index(j, dims)
            if all(mi[a] == mj[a] for a in drop):
                r = np.ravel_multi_index([mi[a] for a in keep], [dims[a] for a in keep])
                c = np.ravel_multi_index([mj[a] for a in keep], [dims[a] for a in keep])
                out[r, c] += mat[i, j]
    return out


class TestDensityMatrix:
    def test_valid_construction(self):
        rho = DensityMatrix(make_labels([2]), np.eye(2) / 2)
        assert rho.dims == (2,)
        assert rho.names == ("A",)

    def test_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
        with pytest.raises(InvariantError):
            DensityMatrix(make_labels([2]), m)

    def test_rejects_bad_trace(self):
        with pytest.raises(InvariantError):
            DensityMatrix(make_labels([2]), np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        m = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(InvariantError):
            DensityMatrix(make_labels([2]), m)

    def test_rejects_dim_below_two(self):
        with pytest.raises(ValueError):
            make_labels([1, 2])

    def test_immutable(self):
        rho = DensityMatrix(make_labels([2]), np.eye(2) / 2)
        with pytest.raises(ValueError):
            rho.data[0, 0] = 3.0


class TestEntropy:
    def test_pure_state_zero(self):
        rho = pure_state("0")
        assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed_one_bit(self):
        rho = DensityMatrix(make_labels([2]), np.eye(2) / 2)
        assert von_neumann_entropy(rho) == pytest.approx(1.0, abs=1e-12)

    def test_equal_mixture_of_orthogonal_pures(self):
        rho = make_named_state("paper_cx_1p11")
        assert von_neumann_entropy(rho) == pytest.approx(1.0, abs=1e-12)

    def test_range(self):
        for seed in range(20):
            rho = sample_random_state([2, 3], 4, seed)
            s = von_neumann_entropy(rho)
            assert -1e-12 <= s <= np.log2(6) + 1e-12

    def test_spectrum_clamp_window(self):
        from qdiscord.qstate import entropy_of_spectrum

        assert entropy_of_spectrum(np.array([1.0, -5e-11])) == 0.0
        assert entropy_of_spectrum(np.array([0.5, 0.5, 0.0])) == pytest.approx(1.0)
        with pytest.raises(InvariantError):
            entropy_of_spectrum(np.array([1.0, -1e-8]))


class TestPartialTrace:
    def test_product_pure(self):
        rho = pure_state("00")
        red = partial_trace(rho, "A")
        assert np.allclose(red.data, dm([1, 0]), atol=1e-12)

    def test_bell_marginal_maximally_mixed(self):
        red = partial_trace(make_named_state("bell"), "A")
        assert np.allclose(red.data, np.eye(2) / 2, atol=1e-12)

    def test_against_index_summation_oracle(self):
        rho = make_named_state("paper_cx_1p11")
        red = partial_trace(rho, ["A", "B"])
        expect = ptrace_oracle(rho.data, (2, 2, 2), (0, 1))
        assert np.abs(red.data - expect).max() < 1e-12
        # and the closed form from the state's definition
        half = 0.5 * (dm([1, 0, 0, 0]) + dm(np.kron([0, 1], [1, 1]) / np.sqrt(2)))
        assert np.abs(red.data - half).max() < 1e-12

    def test_trace_preserved(self):
        for seed in range(10):
            rho = sample_random_state([2, 2, 3], 6, seed)
            red = partial_trace(rho, ["B", "C"])
            assert abs(red.data.trace() - 1.0) < 1e-12

    def test_composition(self):
        for seed in range(10):
            rho = sample_random_state([2, 2, 2], 5, seed)
            two_step = partial_trace(partial_trace(rho, ["A", "B"]), "A")
            one_step = partial_trace(rho, "A")
            assert np.abs(two_step.data - one_step.data).max() < 1e-12

    def test_errors(self):
        rho = make_named_state("bell")
        with pytest.raises(ValueError):
            partial_trace(rho, [])
        with pytest.raises(ValueError):
            partial_trace(rho, ["Z"])


class TestTensor:
    def test_product_of_kets(self):
        out = tensor(pure_state("0", names=["A"]), pure_state("1", names=["B"]))
        assert np.allclose(out.data, dm([0, 1, 0, 0]), atol=1e-12)

    def test_maximally_mixed(self):
        half = DensityMatrix(make_labels([2], ["A"]), np.eye(2) / 2)
        other = DensityMatrix(make_labels([2], ["B"]), np.eye(2) / 2)
        assert np.allclose(tensor(half, other).data, np.eye(4) / 4, atol=1e-12)

    def test_entropy_additivity(self):
        bell = make_named_state("bell")
        half = DensityMatrix(make_labels([2], ["C"]), np.eye(2) / 2)
        out = tensor(bell, half)
        assert out.dim == 8
        assert von_neumann_entropy(out) == pytest.approx(1.0, abs=1e-9)
        for seed in range(10):
            a = sample_random_state([2, 2], 3, seed)
            b_raw = sample_random_state([2], 2, seed + 50)
            b = DensityMatrix(make_labels([2], ["C"]), b_raw.data)
            s = von_neumann_entropy(tensor(a, b))
            assert s == pytest.approx(
                von_neumann_entropy(a) + von_neumann_entropy(b), abs=1e-9
            )

    def test_label_collision(self):
        with pytest.raises(ValueError):
            tensor(make_named_state("bell"), make_named_state("bell"))


class TestRelativeEntropy:
    def test_self_is_zero(self):
        rho = sample_random_state([2, 2], 4, 3)
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-9)

    def test_pure_vs_maximally_mixed(self):
        rho = pure_state("0")
        sigma = DensityMatrix(make_labels([2]), np.eye(2) / 2)
        assert relative_entropy(rho, sigma) == pytest.approx(1.0, abs=1e-12)

    def test_support_violation_is_infinite(self):
        rho = pure_state("0")
        sigma = pure_state("1")
        assert relative_entropy(rho, sigma) == math.inf

    def test_bell_vs_product_of_marginals(self):
        bell = make_named_state("bell")
        prod = tensor(
            DensityMatrix(make_labels([2], ["A"]), partial_trace(bell, "A").data),
            DensityMatrix(make_labels([2], ["B"]), partial_trace(bell, "B").data),
        )
        assert relative_entropy(bell, prod) == pytest.approx(2.0, abs=1e-9)

    def test_matches_mutual_information(self):
        for seed in range(15):
            rho = sample_random_state([2, 2], 4, seed)
            prod = tensor(
                DensityMatrix(make_labels([2], ["X"]), partial_trace(rho, "A").data),
                DensityMatrix(make_labels([2], ["Y"]), partial_trace(rho, "B").data),
            )
            prod = DensityMatrix(rho.labels, prod.data)
            assert relative_entropy(rho, prod) == pytest.approx(
                mutual_information(rho, [["A"], ["B"]]), abs=1e-9
            )


class TestMutualInformation:
    def test_product_state_zero(self):
        rho = make_named_state("product_random", [3, 1])
        assert mutual_information(rho, [["A"], ["B"], ["C"]]) == pytest.approx(0.0, abs=1e-9)

    def test_bell_two_bits(self):
        assert mutual_information(make_named_state("bell"), [["A"], ["B"]]) == pytest.approx(
            2.0, abs=1e-12
        )

    def test_three_party_value_from_eigen_oracle(self):
        rho = make_named_state("paper_cx_1p11")

        def s_of(mat):
            w = np.linalg.eigvalsh(mat)
            w = w[w > 1e-14]
            return float(-(w * np.log2(w)).sum())

        expect = (
            s_of(ptrace_oracle(rho.data, (2, 2, 2), (0,)))
            + s_of(ptrace_oracle(rho.data, (2, 2, 2), (1,)))
            + s_of(ptrace_oracle(rho.data, (2, 2, 2), (2,)))
            - s_of(rho.data)
        )
        got = mutual_information(rho, [["A"], ["B"], ["C"]])
        assert got == pytest.approx(expect, abs=1e-9)
        assert got == pytest.approx(1.600876, abs=1e-5)

    def test_nonnegative(self):
        for seed in range(10):
            rho = sample_random_state([2, 2, 2], 8, seed)
            assert mutual_information(rho, [["A"], ["B"], ["C"]]) > -1e-9

    def test_incomplete_partition_rejected(self):
        with pytest.raises(ValueError):
            mutual_information(make_named_state("bell"), [["A"]])


class TestNamedStates:
    def test_bell_is_pure(self):
        assert von_neumann_entropy(make_named_state("bell")) == pytest.approx(0.0, abs=1e-12)

    def test_counterexample_states_match_kets(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        k000 = np.kron(np.kron([1, 0], [1, 0]), [1, 0])
        k1p1 = np.kron(np.kron([0, 1], plus), [0, 1])
        expect = 0.5 * (dm(k000) + dm(k1p1))
        assert np.abs(make_named_state("paper_cx_1p11").data - expect).max() < 1e-12
        kp11 = np.kron(np.kron(plus, [0, 1]), [0, 1])
        expect2 = 0.5 * (dm(k000) + dm(kp11))
        assert np.abs(make_named_state("paper_cx_p11").data - expect2).max() < 1e-12

    def test_counterexample_rank_two(self):
        rho = make_named_state("paper_cx_1p11")
        assert von_neumann_entropy(rho) == pytest.approx(1.0, abs=1e-12)

    def test_ghz_marginals_maximally_mixed(self):
        ghz = make_named_state("ghz", [3])
        for name in "ABC":
            assert np.allclose(partial_trace(ghz, name).data, np.eye(2) / 2, atol=1e-12)

    def test_w_state(self):
        w = make_named_state("w", [3])
        assert von_neumann_entropy(w) == pytest.approx(0.0, abs=1e-12)

    def test_classical_random_is_diagonal(self):
        rho = make_named_state("classical_random", [3, 7])
        off = rho.data - np.diag(np.diag(rho.data))
        assert np.abs(off).max() < 1e-15

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            make_named_state("nope")


class TestRandomStates:
    def test_rank_one_is_pure(self):
        rho = sample_random_state([2, 2], 1, 11)
        assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-9)

    def test_deterministic_per_seed(self):
        a = sample_random_state([2, 2, 2], 4, 5)
        b = sample_random_state([2, 2, 2], 4, 5)
        assert np.array_equal(a.data, b.data)

    def test_full_rank_is_mixed(self):
        rho = sample_random_state([2, 2], 4, 0)
        assert von_neumann_entropy(rho) > 0.0

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            sample_random_state([2, 2], 0, 0)
        with pytest.raises(ValueError):
            sample_random_state([2, 2], 5, 0)


class TestPermute:
    def test_roundtrip(self):
        rho = sample_random_state([2, 2, 2], 8, 2)
        out = permute_subsystems(permute_subsystems(rho, ["C", "A", "B"]), ["A", "B", "C"])
        assert np.abs(out.data - rho.data).max() < 1e-12

    def test_marginals_follow(self):
        rho = sample_random_state([2, 2, 2], 8, 3)
        out = permute_subsystems(rho, ["B", "C", "A"])
        assert np.abs(
            partial_trace(out, "B").data - partial_trace(rho, "B").data
        ).max() < 1e-12


class TestStateFile:
    def test_roundtrip_exact(self, tmp_path):
        rho = sample_random_state([2, 2, 2], 5, 17)
        path = tmp_path / "state.json"
        save_state(rho, path)
        back = load_state(path)
        assert back.names == rho.names
        assert np.abs(back.data - rho.data).max() < 1e-12

    def test_versioned(self, tmp_path):
        doc = state_to_dict(make_named_state("bell"))
        assert doc["version"] == 1
        doc["version"] = 99
        with pytest.raises(ValueError):
            state_from_dict(doc)

    def test_plain_text_json(self, tmp_path):
        path = tmp_path / "state.json"
        save_state(make_named_state("bell"), path)
        doc = json.loads(path.read_text())
        assert doc["format"] == "qdiscord-state"
        assert len(doc["matrix"]) == 4
        assert len(doc["matrix"][0][0]) == 2  # re, im pair
