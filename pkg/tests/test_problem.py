import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralqp.problem import (
    GeneratorSpec,
    ProblemFormatError,
    check_feasibility,
    emit_json,
    evaluate_objective,
    generate_random,
    parse_json,
    parse_qplib,
    validate,
)


def small_instance(**overrides):
    base = dict(
        n=2,
        Q=[[2.0, -3.0], [-3.0, 2.0]],
        q=[0.0, 0.0],
        lb=[0.0, 0.0],
        ub=[1.0, 1.0],
    )
    base.update(overrides)
    return validate(**base)


class TestValidate:
    def test_symmetrizes_with_warning(self):
        with pytest.warns(UserWarning, match="asymmetric"):
            p = validate(n=2, Q=[[1.0, 2.0], [0.0, 1.0]], q=[0, 0], lb=[0, 0], ub=[1, 1])
        assert np.allclose(p.Q, [[1.0, 1.0], [1.0, 1.0]])

    def test_tiny_asymmetry_silent(self):
        Q = np.array([[1.0, 2.0], [2.0 + 1e-14, 1.0]])
        p = validate(n=2, Q=Q, q=[0, 0], lb=[0, 0], ub=[1, 1])
        assert np.allclose(p.Q, p.Q.T)

    def test_nonfinite_bound_message_is_one_based(self):
        with pytest.raises(ProblemFormatError, match="non-finite bound at index 2"):
            validate(n=2, Q=np.eye(2), q=[0, 0], lb=[0.0, -np.inf], ub=[1.0, 1.0])

    def test_crossed_bounds_rejected(self):
        with pytest.raises(ProblemFormatError, match="l\\[1\\] >= u\\[1\\]"):
            validate(n=1, Q=[[1.0]], q=[0.0], lb=[2.0], ub=[1.0])

    def test_equal_bounds_rejected(self):
        with pytest.raises(ProblemFormatError):
            validate(n=1, Q=[[1.0]], q=[0.0], lb=[1.0], ub=[1.0])

    def test_shape_mismatch(self):
        with pytest.raises(ProblemFormatError):
            validate(n=2, Q=np.eye(3), q=[0, 0], lb=[0, 0], ub=[1, 1])
        with pytest.raises(ProblemFormatError):
            validate(n=2, Q=np.eye(2), q=[0, 0, 0], lb=[0, 0], ub=[1, 1])
        with pytest.raises(ProblemFormatError):
            validate(n=2, Q=np.eye(2), q=[0, 0], A=[[1.0]], b=[1.0], lb=[0, 0], ub=[1, 1])

    def test_integer_index_range(self):
        with pytest.raises(ProblemFormatError, match="integer index"):
            validate(n=2, Q=np.eye(2), q=[0, 0], lb=[0, 0], ub=[1, 1], integers=[2])

    def test_arrays_are_frozen(self):
        p = small_instance()
        with pytest.raises(ValueError):
            p.Q[0, 0] = 5.0


class TestObjectiveAndFeasibility:
    def test_worked_value(self):
        # x'Qx at (1,1) for Q=[[2,-3],[-3,2]]: 2 - 3 - 3 + 2 = -2
        p = small_instance()
        assert evaluate_objective(p, [1.0, 1.0]) == pytest.approx(-2.0)

    def test_symmetrization_preserves_objective(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            Qraw = rng.standard_normal((n, n))
            with pytest.warns(UserWarning):
                p = validate(n=n, Q=Qraw, q=rng.standard_normal(n),
                             lb=-np.ones(n), ub=np.ones(n))
            for _ in range(5):
                x = rng.uniform(-1, 1, n)
                raw_val = float(x @ Qraw @ x + p.q @ x)
                assert evaluate_objective(p, x) == pytest.approx(raw_val, abs=1e-10)

    def test_feasibility_report(self):
        p = validate(
            n=2, Q=np.eye(2), q=[0, 0], A=[[1.0, 1.0]], b=[1.0],
            lb=[0, 0], ub=[1, 1], integers=[0, 1],
        )
        rep = check_feasibility(p, [1.0, 0.0])
        assert rep.feasible
        assert rep.eq_residual == 0.0
        rep = check_feasibility(p, [0.6, 0.4])
        assert not rep.feasible
        assert rep.integrality_deviation == pytest.approx(0.4)
        rep = check_feasibility(p, [1.5, 0.0])
        assert rep.bound_violation == pytest.approx(0.5)
        assert rep.eq_residual == pytest.approx(0.5)
        assert not rep.feasible


class TestJson:
    def test_roundtrip_identity(self):
        p = validate(
            n=3,
            Q=[[1.0, 0.5, 0.0], [0.5, -2.0, 0.0], [0.0, 0.0, 3.0]],
            q=[1.0, 0.0, -1.0],
            A=[[1.0, 1.0, 1.0]],
            b=[2.0],
            C=[[1.0, 0.0, -1.0]],
            d=[0.5],
            lb=[0.0, 0.0, -1.0],
            ub=[1.0, 1.0, 4.0],
            integers=[0, 2],
        )
        p2 = parse_json(emit_json(p))
        assert p2.n == p.n
        for field in ("Q", "q", "A", "b", "C", "d", "lb", "ub"):
            np.testing.assert_array_equal(getattr(p2, field), getattr(p, field))
        assert p2.integers == p.integers
        # emit is deterministic
        assert emit_json(p2) == emit_json(p)

    def test_offdiagonal_entry_fills_both_positions(self):
        doc = {"n": 2, "Q": [[1, 2, 0.5]], "q": [0, 0], "l": [0, 0], "u": [1, 1]}
        p = parse_json(json.dumps(doc))
        assert p.Q[0, 1] == 0.5 and p.Q[1, 0] == 0.5
        assert evaluate_objective(p, [1.0, 1.0]) == pytest.approx(1.0)

    def test_duplicate_entry_rejected(self):
        doc = {"n": 2, "Q": [[1, 2, 0.5], [1, 2, 0.25]], "q": [0, 0], "l": [0, 0], "u": [1, 1]}
        with pytest.raises(ProblemFormatError, match="duplicate"):
            parse_json(json.dumps(doc))

    def test_lower_triangle_entry_rejected(self):
        doc = {"n": 2, "Q": [[2, 1, 0.5]], "q": [0, 0], "l": [0, 0], "u": [1, 1]}
        with pytest.raises(ProblemFormatError, match="1 <= i <= j"):
            parse_json(json.dumps(doc))

    def test_malformed_document(self):
        with pytest.raises(ProblemFormatError, match="invalid JSON"):
            parse_json("{not json")
        with pytest.raises(ProblemFormatError, match="missing required key"):
            parse_json(json.dumps({"n": 2}))
        with pytest.raises(ProblemFormatError):
            parse_json(json.dumps([1, 2]))


QPLIB_MIXED = """\
! small mixed-integer example
EX01 # problem name
QML # quadratic objective, mixed vars, linear constraints
minimize
3 # variables
2 # constraints
2 # Q0 nonzeros
1 1 4.0
2 1 1.0
0.0 default b0
1 # non-default b0 entries
3 -1.0
0.0 objective constant
3 # constraint nonzeros
1 1 1.0
1 2 1.0
2 3 1.0
1.0E+20 infinity
1.0 default cl
1 # non-default cl
2 0.0
1.0 default cu
1 # non-default cu
2 5.0
0.0 default l
0 # non-default l
1.0 default u
1 # non-default u
3 10.0
0 default variable type
1 # non-default types
1 1
"""


class TestQplib:
    def test_mixed_instance(self):
        p = parse_qplib(QPLIB_MIXED)
        assert p.n == 3
        # internal Q is half the QPLIB coefficient
        assert p.Q[0, 0] == pytest.approx(2.0)
        assert p.Q[0, 1] == pytest.approx(0.5) and p.Q[1, 0] == pytest.approx(0.5)
        np.testing.assert_allclose(p.q, [0.0, 0.0, -1.0])
        # row 1 has cl == cu == 1 -> single equality row
        assert p.m == 1
        np.testing.assert_allclose(p.A, [[1.0, 1.0, 0.0]])
        np.testing.assert_allclose(p.b, [1.0])
        # row 2 has 0 <= x3 <= 5 -> two <= rows
        assert p.p == 2
        np.testing.assert_allclose(sorted(p.d.tolist()), [0.0, 5.0])
        assert p.integers == frozenset({0})
        np.testing.assert_allclose(p.ub, [1.0, 1.0, 10.0])
        assert p.name == "EX01"

    def test_binary_box_instance(self):
        text = """\
BOXY
QBN
minimize
2
1 # Q0 nonzeros
2 1 2.0
0.0
0
0.0
1.0E+20
"""
        p = parse_qplib(text)
        assert p.n == 2 and p.is_pure_binary()
        assert p.Q[0, 1] == pytest.approx(1.0)
        assert p.m == 0 and p.p == 0

    def test_quadratic_constraints_rejected(self):
        with pytest.raises(ProblemFormatError, match="constraint class"):
            parse_qplib("X\nQCQ\nminimize\n1\n1\n")

    def test_infinite_bound_rejected(self):
        text = """\
INF1
QCN
minimize
1
1
1 1 2.0
0.0
0
0.0
1.0E+20
-1.0E+20 default l
0
1.0 default u
0
"""
        with pytest.raises(ProblemFormatError, match="infinite variable bound"):
            parse_qplib(text)

    def test_maximize_negates(self):
        text = """\
MAX1
QCN
maximize
1
1
1 1 2.0
0.0
0
0.0
1.0E+20
0.0 default l
0
1.0 default u
0
"""
        p = parse_qplib(text)
        assert p.Q[0, 0] == pytest.approx(-1.0)

    def test_constant_dropped_with_warning(self):
        text = QPLIB_MIXED.replace("0.0 objective constant", "7.5 objective constant")
        with pytest.warns(UserWarning, match="objective constant"):
            parse_qplib(text)


class TestGenerators:
    def test_cbqp_structure(self):
        p = generate_random(GeneratorSpec(family="cbqp", n=8, density=0.5, k=3, seed=1))
        assert p.is_pure_binary()
        assert p.m == 1 and p.p == 0
        np.testing.assert_array_equal(p.A, np.ones((1, 8)))
        assert p.b[0] == 3.0
        assert np.allclose(p.Q, p.Q.T)

    def test_boxqp_structure(self):
        p = generate_random(GeneratorSpec(family="boxqp", n=5, density=1.0, seed=2))
        assert not p.integers and p.m == 0 and p.p == 0
        np.testing.assert_array_equal(p.lb, np.zeros(5))
        np.testing.assert_array_equal(p.ub, np.ones(5))

    def test_eiqp_has_feasible_point(self):
        p = generate_random(GeneratorSpec(family="eiqp", n=6, density=0.5, m=2, seed=3))
        assert p.m == 2
        assert len(p.integers) == 6
        # the construction plants an integral feasible point; verify one exists
        # by re-deriving it from the same stream
        rng = np.random.default_rng(3)
        rng.uniform(-10, 10, size=6)              # diagonal draw
        iu = np.triu_indices(6, k=1)
        rng.uniform(-10, 10, size=iu[0].size)     # off-diagonal values
        rng.random(iu[0].size)                    # density mask
        rng.uniform(-10, 10, size=6)              # q
        x_star = rng.integers(0, 6, size=6).astype(float)
        assert check_feasibility(p, x_star).feasible

    def test_determinism_byte_identical(self):
        spec = GeneratorSpec(family="cbqp", n=10, density=0.25, k=4, seed=42)
        a = emit_json(generate_random(spec))
        b = emit_json(generate_random(spec))
        assert a == b

    def test_different_seeds_differ(self):
        a = generate_random(GeneratorSpec(family="boxqp", n=6, density=1.0, seed=0))
        b = generate_random(GeneratorSpec(family="boxqp", n=6, density=1.0, seed=1))
        assert not np.array_equal(a.Q, b.Q)

    def test_density_zero_is_diagonal(self):
        p = generate_random(GeneratorSpec(family="boxqp", n=6, density=0.0, seed=5))
        off = p.Q - np.diag(np.diag(p.Q))
        assert np.all(off == 0.0)

    def test_bad_specs_rejected(self):
        with pytest.raises(ProblemFormatError):
            generate_random(GeneratorSpec(family="cbqp", n=5, k=None))
        with pytest.raises(ProblemFormatError):
            generate_random(GeneratorSpec(family="cbqp", n=5, k=5))
        with pytest.raises(ProblemFormatError):
            generate_random(GeneratorSpec(family="eiqp", n=5, m=0))
        with pytest.raises(ProblemFormatError):
            generate_random(GeneratorSpec(family="nope", n=5))

    @given(seed=st.integers(0, 10_000), n=st.integers(2, 9))
    @settings(max_examples=25, deadline=None)
    def test_generator_roundtrip(self, seed, n):
        p = generate_random(GeneratorSpec(family="cbqp", n=n, density=0.5, k=1, seed=seed))
        p2 = parse_json(emit_json(p))
        np.testing.assert_array_equal(p.Q, p2.Q)
        np.testing.assert_array_equal(p.b, p2.b)
