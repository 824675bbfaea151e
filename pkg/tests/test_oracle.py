import numpy as np
import pytest

from zosaddle.oracle import (
    EvaluationError,
    LinearNetSpec,
    ModRosenbrockParams,
    MullerBrownParams,
    Objective,
    construct_net_saddle,
    count_negative,
    find_muller_brown_saddle,
    index_sets,
    make_benchmark,
    make_implicit_2d,
    make_linear_net,
    make_mod_rosenbrock,
    make_muller_brown,
    make_quadratic,
    make_sum_of_sines,
    smoothed_sines_gradient,
)


def central_gradient(obj, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    E = np.eye(x.size) * h
    return (obj.eval(x + E) - obj.eval(x - E)) / (2 * h)


# -- Objective ---------------------------------------------------------------


def test_eval_count_per_point():
    obj = make_quadratic(np.diag([1.0, -1.0]))
    obj.eval([1.0, 1.0])
    assert obj.eval_count == 1
    obj.eval(np.zeros((3, 5, 2)))
    assert obj.eval_count == 16
    obj.reset_count()
    assert obj.eval_count == 0


def test_eval_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        make_quadratic(np.eye(2)).eval(np.zeros(3))


def test_non_finite_value_raises():
    obj = Objective(1, lambda x: np.log(x[..., 0]))
    with pytest.raises(EvaluationError):
        obj.eval([-1.0])


# -- quadratic ---------------------------------------------------------------


def test_quadratic_examples():
    assert make_quadratic(np.diag([1.0, -1.0])).eval([1.0, 1.0]) == 0.0
    assert make_quadratic(np.diag([2.0, -2.0])).eval([1.0, 0.0]) == 1.0
    obj = make_quadratic(np.diag([-2.0, 1.0, 3.0]))
    np.testing.assert_array_equal(obj.gradient(np.zeros(3)), np.zeros(3))
    np.testing.assert_array_equal(obj.saddle, np.zeros(3))


def test_quadratic_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        make_quadratic([[1.0, 2.0], [0.0, 1.0]])


def test_quadratic_saddle_only_when_indefinite():
    assert make_quadratic(np.eye(2)).saddle is None
    assert make_quadratic(np.diag([1.0, 0.0, -1.0])).saddle is None


# -- finite-difference agreement ----------------------------------------------


@pytest.mark.parametrize(
    "obj",
    [
        make_sum_of_sines(4),
        make_muller_brown(),
        make_mod_rosenbrock(5, [-50.0, 1.0, 2.0, 1.0, -3.0]),
        make_linear_net(LinearNetSpec.random(depth=3, d_x=3, d_y=2, width=3, n_samples=7, seed=3)),
    ],
    ids=lambda o: o.name,
)
def test_analytic_gradient_matches_central_differences(obj):
    rng = np.random.default_rng(1)
    for _ in range(3):
        x = 0.3 * rng.standard_normal(obj.dim)
        if obj.name == "mod_rosenbrock":
            x += 1.0
        g = obj.gradient(x)
        fd = central_gradient(obj, x)
        assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))


@pytest.mark.parametrize("obj", [make_muller_brown(), make_mod_rosenbrock(3, [-50.0, 1.0, 1.0])], ids=lambda o: o.name)
def test_analytic_hessian_matches_gradient_differences(obj):
    x = np.array([-0.5, 0.8]) if obj.dim == 2 else np.array([0.9, 1.1, 1.05])
    h = 1e-6
    E = np.eye(obj.dim) * h
    fd = (obj.gradient(x + E) - obj.gradient(x - E)) / (2 * h)
    np.testing.assert_allclose(obj.hessian(x), fd, rtol=1e-6, atol=1e-4)


# -- Muller-Brown ------------------------------------------------------------


def test_muller_brown_defaults():
    p = MullerBrownParams()
    assert p.A == (-200.0, -100.0, -170.0, 15.0)
    assert p.x0 == (1.0, 0.0, -0.5, -1.0) and p.y0 == (0.0, 0.5, 1.5, 1.0)


def test_muller_brown_zero_amplitudes():
    obj = make_muller_brown(MullerBrownParams(A=(0.0, 0.0, 0.0, 0.0)))
    assert np.all(obj.eval(np.random.default_rng(0).standard_normal((10, 2))) == 0.0)


def test_muller_brown_first_term_at_its_centre():
    p = MullerBrownParams()
    rest = make_muller_brown(MullerBrownParams(A=(0.0,) + p.A[1:]))
    full = make_muller_brown(p)
    assert full.eval([1.0, 0.0]) - rest.eval([1.0, 0.0]) == pytest.approx(-200.0, abs=1e-12)


def test_muller_brown_saddle():
    obj = make_muller_brown()
    xs = obj.saddle
    np.testing.assert_allclose(xs, [-0.822, 0.624], atol=1e-3)
    assert np.linalg.norm(obj.gradient(xs)) < 1e-12
    assert count_negative(np.linalg.eigvalsh(obj.hessian(xs))) == 1
    np.testing.assert_array_equal(find_muller_brown_saddle(MullerBrownParams()), xs)


# -- modified Rosenbrock ------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 17])
def test_rosenbrock_gradient_zero_at_ones(d):
    s = np.random.default_rng(d).normal(0, 100, d)
    obj = make_mod_rosenbrock(d, s)
    assert obj.eval(np.ones(d)) == 0.0
    assert np.all(obj.gradient(np.ones(d)) == 0.0)


def test_rosenbrock_2d_index_and_condition():
    obj = make_mod_rosenbrock(2, [-50.0, 1.0])
    w = np.linalg.eigvalsh(obj.hessian(np.ones(2)))
    assert count_negative(w) == 1
    assert abs(w).max() / abs(w).min() == pytest.approx(47, abs=2)


@pytest.mark.slow
def test_rosenbrock_1000d_index3():
    p = ModRosenbrockParams.index_pattern(1000, 3)
    obj = make_mod_rosenbrock(p.d, p.s)
    w = np.linalg.eigvalsh(obj.hessian(np.ones(1000)))
    assert count_negative(w) == 3
    assert abs(w).max() / abs(w).min() == pytest.approx(722, rel=0.01)


def test_index_pattern():
    p = ModRosenbrockParams.index_pattern(6, 2, s_neg=-7.0)
    np.testing.assert_array_equal(p.s, [-7.0, -7.0, 1.0, 1.0, 1.0, 1.0])


# -- implicit objective --------------------------------------------------------


def test_implicit_value_at_origin_matches_grid():
    obj = make_implicit_2d()
    g = np.linspace(-3, 3, 601)
    Z1, Z2 = np.meshgrid(g, g)
    vals = Z1**2 + Z2**2 + np.sin(Z1 * Z2)
    i = np.unravel_index(np.argmin(vals), vals.shape)
    # grid minimiser sits at the origin; local refinement agrees with the solver
    assert abs(Z1[i]) < 0.02 and abs(Z2[i]) < 0.02
    assert obj.eval(np.zeros(2)) == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(obj.solve_inner(np.zeros((1, 2))), 0.0, atol=1e-12)


def test_implicit_reference_hessian_at_origin():
    H = make_implicit_2d().hessian(np.zeros(2))
    np.testing.assert_allclose(H, [[-2 / 3, 4 / 3], [4 / 3, -2 / 3]], atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-2.0, 2 / 3], atol=1e-6)


def test_implicit_eval_is_bit_reproducible():
    obj = make_implicit_2d()
    p = np.array([[0.21, -0.13], [0.4, 0.35]])
    a = obj.eval(p)
    obj.eval(np.array([[1.5, -1.0], [0.0, 0.2]]))
    assert np.array_equal(a, obj.eval(p))


def test_implicit_gradient_matches_differences():
    obj = make_implicit_2d()
    x = np.array([0.25, -0.1])
    np.testing.assert_allclose(obj.gradient(x), central_gradient(obj, x, 1e-5), atol=1e-8)


def test_implicit_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        make_implicit_2d(inner_tol=0.0)


# -- linear network ------------------------------------------------------------


def test_linear_net_parameter_count_and_flattening():
    spec = LinearNetSpec.random()
    assert spec.n_params == 4 * 10 * 10 + 4 * 10
    mats = [np.arange(r * c, dtype=float).reshape(r, c) for r, c in spec.shapes]
    w = spec.flatten(mats)
    # column-major inside the first layer
    np.testing.assert_array_equal(w[:3], mats[0][:3, 0])
    for a, b in zip(spec.unflatten(w), mats):
        np.testing.assert_array_equal(a, b)


def test_linear_net_saddle_is_critical():
    spec = LinearNetSpec.random(index_set=(1, 2))
    obj = make_linear_net(spec)
    assert np.linalg.norm(obj.gradient(obj.saddle)) <= 1e-10 * obj.eval(obj.saddle)


def test_linear_net_sixteen_negative_eigenvalues():
    obj = make_linear_net(LinearNetSpec.random(index_set=(1, 2)))
    assert count_negative(np.linalg.eigvalsh(obj.hessian(obj.saddle))) == 16


def test_linear_net_zero_target():
    spec = LinearNetSpec.random(depth=3, d_x=3, d_y=2, width=3, n_samples=6, index_set=())
    spec = LinearNetSpec(spec.dims, spec.X, np.zeros_like(spec.Y), ())
    obj = make_linear_net(spec)
    W = construct_net_saddle(spec)
    assert np.all(spec.unflatten(W)[0] == 0.0)
    assert obj.eval(W) == 0.0


def test_linear_net_rejects_unequal_widths_and_singular_data():
    rng = np.random.default_rng(0)
    spec = LinearNetSpec([3, 4, 2], rng.standard_normal((3, 10)), rng.standard_normal((2, 10)))
    with pytest.raises(ValueError):
        construct_net_saddle(spec)
    X = np.ones((3, 10))
    with pytest.raises(ValueError):
        construct_net_saddle(LinearNetSpec([3, 3, 2], X, rng.standard_normal((2, 10))))


# -- sum of sines ---------------------------------------------------------------


def test_sum_of_sines_examples():
    obj = make_sum_of_sines(3)
    assert obj.eval(np.zeros(3)) == 0.0
    np.testing.assert_array_equal(obj.gradient(np.zeros(3)), np.ones(3))
    bias = np.linalg.norm(make_sum_of_sines(1).gradient(np.zeros(1)) - smoothed_sines_gradient(np.zeros(1), 0.1))
    assert bias == pytest.approx(4.9875e-3, rel=1e-4)


# -- registry -------------------------------------------------------------------


def test_registry_builds_fresh_objectives():
    a = make_benchmark("muller_brown")
    b = make_benchmark("muller_brown")
    a.eval([0.0, 0.0])
    assert b.eval_count == 0
    r = make_benchmark("mod_rosenbrock", {"d": 5, "n_neg": 2})
    assert count_negative(np.linalg.eigvalsh(r.hessian(np.ones(5)))) == 2
    with pytest.raises(ValueError):
        make_benchmark("nope")


def test_index_sets():
    assert list(index_sets(2)) == [(), (1,), (2,), (1, 2)]
