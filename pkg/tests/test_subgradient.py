import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from pushsim.graphs import digraph, generate_sequence
from pushsim.pushsum import initial_state, pushsum_step, ratio_state
from pushsim.subgradient import (
    AbsoluteTerm,
    HingeTerm,
    QuadraticTerm,
    StepsizeSchedule,
    ZeroTerm,
    grid_minimize,
    hinge_objective,
    l1_objective,
    optimality_gap,
    pushsub_step,
    pushsub_step_ratio,
    quadratic_objective,
    run_push_subgradient,
    stepsize,
    stepsize_array,
    subgradient,
    validate_schedule,
    weighted_running_average,
    zero_objective,
)
from pushsim.weights import build_weights

CYCLE3 = [build_weights(g) for g in generate_sequence("static-cycle", 3, 1).graphs]


# --------------------------------------------------------------------------
# terms
# --------------------------------------------------------------------------

def test_quadratic_term_values_and_gradient():
    t = QuadraticTerm(np.array([2.0]))
    assert t.value(np.array([5.0])) == 9.0
    assert_allclose(t.subgrad(np.array([5.0])), [6.0])
    assert_allclose(t.value_batch(np.array([[5.0], [2.0]])), [9.0, 0.0])
    # bound = 2 * distance to the farthest box corner
    assert t.grad_norm_bound(np.array([-1.0]), np.array([3.0])) == pytest.approx(6.0)


def test_absolute_term_kink_rule():
    t = AbsoluteTerm(np.array([1.0, -1.0]))
    assert_allclose(t.subgrad(np.array([3.0, -1.0])), [1.0, 0.0])  # sign(0) = 0
    assert t.value(np.array([3.0, -1.0])) == 2.0
    assert t.grad_norm_bound(np.zeros(2), np.ones(2)) == pytest.approx(np.sqrt(2))


def test_hinge_term_kink_rule():
    t = HingeTerm(np.array([2.0, 0.0]), 1.0)
    assert t.value(np.array([0.25, 9.0])) == 0.5
    assert_allclose(t.subgrad(np.array([0.25, 9.0])), [-2.0, 0.0])
    # exactly on the margin: flat-side convention, subgradient 0
    assert_allclose(t.subgrad(np.array([0.5, 0.0])), [0.0, 0.0])
    assert_allclose(t.subgrad(np.array([4.0, 0.0])), [0.0, 0.0])
    assert t.grad_norm_bound(np.zeros(2), np.ones(2)) == 2.0
    with pytest.raises(ValueError, match="label"):
        HingeTerm(np.ones(2), 0.5)


def test_zero_term_and_dispatch():
    t = ZeroTerm(3)
    assert t.value(np.ones(3)) == 0.0
    assert_allclose(subgradient(t, np.ones(3)), np.zeros(3))
    with pytest.raises(TypeError, match="not an objective term"):
        subgradient("nope", np.ones(3))


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10_000))
def test_subgradient_inequality_property(seed):
    # g in df(z)  <=>  f(w) >= f(z) + g . (w - z) for every w; probe randomly
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    terms = [
        QuadraticTerm(rng.uniform(-3, 3, d)),
        AbsoluteTerm(rng.uniform(-3, 3, d)),
        HingeTerm(rng.uniform(-2, 2, d), rng.choice([-1.0, 1.0])),
        ZeroTerm(d),
    ]
    z = rng.uniform(-5, 5, d)
    for term in terms:
        g = subgradient(term, z)
        fz = term.value(z)
        for w in rng.uniform(-6, 6, (8, d)):
            assert term.value(w) >= fz + g @ (w - z) - 1e-10


# --------------------------------------------------------------------------
# objectives and certified optima
# --------------------------------------------------------------------------

def test_quadratic_objective_mean_optimum():
    obj = quadratic_objective(np.array([[0.0], [2.0], [4.0]]))
    assert_allclose(obj.z_star, [2.0])
    assert_allclose(obj.f_star, (4.0 + 0.0 + 4.0) / 3.0)
    assert obj.optimum_provenance == "analytic-mean"
    assert optimality_gap(obj, np.array([2.0])) == 0.0
    # gap is mean squared distance shifted by f*:  f(z) - f* = (z - mean)^2
    assert optimality_gap(obj, np.array([5.0])) == pytest.approx(9.0)


def test_l1_objective_median_optimum_even_count():
    obj = l1_objective(np.array([[0.0], [1.0], [3.0], [10.0]]))
    assert_allclose(obj.z_star, [2.0])  # midpoint convention
    assert obj.optimum_provenance == "analytic-median"
    # any point between 1 and 3 attains the same optimal value
    assert optimality_gap(obj, np.array([1.5])) == 0.0


def test_l1_gap_example():
    obj = l1_objective(np.array([[0.0], [1.0], [2.0]]))
    assert obj.f_star == pytest.approx(2.0 / 3.0)
    assert optimality_gap(obj, np.array([0.0])) == pytest.approx(1.0 / 3.0)


def test_declared_optimum_must_not_be_beatable():
    obj = quadratic_objective(np.array([[0.0], [2.0]]))
    cheat = ObjectiveSpecBeaten(obj)
    with pytest.raises(ValueError, match="beats the declared optimum"):
        optimality_gap(cheat, np.array([1.0]))


class ObjectiveSpecBeaten:
    """Wrapper faking an inflated f* to exercise the honesty gate."""

    def __init__(self, inner):
        self._inner = inner
        self.f_star = inner.f_star + 1.0
        self.optimum_provenance = "broken"

    def value(self, z):
        return self._inner.value(z)


def test_grid_oracle_agrees_with_analytic_mean():
    targets = np.array([[0.3, -1.0], [2.0, 0.5], [-0.5, 2.5]])
    obj = quadratic_objective(targets)

    def batch(zs):
        return obj.value_batch(zs)

    z_hat, f_hat = grid_minimize(batch, obj.box_lo, obj.box_hi)
    assert np.abs(z_hat - targets.mean(axis=0)).max() <= 1e-6
    assert abs(f_hat - obj.f_star) <= 1e-9


def test_grid_oracle_rejects_high_dimension():
    with pytest.raises(ValueError, match="d <= 2"):
        grid_minimize(lambda zs: zs.sum(axis=1), np.zeros(3), np.ones(3))


def test_hinge_objective_grid_certificate():
    # one agent wants z1 >= 1, the other wants z2 <= -1: both satisfiable
    obj = hinge_objective(
        np.array([[1.0, 0.0], [0.0, 1.0]]), [1.0, -1.0],
        (np.array([-3.0, -3.0]), np.array([3.0, 3.0])),
    )
    assert obj.f_star <= 1e-9
    assert obj.value(np.array([2.0, -2.0])) == 0.0
    assert obj.optimum_provenance == "grid"
    assert obj.g_bound == pytest.approx(1.0)  # max row norm


def test_zero_objective_is_free():
    obj = zero_objective(4, 2)
    assert obj.g_bound == 0.0
    assert obj.value(np.array([9.0, -9.0])) == 0.0
    assert obj.contains(np.array([1e12, -1e12]))


def test_box_containment_slack():
    obj = quadratic_objective(np.array([[0.0]]), box=(np.array([-1.0]), np.array([1.0])))
    assert obj.contains(np.array([1.0 + 1e-10]))
    assert not obj.contains(np.array([1.1]))


# --------------------------------------------------------------------------
# stepsize schedules
# --------------------------------------------------------------------------

def test_schedule_values():
    h = StepsizeSchedule.harmonic(a=2.0)
    assert stepsize(h, 0) == 2.0
    assert stepsize(h, 3) == 0.5
    p = StepsizeSchedule.polynomial(1.0, 0.75)
    assert stepsize(p, 15) == pytest.approx(16.0 ** -0.75)
    f = StepsizeSchedule.fixed_horizon(400)
    assert stepsize(f, 0) == pytest.approx(0.05)
    assert stepsize(f, 399) == pytest.approx(0.05)
    with pytest.raises(ValueError, match="t < T"):
        stepsize(f, 400)
    assert_allclose(stepsize_array(h, 3), [2.0, 1.0, 2.0 / 3.0])


def test_schedule_constructor_validation():
    with pytest.raises(ValueError, match="positive"):
        StepsizeSchedule.harmonic(a=0.0)
    with pytest.raises(ValueError, match="nonnegative"):
        StepsizeSchedule.polynomial(1.0, -0.5)
    with pytest.raises(ValueError, match="T >= 1"):
        StepsizeSchedule.fixed_horizon(0)
    with pytest.raises(ValueError, match="unknown schedule"):
        StepsizeSchedule(kind="exp")


@pytest.mark.parametrize(
    "sched,expected",
    [
        (StepsizeSchedule.harmonic(), "satisfied"),
        (StepsizeSchedule.polynomial(1.0, 0.75), "satisfied"),
        (StepsizeSchedule.polynomial(1.0, 1.0), "satisfied"),
        (StepsizeSchedule.polynomial(1.0, 0.5), "violated"),   # sum of squares diverges
        (StepsizeSchedule.polynomial(1.0, 1.25), "violated"),  # sum converges
        (StepsizeSchedule.polynomial(1.0, 0.0), "violated"),
        (StepsizeSchedule.fixed_horizon(100), "not-applicable"),
    ],
)
def test_schedule_classification(sched, expected):
    assert validate_schedule(sched).assumption == expected


# --------------------------------------------------------------------------
# single optimization steps
# --------------------------------------------------------------------------

def test_step_with_zero_alpha_reduces_to_pure_mixing():
    obj = l1_objective(np.array([[0.0], [1.0], [2.0]]))
    st_ = initial_state(np.array([[5.0], [-1.0], [3.0]]))
    a = pushsub_step(st_, CYCLE3[0], 0.0, obj)
    b = pushsum_step(st_, CYCLE3[0])
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_step_rejects_negative_alpha_and_bad_shapes():
    obj = l1_objective(np.array([[0.0], [1.0], [2.0]]))
    st_ = initial_state(np.zeros((3, 1)))
    with pytest.raises(ValueError, match="nonnegative"):
        pushsub_step(st_, CYCLE3[0], -0.1, obj)
    bad = l1_objective(np.array([[0.0], [1.0]]))
    with pytest.raises(ValueError):
        pushsub_step(st_, CYCLE3[0], 0.1, bad)


def test_ratio_form_step_matches_mass_form():
    obj = quadratic_objective(np.array([[0.0, 1.0], [2.0, -1.0], [4.0, 0.0]]))
    rng = np.random.default_rng(5)
    st_ = initial_state(rng.uniform(-2, 2, (3, 2)))
    z, y = ratio_state(st_), st_.y
    for t in range(25):
        alpha = stepsize(StepsizeSchedule.harmonic(), t)
        st_ = pushsub_step(st_, CYCLE3[0], alpha, obj)
        z, y = pushsub_step_ratio(z, y, CYCLE3[0], alpha, obj)
        assert np.abs(z - ratio_state(st_)).max() <= 1e-12
        assert np.abs(y - st_.y).max() <= 1e-12


# --------------------------------------------------------------------------
# the full run loop
# --------------------------------------------------------------------------

def small_run(steps=2000, record=False):
    obj = l1_objective(np.array([[0.0], [1.0], [2.0]]))
    ws = [CYCLE3[0]] * steps
    x0 = np.array([[4.0], [-2.0], [1.0]])
    return run_push_subgradient(ws, x0, obj, StepsizeSchedule.harmonic(),
                                record_products=record), obj


def test_run_converges_to_median():
    trace, obj = small_run()
    assert np.abs(trace.zs[-1] - 1.0).max() <= 0.05
    assert trace.running_gap[-1] <= 0.05
    assert trace.consensus[-1] <= 1e-3
    assert trace.min_y > 0.0


def test_run_records_prestep_rows():
    trace, _ = small_run(steps=5)
    assert_allclose(trace.xs[0], [[4.0], [-2.0], [1.0]])
    assert_allclose(trace.ys[0], np.ones(3))
    assert trace.alphas[0] == 1.0
    assert trace.steps == 5


def test_running_average_is_the_reported_iterate():
    trace, obj = small_run(steps=50)
    for t in (0, 7, 49):
        avg = weighted_running_average(trace, t)
        assert optimality_gap(obj, avg) == pytest.approx(trace.running_gap[t], abs=1e-12)
    direct = (trace.alphas[:8, None] * trace.zbar[:8]).sum(axis=0) / trace.alphas[:8].sum()
    assert_allclose(weighted_running_average(trace, 7), direct)


def test_running_average_agent_variant_and_range_checks():
    trace, _ = small_run(steps=10)
    one = weighted_running_average(trace, 9, agent=1)
    direct = (trace.alphas[:, None] * trace.zs[:, 1]).sum(axis=0) / trace.alphas.sum()
    assert_allclose(one, direct)
    with pytest.raises(ValueError, match="upto"):
        weighted_running_average(trace, 10)
    with pytest.raises(ValueError, match="agent"):
        weighted_running_average(trace, 9, agent=3)


def test_run_tracks_companion_products_when_asked():
    trace, _ = small_run(steps=40, record=True)
    assert trace.s_product_gap is not None
    assert len(trace.smatrices) == 40
    assert trace.s_product_gap[-1] <= 1e-8  # product reaches the rank-one limit


def test_run_enforces_declared_gradient_ceiling():
    obj = quadratic_objective(
        np.array([[0.0], [2.0]]),
        box=(np.array([-50.0]), np.array([50.0])),
        g_bound=1e-3,  # dishonest: the true subgradients are far larger
    )
    w = build_weights(digraph(2, [(0, 1), (1, 0)]))
    with pytest.raises(RuntimeError, match="above the declared ceiling"):
        run_push_subgradient([w] * 5, np.array([[10.0], [-10.0]]), obj,
                             StepsizeSchedule.harmonic())


def test_run_enforces_box_membership():
    obj = quadratic_objective(
        np.array([[0.0], [2.0]]), box=(np.array([-1.0]), np.array([1.0]))
    )
    w = build_weights(digraph(2, [(0, 1), (1, 0)]))
    with pytest.raises(RuntimeError, match="left the declared box"):
        run_push_subgradient([w] * 5, np.array([[0.9], [0.9]]), obj,
                             StepsizeSchedule.harmonic(a=10.0))


def test_run_rejects_empty_and_mismatched_input():
    obj = zero_objective(3, 1)
    with pytest.raises(ValueError, match="at least one"):
        run_push_subgradient([], np.zeros((3, 1)), obj, StepsizeSchedule.harmonic())
    with pytest.raises(ValueError):
        run_push_subgradient(CYCLE3, np.zeros((3, 2)), obj, StepsizeSchedule.harmonic())
