"""Self-verification suites: gradient checks against finite differences and
numerical checks of the operator algebra.

Both suites are deterministic given a seed and are shared by the CLI and the
test suite.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import autodiff as ad
from . import softlogic as sl
from .autodiff import Graph
from .lnu import LnuParams, LnuStack, lift_layer, lift_stack, lnu_forward, lnu_stack_forward
from .models import ModelSpec, build_model

__all__ = [
    "GRAD_TOLERANCE",
    "gradcheck_suite",
    "run_gradcheck",
    "logic_check_suite",
]

GRAD_TOLERANCE = 1e-4

# builder(rng) -> (f, params) with f(params) -> (value, grads)
CheckBuilder = Callable[[np.random.Generator], tuple[Callable, list[np.ndarray]]]


def _scalar_loss(out):
    """Squash and sum so every check's loss has nontrivial curvature."""
    return ad.reduce_sum(ad.reduce_sum(ad.sigmoid(out), "cols"), "rows")


def _weighted_loss(out, weights: np.ndarray):
    """Random-weighted sum.  Gate-style ops (softmax Jacobians) annihilate
    constant output gradients, so the probe weights must vary per entry."""
    w = out.graph.leaf(weights)
    return ad.reduce_sum(ad.reduce_sum(ad.mul(out, w), "cols"), "rows")


def _away_from_zero(rng: np.random.Generator, shape, margin: float = 1e-2) -> np.ndarray:
    """Magnitudes in [margin, 2] with random signs (keeps clear of ReLU kinks)."""
    mag = rng.uniform(margin, 2.0, shape)
    sign = np.where(rng.uniform(0.0, 1.0, shape) < 0.5, -1.0, 1.0)
    return mag * sign


def _probe_weights(rng: np.random.Generator, shape) -> np.ndarray:
    # Magnitudes bounded away from zero so no output coordinate is muted.
    return _away_from_zero(rng, shape, margin=0.5)


def _unary(op: Callable, domain: tuple[float, float] = (-2.0, 2.0), kink_margin: float = 0.0) -> CheckBuilder:
    def build(rng):
        if kink_margin > 0.0:
            x0 = _away_from_zero(rng, (3, 4), kink_margin)
        else:
            x0 = rng.uniform(domain[0], domain[1], (3, 4))

        def f(params, value_only=False):
            g = Graph()
            x = g.leaf(params[0])
            loss = _scalar_loss(op(x))
            if value_only:
                return loss.item(), None
            g.backward(loss)
            return loss.item(), [x.grad]

        return f, [x0]

    return build


def _binary(op: Callable, b_shape=(3, 4)) -> CheckBuilder:
    def build(rng):
        a0 = rng.uniform(-2.0, 2.0, (3, 4))
        b0 = rng.uniform(-2.0, 2.0, b_shape)

        def f(params, value_only=False):
            g = Graph()
            a, b = g.leaf(params[0]), g.leaf(params[1])
            loss = _scalar_loss(op(a, b))
            if value_only:
                return loss.item(), None
            g.backward(loss)
            return loss.item(), [a.grad, b.grad]

        return f, [a0, b0]

    return build


def _matmul_check(rng):
    a0 = rng.uniform(-1.0, 1.0, (3, 4))
    b0 = rng.uniform(-1.0, 1.0, (4, 2))

    def f(params, value_only=False):
        g = Graph()
        a, b = g.leaf(params[0]), g.leaf(params[1])
        loss = _scalar_loss(ad.matmul(a, b))
        if value_only:
            return loss.item(), None
        g.backward(loss)
        return loss.item(), [a.grad, b.grad]

    return f, [a0, b0]


def _softmax_check(rng):
    # Keep temperature * spread moderate: heavily suppressed softmax weights
    # push true gradients below the finite-difference noise floor.
    x0 = rng.uniform(-1.5, 1.5, (3, 5))
    temperature = float(rng.uniform(0.5, 3.0))
    probe = _probe_weights(rng, (3, 5))

    def f(params, value_only=False):
        g = Graph()
        x = g.leaf(params[0])
        loss = _weighted_loss(ad.softmax_rows(x, temperature), probe)
        if value_only:
            return loss.item(), None
        g.backward(loss)
        return loss.item(), [x.grad]

    return f, [x0]


def _bce_check(rng):
    x0 = rng.uniform(-2.0, 2.0, (5, 1))
    target = (rng.uniform(0.0, 1.0, (5, 1)) > 0.5).astype(np.float64)

    def f(params, value_only=False):
        g = Graph()
        x = g.leaf(params[0])
        loss = ad.bce_loss(ad.sigmoid(x), target)
        if value_only:
            return loss.item(), None
        g.backward(loss)
        return loss.item(), [x.grad]

    return f, [x0]


def _lnu_layer_check(trainable: bool, negation: bool, normalize: bool) -> CheckBuilder:
    def build(rng):
        layer = LnuParams.create(
            4,
            3,
            sharpness=float(rng.uniform(2.0, 12.0)),
            trainable_sharpness=trainable,
            negation_units=2 if negation else 0,
            normalize=normalize,
            rng=rng,
        )
        if negation:
            layer.w_not[...] = rng.uniform(-0.5, 0.5, layer.w_not.shape)
        x0 = rng.uniform(0.05, 0.95, (3, 4))
        probe = _probe_weights(rng, (3, layer.out_width))
        names = list(layer.trainables())

        def f(params, value_only=False):
            arrays = layer.trainables()
            for name, arr in zip(names, params[:-1]):
                arrays[name][...] = arr
            g = Graph()
            x = g.leaf(params[-1])
            gates = lift_layer(g, layer)
            loss = _weighted_loss(lnu_forward(x, gates), probe)
            if value_only:
                return loss.item(), None
            g.backward(loss)
            leaves = gates.leaves()
            return loss.item(), [leaves[n].grad for n in names] + [x.grad]

        return f, [layer.trainables()[n].copy() for n in names] + [x0]

    return build


def _lnu_stack_check(rng):
    # 4 -> 4 -> 4 -> 4 with implication residuals; all sharpnesses trainable.
    # Sharpness stays moderate: composition multiplies curvature, which costs
    # finite-difference accuracy at the default step.
    layers = [
        LnuParams.create(4, 2, sharpness=float(rng.uniform(1.0, 5.0)),
                         trainable_sharpness=True, rng=rng)
        for _ in range(3)
    ]
    stack = LnuStack(layers, residual_mode="soft-imply")
    x0 = rng.uniform(0.05, 0.95, (3, 4))
    probe = _probe_weights(rng, (3, 4))
    names = list(stack.trainables())

    def f(params, value_only=False):
        arrays = stack.trainables()
        for name, arr in zip(names, params[:-1]):
            arrays[name][...] = arr
        g = Graph()
        x = g.leaf(params[-1])
        gates = lift_stack(g, stack)
        loss = _weighted_loss(lnu_stack_forward(x, stack, gates), probe)
        if value_only:
            return loss.item(), None
        g.backward(loss)
        leaves = {f"layer{i}.{n}": node for i, lg in enumerate(gates) for n, node in lg.leaves().items()}
        return loss.item(), [leaves[n].grad for n in names] + [x.grad]

    return f, [stack.trainables()[n].copy() for n in names] + [x0]


def _model_check(spec: ModelSpec) -> CheckBuilder:
    def build(rng):
        model = build_model(spec, int(rng.integers(2**31)))
        x0 = rng.uniform(0.0, 1.0, (4, spec.input_dim))
        target = (rng.uniform(0.0, 1.0, (4, 1)) > 0.5).astype(np.float64)
        names = list(model.params)

        def f(params, value_only=False):
            for name, arr in zip(names, params):
                model.params[name][...] = arr
            g = Graph()
            out, leaves = model.forward(g, x0)
            loss = ad.bce_loss(out, target)
            if value_only:
                return loss.item(), None
            g.backward(loss)
            return loss.item(), [leaves[n].grad for n in names]

        return f, [model.params[n].copy() for n in names]

    return build


GRADCHECKS: dict[str, CheckBuilder] = {
    "add": _binary(ad.add),
    "add_broadcast_row": _binary(ad.add, b_shape=(1, 4)),
    "sub": _binary(ad.sub),
    "mul": _binary(ad.mul),
    "mul_broadcast_scalar": _binary(ad.mul, b_shape=(1, 1)),
    "neg": _unary(ad.neg),
    "scale": _unary(lambda x: ad.scale(x, 1.7)),
    "one_minus": _unary(ad.one_minus),
    "matmul": _matmul_check,
    "sigmoid": _unary(ad.sigmoid),
    "relu": _unary(ad.relu, kink_margin=1e-2),
    "gelu": _unary(ad.gelu),
    "exp": _unary(ad.exp),
    "softplus": _unary(ad.softplus),
    "softmax_rows": _softmax_check,
    "reduce_sum_rows": _unary(lambda x: ad.reduce_sum(x, "rows")),
    "reduce_mean_cols": _unary(lambda x: ad.reduce_mean(x, "cols")),
    "concat_cols": _binary(ad.concat_cols, b_shape=(3, 2)),
    "bce_loss": _bce_check,
    "lnu_layer": _lnu_layer_check(trainable=False, negation=False, normalize=False),
    "lnu_layer_trainable_full": _lnu_layer_check(trainable=True, negation=True, normalize=True),
    "lnu_stack_depth3_residual": _lnu_stack_check,
    "perceptron_sigmoid": _model_check(ModelSpec("perceptron", hidden=5, activation="sigmoid")),
    "perceptron_relu": _model_check(ModelSpec("perceptron", hidden=5, activation="relu")),
    "perceptron_gelu": _model_check(ModelSpec("perceptron", hidden=5, activation="gelu")),
    "logicron": _model_check(ModelSpec("logicron", hidden=4)),
    "logicron_neg": _model_check(ModelSpec("logicron_neg", hidden=3)),
}


# Central differences face two error floors: rounding noise (~eps*|f|/2h,
# bites suppressed coordinates at small h) and truncation (~h^2 * curvature,
# bites near-crossing coordinates at large h).  No single step serves both,
# so a point passes if either step confirms the analytic gradient; a wrong
# backward rule disagrees at every step.
SUITE_FD_STEPS = (1e-5, 5e-5)


def run_gradcheck(
    builder: CheckBuilder,
    points: int,
    rng: np.random.Generator,
    steps: tuple[float, ...] = SUITE_FD_STEPS,
) -> float:
    worst = 0.0
    for _ in range(points):
        f, params = builder(rng)
        err = ad.finite_difference_check(f, params, h=steps[0])
        for h in steps[1:]:
            if err <= 1e-5:
                break
            err = min(err, ad.finite_difference_check(f, params, h=h))
        worst = max(worst, err)
    return worst


def gradcheck_suite(
    points: int = 100,
    seed: int = 0,
    checks: dict[str, CheckBuilder] | None = None,
) -> dict[str, float]:
    """Max relative finite-difference error per named check."""
    if checks is None:
        checks = GRADCHECKS
    rng = np.random.default_rng(seed)
    return {name: run_gradcheck(builder, points, rng) for name, builder in checks.items()}


# ---------------------------------------------------------------------------
# operator-algebra checks
# ---------------------------------------------------------------------------


def _demorgan_residual(samples: int, rng: np.random.Generator) -> float:
    dims = (2, 3, 8)
    worst = 0.0
    for i in range(samples):
        z = rng.uniform(0.0, 1.0, dims[i % len(dims)])
        for sharp in (0.0, 1.0, 10.0, 100.0):
            lhs = sl.soft_or(1.0 - z, sharp)
            rhs = 1.0 - sl.soft_and(z, sharp)
            worst = max(worst, abs(lhs - rhs))
    return worst


def _convex_hull_residual(samples: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, 9))
        z = rng.uniform(0.0, 1.0, d)
        sharp = float(rng.uniform(0.0, 200.0))
        lo, hi = z.min(), z.max()
        for val in (sl.soft_and(z, sharp), sl.soft_or(z, sharp)):
            worst = max(worst, lo - val, val - hi, 0.0)
    return worst


def _sharp_limit_residual(samples: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, 9))
        m = float(rng.uniform(0.0, 0.5))
        z = np.concatenate([[m], rng.uniform(m + 0.1, 1.0, d - 1)])
        worst = max(worst, abs(sl.soft_and(z, 200.0) - m))
        top = float(rng.uniform(0.5, 1.0))
        z = np.concatenate([[top], rng.uniform(0.0, top - 0.1, d - 1)])
        worst = max(worst, abs(sl.soft_or(z, 200.0) - top))
    return worst


def _mean_residual(samples: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, 9))
        z = rng.uniform(0.0, 1.0, d)
        mean = float(np.mean(z))
        worst = max(worst, abs(sl.soft_and(z, 0.0) - mean), abs(sl.soft_or(z, 0.0) - mean))
    return worst


def _permutation_residual(samples: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, 6))
        z = rng.uniform(0.0, 1.0, d)
        w = rng.uniform(0.0, 1.0, d)
        perm = rng.permutation(d)
        sharp = float(rng.uniform(0.0, 100.0))
        pairs = [
            (sl.godel_and(z), sl.godel_and(z[perm])),
            (sl.godel_or(z), sl.godel_or(z[perm])),
            (sl.soft_and(z, sharp), sl.soft_and(z[perm], sharp)),
            (sl.soft_or(z, sharp), sl.soft_or(z[perm], sharp)),
            (sl.nln_and(z, w), sl.nln_and(z[perm], w[perm])),
            (sl.nln_or(z, w), sl.nln_or(z[perm], w[perm])),
            (sl.lnn_and(z, w), sl.lnn_and(z[perm], w[perm])),
            (sl.lnn_or(z, w), sl.lnn_or(z[perm], w[perm])),
        ]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
    return worst


def _truth_table_residual() -> float:
    from .experiments import truth_table_sweep

    worst = 0.0
    for arity in (2, 3):
        table = truth_table_sweep(arity=arity, sharpness=100.0)
        for name, entry in table.items():
            dev = entry["max_deviation"]
            if not name.startswith("soft_") and dev != 0.0:
                return float("inf")  # exact families must be exact on corners
            worst = max(worst, dev)
    return worst


def logic_check_suite(samples: int = 1000, seed: int = 0) -> dict[str, dict]:
    """Operator-algebra verification; each entry reports pass, residual, tolerance."""
    rng = np.random.default_rng(seed)
    suite = {
        "demorgan_duality": (_demorgan_residual(samples, rng), 1e-12),
        "convex_hull_bound": (_convex_hull_residual(samples, rng), 1e-12),
        "sharp_limit": (_sharp_limit_residual(samples, rng), 1e-6),
        "mean_at_zero_sharpness": (_mean_residual(samples, rng), 1e-12),
        "permutation_invariance": (_permutation_residual(samples, rng), 1e-12),
        "truth_table_corners": (_truth_table_residual(), 0.01),
    }
    return {
        name: {"pass": residual <= tol, "max_residual": residual, "tolerance": tol}
        for name, (residual, tol) in suite.items()
    }
