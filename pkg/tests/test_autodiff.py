"""Tape autodiff: forward values, gradients vs central finite differences."""

import numpy as np
import pytest

from hamsoc import autodiff as ad


def fd_grad(f, x, h=1e-5):
    """Central finite differences of a scalar-valued f at array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def assert_grad_close(got, want, rel=1e-5, abs_floor=1e-8):
    got = np.asarray(got)
    want = np.asarray(want)
    err = np.abs(got - want)
    ok = (err < abs_floor) | (err < rel * np.abs(want))
    assert ok.all(), f"max abs err {err.max():.3e}"


# ------------------------------------------------------------ forward values

def test_inner_vectors():
    assert ad.inner([1.0, 2.0], [3.0, 4.0]).item() == 11.0


def test_logsumexp_symmetry():
    assert ad.logsumexp([0.0, 0.0]).item() == pytest.approx(np.log(2.0), abs=1e-15)


def test_hadamard():
    out = ad.mul([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    np.testing.assert_array_equal(out.value, [4.0, 10.0, 18.0])


def test_eval_deterministic_bitwise():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5, 3))
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=4)

    def run():
        return ad.elu(ad.affine(x, w, b)).value

    a, c = run(), run()
    assert a.tobytes() == c.tobytes()


def test_tensor_values_are_immutable():
    t = ad.tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.value[0] = 5.0


# ------------------------------------------------------------- simple grads

def test_grad_square():
    tape = ad.Tape()
    x = tape.variable(3.0)
    loss = ad.mul(x, x)
    (g,) = tape.gradient(loss, [x])
    assert float(g) == pytest.approx(6.0, abs=1e-12)


def test_grad_elu_negative():
    tape = ad.Tape()
    x = tape.variable(-1.0)
    (g,) = tape.gradient(ad.elu(x), [x])
    assert float(g) == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_unreached_variable_gets_zero_gradient():
    tape = ad.Tape()
    x = tape.variable([1.0, 2.0])
    other = tape.variable([3.0, 4.0])
    loss = ad.total_sum(ad.mul(x, x))
    gx, gother = tape.gradient(loss, [x, other])
    np.testing.assert_array_equal(gother, np.zeros(2))
    np.testing.assert_allclose(gx, 2.0 * x.value)


# ------------------------------------------------------------------- errors

def test_shape_mismatch_names_primitive():
    with pytest.raises(ad.ShapeError, match="add"):
        ad.add(np.zeros(3), np.zeros(4))
    with pytest.raises(ad.ShapeError, match="matmul"):
        ad.matmul(np.zeros((2, 3)), np.zeros((2, 3)))


def test_log_domain_error():
    with pytest.raises(ad.DomainError):
        ad.log([1.0, 0.0])
    with pytest.raises(ad.DomainError):
        ad.log([-1.0])


def test_non_scalar_gradient_output_rejected():
    tape = ad.Tape()
    x = tape.variable([1.0, 2.0])
    y = ad.mul(x, x)
    with pytest.raises(ad.TapeError):
        tape.gradient(y, [x])


def test_foreign_tensor_rejected():
    tape1, tape2 = ad.Tape(), ad.Tape()
    x1 = tape1.variable(1.0)
    x2 = tape2.variable(1.0)
    with pytest.raises(ad.TapeError):
        ad.mul(x1, x2)
    loss = ad.mul(x1, x1)
    with pytest.raises(ad.TapeError):
        tape1.gradient(loss, [x2])


# ----------------------------------------------- finite-difference invariant

def _scalarize(out, w):
    """Contract any-shape output against a fixed cotangent w."""
    if out.value.shape == ():
        return ad.smul(out, float(w))
    return ad.total_sum(ad.mul(out, w))


def _check_primitive(build, sample, n_inputs=1, trials=100, seed=0, rel=1e-5):
    """FD-check d(scalarized build(*xs))/dxs over random inputs."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        xs = sample(rng)
        probe = build(*[ad.tensor(x) for x in xs])
        w = rng.normal(size=probe.value.shape) if probe.value.shape else rng.normal()

        tape = ad.Tape()
        vs = [tape.variable(x) for x in xs]
        loss = _scalarize(build(*vs), w)
        grads = tape.gradient(loss, vs)

        for i in range(n_inputs):
            def f(xi, i=i):
                args = list(xs)
                args[i] = xi
                return float(_scalarize(build(*[ad.tensor(a) for a in args]), w).value)

            assert_grad_close(grads[i], fd_grad(f, xs[i]), rel=rel)


M, N = 3, 4


def sample_pair(rng):
    return rng.normal(size=(M, N)), rng.normal(size=(M, N))


def sample_one(rng):
    return (rng.normal(size=(M, N)),)


PRIMITIVE_CASES = [
        ("add", ad.add, sample_pair, 2),
        ("sub", ad.sub, sample_pair, 2),
        ("mul", ad.mul, sample_pair, 2),
        ("neg", ad.neg, sample_one, 1),
        ("smul", lambda a: ad.smul(a, 2.5), sample_one, 1),
        ("sadd", lambda a: ad.sadd(a, -1.25), sample_one, 1),
        (
            "scale_rows",
            ad.scale_rows,
            lambda rng: (rng.normal(size=(M, N)), rng.normal(size=(M, 1))),
            2,
        ),
        (
            "matmul",
            ad.matmul,
            lambda rng: (rng.normal(size=(M, N)), rng.normal(size=(N, 2))),
            2,
        ),
        (
            "affine",
            ad.affine,
            lambda rng: (
                rng.normal(size=(M, N)),
                rng.normal(size=(2, N)),
                rng.normal(size=2),
            ),
            3,
        ),
        # keep elu samples off the kink at 0 so the FD stencil stays one-sided
        (
            "elu",
            ad.elu,
            lambda rng: (rng.normal(size=(M, N)) + 0.002 * np.sign(rng.normal(size=(M, N))),),
            1,
        ),
        ("cos", ad.cos, sample_one, 1),
        ("sin", ad.sin, sample_one, 1),
        ("tan", ad.tan, lambda rng: (rng.uniform(-1.2, 1.2, size=(M, N)),), 1),
        ("exp", ad.exp, lambda rng: (rng.uniform(-2, 2, size=(M, N)),), 1),
        ("log", ad.log, lambda rng: (rng.uniform(0.2, 3.0, size=(M, N)),), 1),
        ("logsumexp2d", ad.logsumexp, sample_one, 1),
        ("logsumexp1d", ad.logsumexp, lambda rng: (rng.normal(size=N),), 1),
        ("softmax2d", ad.softmax, sample_one, 1),
        ("softmax1d", ad.softmax, lambda rng: (rng.normal(size=N),), 1),
        ("row_sum", ad.row_sum, sample_one, 1),
        ("row_sumsq", ad.row_sumsq, sample_one, 1),
        ("inner2d", ad.inner, sample_pair, 2),
        (
            "inner1d",
            ad.inner,
            lambda rng: (rng.normal(size=N), rng.normal(size=N)),
            2,
        ),
        ("total_sum", ad.total_sum, sample_one, 1),
        ("mean", ad.mean, sample_one, 1),
        (
            "concat_cols",
            ad.concat_cols,
            lambda rng: (rng.normal(size=(M, 2)), rng.normal(size=(M, 3))),
            2,
        ),
]


@pytest.mark.parametrize("name,build,sample,n_inputs", PRIMITIVE_CASES)
def test_primitive_gradients_match_fd(name, build, sample, n_inputs):
    _check_primitive(build, sample, n_inputs=n_inputs, trials=100)


def test_three_layer_mlp_gradient_matches_fd():
    """End-to-end chain of affine/elu/reductions against the FD oracle."""
    rng = np.random.default_rng(7)
    x = rng.normal(size=(4, 3))
    ws = [rng.normal(size=(5, 3)), rng.normal(size=(5, 5)), rng.normal(size=(2, 5))]
    bs = [rng.normal(size=5), rng.normal(size=5), rng.normal(size=2)]

    def net(params):
        h = ad.tensor(x)
        for i in range(3):
            h = ad.affine(h, params[2 * i], params[2 * i + 1])
            if i < 2:
                h = ad.elu(h)
        return ad.mean(ad.row_sumsq(h))

    flat = [ws[0], bs[0], ws[1], bs[1], ws[2], bs[2]]
    tape = ad.Tape()
    vs = [tape.variable(p) for p in flat]
    grads = tape.gradient(net(vs), vs)

    for i, p in enumerate(flat):
        def f(pi, i=i):
            args = [ad.tensor(q) for q in flat]
            args[i] = ad.tensor(pi)
            return float(net(args).value)

        assert_grad_close(grads[i], fd_grad(f, p), rel=1e-5)


def test_gradient_linearity():
    """grad(a*f + b*g) equals a*grad(f) + b*grad(g) to 1e-12."""
    rng = np.random.default_rng(3)
    x0 = rng.normal(size=(3, 2))
    a, b = 1.7, -0.4

    def f(x):
        return ad.mean(ad.row_sumsq(ad.elu(x)))

    def g(x):
        return ad.total_sum(ad.mul(ad.sin(x), ad.cos(x)))

    tape = ad.Tape()
    x = tape.variable(x0)
    (g_comb,) = tape.gradient(ad.add(ad.smul(f(x), a), ad.smul(g(x), b)), [x])

    tape_f = ad.Tape()
    xf = tape_f.variable(x0)
    (gf,) = tape_f.gradient(f(xf), [xf])
    tape_g = ad.Tape()
    xg = tape_g.variable(x0)
    (gg,) = tape_g.gradient(g(xg), [xg])

    np.testing.assert_allclose(g_comb, a * gf + b * gg, atol=1e-12, rtol=0)
