"""Central finite differences, kept independent of the analytic backward pass."""
import numpy as np

from dualnoise.nn import DenseNet

FD_STEP = 1e-5
FD_RTOL = 1e-4
# entries smaller than this are compared absolutely (relative error is meaningless near 0)
FD_FLOOR = 1e-6


def numeric_grads(loss_fn, net: DenseNet, h=FD_STEP):
    """d loss_fn(net) / d every parameter entry, by central differences."""
    out = []
    for p in net.params():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + h
            up = loss_fn(net)
            p[i] = old - h
            down = loss_fn(net)
            p[i] = old
            g[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def max_rel_error(analytic, numeric) -> float:
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), FD_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_net_shape(rng):
    """<= 3 layers, <= 32 units per hidden layer."""
    n_hidden = int(rng.integers(0, 3))
    dims = [int(rng.integers(2, 9))]
    dims += [int(rng.integers(2, 33)) for _ in range(n_hidden)]
    dims.append(int(rng.integers(2, 6)))
    return tuple(dims)


KINK_MARGIN = 1e-3


def kink_free_inputs(net: DenseNet, rng, n: int, scale=1.0, margin=KINK_MARGIN):
    """Draw ``n`` inputs whose hidden pre-activations all sit at least ``margin`` from 0.

    Central differences straddling a ReLU kink measure the kink, not the gradient.
    """
    while True:
        x = rng.normal(scale=scale, size=(n, net.layer_dims[0]))
        h, ok = x, True
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            z = h @ w + b
            ok &= bool(np.all(np.abs(z) > margin))
            h = np.maximum(z, 0.0)
        if ok:
            return x
