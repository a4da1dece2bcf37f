"""Central finite-difference gradient checking."""
import numpy as np

from .autograd import backward


def numeric_grad(fn, arrays, h=1e-6):
    """Central differences of scalar ``fn()`` w.r.t. every entry of each array (edited in place)."""
    out = []
    for a in arrays:
        g = np.zeros_like(a, dtype=np.float64)
        for i in np.ndindex(a.shape):
            orig = a[i]
            a[i] = orig + h
            up = float(fn().data)
            a[i] = orig - h
            down = float(fn().data)
            a[i] = orig
            g[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def relative_error(a, b):
    a, b = np.ravel(a).astype(np.float64), np.ravel(b).astype(np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if denom == 0 else float(np.linalg.norm(a - b) / denom)


def check_gradients(fn, tensors, h=1e-6):
    """Worst relative error between analytic and numeric gradients over ``tensors``."""
    backward(fn(), tensors)
    analytic = [t.grad.copy() for t in tensors]
    numeric = numeric_grad(fn, [t.data for t in tensors], h)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))
