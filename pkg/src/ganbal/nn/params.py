from collections import OrderedDict

import numpy as np

from .autograd import Tensor


class ParamSet:
    """Ordered, uniquely named trainable arrays with matching gradient buffers."""

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._params = OrderedDict()

    def add(self, name, array):
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        data = np.ascontiguousarray(array, dtype=self.dtype)
        t = Tensor(data, requires_grad=True, name=name)
        t.grad = np.zeros_like(data)
        self._params[name] = t
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def values(self):
        return list(self._params.values())

    def items(self):
        return list(self._params.items())

    def count(self):
        return int(sum(t.data.size for t in self._params.values()))

    def zero_grad(self):
        for t in self._params.values():
            t.grad = np.zeros_like(t.data)

    def snapshot(self):
        """Copies of the parameter arrays, keyed by name."""
        return OrderedDict((k, t.data.copy()) for k, t in self._params.items())

    def load(self, arrays):
        for k, v in arrays.items():
            if k not in self._params:
                raise KeyError(f"unknown parameter {k!r}")
            if v.shape != self._params[k].shape:
                raise ValueError(f"shape mismatch for {k!r}: {v.shape} vs {self._params[k].shape}")
            self._params[k].data = np.ascontiguousarray(v, dtype=self.dtype)
            self._params[k].grad = np.zeros_like(self._params[k].data)
