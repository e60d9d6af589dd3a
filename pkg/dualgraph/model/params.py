from collections import OrderedDict
from typing import Iterator

import numpy as np

from dualgraph.autodiff.tensor import Tensor


class ParamStore:
    """
    Named trainable tensors in creation order. Initialization draws from one
    seeded generator, so equal seeds give equal parameters.
    """

    def __init__(self, seed: int = 0):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self._rng = np.random.default_rng(seed)

    def glorot(self, name: str, shape: tuple, fan_in: int, fan_out: int) -> Tensor:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return self.add(name, self._rng.uniform(-limit, limit, size=shape))

    def zeros(self, name: str, shape: tuple) -> Tensor:
        return self.add(name, np.zeros(shape))

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter '{name}' already exists")
        tensor = Tensor(value, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def as_dict(self) -> dict[str, Tensor]:
        return dict(self._params)

    def count(self) -> int:
        return int(sum(t.size for t in self._params.values()))

    def count_by_block(self) -> dict[str, int]:
        """Parameter counts keyed by the name prefix before the first dot."""
        counts: dict[str, int] = {}
        for name, tensor in self._params.items():
            block = name.split(".", 1)[0]
            counts[block] = counts.get(block, 0) + int(tensor.size)
        return counts

    def shapes(self) -> dict[str, list[int]]:
        return {name: list(t.shape) for name, t in self._params.items()}

    def load(self, values: dict[str, np.ndarray]):
        """Replaces every parameter value; names and shapes must match exactly."""
        missing = set(self._params) - set(values)
        extra = set(values) - set(self._params)
        if missing or extra:
            raise KeyError(
                f"parameter names differ: missing {sorted(missing)[:5]}, unexpected {sorted(extra)[:5]}"
            )
        for name, tensor in self._params.items():
            value = np.asarray(values[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ValueError(
                    f"parameter '{name}' has shape {value.shape}, expected {tensor.shape}"
                )
            tensor.value = value.copy()
