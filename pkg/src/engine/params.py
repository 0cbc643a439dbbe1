"""Named parameter store and the Adam optimizer."""

import math
from typing import Iterator, Mapping, Optional

import numpy as np

from src.core.errors import ShapeError
from src.engine.tensor import Tensor

# Checkpoints hold float32 only; the step is split into base-2**16 digits so each stays exact.
STEP_BASE = 2**16


def encode_step(step: int) -> np.ndarray:
    """Step counter as ``[high, low]`` float32 digits, exact below 2**40."""
    high, low = divmod(int(step), STEP_BASE)
    if high >= 2**24:
        raise ValueError(f"step {step} does not fit a checkpoint")
    return np.array([high, low], dtype=np.float32)


def decode_step(value: np.ndarray) -> int:
    """Inverse of ``encode_step``; a single value is read as the step itself."""
    digits = [int(d) for d in np.asarray(value).ravel()]
    if len(digits) == 1:
        return digits[0]
    high, low = digits[:2]
    return high * STEP_BASE + low


class ParamStore:
    """Named trainable arrays with their Adam moments and a step counter.

    Parameters are ``Tensor`` objects with ``requires_grad=True``; models look them
    up by dotted name (``"down.0.weight"``) so one store can be saved, restored and
    partially loaded by prefix.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step = 0

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._params[name]
        except KeyError:
            raise KeyError(f"Unknown parameter: {name}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self, prefix: str = "") -> list[str]:
        return [name for name in self._params if name.startswith(prefix)]

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._params.items())

    def add(self, name: str, value: np.ndarray) -> Tensor:
        """Register a parameter with zeroed moments."""
        if name in self._params:
            raise KeyError(f"Parameter already registered: {name}")
        tensor = Tensor(np.array(value, dtype=self.dtype), requires_grad=True, name=name)
        self._params[name] = tensor
        self._m[name] = np.zeros_like(tensor.data)
        self._v[name] = np.zeros_like(tensor.data)
        return tensor

    def init_uniform(
        self,
        name: str,
        shape: tuple[int, ...],
        fan_in: int,
        rng: np.random.Generator,
    ) -> Tensor:
        """Register a parameter drawn uniformly from ``+-1/sqrt(fan_in)``."""
        bound = 1.0 / math.sqrt(max(fan_in, 1))
        return self.add(name, rng.uniform(-bound, bound, size=shape))

    def moments(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        return self._m[name], self._v[name]

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.grad = None

    def grads(self, prefix: str = "") -> dict[str, np.ndarray]:
        """Current gradients, zero-filled for parameters the last backward did not reach."""
        return {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in self._params.items()
            if name.startswith(prefix)
        }

    def state_dict(self, include_optimizer: bool = False) -> dict[str, np.ndarray]:
        """Flat name -> array mapping, optionally with Adam moments and step."""
        state = {name: t.data for name, t in self._params.items()}
        if include_optimizer:
            for name in self._params:
                state[f"optim.m.{name}"] = self._m[name]
                state[f"optim.v.{name}"] = self._v[name]
            state["optim.step"] = encode_step(self.step)
        return state

    def load_state_dict(
        self,
        state: Mapping[str, np.ndarray],
        prefix: str = "",
        strict: bool = True,
    ) -> list[str]:
        """Copy arrays into registered parameters whose name starts with ``prefix``.

        Returns:
            Names that were loaded.

        Raises:
            KeyError: In strict mode, when a matching parameter is missing from ``state``.
            ShapeError: When a stored array does not match the parameter shape.
        """
        loaded = []
        for name in self.names(prefix):
            if name not in state:
                if strict:
                    raise KeyError(f"Checkpoint is missing parameter: {name}")
                continue
            value = np.asarray(state[name])
            target = self._params[name]
            if value.shape != target.shape:
                raise ShapeError(
                    f"Parameter {name}: checkpoint shape {value.shape} != model shape {target.shape}"
                )
            target.data = value.astype(self.dtype, copy=True)
            m_key, v_key = f"optim.m.{name}", f"optim.v.{name}"
            if m_key in state and v_key in state:
                self._m[name] = np.asarray(state[m_key], dtype=self.dtype).reshape(target.shape)
                self._v[name] = np.asarray(state[v_key], dtype=self.dtype).reshape(target.shape)
            loaded.append(name)
        if "optim.step" in state:
            self.step = decode_step(state["optim.step"])
        return loaded

    def use(self, tensors: Mapping[str, Tensor]) -> None:
        """Swap in caller-owned tensors for registered names (gradient checks)."""
        for name, tensor in tensors.items():
            if name in self._params:
                self._params[name] = tensor

    def freeze(self, prefix: str) -> None:
        """Stop recording gradients for parameters under ``prefix``."""
        for name in self.names(prefix):
            self._params[name].requires_grad = False


def adam_step(
    store: ParamStore,
    grads: Mapping[str, np.ndarray],
    lr: float,
    betas: tuple[float, float] = (0.8, 0.99),
    eps: float = 1e-8,
    names: Optional[list[str]] = None,
) -> ParamStore:
    """Apply one bias-corrected Adam update in place and advance the step counter.

    Args:
        store: Parameters and moments to update
        grads: Gradient per parameter name; names missing here are left untouched
        lr: Learning rate
        betas: Exponential decay rates of the first and second moments
        eps: Denominator floor
        names: Restrict the update to these parameters

    Returns:
        The same store, updated

    Raises:
        ShapeError: If a gradient does not match its parameter shape
    """
    beta1, beta2 = betas
    targets = names if names is not None else [n for n in store if n in grads]
    for name in targets:
        param = store[name]
        if np.shape(grads[name]) != param.shape:
            raise ShapeError(
                f"Gradient for {name} has shape {np.shape(grads[name])}, parameter {param.shape}"
            )

    store.step += 1
    t = store.step
    correction1 = 1.0 - beta1**t
    correction2 = 1.0 - beta2**t
    for name in targets:
        param = store[name]
        grad = np.asarray(grads[name], dtype=store.dtype)
        m, v = store.moments(name)
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.data = (param.data - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(store.dtype)
    return store
