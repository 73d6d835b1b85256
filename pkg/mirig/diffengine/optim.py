from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field

from mirig.constants import DEFAULT_LEARNING_RATE
from mirig.diffengine.errors import NonFiniteError, ShapeError
from mirig.diffengine.tensor import ParamSet


class OptimizerConfig(BaseModel):
    algorithm: Literal["sgd", "adam"] = "adam"
    lr: float = Field(default=DEFAULT_LEARNING_RATE, gt=0)
    momentum: float = Field(default=0.0, ge=0, lt=1)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)


@dataclass
class Optimizer:
    """
    Stateful SGD (optional momentum) or Adam. Moment buffers persist between
    calls to `step`; a rejected step leaves both parameters and buffers untouched.

    """

    config: OptimizerConfig
    steps: int = 0
    first_moment: dict[str, NDArray] = field(default_factory=dict)
    second_moment: dict[str, NDArray] = field(default_factory=dict)

    def step(self, params: ParamSet, grads: Mapping[str, NDArray]) -> ParamSet:
        for name in params:
            grad = grads.get(name)
            if grad is None:
                raise ShapeError(f"No gradient supplied for parameter '{name}'")
            if grad.shape != params[name].shape:
                raise ShapeError(
                    f"Gradient for '{name}' has shape {grad.shape}, parameter has "
                    f"{params[name].shape}"
                )
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError(
                    f"Non-finite gradient for parameter '{name}'", parameter=name
                )

        config = self.config
        self.steps += 1
        updated: dict[str, NDArray] = {}

        for name in params:
            value = params[name]
            grad = np.asarray(grads[name], dtype=value.dtype)

            if config.algorithm == "sgd":
                if config.momentum > 0:
                    buffer = self.first_moment.get(name)
                    buffer = (
                        grad.copy()
                        if buffer is None
                        else config.momentum * buffer + grad
                    )
                    self.first_moment[name] = buffer
                    grad = buffer
                updated[name] = value - config.lr * grad
                continue

            m = self.first_moment.get(name, np.zeros_like(value))
            v = self.second_moment.get(name, np.zeros_like(value))
            m = config.beta1 * m + (1 - config.beta1) * grad
            v = config.beta2 * v + (1 - config.beta2) * grad * grad
            self.first_moment[name] = m
            self.second_moment[name] = v
            m_hat = m / (1 - config.beta1**self.steps)
            v_hat = v / (1 - config.beta2**self.steps)
            updated[name] = value - config.lr * m_hat / (np.sqrt(v_hat) + config.eps)

        return ParamSet(values=updated, rng_seed=params.rng_seed)

    def state_arrays(self) -> dict[str, NDArray]:
        """
        Flat view of the moment buffers for checkpointing.

        """
        arrays = {f"optim.m.{k}": v for k, v in self.first_moment.items()}
        arrays.update({f"optim.v.{k}": v for k, v in self.second_moment.items()})
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, NDArray], steps: int) -> None:
        self.steps = steps
        self.first_moment = {
            k.removeprefix("optim.m."): v.copy()
            for k, v in arrays.items()
            if k.startswith("optim.m.")
        }
        self.second_moment = {
            k.removeprefix("optim.v."): v.copy()
            for k, v in arrays.items()
            if k.startswith("optim.v.")
        }
