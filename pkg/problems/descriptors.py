"""JSON problem descriptors, e.g. ``{"family": "double_well", "sigma": 0.3, "x0": 2.0, "T": 1.0}``."""
import math
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from sde_model import SodeProblem
from .double_well import make_double_well
from .linear import make_additive_linear, make_gbm
from .oscillator import make_oscillator


class _Descriptor(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    T: float = Field(default=1.0, gt=0.0)


class DoubleWellDescriptor(_Descriptor):
    family: Literal["double_well"] = "double_well"
    sigma: float = Field(ge=0.0)
    x0: float = 2.0

    def build(self) -> SodeProblem:
        return make_double_well(self.sigma, x0=self.x0, T=self.T)


class OscillatorDescriptor(_Descriptor):
    family: Literal["stochastic_oscillator"] = "stochastic_oscillator"
    mu: float = 0.4
    theta: float = 1.0
    sigma1: float = 0.5
    sigma2: float = 0.6
    r0: float = Field(default=1.97, gt=0.0)
    phi0: float = math.pi / 4

    def build(self) -> SodeProblem:
        return make_oscillator(self.mu, self.theta, self.sigma1, self.sigma2, self.r0, self.phi0, T=self.T)


class GbmDescriptor(_Descriptor):
    family: Literal["geometric_brownian"] = "geometric_brownian"
    mu: float = 1.0
    sigma: float = 0.5
    x0: float = 1.0

    def build(self) -> SodeProblem:
        return make_gbm(self.mu, self.sigma, x0=self.x0, T=self.T)


class AdditiveLinearDescriptor(_Descriptor):
    family: Literal["additive_linear"] = "additive_linear"
    lam: float = Field(default=1.0, alias="lambda")
    sigma: float = 0.5
    x0: float = 1.0

    def build(self) -> SodeProblem:
        return make_additive_linear(self.lam, self.sigma, x0=self.x0, T=self.T)


ParametricProblem = Annotated[
    Union[DoubleWellDescriptor, OscillatorDescriptor, GbmDescriptor, AdditiveLinearDescriptor],
    Field(discriminator="family"),
]

_ADAPTER = TypeAdapter(ParametricProblem)


def problem_from_dict(data: dict) -> ParametricProblem:
    return _ADAPTER.validate_python(data)


def problem_from_json(text: str) -> ParametricProblem:
    return _ADAPTER.validate_json(text)
