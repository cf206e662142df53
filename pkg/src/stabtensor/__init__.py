"""Stabilized infinite tensor products of C0(R): normal forms, characters, states and representations."""
from .errors import StabTensorError
from .fnalg import ONE, ZERO, PiecewisePoly, ScalarFn, bump_power, make_bump, modulate
from .kernels import BACKEND
from .measures import Gaussian, ProductMeasure, Uniform
from .tensor import ElemTensor, StabSeq, TailClass, TensorElem, constant_seq, periodic_seq

__version__ = "0.1.0"

__all__ = [
    "StabTensorError", "ONE", "ZERO", "PiecewisePoly", "ScalarFn", "bump_power", "make_bump", "modulate",
    "BACKEND", "Gaussian", "ProductMeasure", "Uniform", "ElemTensor", "StabSeq", "TailClass",
    "TensorElem", "constant_seq", "periodic_seq",
]
