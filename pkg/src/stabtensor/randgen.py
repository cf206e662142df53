"""Random normal-form objects for property sweeps (CLI algebra-check and tests)."""
from __future__ import annotations

import numpy as np

from .fnalg import ScalarFn, bump_power, modulate
from .tensor import ElemTensor, StabSeq, TailClass, TensorElem, periodic_seq


def random_coeff(rng: np.random.Generator) -> complex:
    return complex(rng.normal(), rng.normal())


def random_slot(rng: np.random.Generator, max_level: int = 4, max_power: int = 2,
                max_terms: int = 2, modulated: bool = True) -> ScalarFn:
    """Small sum of scaled, possibly modulated bump powers (constant part 0)."""
    out = ScalarFn()
    for _ in range(int(rng.integers(1, max_terms + 1))):
        g = bump_power(int(rng.integers(1, max_level + 1)), int(rng.integers(1, max_power + 1)))
        if modulated and rng.random() < 0.5:
            g = modulate(float(np.round(rng.normal(), 3)), g)
        out = out + g.scale(random_coeff(rng))
    return out


def default_seqs() -> list[StabSeq]:
    return [periodic_seq("f", [1, 2, 3]), periodic_seq("g", [2], prefix=[1])]


def random_elem(rng: np.random.Generator, tail: TailClass, max_slot: int = 5,
                max_devs: int = 2) -> ElemTensor:
    n = int(rng.integers(0, max_devs + 1))
    slots = rng.choice(np.arange(1, max_slot + 1), size=n, replace=False)
    return ElemTensor(tail, {int(j): random_slot(rng) for j in slots}, random_coeff(rng))


def random_homogeneous(rng: np.random.Generator, seq: StabSeq, ell: int | None = None,
                       max_terms: int = 2, **kw) -> TensorElem:
    ell = ell if ell is not None else int(rng.integers(1, 3))
    tail = TailClass([(seq, ell)])
    return TensorElem(random_elem(rng, tail, **kw) for _ in range(int(rng.integers(1, max_terms + 1))))


def random_tensor(rng: np.random.Generator, seqs: list[StabSeq] | None = None, max_terms: int = 3,
                  **kw) -> TensorElem:
    """Combination over random tail classes (including mixed ones)."""
    seqs = seqs or default_seqs()
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        factors = [(s, int(rng.integers(1, 3))) for s in seqs if rng.random() < 0.6]
        terms.append(random_elem(rng, TailClass(factors or [(seqs[0], 1)]), **kw))
    return TensorElem(terms)


def random_support(rng: np.random.Generator, max_slot: int = 5, scale: float = 1.0) -> dict:
    n = int(rng.integers(1, 3))
    slots = rng.choice(np.arange(1, max_slot + 1), size=n, replace=False)
    return {int(j): float(np.round(scale * rng.normal(), 3)) for j in slots}
