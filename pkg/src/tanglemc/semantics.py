"""Truth-set evaluation on models, with the tangle as a greatest fixed point.

The tangle of a list of sets S_1..S_k is the largest A with
A <= down(S_i & A) for every i, computed by the decreasing iteration
A_0 = W, A_{j+1} = A_j & AND_i down(S_i & A_j), which reaches the fixed
point after at most |W| shrinking steps.  Two independent oracles are kept
alongside: a literal union over all subsets (exponential, guarded), and a
characterisation through reflexive clusters meeting every S_i.

Formulas are compiled once per frame into closures over a valuation
environment; on frames with at most 12 worlds the derivative and preimage
operators run off precomputed 2^n tables, which makes exhaustive valuation
sweeps cheap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .formula import (
    And,
    Box,
    Diamond,
    Formula,
    Implies,
    Neg,
    Next,
    Or,
    Tangle,
    Var,
    vars_of,
)
from .frame import Frame, _bits

_TABLE_BITS = 12

EXHAUSTIVE_BITS_LIMIT = 24


class Model:
    """A frame plus a valuation; variables absent from the mapping denote the empty set."""

    __slots__ = ("frame", "valuation", "_masks")

    def __init__(self, frame: Frame, valuation: Mapping[str, Iterable[str]] | None = None):
        self.frame = frame
        val = {}
        masks = {}
        for p, names in (valuation or {}).items():
            names = frozenset(names)
            val[p] = names
            masks[p] = frame.mask(names)
        self.valuation = val
        self._masks = masks


def tangle_fixpoint(
    down: Callable[[int], int], full: int, masks: Sequence[int]
) -> tuple[int, int]:
    """Greatest fixed point of A -> A & AND_i down(S_i & A), with step count."""
    a = full
    steps = 0
    while True:
        new = a
        for m in masks:
            new &= down(m & a)
            if not new:
                break
        if new == a:
            return a, steps
        a = new
        steps += 1


class Evaluator:
    """Compiles formulas against one frame; reusable across valuations."""

    def __init__(self, frame: Frame):
        self.frame = frame
        self.full = frame.full_mask
        n = frame.n
        inv = [0] * n
        for w in range(n):
            inv[frame.func_index(w)] |= 1 << w
        self._inv = inv
        if n <= _TABLE_BITS:
            down_t = [0] * (1 << n)
            pre_t = [0] * (1 << n)
            pred = [frame.pred_mask(i) for i in range(n)]
            for m in range(1, 1 << n):
                lsb = m & -m
                i = lsb.bit_length() - 1
                down_t[m] = down_t[m ^ lsb] | pred[i]
                pre_t[m] = pre_t[m ^ lsb] | inv[i]
            self.down = down_t.__getitem__
            self.preimage = pre_t.__getitem__
        else:
            self.down = frame.down_mask
            self.preimage = self._preimage_sparse

    def _preimage_sparse(self, mask: int) -> int:
        out = 0
        inv = self._inv
        for v in _bits(mask):
            out |= inv[v]
        return out

    def compile(self, phi: Formula) -> Callable[[Mapping[str, int]], int]:
        full = self.full
        if isinstance(phi, Var):
            name = phi.name
            return lambda env: env.get(name, 0)
        if isinstance(phi, Neg):
            c = self.compile(phi.child)
            return lambda env: full ^ c(env)
        if isinstance(phi, And):
            l, r = self.compile(phi.left), self.compile(phi.right)
            return lambda env: l(env) & r(env)
        if isinstance(phi, Or):
            l, r = self.compile(phi.left), self.compile(phi.right)
            return lambda env: l(env) | r(env)
        if isinstance(phi, Implies):
            l, r = self.compile(phi.left), self.compile(phi.right)
            return lambda env: (full ^ l(env)) | r(env)
        if isinstance(phi, Diamond):
            c = self.compile(phi.child)
            down = self.down
            return lambda env: down(c(env))
        if isinstance(phi, Box):
            c = self.compile(phi.child)
            down = self.down
            return lambda env: full ^ down(full ^ c(env))
        if isinstance(phi, Next):
            c = self.compile(phi.child)
            pre = self.preimage
            return lambda env: pre(c(env))
        if isinstance(phi, Tangle):
            subs = [self.compile(a) for a in phi.args]
            down = self.down

            def ev(env):
                return tangle_fixpoint(down, full, [s(env) for s in subs])[0]

            return ev
        raise TypeError(f"not a formula: {phi!r}")


def truth_mask(model: Model, phi: Formula) -> int:
    ev = Evaluator(model.frame)
    return ev.compile(phi)(model._masks)


def truth_set(model: Model, phi: Formula) -> frozenset[str]:
    """Worlds where phi holds in the model."""
    return model.frame.names(truth_mask(model, phi))


def _set_masks(frame: Frame, sets: Sequence[Iterable[str]]) -> list[int]:
    if not sets:
        raise ValueError("tangle requires a nonempty list of sets")
    return [frame.mask(s) for s in sets]


def tangled_derivative(frame: Frame, sets: Sequence[Iterable[str]]) -> frozenset[str]:
    """Largest A such that every given set is dense in A (fixed-point iteration)."""
    masks = _set_masks(frame, sets)
    out, _ = tangle_fixpoint(frame.down_mask, frame.full_mask, masks)
    return frame.names(out)


def tangle_iterations(frame: Frame, sets: Sequence[Iterable[str]]) -> int:
    masks = _set_masks(frame, sets)
    return tangle_fixpoint(frame.down_mask, frame.full_mask, masks)[1]


def tangled_oracle_subsets(frame: Frame, sets: Sequence[Iterable[str]]) -> frozenset[str]:
    """Literal definition: union of all subsets A in which every set is dense."""
    if frame.n > 20:
        raise ValueError("subset oracle limited to 20 worlds")
    masks = _set_masks(frame, sets)
    down = frame.down_mask
    union = 0
    for a in range(1 << frame.n):
        if all(not (a & ~down(m & a)) for m in masks):
            union |= a
    return frame.names(union)


def tangled_oracle_clusters(frame: Frame, sets: Sequence[Iterable[str]]) -> frozenset[str]:
    """Characterisation on finite frames: worlds below a reflexive cluster
    that meets every set (reflexive closure on the reaching world)."""
    masks = _set_masks(frame, sets)
    out = 0
    for c in frame.cluster_masks():
        rep = next(_bits(c))
        if not frame.is_reflexive(rep):
            continue
        if any(not (c & m) for m in masks):
            continue
        reach = c
        for v in _bits(c):
            reach |= frame.pred_mask(v)
        out |= reach
    return frame.names(out)


@dataclass(frozen=True)
class Countermodel:
    valuation: dict[str, tuple[str, ...]]
    world: str


@dataclass(frozen=True)
class Verdict:
    valid: bool
    mode: str
    checked: int
    countermodel: Countermodel | None = None
    seed: int | None = None


def _env_valuation(frame: Frame, variables: Sequence[str], env: Mapping[str, int]):
    return {v: tuple(frame.sorted_names(env.get(v, 0))) for v in variables}


def valid_on_frame(
    frame: Frame,
    phi: Formula,
    mode: str = "exhaustive",
    samples: int = 1000,
    seed: int = 0,
) -> Verdict:
    """Check validity of phi over valuations of the frame.

    Exhaustive mode sweeps all valuations of the variables of phi (guarded
    by ``|worlds| * |vars| <= 24``) in ascending bitmask order; sampled mode
    draws `samples` pseudo-random valuations from the seed.  The first
    failing (valuation, world) in that order is reported.
    """
    variables = sorted(vars_of(phi))
    n = frame.n
    full = frame.full_mask
    ev = Evaluator(frame)
    fn = ev.compile(phi)
    if mode == "exhaustive":
        bits = n * len(variables)
        if bits > EXHAUSTIVE_BITS_LIMIT:
            raise ValueError(
                f"exhaustive validity needs |worlds|*|vars| <= {EXHAUSTIVE_BITS_LIMIT}, got {bits}"
            )
        checked = 0
        for code in range(1 << bits):
            env = {
                v: (code >> (i * n)) & full for i, v in enumerate(variables)
            }
            checked += 1
            m = fn(env)
            if m != full:
                world = frame.worlds[_first_zero(m, n)]
                return Verdict(
                    False,
                    "exhaustive",
                    checked,
                    Countermodel(_env_valuation(frame, variables, env), world),
                )
        return Verdict(True, "exhaustive", checked)
    if mode == "sampled":
        rng = random.Random(seed)
        for k in range(samples):
            env = {v: rng.getrandbits(n) & full for v in variables}
            m = fn(env)
            if m != full:
                world = frame.worlds[_first_zero(m, n)]
                return Verdict(
                    False,
                    "sampled",
                    k + 1,
                    Countermodel(_env_valuation(frame, variables, env), world),
                    seed=seed,
                )
        return Verdict(True, "sampled", samples, seed=seed)
    raise ValueError(f"unknown mode {mode!r}")


def _first_zero(mask: int, n: int) -> int:
    for i in range(n):
        if not (mask >> i) & 1:
            return i
    raise ValueError("mask has no zero bit")
