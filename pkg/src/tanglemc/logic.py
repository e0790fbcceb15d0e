"""Axiom schemas, logics over frame classes, soundness suites, and search.

Schemas (ASCII ids in brackets):

    K         [d](p -> q) -> ([d]p -> [d]q)
    4         [d]p -> [d][d]p
    D         <d>T
    Next-neg  ~O p <-> O ~p
    Next-and  O (p & q) <-> O p & O q
    C-dot     <d.>O p -> O <d.>p
    C-dia     <d>O p -> O <d>p
    Fix-tan   <t>{F} -> AND_{f in F} <d>(f & <t>{F})
    Ind-tan   [d.](t -> AND_{f in F} <d>(f & t)) -> (t -> <t>{F})
    CTan-dot  dotted tangle of O F -> O dotted tangle of F
    CTan-dia  <t>{O F} -> O <t>{F}

The four logics pair an axiom list with a frame class: K4C / K4DC ask for
monotone maps, K4I / K4DI for strictly monotone maps, and the D variants
additionally for seriality.  All classes are transitive.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

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
    big_and,
    dot_box,
    dot_diamond,
    dot_tangle,
    pretty,
    top,
    vars_of,
)
from .frame import ClassFlags, Frame, _bits, transitive_closure
from .semantics import Countermodel, Evaluator, Verdict, valid_on_frame
from . import story as story_mod


def _iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


@dataclass(frozen=True)
class Schema:
    """An axiom schema; slots are formulas, an optional formula set, and an
    optional extra formula (used by the induction schema)."""

    name: str
    formula_slots: int
    set_slot: bool
    theta_slot: bool
    _build: Callable[..., Formula]

    def instantiate(
        self,
        formulas: Sequence[Formula] = (),
        formula_set: Iterable[Formula] | None = None,
        theta: Formula | None = None,
    ) -> Formula:
        if len(formulas) != self.formula_slots:
            raise ValueError(
                f"{self.name} takes {self.formula_slots} formula(s), got {len(formulas)}"
            )
        if self.set_slot:
            if formula_set is None:
                raise ValueError(f"{self.name} needs a formula set")
            tangle = Tangle(tuple(formula_set))
        elif formula_set is not None:
            raise ValueError(f"{self.name} takes no formula set")
        else:
            tangle = None
        if self.theta_slot and theta is None:
            raise ValueError(f"{self.name} needs a theta formula")
        if not self.theta_slot and theta is not None:
            raise ValueError(f"{self.name} takes no theta formula")
        args = list(formulas)
        if tangle is not None:
            args.append(tangle)
        if theta is not None:
            args.append(theta)
        return self._build(*args)


def _fix_tan(t: Tangle) -> Formula:
    return Implies(t, big_and([Diamond(And(f, t)) for f in t.args]))


def _ind_tan(t: Tangle, theta: Formula) -> Formula:
    body = big_and([Diamond(And(f, theta)) for f in t.args])
    return Implies(dot_box(Implies(theta, body)), Implies(theta, t))


def _ctan_dot(t: Tangle) -> Formula:
    return Implies(dot_tangle([Next(f) for f in t.args]), Next(dot_tangle(t.args)))


def _ctan_dia(t: Tangle) -> Formula:
    return Implies(Tangle(tuple(Next(f) for f in t.args)), Next(t))


SCHEMAS: dict[str, Schema] = {
    s.name: s
    for s in [
        Schema("K", 2, False, False,
               lambda p, q: Implies(Box(Implies(p, q)), Implies(Box(p), Box(q)))),
        Schema("4", 1, False, False, lambda p: Implies(Box(p), Box(Box(p)))),
        Schema("D", 0, False, False, lambda: Diamond(top())),
        Schema("Next-neg", 1, False, False,
               lambda p: _iff(Neg(Next(p)), Next(Neg(p)))),
        Schema("Next-and", 2, False, False,
               lambda p, q: _iff(Next(And(p, q)), And(Next(p), Next(q)))),
        Schema("C-dot", 1, False, False,
               lambda p: Implies(dot_diamond(Next(p)), Next(dot_diamond(p)))),
        Schema("C-dia", 1, False, False,
               lambda p: Implies(Diamond(Next(p)), Next(Diamond(p)))),
        Schema("Fix-tan", 0, True, False, _fix_tan),
        Schema("Ind-tan", 0, True, True, _ind_tan),
        Schema("CTan-dot", 0, True, False, _ctan_dot),
        Schema("CTan-dia", 0, True, False, _ctan_dia),
    ]
}


def instantiate(
    schema: str | Schema,
    formulas: Sequence[Formula] = (),
    formula_set: Iterable[Formula] | None = None,
    theta: Formula | None = None,
) -> Formula:
    if isinstance(schema, str):
        schema = SCHEMAS[schema]
    return schema.instantiate(formulas, formula_set, theta)


_BASE = ("K", "4", "Next-neg", "Next-and", "Fix-tan", "Ind-tan")


@dataclass(frozen=True)
class Logic:
    name: str
    schemas: tuple[str, ...]
    serial: bool
    strict: bool

    def admits(self, flags: ClassFlags) -> bool:
        if not flags.transitive or not flags.monotonic:
            return False
        if self.strict and not flags.strictly_monotonic:
            return False
        if self.serial and not flags.serial:
            return False
        return True


LOGICS: dict[str, Logic] = {
    "K4C": Logic("K4C", _BASE + ("C-dot", "CTan-dot"), serial=False, strict=False),
    "K4DC": Logic("K4DC", _BASE + ("C-dot", "CTan-dot", "D"), serial=True, strict=False),
    "K4I": Logic("K4I", _BASE + ("C-dia", "CTan-dia"), serial=False, strict=True),
    "K4DI": Logic("K4DI", _BASE + ("C-dia", "CTan-dia", "D"), serial=True, strict=True),
}


# ---------------------------------------------------------------------------
# random generation

def random_formula(rng: random.Random, variables: Sequence[str], depth: int) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        return Var(rng.choice(variables))
    kind = rng.choice(("neg", "and", "or", "implies", "dia", "box", "next", "tangle"))
    if kind == "neg":
        return Neg(random_formula(rng, variables, depth - 1))
    if kind == "and":
        return And(random_formula(rng, variables, depth - 1),
                   random_formula(rng, variables, depth - 1))
    if kind == "or":
        return Or(random_formula(rng, variables, depth - 1),
                  random_formula(rng, variables, depth - 1))
    if kind == "implies":
        return Implies(random_formula(rng, variables, depth - 1),
                       random_formula(rng, variables, depth - 1))
    if kind == "dia":
        return Diamond(random_formula(rng, variables, depth - 1))
    if kind == "box":
        return Box(random_formula(rng, variables, depth - 1))
    if kind == "next":
        return Next(random_formula(rng, variables, depth - 1))
    args = [random_formula(rng, variables, depth - 1) for _ in range(rng.choice((1, 2)))]
    return Tangle(tuple(args))


def _monotone_ok(succ: Sequence[int], func: Sequence[int], strict: bool) -> bool:
    for w in range(len(succ)):
        fw = func[w]
        for v in _bits(succ[w]):
            fv = func[v]
            if not (succ[fw] >> fv) & 1 and (strict or fw != fv):
                return False
    return True


def random_class_frame(
    rng: random.Random, max_worlds: int, logic: Logic, func_tries: int = 64
) -> Frame:
    """Rejection-sample a frame of the logic's class: random edges, transitive
    closure, seriality repair, then map resampling with identity fallback."""
    n = rng.randint(1, max_worlds)
    p = rng.choice((0.15, 0.3, 0.5, 0.7))
    succ = [0] * n
    for i in range(n):
        for j in range(n):
            if rng.random() < p:
                succ[i] |= 1 << j
    succ = transitive_closure(succ)
    if logic.serial:
        while True:
            holes = [w for w in range(n) if not succ[w]]
            if not holes:
                break
            for w in holes:
                succ[w] |= 1 << rng.randrange(n)
            succ = transitive_closure(succ)
    func = None
    for _ in range(func_tries):
        cand = [rng.randrange(n) for _ in range(n)]
        if _monotone_ok(succ, cand, logic.strict):
            func = cand
            break
    if func is None:
        func = list(range(n))  # identity is monotone and strictly monotone
    return Frame([f"w{i}" for i in range(n)], succ, func)


def _random_instance(rng: random.Random, schema: Schema, variables: Sequence[str],
                     depth: int) -> Formula:
    formulas = [random_formula(rng, variables, depth) for _ in range(schema.formula_slots)]
    formula_set = None
    theta = None
    if schema.set_slot:
        formula_set = [random_formula(rng, variables, depth)
                       for _ in range(rng.choice((1, 2)))]
    if schema.theta_slot:
        theta = random_formula(rng, variables, depth)
    return schema.instantiate(formulas, formula_set, theta)


@dataclass(frozen=True)
class SchemaViolation:
    schema: str
    formula: str
    frame: dict
    valuation: dict[str, tuple[str, ...]]
    world: str


@dataclass(frozen=True)
class SuiteReport:
    logic: str
    seed: int
    trials: int
    mode: str
    frames_checked: int
    instances_checked: int
    violations: tuple[SchemaViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "logic": self.logic,
            "seed": self.seed,
            "trials": self.trials,
            "mode": self.mode,
            "frames_checked": self.frames_checked,
            "instances_checked": self.instances_checked,
            "violations": [
                {
                    "schema": v.schema,
                    "formula": v.formula,
                    "frame": v.frame,
                    "valuation": {p: list(ws) for p, ws in v.valuation.items()},
                    "world": v.world,
                }
                for v in self.violations
            ],
        }


def soundness_suite(
    logic: Logic | str,
    trials: int,
    seed: int,
    max_worlds: int = 4,
    mode: str = "sampled",
    samples: int = 32,
    variables: Sequence[str] = ("p", "q"),
    formula_depth: int = 1,
    extra_schemas: Sequence[str] = (),
    frame_source: Callable[[random.Random], Frame] | None = None,
) -> SuiteReport:
    """Check every schema of the logic on random frames of its class.

    A sound configuration reports zero violations; `extra_schemas` and
    `frame_source` exist so tests can misconfigure the suite on purpose.
    """
    if isinstance(logic, str):
        logic = LOGICS[logic]
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    schema_names = tuple(logic.schemas) + tuple(extra_schemas)
    violations = []
    instances = 0
    for _ in range(trials):
        if frame_source is not None:
            frame = frame_source(rng)
        else:
            frame = random_class_frame(rng, max_worlds, logic)
        for name in schema_names:
            inst = _random_instance(rng, SCHEMAS[name], variables, formula_depth)
            instances += 1
            verdict = valid_on_frame(
                frame, inst, mode=mode, samples=samples, seed=rng.getrandbits(32)
            )
            if not verdict.valid:
                cm = verdict.countermodel
                violations.append(
                    SchemaViolation(name, pretty(inst), frame.to_dict(cm.valuation),
                                    dict(cm.valuation), cm.world)
                )
    return SuiteReport(
        logic.name, seed, trials, mode, trials, instances, tuple(violations)
    )


# ---------------------------------------------------------------------------
# countermodel search

@dataclass(frozen=True)
class SearchResult:
    verdict: str  # "countermodel" | "none-within-bounds"
    frame: Frame | None = None
    story: "story_mod.Story | None" = None
    valuation: dict[str, tuple[str, ...]] | None = None
    world: str | None = None
    frames_checked: int = 0
    valuations_checked: int = 0

    @property
    def found(self) -> bool:
        return self.verdict == "countermodel"


EXHAUSTIVE_SEARCH_LIMIT = 8


def _transitive_succs(n: int):
    """All transitive relations on n worlds, ascending by relation bitmask.

    Bit (i, j) of the mask sits at position i*n + j.
    """
    full = (1 << n) - 1
    for code in range(1 << (n * n)):
        succ = [(code >> (i * n)) & full for i in range(n)]
        ok = True
        for w in range(n):
            m = succ[w]
            while m:
                lsb = m & -m
                v = lsb.bit_length() - 1
                m ^= lsb
                if succ[v] & ~succ[w]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            yield succ


def countermodel_search(
    phi: Formula,
    logic: Logic | str,
    max_worlds: int = 3,
    max_duration: int = 0,
    seed: int = 0,
    samples: int = 2000,
) -> SearchResult:
    """Search the logic's frame class for a model refuting phi.

    Up to ``EXHAUSTIVE_SEARCH_LIMIT`` worlds the search enumerates frames in
    canonical order (world count, relation bitmask, function, valuation
    bitmask) and returns the first refutation.  Beyond that it samples
    random class frames and, when ``max_duration > 0``, random stories of at
    most that duration.  "none-within-bounds" is not a validity claim.
    """
    if isinstance(logic, str):
        logic = LOGICS[logic]
    if max_worlds <= EXHAUSTIVE_SEARCH_LIMIT:
        return _search_exhaustive(phi, logic, max_worlds)
    return _search_random(phi, logic, max_worlds, max_duration, seed, samples)


def _search_exhaustive(phi: Formula, logic: Logic, max_worlds: int) -> SearchResult:
    variables = sorted(vars_of(phi))
    k = len(variables)
    frames = 0
    vals = 0
    for n in range(1, max_worlds + 1):
        worlds = [f"w{i}" for i in range(n)]
        full = (1 << n) - 1
        for succ in _transitive_succs(n):
            if logic.serial and any(not m for m in succ):
                continue
            for func in itertools.product(range(n), repeat=n):
                if not _monotone_ok(succ, func, logic.strict):
                    continue
                frame = Frame(worlds, succ, func)
                frames += 1
                ev = Evaluator(frame)
                fn = ev.compile(phi)
                for code in range(1 << (n * k)):
                    env = {v: (code >> (i * n)) & full for i, v in enumerate(variables)}
                    vals += 1
                    m = fn(env)
                    if m != full:
                        world = next(w for i, w in enumerate(worlds) if not (m >> i) & 1)
                        valuation = {
                            v: tuple(frame.sorted_names(env.get(v, 0))) for v in variables
                        }
                        return SearchResult(
                            "countermodel", frame=frame, valuation=valuation,
                            world=world, frames_checked=frames, valuations_checked=vals,
                        )
    return SearchResult("none-within-bounds", frames_checked=frames, valuations_checked=vals)


def _search_random(
    phi: Formula, logic: Logic, max_worlds: int, max_duration: int, seed: int, samples: int
) -> SearchResult:
    variables = sorted(vars_of(phi))
    rng = random.Random(seed)
    frames = 0
    vals = 0
    for _ in range(samples):
        story = None
        if max_duration > 0 and rng.random() < 0.3:
            story = story_mod.random_story(rng, rng.randint(0, max_duration),
                                           serial=logic.serial, immersive=logic.strict)
            frame, _ = story.assembled()
            if not logic.admits(frame.classify()):
                continue
        else:
            frame = random_class_frame(rng, max_worlds, logic)
        frames += 1
        ev = Evaluator(frame)
        fn = ev.compile(phi)
        full = frame.full_mask
        for _ in range(8):
            env = {v: rng.getrandbits(frame.n) & full for v in variables}
            vals += 1
            m = fn(env)
            if m != full:
                i = next(i for i in range(frame.n) if not (m >> i) & 1)
                valuation = {
                    v: tuple(frame.sorted_names(env.get(v, 0))) for v in variables
                }
                return SearchResult(
                    "countermodel", frame=frame, story=story, valuation=valuation,
                    world=frame.worlds[i], frames_checked=frames, valuations_checked=vals,
                )
    return SearchResult("none-within-bounds", frames_checked=frames, valuations_checked=vals)
