"""Finite dynamic Kripke frames: a transitive relation plus a total map.

Worlds are opaque strings; the declared order is the canonical order used
for deterministic tie-breaking everywhere downstream.  World sets are
represented as bit masks over that order, which keeps the fixed-point and
valuation-enumeration loops cheap.  Reflexive loops are stored explicitly
in the relation; the reflexive closure is always computed, never stored.
Frames are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class ClassFlags:
    transitive: bool
    serial: bool
    monotonic: bool
    strictly_monotonic: bool


def _bits(mask: int):
    while mask:
        lsb = mask & -mask
        yield lsb.bit_length() - 1
        mask ^= lsb


class Frame:
    """Immutable frame; build via :func:`validate_frame` or the generators."""

    __slots__ = ("worlds", "_index", "_succ", "_pred", "_func", "full_mask")

    def __init__(
        self,
        worlds: Sequence[str],
        succ: Sequence[int],
        func: Sequence[int],
        pred: Sequence[int] | None = None,
    ):
        ws = tuple(worlds)
        n = len(ws)
        if pred is None:
            p = [0] * n
            for w, m in enumerate(succ):
                for v in _bits(m):
                    p[v] |= 1 << w
            pred = p
        object.__setattr__(self, "worlds", ws)
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(ws)})
        object.__setattr__(self, "_succ", tuple(succ))
        object.__setattr__(self, "_pred", tuple(pred))
        object.__setattr__(self, "_func", tuple(func))
        object.__setattr__(self, "full_mask", (1 << n) - 1)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("frames are immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Frame)
            and self.worlds == other.worlds
            and self._succ == other._succ
            and self._func == other._func
        )

    def __hash__(self):
        return hash((self.worlds, self._succ, self._func))

    def __repr__(self):
        return f"Frame(worlds={list(self.worlds)!r})"

    # -- basic views -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.worlds)

    def index(self, world: str) -> int:
        try:
            return self._index[world]
        except KeyError:
            raise FrameError(f"unknown world {world!r}") from None

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for w in names:
            m |= 1 << self.index(w)
        return m

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(self.worlds[i] for i in _bits(mask))

    def sorted_names(self, mask: int) -> list[str]:
        return [self.worlds[i] for i in _bits(mask)]

    def succ_mask(self, i: int) -> int:
        return self._succ[i]

    def pred_mask(self, i: int) -> int:
        return self._pred[i]

    def func_index(self, i: int) -> int:
        return self._func[i]

    def func_name(self, world: str) -> str:
        return self.worlds[self._func[self.index(world)]]

    def func_map(self) -> dict[str, str]:
        return {w: self.worlds[self._func[i]] for i, w in enumerate(self.worlds)}

    def rel_pairs(self) -> list[tuple[str, str]]:
        return [
            (self.worlds[i], self.worlds[j])
            for i in range(self.n)
            for j in _bits(self._succ[i])
        ]

    def is_reflexive(self, i: int) -> bool:
        return bool(self._succ[i] >> i & 1)

    def reflexive_mask(self) -> int:
        m = 0
        for i in range(self.n):
            if self.is_reflexive(i):
                m |= 1 << i
        return m

    # -- operators ---------------------------------------------------------

    def down_mask(self, mask: int) -> int:
        """Worlds with at least one successor inside `mask`."""
        out = 0
        for v in _bits(mask):
            out |= self._pred[v]
        return out

    def down(self, names: Iterable[str]) -> frozenset[str]:
        return self.names(self.down_mask(self.mask(names)))

    def cluster_mask(self, i: int) -> int:
        """Worlds mutually reachable from world i under the reflexive closure."""
        return (1 << i) | (self._succ[i] & self._pred[i])

    def cluster_masks(self) -> list[int]:
        seen = 0
        out = []
        for i in range(self.n):
            if seen >> i & 1:
                continue
            c = self.cluster_mask(i)
            seen |= c
            out.append(c)
        return out

    def clusters(self) -> list[frozenset[str]]:
        return [self.names(c) for c in self.cluster_masks()]

    def classify(self) -> ClassFlags:
        succ, func = self._succ, self._func
        transitive = all(
            not (succ[v] & ~succ[w]) for w in range(self.n) for v in _bits(succ[w])
        )
        serial = all(m != 0 for m in succ)
        monotonic = True
        strict = True
        for w in range(self.n):
            fw = func[w]
            for v in _bits(succ[w]):
                fv = func[v]
                if not (succ[fw] >> fv) & 1:
                    strict = False
                    if fw != fv:
                        monotonic = False
        return ClassFlags(transitive, serial, monotonic, strict and monotonic)

    def to_dict(self, valuation: Mapping[str, Iterable[str]] | None = None) -> dict:
        d = {
            "worlds": list(self.worlds),
            "rel": [[a, b] for a, b in self.rel_pairs()],
            "func": self.func_map(),
        }
        if valuation is not None:
            d["valuation"] = {p: sorted(ws) for p, ws in sorted(valuation.items())}
        return d


def transitive_closure(succ: Sequence[int]) -> list[int]:
    out = list(succ)
    n = len(out)
    for k in range(n):
        bit = 1 << k
        for i in range(n):
            if out[i] & bit:
                out[i] |= out[k]
    return out


def _transitivity_witness(succ: Sequence[int]) -> tuple[int, int] | None:
    for w in range(len(succ)):
        for v in _bits(succ[w]):
            missing = succ[v] & ~succ[w]
            if missing:
                return w, next(_bits(missing))
    return None


def validate_frame(
    worlds: Sequence[str],
    rel: Iterable[Sequence[str]],
    func: Mapping[str, str],
    close_transitively: bool = False,
) -> Frame:
    """Check a raw frame description and build a Frame.

    With ``close_transitively`` the relation is replaced by its transitive
    closure; otherwise non-transitive input is rejected.
    """
    ws = list(worlds)
    if not ws:
        raise FrameError("frame needs at least one world")
    if len(set(ws)) != len(ws):
        raise FrameError("duplicate world names")
    index = {w: i for i, w in enumerate(ws)}
    n = len(ws)
    succ = [0] * n
    for pair in rel:
        if len(pair) != 2:
            raise FrameError(f"relation entry {pair!r} is not a pair")
        a, b = pair
        if a not in index:
            raise FrameError(f"unknown world {a!r} in relation")
        if b not in index:
            raise FrameError(f"unknown world {b!r} in relation")
        succ[index[a]] |= 1 << index[b]
    if close_transitively:
        succ = transitive_closure(succ)
    else:
        witness = _transitivity_witness(succ)
        if witness is not None:
            a, b = witness
            raise FrameError(f"relation is not transitive: missing ({ws[a]}, {ws[b]})")
    f = [0] * n
    for w in ws:
        if w not in func:
            raise FrameError(f"function is not total: missing {w!r}")
    for a, b in func.items():
        if a not in index:
            raise FrameError(f"unknown world {a!r} in function")
        if b not in index:
            raise FrameError(f"unknown world {b!r} in function image")
        f[index[a]] = index[b]
    return Frame(ws, succ, f)


def frame_from_dict(data: Mapping, close_transitively: bool = False) -> tuple[Frame, dict[str, frozenset[str]]]:
    """Read the frame file format; returns the frame and its valuation."""
    for key in ("worlds", "rel", "func"):
        if key not in data:
            raise FrameError(f"frame file is missing {key!r}")
    frame = validate_frame(data["worlds"], data["rel"], data["func"], close_transitively)
    valuation: dict[str, frozenset[str]] = {}
    for p, names in data.get("valuation", {}).items():
        for w in names:
            frame.index(w)
        valuation[p] = frozenset(names)
    return frame, valuation


@dataclass(frozen=True)
class PMorphismResult:
    ok: bool
    violations: tuple[str, ...]


def check_frame_pmorphism(
    source: Frame, target: Frame, mapping: Mapping[str, str]
) -> PMorphismResult:
    """Check forth, back and commutation conditions for a frame map."""
    violations = []
    for w in source.worlds:
        if w not in mapping:
            return PMorphismResult(False, (f"map undefined at {w!r}",))
        target.index(mapping[w])
    pi = [target.index(mapping[w]) for w in source.worlds]
    for w in range(source.n):
        for v in _bits(source.succ_mask(w)):
            if not (target.succ_mask(pi[w]) >> pi[v]) & 1:
                violations.append(
                    f"forth fails: {source.worlds[w]} R {source.worlds[v]} but "
                    f"{target.worlds[pi[w]]} not R {target.worlds[pi[v]]}"
                )
    for w in range(source.n):
        image_succ = 0
        for v in _bits(source.succ_mask(w)):
            image_succ |= 1 << pi[v]
        for u in _bits(target.succ_mask(pi[w]) & ~image_succ):
            violations.append(
                f"back fails at {source.worlds[w]}: no successor maps to {target.worlds[u]}"
            )
    for w in range(source.n):
        if pi[source.func_index(w)] != target.func_index(pi[w]):
            violations.append(f"function does not commute at {source.worlds[w]}")
    return PMorphismResult(not violations, tuple(violations))


def duplicate_reflexive(frame: Frame) -> tuple[Frame, dict[str, str]]:
    """Double every reflexive world so reflexive clusters have >= 2 points.

    The copy of w keeps w's name; the second copy gets a tick suffix chosen
    to avoid collisions.  Edges relate copies exactly as their originals;
    the map sends a copy to the same-index copy of the image when that
    exists, and to the primary copy otherwise.  Returns the new frame and
    the projection onto original names, which is a frame p-morphism.
    """
    refl = [w for i, w in enumerate(frame.worlds) if frame.is_reflexive(i)]
    if not refl:
        return frame, {w: w for w in frame.worlds}
    ticks = 1
    taken = set(frame.worlds)
    while any(w + "'" * ticks in taken for w in refl):
        ticks += 1
    tick = "'" * ticks

    new_worlds: list[str] = []
    origin: dict[str, str] = {}
    copy_of: dict[str, int] = {}
    for i, w in enumerate(frame.worlds):
        new_worlds.append(w)
        origin[w] = w
        copy_of[w] = 0
        if frame.is_reflexive(i):
            d = w + tick
            new_worlds.append(d)
            origin[d] = w
            copy_of[d] = 1
    n2 = len(new_worlds)
    old_index = [frame.index(origin[w]) for w in new_worlds]
    succ2 = []
    for a in range(n2):
        m = frame.succ_mask(old_index[a])
        s = 0
        for b in range(n2):
            if (m >> old_index[b]) & 1:
                s |= 1 << b
        succ2.append(s)
    index2 = {w: i for i, w in enumerate(new_worlds)}
    func2 = []
    for a, w in enumerate(new_worlds):
        g = frame.worlds[frame.func_index(old_index[a])]
        if copy_of[w] == 1 and frame.is_reflexive(frame.index(g)):
            func2.append(index2[g + tick])
        else:
            func2.append(index2[g])
    new_frame = Frame(new_worlds, succ2, func2)
    return new_frame, origin


def pullback_valuation(
    projection: Mapping[str, str], valuation: Mapping[str, Iterable[str]]
) -> dict[str, frozenset[str]]:
    """Pull a valuation on the projection's target back to its source."""
    out = {}
    for p, names in valuation.items():
        names = set(names)
        out[p] = frozenset(w for w, o in projection.items() if o in names)
    return out


def random_transitive_frame(
    n: int, seed: int, levels: int | None = None, cluster_prob: float = 0.5
) -> Frame:
    """Random layered frame, transitive by construction; scales to 10^4 worlds.

    Worlds are assigned random layers; every world sees all worlds in
    strictly higher layers, and a layer is either a reflexive cluster or an
    antichain of irreflexive points.  The map is sampled layer-monotone.
    """
    import random

    rng = random.Random(seed)
    if n < 1:
        raise FrameError("need at least one world")
    if levels is None:
        levels = max(2, min(20, n // 4 + 2))
    layer = [rng.randrange(levels) for _ in range(n)]
    layer_mask = [0] * levels
    for w, l in enumerate(layer):
        layer_mask[l] |= 1 << w
    is_cluster = [rng.random() < cluster_prob for _ in range(levels)]
    above = [0] * levels  # union of strictly higher layers
    acc = 0
    for l in range(levels - 1, -1, -1):
        above[l] = acc
        acc |= layer_mask[l]
    below = [0] * levels
    acc = 0
    for l in range(levels):
        below[l] = acc
        acc |= layer_mask[l]
    succ = []
    pred = []
    for w in range(n):
        l = layer[w]
        own = layer_mask[l] if is_cluster[l] else 0
        succ.append(above[l] | own)
        pred.append(below[l] | own)
    worlds = [f"w{i}" for i in range(n)]
    # layer-respecting map keeps the frame's structure plausible; any total
    # map would do for evaluation purposes
    candidates_by_layer = [sorted(_bits(layer_mask[l])) for l in range(levels)]
    func = []
    for w in range(n):
        pool = candidates_by_layer[layer[w]]
        func.append(pool[rng.randrange(len(pool))])
    return Frame(worlds, succ, func, pred)
