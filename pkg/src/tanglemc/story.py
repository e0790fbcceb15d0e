"""Moments and stories: stratified frames with level maps.

A moment is a finite rooted tree-like transitive frame fragment with a
valuation.  A story of duration I stacks I+1 moments joined by maps
f_0..f_{I-1}; the map on the last level is the identity.  The five story
conditions are checked in a fixed order, each with a concrete witness:

    monotonic          w below v   implies f(w) below f(v)
    root-preserving    f_i(root_i) = root_{i+1}
    almost-injective   collisions only at irreflexive images
    cluster-preserving C(f(x)) = f[C(x)]
    stabilising        an explicit last map must be the identity

A story file may list either I maps (identity on the last level implied)
or I+1 maps, in which case the last one is checked by the stabilising
condition.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .frame import Frame, FrameError, _bits, transitive_closure


class StoryError(ValueError):
    """Validation failure; `condition` names the first violated condition."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


@dataclass(frozen=True)
class Moment:
    """Rooted tree-like fragment; the frame view carries an identity map."""

    worlds: tuple[str, ...]
    rel: tuple[tuple[str, str], ...]
    root: str
    valuation: dict[str, frozenset[str]]

    def frame_view(self) -> Frame:
        n = len(self.worlds)
        index = {w: i for i, w in enumerate(self.worlds)}
        succ = [0] * n
        for a, b in self.rel:
            succ[index[a]] |= 1 << index[b]
        return Frame(self.worlds, succ, list(range(n)))


def validate_moment(
    worlds: Sequence[str],
    rel: Iterable[Sequence[str]],
    root: str,
    valuation: Mapping[str, Iterable[str]] | None = None,
) -> Moment:
    ws = list(worlds)
    if not ws or len(set(ws)) != len(ws):
        raise StoryError("structure", "moment worlds must be nonempty and unique")
    index = {w: i for i, w in enumerate(ws)}
    n = len(ws)
    succ = [0] * n
    pairs = []
    for pair in rel:
        a, b = pair
        if a not in index or b not in index:
            raise StoryError("structure", f"unknown world in moment relation: {pair!r}")
        succ[index[a]] |= 1 << index[b]
        pairs.append((a, b))
    for w in range(n):
        for v in _bits(succ[w]):
            if succ[v] & ~succ[w]:
                raise StoryError(
                    "structure", f"moment relation is not transitive at {ws[w]!r}"
                )
    if root not in index:
        raise StoryError("structure", f"unknown root {root!r}")
    r = index[root]
    reach = succ[r] | (1 << r)
    if reach != (1 << n) - 1:
        missing = ws[next(_bits(((1 << n) - 1) & ~reach))]
        raise StoryError("structure", f"root does not reach {missing!r}")
    # tree-like: common upper bounds force comparability
    refl = [(succ[i] >> i) & 1 for i in range(n)]
    for c in range(n):
        below = [a for a in range(n) if a == c or (succ[a] >> c) & 1]
        for a in below:
            for b in below:
                if a == b:
                    continue
                if not ((succ[a] >> b) & 1 or (succ[b] >> a) & 1):
                    raise StoryError(
                        "structure",
                        f"not tree-like: {ws[a]!r} and {ws[b]!r} both below {ws[c]!r}",
                    )
    val: dict[str, frozenset[str]] = {}
    for p, names in (valuation or {}).items():
        for w in names:
            if w not in index:
                raise StoryError("structure", f"valuation of {p!r} mentions {w!r}")
        val[p] = frozenset(names)
    return Moment(tuple(ws), tuple(sorted(pairs)), root, val)


def moment_from_frame(frame: Frame, valuation: Mapping[str, Iterable[str]] | None = None,
                      root: str | None = None) -> Moment:
    """View a frame as a moment, inferring the root when not given."""
    if root is None:
        full = frame.full_mask
        for i, w in enumerate(frame.worlds):
            if frame.succ_mask(i) | (1 << i) == full:
                root = w
                break
        else:
            raise StoryError("structure", "frame has no root world")
    return validate_moment(frame.worlds, frame.rel_pairs(), root, valuation)


@dataclass(frozen=True)
class Story:
    levels: tuple[Moment, ...]
    maps: tuple[dict[str, str], ...]  # length == duration; identity on last level implied
    immersive: bool

    @property
    def duration(self) -> int:
        return len(self.levels) - 1

    def level_map(self, i: int) -> dict[str, str]:
        """Map out of level i (identity on the last level)."""
        if i == self.duration:
            return {w: w for w in self.levels[i].worlds}
        return self.maps[i]

    def assembled(self) -> tuple[Frame, dict[str, frozenset[str]]]:
        """Flat frame view: disjoint union of levels, maps glued into one
        function.  Level i's world w is named "i:w"."""
        worlds = []
        for i, m in enumerate(self.levels):
            worlds.extend(f"{i}:{w}" for w in m.worlds)
        index = {w: k for k, w in enumerate(worlds)}
        n = len(worlds)
        succ = [0] * n
        for i, m in enumerate(self.levels):
            for a, b in m.rel:
                succ[index[f"{i}:{a}"]] |= 1 << index[f"{i}:{b}"]
        func = [0] * n
        for i in range(len(self.levels)):
            tgt = min(i + 1, self.duration)
            fmap = self.level_map(i)
            for w in self.levels[i].worlds:
                func[index[f"{i}:{w}"]] = index[f"{tgt}:{fmap[w]}"]
        valuation: dict[str, set[str]] = {}
        for i, m in enumerate(self.levels):
            for p, names in m.valuation.items():
                valuation.setdefault(p, set()).update(f"{i}:{w}" for w in names)
        return Frame(worlds, succ, func), {p: frozenset(s) for p, s in valuation.items()}

    def to_dict(self) -> dict:
        return {
            "levels": [
                {
                    "worlds": list(m.worlds),
                    "rel": [[a, b] for a, b in m.rel],
                    "root": m.root,
                    "valuation": {p: sorted(ws) for p, ws in sorted(m.valuation.items())},
                }
                for m in self.levels
            ],
            "maps": [dict(sorted(f.items())) for f in self.maps],
        }


def _check_conditions(levels: Sequence[Moment], maps: Sequence[Mapping[str, str]],
                      explicit_last: Mapping[str, str] | None) -> bool:
    """Run the five conditions in order; returns the immersive flag."""
    frames = [m.frame_view() for m in levels]

    # monotonic
    for i, fmap in enumerate(maps):
        src, tgt = frames[i], frames[i + 1]
        for a, b in levels[i].rel:
            fa, fb = tgt.index(fmap[a]), tgt.index(fmap[b])
            if fa != fb and not (tgt.succ_mask(fa) >> fb) & 1:
                raise StoryError(
                    "monotonic",
                    f"level {i}: {a!r} below {b!r} but {fmap[a]!r} not below {fmap[b]!r}",
                )

    # root preserving
    for i, fmap in enumerate(maps):
        if fmap[levels[i].root] != levels[i + 1].root:
            raise StoryError(
                "root-preserving",
                f"level {i}: f({levels[i].root!r}) = {fmap[levels[i].root]!r} "
                f"is not the next root {levels[i + 1].root!r}",
            )

    # almost injective
    for i, fmap in enumerate(maps):
        tgt = frames[i + 1]
        seen: dict[str, str] = {}
        for w in levels[i].worlds:
            img = fmap[w]
            if img in seen and tgt.is_reflexive(tgt.index(img)):
                raise StoryError(
                    "almost-injective",
                    f"level {i}: {seen[img]!r} and {w!r} collapse onto reflexive {img!r}",
                )
            seen.setdefault(img, w)

    # cluster preserving
    for i, fmap in enumerate(maps):
        src, tgt = frames[i], frames[i + 1]
        for w in levels[i].worlds:
            image_cluster = tgt.cluster_mask(tgt.index(fmap[w]))
            mapped = 0
            for v in _bits(src.cluster_mask(src.index(w))):
                mapped |= 1 << tgt.index(fmap[src.worlds[v]])
            if mapped != image_cluster:
                raise StoryError(
                    "cluster-preserving",
                    f"level {i}: cluster of {fmap[w]!r} is {sorted(tgt.names(image_cluster))} "
                    f"but the image of the cluster of {w!r} is {sorted(tgt.names(mapped))}",
                )

    # stabilising
    if explicit_last is not None:
        for w in levels[-1].worlds:
            if explicit_last[w] != w:
                raise StoryError(
                    "stabilising",
                    f"last-level map sends {w!r} to {explicit_last[w]!r}, not itself",
                )

    immersive = True
    for i, fmap in enumerate(maps):
        tgt = frames[i + 1]
        if len(set(fmap.values())) != len(levels[i].worlds):
            immersive = False
            break
        for a, b in levels[i].rel:
            if not (tgt.succ_mask(tgt.index(fmap[a])) >> tgt.index(fmap[b])) & 1:
                immersive = False
                break
        if not immersive:
            break
    return immersive


def validate_story(data: Mapping) -> Story:
    """Check the story file format and all story conditions."""
    if "levels" not in data or not data["levels"]:
        raise StoryError("structure", "story needs at least one level")
    levels = []
    for k, raw in enumerate(data["levels"]):
        try:
            levels.append(
                validate_moment(
                    raw["worlds"], raw.get("rel", []), raw["root"], raw.get("valuation")
                )
            )
        except KeyError as e:
            raise StoryError("structure", f"level {k} is missing {e.args[0]!r}") from None
    duration = len(levels) - 1
    raw_maps = list(data.get("maps", []))
    if len(raw_maps) not in (duration, duration + 1):
        raise StoryError(
            "structure",
            f"story of duration {duration} needs {duration} or {duration + 1} maps, "
            f"got {len(raw_maps)}",
        )
    explicit_last = None
    if len(raw_maps) == duration + 1:
        explicit_last = raw_maps.pop()
        for w in levels[-1].worlds:
            if w not in explicit_last:
                raise StoryError("structure", f"last map is not total: missing {w!r}")
            if explicit_last[w] not in levels[-1].worlds:
                raise StoryError("structure",
                                 f"last map leaves the level at {explicit_last[w]!r}")
    maps = []
    for i, raw in enumerate(raw_maps):
        fmap = {}
        for w in levels[i].worlds:
            if w not in raw:
                raise StoryError("structure", f"map {i} is not total: missing {w!r}")
            if raw[w] not in levels[i + 1].worlds:
                raise StoryError(
                    "structure", f"map {i} sends {w!r} outside level {i + 1}"
                )
            fmap[w] = raw[w]
        maps.append(fmap)
    immersive = _check_conditions(levels, maps, explicit_last)
    return Story(tuple(levels), tuple(maps), immersive)


def story_class(story: Story) -> frozenset[str]:
    """Logic names whose story conditions this story satisfies."""
    serial = all(
        all(m.frame_view().succ_mask(i) for i in range(len(m.worlds)))
        for m in story.levels
    )
    flags = {"K4C"}
    if serial:
        flags.add("K4DC")
    if story.immersive:
        flags.add("K4I")
        if serial:
            flags.add("K4DI")
    return frozenset(flags)


def compose_moment(
    x: str,
    cluster: Sequence[str],
    q: str,
    submoments: Sequence[Moment],
    valuation: Mapping[str, Iterable[str]] | None = None,
) -> Moment:
    """Build a moment from a root cluster over a list of submoments.

    ``q`` is "reflexive" or "irreflexive"; an irreflexive root cluster must
    be a singleton.  The cluster sees every submoment world; submoment
    relations are kept; internal cluster edges (including loops) exist only
    for a reflexive cluster.  World names must be globally unique.
    """
    cluster = list(cluster)
    if q not in ("reflexive", "irreflexive"):
        raise ValueError("q must be 'reflexive' or 'irreflexive'")
    if x not in cluster:
        raise ValueError("root must belong to the cluster")
    if q == "irreflexive" and len(cluster) != 1:
        raise ValueError("an irreflexive root cluster must be a singleton")
    worlds = list(cluster)
    rel: list[tuple[str, str]] = []
    if q == "reflexive":
        rel.extend((a, b) for a in cluster for b in cluster)
    for m in submoments:
        worlds.extend(m.worlds)
        rel.extend(m.rel)
        rel.extend((c, w) for c in cluster for w in m.worlds)
    if len(set(worlds)) != len(worlds):
        raise ValueError("world names collide across cluster and submoments")
    val: dict[str, set[str]] = {}
    for p, names in (valuation or {}).items():
        val[p] = set(names) & set(cluster)
    for m in submoments:
        for p, names in m.valuation.items():
            val.setdefault(p, set()).update(names)
    return validate_moment(worlds, rel, x, {p: frozenset(s) for p, s in val.items()})


def moment_height(m: Moment) -> int:
    """Length of the longest strictly ascending chain of clusters."""
    f = m.frame_view()
    memo: dict[int, int] = {}

    def h(i: int) -> int:
        if i not in memo:
            strict = f.succ_mask(i) & ~f.cluster_mask(i)
            memo[i] = 1 + max((h(j) for j in _bits(strict)), default=0)
        return memo[i]

    return h(f.index(m.root))


def story_oplus(story: Story) -> tuple[Story, list[dict[str, str]]]:
    """Level-wise reflexive duplication of a story.

    Copies relate as their originals and the maps send a copy to the
    same-index copy when the image is reflexive, to the primary copy
    otherwise.  Returns the lifted story and per-level projections.  Raises
    StoryError when the lift is not a story, which happens exactly when an
    irreflexive world maps onto a reflexive one.
    """
    lifted_levels = []
    projections: list[dict[str, str]] = []
    ticks_list = []
    for m in story.levels:
        f = m.frame_view()
        lifted_moment, proj = _duplicate_moment(m, f)
        lifted_levels.append(lifted_moment)
        projections.append(proj)
        ticks_list.append(_tick_for(m, f))
    new_maps = []
    for i in range(story.duration):
        src_m, tgt_m = story.levels[i], story.levels[i + 1]
        tgt_f = tgt_m.frame_view()
        fmap = story.maps[i]
        tick = ticks_list[i + 1]
        out = {}
        for w, orig in projections[i].items():
            img = fmap[orig]
            second_copy = w != orig
            if second_copy and tgt_f.is_reflexive(tgt_f.index(img)):
                out[w] = img + tick
            else:
                out[w] = img
        new_maps.append(out)
    data = {
        "levels": [
            {
                "worlds": list(m.worlds),
                "rel": [[a, b] for a, b in m.rel],
                "root": m.root,
                "valuation": {p: sorted(ws) for p, ws in m.valuation.items()},
            }
            for m in lifted_levels
        ],
        "maps": new_maps,
    }
    return validate_story(data), projections


def _tick_for(m: Moment, f: Frame) -> str:
    refl = [w for i, w in enumerate(f.worlds) if f.is_reflexive(i)]
    if not refl:
        return "'"
    taken = set(m.worlds)
    k = 1
    while any(w + "'" * k in taken for w in refl):
        k += 1
    return "'" * k


def _duplicate_moment(m: Moment, f: Frame) -> tuple[Moment, dict[str, str]]:
    tick = _tick_for(m, f)
    new_worlds = []
    origin = {}
    for i, w in enumerate(f.worlds):
        new_worlds.append(w)
        origin[w] = w
        if f.is_reflexive(i):
            d = w + tick
            new_worlds.append(d)
            origin[d] = w
    rel = [
        (a, b)
        for a in new_worlds
        for b in new_worlds
        if (f.succ_mask(f.index(origin[a])) >> f.index(origin[b])) & 1
    ]
    valuation = {
        p: frozenset(w for w in new_worlds if origin[w] in names)
        for p, names in m.valuation.items()
    }
    return (
        validate_moment(new_worlds, rel, m.root, valuation),
        origin,
    )


# ---------------------------------------------------------------------------
# random stories (soundness suites, search, and the path-space tests)

def random_moment(
    rng: random.Random,
    depth: int = 2,
    variables: Sequence[str] = ("p", "q"),
    prefix: str = "m",
    allow_clusters: bool = True,
) -> Moment:
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"{prefix}{counter[0]}"

    def build(d: int) -> Moment:
        k = rng.choice((1, 1, 2)) if (allow_clusters and rng.random() < 0.4) else 1
        cluster = [fresh() for _ in range(k)]
        q = "reflexive" if (k > 1 or rng.random() < 0.5) else "irreflexive"
        subs = []
        if d > 0:
            for _ in range(rng.randint(0, 2)):
                subs.append(build(d - 1))
        val = {v: [w for w in cluster if rng.random() < 0.5] for v in variables}
        return compose_moment(cluster[0], cluster, q, subs, val)

    return build(depth)


def _transform_moment(rng: random.Random, m: Moment, fresh_prefix: str,
                      allow_clusters: bool = True) -> tuple[Moment, dict[str, str]]:
    """Build a successor moment and a map satisfying all story conditions.

    Clusters are copied bijectively or collapsed onto an irreflexive point;
    irreflexive points never gain reflexivity, and fresh subtrees may be
    grafted outside the image.
    """
    f = m.frame_view()
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"{fresh_prefix}{counter[0]}"

    def go(root: str) -> tuple[Moment, dict[str, str]]:
        ri = f.index(root)
        cluster_mask = f.cluster_mask(ri)
        cluster = [root] + [
            w for w in m.worlds if w != root and (cluster_mask >> f.index(w)) & 1
        ]
        reflexive = f.is_reflexive(ri)
        child_roots = []
        seen = 0
        strict = f.succ_mask(ri) & ~cluster_mask
        for j in _bits(strict):
            if (seen >> j) & 1:
                continue
            cj = f.cluster_mask(j)
            # immediate successors: nothing strictly between root cluster and them
            preds_of_j = f.pred_mask(j) & ~cluster_mask & ~cj & strict
            if preds_of_j:
                continue
            seen |= cj
            child_roots.append(next(iter(sorted(_bits(cj)))))
        subs = []
        mapping: dict[str, str] = {}
        for j in child_roots:
            sm, smap = go(m.worlds[j])
            subs.append(sm)
            mapping.update(smap)
        collapse = reflexive and rng.random() < 0.3
        if collapse:
            target = [fresh()]
            q = "irreflexive"
            for w in cluster:
                mapping[w] = target[0]
        else:
            target = [fresh() for _ in cluster]
            q = "reflexive" if reflexive else "irreflexive"
            for w, t in zip(cluster, target):
                mapping[w] = t
        if rng.random() < 0.25:
            subs.append(random_moment(rng, 0, prefix=fresh() + "x",
                                      allow_clusters=allow_clusters))
        val = {}
        out = compose_moment(target[0], target, q, subs, val)
        return out, mapping

    return go(m.root)


def random_story(
    rng: random.Random,
    duration: int,
    serial: bool = False,
    immersive: bool = False,
    variables: Sequence[str] = ("p", "q"),
    max_level_worlds: int = 7,
    allow_clusters: bool = False,
) -> Story:
    """Random valid story; with `immersive` the maps are bijective copies.

    Defaults keep levels small with singleton clusters, so that path
    enumeration over the reflexive duplication stays desk-scale; pass
    `allow_clusters` for proper multi-world clusters.
    """
    while True:
        first = random_moment(rng, depth=2, variables=variables, prefix="a",
                              allow_clusters=allow_clusters)
        if len(first.worlds) <= max_level_worlds and (
            not serial or _moment_serial(first)
        ):
            break
    levels = [first]
    maps = []
    for i in range(duration):
        if immersive:
            nxt, fmap = _copy_moment(levels[-1], f"l{i + 1}_")
        else:
            while True:
                nxt, fmap = _transform_moment(rng, levels[-1], f"l{i + 1}_",
                                              allow_clusters=allow_clusters)
                if len(nxt.worlds) <= max_level_worlds and (
                    not serial or _moment_serial(nxt)
                ):
                    break
        levels.append(nxt)
        maps.append(fmap)
    data = {
        "levels": [
            {
                "worlds": list(m.worlds),
                "rel": [[a, b] for a, b in m.rel],
                "root": m.root,
                "valuation": {p: sorted(ws) for p, ws in m.valuation.items()},
            }
            for m in levels
        ],
        "maps": maps,
    }
    return validate_story(data)


def _moment_serial(m: Moment) -> bool:
    f = m.frame_view()
    return all(f.succ_mask(i) for i in range(f.n))


def _copy_moment(m: Moment, prefix: str) -> tuple[Moment, dict[str, str]]:
    mapping = {w: prefix + w for w in m.worlds}
    copied = validate_moment(
        [mapping[w] for w in m.worlds],
        [[mapping[a], mapping[b]] for a, b in m.rel],
        mapping[m.root],
        {p: [mapping[w] for w in ws] for p, ws in m.valuation.items()},
    )
    return copied, mapping
