from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Literal, NamedTuple, Sequence

import networkx as nx

logger = logging.getLogger(__name__)

Sign = Literal["+", "-"]
Side = Literal["h", "t"]
ArcKind = Literal["left", "right", "neither"]


class RecipeError(ValueError):
    pass


class End(NamedTuple):
    edge: int
    side: str

    def other(self) -> "End":
        return End(self.edge, "t" if self.side == "h" else "h")

    def label(self) -> str:
        return f"{self.edge}{self.side}"


Letter = tuple[int, int]


@dataclass(frozen=True)
class Vertex:
    name: str
    sign: str
    ends: tuple[End, ...]


@dataclass(frozen=True)
class MarkedSurface:
    """Ribbon graph with one marked boundary gap per vertex (between its last and first ends)."""

    vertices: tuple[Vertex, ...]

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(sorted({end.edge for v in self.vertices for end in v.ends}))

    def vertex(self, name: str) -> Vertex:
        name = normalize_point(name)
        for vertex in self.vertices:
            if vertex.name == name:
                return vertex
        raise RecipeError(f"Unknown marked point {name!r}.")

    def vertex_index(self, name: str) -> int:
        target = self.vertex(name)
        return self.vertices.index(target)

    def locate(self, end: End) -> tuple[int, int]:
        for vi, vertex in enumerate(self.vertices):
            if end in vertex.ends:
                return vi, vertex.ends.index(end)
        raise RecipeError(f"End {end.label()} not attached to any vertex.")

    def head(self, edge: int) -> str:
        return self.vertices[self.locate(End(edge, "h"))[0]].name

    def tail(self, edge: int) -> str:
        return self.vertices[self.locate(End(edge, "t"))[0]].name

    def as_dict(self) -> dict[str, Any]:
        return {
            "vertices": [
                {"name": v.name, "sign": v.sign, "ends": [e.label() for e in v.ends]} for v in self.vertices
            ],
            "edges": list(self.edges),
        }


def normalize_point(name: str) -> str:
    return name.replace("−", "-").strip()


def disks(count: int) -> MarkedSurface:
    """Disjoint union of disks; disk k has one edge k running from -k to +k."""
    if count < 1:
        raise RecipeError("A recipe needs at least one disk.")
    vertices: list[Vertex] = []
    for k in range(1, count + 1):
        vertices.append(Vertex(f"+{k}", "+", (End(k, "h"),)))
        vertices.append(Vertex(f"-{k}", "-", (End(k, "t"),)))
    return MarkedSurface(tuple(vertices))


def disk() -> MarkedSurface:
    return disks(1)


def corner_glue(surface: MarkedSurface, x: str, y: str) -> MarkedSurface:
    vx, vy = surface.vertex(x), surface.vertex(y)
    if vx.name == vy.name:
        raise RecipeError(f"Cannot glue {vx.name} to itself.")
    if vx.sign != vy.sign:
        raise RecipeError(f"Cannot glue points of mixed signs: {vx.name} and {vy.name}.")
    ends = vy.ends + vx.ends if vx.sign == "+" else vx.ends + vy.ends
    merged = Vertex(f"{vx.name}|{vy.name}", vx.sign, ends)
    vertices = [merged if v.name == vx.name else v for v in surface.vertices if v.name != vy.name]
    return MarkedSurface(tuple(vertices))


@dataclass(frozen=True)
class Contraction:
    """Edge contraction removing point x into its neighbour w along `edge`."""

    x: str
    w: str
    edge: int
    x_is_tail: bool
    heads: tuple[int, ...]
    tails: tuple[int, ...]
    loops: tuple[int, ...]


def plan_contraction(surface: MarkedSurface, x: str) -> Contraction:
    vx = surface.vertex(x)
    chosen: End | None = None
    for end in vx.ends:
        if end.other() not in vx.ends:
            chosen = end
            break
    if chosen is None:
        raise RecipeError(f"Forgetting {vx.name} would leave a component without marked points.")
    wi, _ = surface.locate(chosen.other())
    counts = Counter(end.edge for end in vx.ends)
    loops = tuple(sorted(e for e, n in counts.items() if n == 2))
    heads = tuple(end.edge for end in vx.ends if end.side == "h" and end.edge != chosen.edge and end.edge not in loops)
    tails = tuple(end.edge for end in vx.ends if end.side == "t" and end.edge != chosen.edge and end.edge not in loops)
    return Contraction(
        x=vx.name,
        w=surface.vertices[wi].name,
        edge=chosen.edge,
        x_is_tail=chosen.side == "t",
        heads=heads,
        tails=tails,
        loops=loops,
    )


def forget_point(surface: MarkedSurface, x: str) -> MarkedSurface:
    plan = plan_contraction(surface, x)
    vx = surface.vertex(plan.x)
    e_x = End(plan.edge, "t" if plan.x_is_tail else "h")
    p = vx.ends.index(e_x)
    moved = vx.ends[p + 1 :] + vx.ends[:p]
    e_w = e_x.other()
    vertices = []
    for vertex in surface.vertices:
        if vertex.name == plan.x:
            continue
        if vertex.name == plan.w:
            q = vertex.ends.index(e_w)
            vertex = Vertex(vertex.name, vertex.sign, vertex.ends[:q] + moved + vertex.ends[q + 1 :])
        vertices.append(vertex)
    return MarkedSurface(tuple(vertices))


@dataclass(frozen=True)
class Arc:
    start: str
    end: str
    kind: str
    word: tuple[Letter, ...]

    def as_dict(self) -> dict[str, Any]:
        return {"from": self.start, "to": self.end, "kind": self.kind, "word": [list(x) for x in self.word]}


@dataclass(frozen=True)
class UncutCircle:
    base: str
    word: tuple[Letter, ...]

    def as_dict(self) -> dict[str, Any]:
        return {"base": self.base, "word": [list(x) for x in self.word]}


@dataclass
class SurfaceAnalysis:
    arcs: list[Arc]
    uncut: list[UncutCircle]
    euler_characteristic: int
    boundary_components: int
    genera: list[int]
    components: int
    valid: bool
    problems: list[str] = field(default_factory=list)

    @property
    def left(self) -> list[Arc]:
        return [a for a in self.arcs if a.kind == "left"]

    @property
    def right(self) -> list[Arc]:
        return [a for a in self.arcs if a.kind == "right"]

    def as_dict(self) -> dict[str, Any]:
        counts = Counter(a.kind for a in self.arcs)
        return {
            "arcs": [a.as_dict() for a in self.arcs],
            "counts": {k: counts.get(k, 0) for k in ("left", "right", "neither")},
            "uncut_circles": [c.as_dict() for c in self.uncut],
            "euler_characteristic": self.euler_characteristic,
            "boundary_components": self.boundary_components,
            "genera": self.genera,
            "components": self.components,
            "valid": self.valid,
            "problems": self.problems,
        }


Corner = tuple[int, int]


def _boundary_walks(surface: MarkedSurface) -> list[list[Corner]]:
    successor: dict[Corner, Corner] = {}
    for vi, vertex in enumerate(surface.vertices):
        m = len(vertex.ends)
        for i in range(m):
            leave = vertex.ends[(i + 1) % m]
            successor[(vi, i)] = surface.locate(leave.other())
    walks: list[list[Corner]] = []
    seen: set[Corner] = set()
    ordered = sorted(successor, key=lambda c: (len(surface.vertices[c[0]].ends) - 1 != c[1], c))
    for start in ordered:
        if start in seen:
            continue
        walk = [start]
        seen.add(start)
        nxt = successor[start]
        while nxt != start:
            walk.append(nxt)
            seen.add(nxt)
            nxt = successor[nxt]
        walks.append(walk)
    return walks


def _letters(surface: MarkedSurface) -> dict[Corner, Letter]:
    out: dict[Corner, Letter] = {}
    for vi, vertex in enumerate(surface.vertices):
        m = len(vertex.ends)
        for i in range(m):
            leave = vertex.ends[(i + 1) % m]
            out[(vi, i)] = (leave.edge, -1 if leave.side == "h" else 1)
    return out


def _kind(start: str, end: str) -> str:
    if start == "-" and end == "+":
        return "left"
    if start == "+" and end == "-":
        return "right"
    return "neither"


def analyze(surface: MarkedSurface) -> SurfaceAnalysis:
    walks = _boundary_walks(surface)
    letters = _letters(surface)
    arcs: list[Arc] = []
    uncut: list[UncutCircle] = []
    walk_vertices: list[set[int]] = []

    def is_gap(corner: Corner) -> bool:
        return corner[1] == len(surface.vertices[corner[0]].ends) - 1

    for walk in walks:
        walk_vertices.append({c[0] for c in walk})
        gaps = [i for i, c in enumerate(walk) if is_gap(c)]
        if not gaps:
            first = min(range(len(walk)), key=lambda i: (letters[walk[i]], walk[i]))
            rotated = walk[first:] + walk[:first]
            uncut.append(
                UncutCircle(surface.vertices[rotated[0][0]].name, tuple(letters[c] for c in rotated))
            )
            continue
        for pos, g in enumerate(gaps):
            stop = gaps[(pos + 1) % len(gaps)]
            span = walk[g:stop] if stop > g else walk[g:] + walk[:stop]
            start_v = surface.vertices[walk[g][0]]
            end_v = surface.vertices[walk[stop][0]]
            arcs.append(Arc(start_v.name, end_v.name, _kind(start_v.sign, end_v.sign), tuple(letters[c] for c in span)))

    for vi, vertex in enumerate(surface.vertices):
        if not vertex.ends:
            arcs.append(Arc(vertex.name, vertex.name, "neither", ()))
            walk_vertices.append({vi})

    graph = nx.MultiGraph()
    graph.add_nodes_from(range(len(surface.vertices)))
    for edge in surface.edges:
        graph.add_edge(surface.locate(End(edge, "t"))[0], surface.locate(End(edge, "h"))[0], key=edge)

    problems: list[str] = []
    genera: list[int] = []
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    for comp in components:
        nodes = set(comp)
        chi = len(nodes) - graph.subgraph(nodes).number_of_edges()
        b = sum(1 for wv in walk_vertices if wv & nodes)
        twice_genus = 2 - chi - b
        if twice_genus < 0 or twice_genus % 2:
            problems.append(f"component at {surface.vertices[comp[0]].name} has inconsistent genus data")
        genera.append(max(twice_genus, 0) // 2)

    n_left = sum(1 for a in arcs if a.kind == "left")
    n_right = sum(1 for a in arcs if a.kind == "right")
    if n_left != n_right:
        problems.append(f"{n_left} left arcs but {n_right} right arcs")
    if problems:
        logger.warning("Surface analysis problems: %s", "; ".join(problems))

    return SurfaceAnalysis(
        arcs=arcs,
        uncut=uncut,
        euler_characteristic=len(surface.vertices) - len(surface.edges),
        boundary_components=len(walk_vertices),
        genera=genera,
        components=len(components),
        valid=not problems,
        problems=problems,
    )


class RecipeStep(NamedTuple):
    op: str
    x: str
    y: str | None = None


@dataclass(frozen=True)
class SurfaceRecipe:
    disks: int
    steps: tuple[RecipeStep, ...] = ()

    def as_dict(self) -> dict[str, Any]:
        steps = []
        for step in self.steps:
            item: dict[str, Any] = {"op": step.op, "x": step.x}
            if step.y is not None:
                item["y"] = step.y
            steps.append(item)
        return {"disks": self.disks, "steps": steps}


def parse_recipe(document: dict[str, Any]) -> SurfaceRecipe:
    if not isinstance(document, dict):
        raise RecipeError("Recipe must be a JSON object.")
    count = document.get("disks")
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise RecipeError("Recipe field 'disks' must be a positive integer.")
    steps: list[RecipeStep] = []
    for pos, raw in enumerate(document.get("steps", [])):
        if not isinstance(raw, dict) or raw.get("op") not in {"glue", "forget"}:
            raise RecipeError(f"Step {pos}: op must be 'glue' or 'forget'.")
        if not isinstance(raw.get("x"), str):
            raise RecipeError(f"Step {pos}: missing point name 'x'.")
        if raw["op"] == "glue":
            if not isinstance(raw.get("y"), str):
                raise RecipeError(f"Step {pos}: glue needs a point name 'y'.")
            steps.append(RecipeStep("glue", normalize_point(raw["x"]), normalize_point(raw["y"])))
        else:
            steps.append(RecipeStep("forget", normalize_point(raw["x"])))
    recipe = SurfaceRecipe(count, tuple(steps))
    replay(recipe)
    return recipe


def apply_step(surface: MarkedSurface, step: RecipeStep) -> MarkedSurface:
    if step.op == "glue":
        assert step.y is not None
        return corner_glue(surface, step.x, step.y)
    return forget_point(surface, step.x)


def replay(recipe: SurfaceRecipe) -> MarkedSurface:
    surface = disks(recipe.disks)
    for pos, step in enumerate(recipe.steps):
        try:
            surface = apply_step(surface, step)
        except RecipeError as exc:
            raise RecipeError(f"Step {pos} ({step.op} {step.x}): {exc}") from exc
    return surface


def recipe(count: int, steps: Iterable[Sequence[str]]) -> SurfaceRecipe:
    """Shorthand: ("glue", x, y) or ("forget", x)."""
    return SurfaceRecipe(count, tuple(RecipeStep(*step) for step in steps))


NAMED_RECIPES: dict[str, SurfaceRecipe] = {
    "disk": recipe(1, []),
    "annulus": recipe(2, [("glue", "+1", "+2"), ("glue", "-1", "-2")]),
    "three_marked_disk": recipe(2, [("glue", "+1", "+2")]),
    "alternating4": recipe(3, [("glue", "+1", "+2"), ("glue", "-1", "-3")]),
    "genus1": recipe(
        3,
        [
            ("glue", "+1", "+2"),
            ("glue", "+1|+2", "+3"),
            ("glue", "-2", "-1"),
            ("glue", "-2|-1", "-3"),
            ("forget", "-2|-1|-3"),
        ],
    ),
    "pants": recipe(
        3,
        [
            ("glue", "+1", "+2"),
            ("glue", "+1|+2", "+3"),
            ("glue", "-1", "-2"),
            ("glue", "-1|-2", "-3"),
        ],
    ),
    "four_holed_sphere": recipe(
        4,
        [
            ("glue", "+1", "+2"),
            ("glue", "+1|+2", "+3"),
            ("glue", "+1|+2|+3", "+4"),
            ("glue", "-1", "-2"),
            ("glue", "-1|-2", "-3"),
            ("glue", "-1|-2|-3", "-4"),
        ],
    ),
}


def named_recipe(name: str) -> SurfaceRecipe:
    found = NAMED_RECIPES.get(name)
    if found is None:
        raise RecipeError(f"Unknown recipe '{name}'. Known: {', '.join(sorted(NAMED_RECIPES))}.")
    return found
