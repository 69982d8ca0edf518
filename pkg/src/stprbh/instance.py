"""
Problem data for the Steiner tree problem with revenues, budget and hop
constraints, plus reading and writing of STP-style text files.

Nodes are 0-based inside the package and 1-based in files; ``parse_stp``
subtracts one from every node id it reads and ``write_stp`` adds it back.
Edges are stored with ``u < v`` and sorted, so two instances with the same
edge set compare equal regardless of the order the file listed them in.
"""

from __future__ import annotations

import logging
import math
import os
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

log = logging.getLogger(__name__)

STP_HEADER = "33D32945 STP File, STP Format Version 1.0"


class StpError(ValueError):
    """Base class for everything that can go wrong reading an instance."""


class MissingSection(StpError):
    pass


class MalformedLine(StpError):
    def __init__(self, lineno: int, line: str, reason: str = "") -> None:
        self.lineno = lineno
        self.line = line
        msg = f"line {lineno}: cannot parse {line.strip()!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class InvariantViolation(StpError):
    pass


class MissingRoot(StpError):
    pass


class MissingBudget(StpError):
    pass


class MissingHopLimit(StpError):
    pass


class EmptyTerminalSet(ValueError):
    pass


Edge = tuple[int, int, float]


def _is_integral(values) -> bool:
    return all(float(x).is_integer() for x in values)


@dataclass(frozen=True)
class Instance:
    """A rooted STPRBH instance on nodes ``0..node_count-1``."""

    node_count: int
    edges: tuple[Edge, ...]
    revenues: tuple[float, ...]
    root: int
    budget: float
    hop_limit: int
    name: str = ""

    def __post_init__(self) -> None:
        n = self.node_count
        if n < 1:
            raise InvariantViolation(f"node_count must be positive, got {n}")
        norm = []
        seen = set()
        for u, v, c in self.edges:
            u, v, c = int(u), int(v), float(c)
            if u == v:
                raise InvariantViolation(f"self-loop at node {u + 1}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvariantViolation(f"edge ({u + 1},{v + 1}) has an endpoint outside 1..{n}")
            if not c > 0 or math.isinf(c):
                raise InvariantViolation(f"edge ({u + 1},{v + 1}) has non-positive cost {c}")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise InvariantViolation(f"duplicate edge ({u + 1},{v + 1})")
            seen.add((u, v))
            norm.append((u, v, c))
        norm.sort()
        object.__setattr__(self, "edges", tuple(norm))

        revs = tuple(float(x) for x in self.revenues)
        if len(revs) != n:
            raise InvariantViolation(f"expected {n} revenues, got {len(revs)}")
        if any(not x >= 0 or math.isinf(x) for x in revs):
            raise InvariantViolation("revenues must be finite and non-negative")
        object.__setattr__(self, "revenues", revs)

        if not 0 <= self.root < n:
            raise InvariantViolation(f"root {self.root + 1} outside 1..{n}")
        if not float(self.budget) >= 0:
            raise InvariantViolation(f"budget must be non-negative, got {self.budget}")
        object.__setattr__(self, "budget", float(self.budget))
        if int(self.hop_limit) != self.hop_limit or self.hop_limit < 1:
            raise InvariantViolation(f"hop limit must be a positive integer, got {self.hop_limit}")
        object.__setattr__(self, "hop_limit", int(self.hop_limit))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        """Neighbour lists ``(w, cost)`` sorted by ``w``."""
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.node_count)]
        for u, v, c in self.edges:
            adj[u].append((v, c))
            adj[v].append((u, c))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def edge_cost(self) -> dict[tuple[int, int], float]:
        """Cost lookup keyed by both orientations of every edge."""
        out = {}
        for u, v, c in self.edges:
            out[(u, v)] = c
            out[(v, u)] = c
        return out

    @cached_property
    def is_integral(self) -> bool:
        """True when every cost, revenue and the budget is a whole number."""
        return (
            _is_integral(c for _, _, c in self.edges)
            and _is_integral(self.revenues)
            and float(self.budget).is_integer()
        )

    def neighbours(self, v: int) -> list[int]:
        return [w for w, _ in self.adjacency[v]]

    def with_edges(self, edges, name: str | None = None) -> "Instance":
        return Instance(
            node_count=self.node_count,
            edges=tuple(edges),
            revenues=self.revenues,
            root=self.root,
            budget=self.budget,
            hop_limit=self.hop_limit,
            name=self.name if name is None else name,
        )


# ---------------------------------------------------------------------------
# STP text format

_SECTION_RE = re.compile(r"^section\s+(\S+)", re.IGNORECASE)
_KNOWN_SECTIONS = {"comment", "graph", "terminals", "budget", "hop", "coordinates", "presolve"}


def _number(tok: str, lineno: int, line: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MalformedLine(lineno, line, f"expected a number, got {tok!r}") from None


def _node(tok: str, lineno: int, line: str) -> int:
    try:
        val = int(tok)
    except ValueError:
        raise MalformedLine(lineno, line, f"expected a node id, got {tok!r}") from None
    return val - 1


@dataclass
class _RawStp:
    name: str = ""
    nodes: int | None = None
    declared_edges: int | None = None
    edges: list = field(default_factory=list)
    terminals: dict = field(default_factory=dict)
    declared_terminals: int | None = None
    root: int | None = None
    budget: float | None = None
    hop_limit: int | None = None
    sections: set = field(default_factory=set)


def _scan(text: str, warnings: list[str] | None) -> _RawStp:
    raw = _RawStp()
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if lineno == 1 and stripped.upper().startswith("33D32945"):
            continue
        m = _SECTION_RE.match(stripped)
        if m:
            section = m.group(1).lower()
            raw.sections.add(section)
            if section not in _KNOWN_SECTIONS:
                _warn(warnings, f"line {lineno}: ignoring unknown section {m.group(1)!r}")
            continue
        toks = stripped.split()
        key = toks[0].lower()
        if key == "end":
            section = None
            continue
        if key == "eof":
            break

        if key == "name" and section in (None, "comment"):
            raw.name = stripped.split(None, 1)[1].strip().strip('"') if len(toks) > 1 else ""
            continue
        if section == "comment":
            continue
        if section is not None and section not in _KNOWN_SECTIONS:
            continue
        if section in ("coordinates", "presolve"):
            continue

        # Budget and hop lines are accepted in any section or at top level.
        if key in ("b", "budget") and section != "graph":
            if len(toks) != 2:
                raise MalformedLine(lineno, line, "budget line takes one value")
            raw.budget = _number(toks[1], lineno, line)
            continue
        if key in ("h", "hop", "hoplimit", "hops"):
            if len(toks) != 2:
                raise MalformedLine(lineno, line, "hop line takes one value")
            h = _number(toks[1], lineno, line)
            if not h.is_integer():
                raise MalformedLine(lineno, line, "hop limit must be an integer")
            raw.hop_limit = int(h)
            continue
        if key in ("root", "rootp"):
            if len(toks) != 2:
                raise MalformedLine(lineno, line, "root line takes one node id")
            raw.root = _node(toks[1], lineno, line)
            continue

        if section == "graph":
            if key == "nodes":
                raw.nodes = int(_number(toks[1], lineno, line)) if len(toks) == 2 else None
                if raw.nodes is None:
                    raise MalformedLine(lineno, line)
            elif key == "edges":
                if len(toks) != 2:
                    raise MalformedLine(lineno, line)
                raw.declared_edges = int(_number(toks[1], lineno, line))
            elif key in ("e", "a"):
                if len(toks) != 4:
                    raise MalformedLine(lineno, line, "edge lines are 'E u v cost'")
                raw.edges.append(
                    (_node(toks[1], lineno, line), _node(toks[2], lineno, line), _number(toks[3], lineno, line))
                )
            else:
                raise MalformedLine(lineno, line, "unknown keyword in Graph section")
        elif section == "terminals":
            if key == "terminals":
                if len(toks) != 2:
                    raise MalformedLine(lineno, line)
                raw.declared_terminals = int(_number(toks[1], lineno, line))
            elif key in ("t", "tp", "tr"):
                if len(toks) not in (2, 3):
                    raise MalformedLine(lineno, line, "terminal lines are 'TP v revenue'")
                v = _node(toks[1], lineno, line)
                rev = _number(toks[2], lineno, line) if len(toks) == 3 else 0.0
                raw.terminals[v] = rev
            else:
                raise MalformedLine(lineno, line, "unknown keyword in Terminals section")
        elif section is None:
            raise MalformedLine(lineno, line, "content outside any section")
        else:
            # budget/hop sections with unrecognised keys
            raise MalformedLine(lineno, line, f"unknown keyword in {section} section")
    return raw


def _warn(warnings: list[str] | None, msg: str) -> None:
    log.warning(msg)
    if warnings is not None:
        warnings.append(msg)


def parse_stp(text: str, warnings: list[str] | None = None) -> Instance:
    """Parse an STP-style instance.

    The reader accepts several dialects: ``E`` edge lines, ``T``/``TP``/``TR``
    terminal lines, ``Root``/``RootP``, and ``B``/``Budget``/``H``/``HopLimit``
    either inside their own section or at top level. Keywords are matched
    case-insensitively. Nodes not listed as terminals get revenue 0.
    Diagnostics for skipped content are appended to ``warnings`` if given.
    """
    raw = _scan(text, warnings)
    if "graph" not in raw.sections:
        raise MissingSection("no 'SECTION Graph' found")
    if "terminals" not in raw.sections:
        raise MissingSection("no 'SECTION Terminals' found")
    if raw.nodes is None:
        raise MissingSection("Graph section lacks a 'Nodes' line")
    if raw.declared_edges is not None and raw.declared_edges != len(raw.edges):
        raise InvariantViolation(f"'Edges {raw.declared_edges}' declared but {len(raw.edges)} edge lines found")
    if raw.declared_terminals is not None and raw.declared_terminals != len(raw.terminals):
        _warn(warnings, f"'Terminals {raw.declared_terminals}' declared but {len(raw.terminals)} listed")
    if raw.root is None:
        raise MissingRoot("no Root/RootP line")
    if raw.budget is None:
        raise MissingBudget("no budget line")
    if raw.hop_limit is None:
        raise MissingHopLimit("no hop limit line")

    revenues = [0.0] * raw.nodes
    for v, rev in raw.terminals.items():
        if not 0 <= v < raw.nodes:
            raise InvariantViolation(f"terminal {v + 1} outside 1..{raw.nodes}")
        revenues[v] = rev
    return Instance(
        node_count=raw.nodes,
        edges=tuple(raw.edges),
        revenues=tuple(revenues),
        root=raw.root,
        budget=raw.budget,
        hop_limit=raw.hop_limit,
        name=raw.name,
    )


def read_stp(path, warnings: list[str] | None = None) -> Instance:
    with open(path, encoding="utf-8") as fh:
        inst = parse_stp(fh.read(), warnings)
    if not inst.name:
        stem = os.path.splitext(os.path.basename(str(path)))[0]
        inst = Instance(inst.node_count, inst.edges, inst.revenues, inst.root, inst.budget, inst.hop_limit, stem)
    return inst


def format_number(x: float) -> str:
    """Integral values print without a decimal point, others via ``repr``."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_stp(instance: Instance) -> str:
    """Serialise to the canonical STP dialect that ``parse_stp`` reads back."""
    inst = instance
    lines = [STP_HEADER, "", "SECTION Comment", f'Name "{inst.name}"', "END", ""]
    lines += ["SECTION Graph", f"Nodes {inst.node_count}", f"Edges {inst.edge_count}"]
    lines += [f"E {u + 1} {v + 1} {format_number(c)}" for u, v, c in inst.edges]
    lines += ["END", ""]
    terms = [v for v in range(inst.node_count) if inst.revenues[v] > 0]
    lines += ["SECTION Terminals", f"Terminals {len(terms)}", f"RootP {inst.root + 1}"]
    lines += [f"TP {v + 1} {format_number(inst.revenues[v])}" for v in terms]
    lines += ["END", ""]
    lines += ["SECTION Budget", f"B {format_number(inst.budget)}", "END", ""]
    lines += ["SECTION Hop", f"H {inst.hop_limit}", "END", ""]
    lines.append("EOF")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Benchmark-style generation


@dataclass(frozen=True)
class BaseGraph:
    """Graph, costs and terminal set of a classical Steiner tree instance."""

    name: str
    node_count: int
    edges: tuple[Edge, ...]
    terminals: tuple[int, ...]


@dataclass(frozen=True)
class GeneratorParams:
    base: BaseGraph
    revenue_cap: int
    budget_divisor: int
    hop_limit: int
    rng_seed: int = 0
    divisor_in_name: bool = False

    def __post_init__(self) -> None:
        if self.budget_divisor not in (5, 10):
            raise ValueError(f"budget divisor must be 5 or 10, got {self.budget_divisor}")
        if self.revenue_cap < 1:
            raise ValueError(f"revenue cap must be at least 1, got {self.revenue_cap}")
        if self.hop_limit < 1:
            raise ValueError(f"hop limit must be positive, got {self.hop_limit}")


def generate_instance(params: GeneratorParams) -> Instance:
    """Turn a Steiner tree base graph into an STPRBH instance.

    Terminals get integer revenues drawn uniformly from ``1..revenue_cap``;
    every other node gets 0. The root is the first listed terminal and the
    budget is the total edge cost divided by ``budget_divisor``.
    """
    base = params.base
    if not base.terminals:
        raise EmptyTerminalSet(f"base graph {base.name!r} has no terminals")
    rng = np.random.default_rng(params.rng_seed)
    draws = rng.integers(1, params.revenue_cap + 1, size=len(base.terminals))
    revenues = [0.0] * base.node_count
    for v, rho in zip(base.terminals, draws):
        revenues[v] = float(rho)
    total = math.fsum(c for _, _, c in base.edges)
    if params.divisor_in_name:
        name = f"{base.name}-{params.revenue_cap}-{params.budget_divisor}-{params.hop_limit}"
    else:
        name = f"{base.name}-{params.revenue_cap}-{params.hop_limit}"
    return Instance(
        node_count=base.node_count,
        edges=base.edges,
        revenues=tuple(revenues),
        root=base.terminals[0],
        budget=total / params.budget_divisor,
        hop_limit=params.hop_limit,
        name=name,
    )


def parse_base_stp(text: str, name: str = "") -> BaseGraph:
    """Read a classical (revenue-free) STP file as generator input."""
    raw = _scan(text, None)
    if "graph" not in raw.sections or raw.nodes is None:
        raise MissingSection("no 'SECTION Graph' found")
    if "terminals" not in raw.sections:
        raise MissingSection("no 'SECTION Terminals' found")
    # Instance validation covers the graph invariants.
    probe = Instance(raw.nodes, tuple(raw.edges), (0.0,) * raw.nodes, 0, 0.0, 1)
    return BaseGraph(
        name=name or raw.name,
        node_count=raw.nodes,
        edges=probe.edges,
        terminals=tuple(raw.terminals),
    )
