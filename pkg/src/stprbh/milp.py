"""
Solver-neutral binary linear programs and their CPLEX-LP / MPS text forms.

The objective is always maximised. LP files cannot carry an objective
constant, so ``export_lp`` writes it as a ``\\ objective constant = c``
comment; ``export_mps`` additionally puts ``-c`` on the objective row of the
RHS section, which is how most MPS readers express an offset, and states the
sense in an ``OBJSENSE`` section as well as a comment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import format_number

BINARY = "binary"
CONTINUOUS = "continuous"
SENSES = ("<=", ">=", "=")
MAX_LINE = 255


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = BINARY
    lb: float = 0.0
    ub: float = 1.0

    @property
    def fixed(self) -> bool:
        return self.lb == self.ub


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    columns: tuple[Column, ...]
    rows: tuple[Row, ...]
    objective: tuple[tuple[int, float], ...]
    constant: float = 0.0
    name: str = "model"

    def __post_init__(self) -> None:
        n = len(self.columns)
        for col in self.columns:
            if col.kind not in (BINARY, CONTINUOUS):
                raise ValueError(f"column {col.name}: unknown kind {col.kind!r}")
            if col.kind == BINARY and not (0 <= col.lb <= col.ub <= 1):
                raise ValueError(f"binary column {col.name} has bounds [{col.lb}, {col.ub}]")
        for row in self.rows:
            if row.sense not in SENSES:
                raise ValueError(f"row {row.name}: bad sense {row.sense!r}")
            seen = set()
            for j, _ in row.coeffs:
                if not 0 <= j < n:
                    raise ValueError(f"row {row.name} references missing column {j}")
                if j in seen:
                    raise ValueError(f"row {row.name} lists column {j} twice")
                seen.add(j)
        for j, _ in self.objective:
            if not 0 <= j < n:
                raise ValueError(f"objective references missing column {j}")

    @property
    def num_columns(self) -> int:
        return len(self.columns)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def dense(self):
        """``(c, A, senses, b, lb, ub)`` as numpy arrays."""
        n, m = self.num_columns, self.num_rows
        c = np.zeros(n)
        for j, a in self.objective:
            c[j] += a
        A = np.zeros((m, n))
        b = np.empty(m)
        senses = np.empty(m, dtype="<U2")
        for i, row in enumerate(self.rows):
            for j, a in row.coeffs:
                A[i, j] = a
            b[i] = row.rhs
            senses[i] = row.sense
        lb = np.array([col.lb for col in self.columns], dtype=float)
        ub = np.array([col.ub for col in self.columns], dtype=float)
        return c, A, senses, b, lb, ub

    def objective_value(self, x) -> float:
        return self.constant + sum(a * x[j] for j, a in self.objective)

    def violations(self, x, tol: float = 1e-7) -> list[str]:
        """Names of rows and columns that ``x`` violates beyond ``tol``."""
        out = []
        for j, col in enumerate(self.columns):
            if x[j] < col.lb - tol or x[j] > col.ub + tol:
                out.append(col.name)
            elif col.kind == BINARY and min(abs(x[j]), abs(x[j] - 1)) > tol:
                out.append(col.name)
        for row in self.rows:
            act = sum(a * x[j] for j, a in row.coeffs)
            slack = tol * max(1.0, abs(row.rhs))
            if (
                (row.sense == "<=" and act > row.rhs + slack)
                or (row.sense == ">=" and act < row.rhs - slack)
                or (row.sense == "=" and abs(act - row.rhs) > slack)
            ):
                out.append(row.name)
        return out


# ---------------------------------------------------------------------------
# CPLEX LP


def _linear_terms(coeffs, columns) -> list[str]:
    terms = []
    for k, (j, a) in enumerate(coeffs):
        name = columns[j].name
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        body = name if mag == 1 else f"{format_number(mag)} {name}"
        if k == 0:
            terms.append(f"-{body}" if a < 0 else body)
        else:
            terms.append(f"{sign} {body}")
    return terms


def _wrap(head: str, tokens: list[str]) -> list[str]:
    """Join tokens after ``head``, continuing on indented lines past MAX_LINE."""
    lines, cur = [], head
    for tok in tokens:
        candidate = cur + tok if not cur.strip() else f"{cur} {tok}"
        if len(candidate) > MAX_LINE and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = candidate
    lines.append(cur)
    return lines


def export_lp(model: MilpModel) -> str:
    cols = model.columns
    out = []
    if model.constant != 0:
        out.append(f"\\ objective constant = {format_number(model.constant)}")
    out.append("Maximize")
    out += _wrap(" obj:", _linear_terms(model.objective, cols))
    out.append("Subject To")
    for row in model.rows:
        tokens = _linear_terms(row.coeffs, cols) or ["0"]
        tokens += [row.sense, format_number(row.rhs)]
        out += _wrap(f" {row.name}:", tokens)
    bounds = []
    for col in cols:
        if col.kind == BINARY:
            if col.fixed:
                bounds.append(f" {col.name} = {format_number(col.lb)}")
            elif (col.lb, col.ub) != (0.0, 1.0):
                bounds.append(f" {format_number(col.lb)} <= {col.name} <= {format_number(col.ub)}")
        else:
            if col.fixed:
                bounds.append(f" {col.name} = {format_number(col.lb)}")
            elif col.lb == 0 and col.ub == np.inf:
                continue
            else:
                lo = "-inf" if col.lb == -np.inf else format_number(col.lb)
                hi = "+inf" if col.ub == np.inf else format_number(col.ub)
                bounds.append(f" {lo} <= {col.name} <= {hi}")
    if bounds:
        out.append("Bounds")
        out += bounds
    binaries = [col.name for col in cols if col.kind == BINARY]
    if binaries:
        out.append("Binaries")
        out += _wrap(" ", binaries)
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# MPS

_MPS_SENSE = {"<=": "L", ">=": "G", "=": "E"}
_MPS_SENSE_INV = {v: k for k, v in _MPS_SENSE.items()}


def _fields(*items: tuple[int, str]) -> str:
    """Place each string at its fixed-format start column (1-based)."""
    line = ""
    for start, text in items:
        pad = start - 1 - len(line)
        line += " " * max(pad, 1 if line else pad) + text
    return line.rstrip()


def export_mps(model: MilpModel) -> str:
    """Fixed-field MPS; names longer than eight characters push later fields right."""
    cols = model.columns
    by_col: list[list[tuple[str, float]]] = [[] for _ in cols]
    for j, a in model.objective:
        by_col[j].append(("obj", a))
    for row in model.rows:
        for j, a in row.coeffs:
            by_col[j].append((row.name, a))

    out = [
        "* objective sense: MAXIMIZE",
        f"* objective constant = {format_number(model.constant)}",
        _fields((1, "NAME"), (15, model.name)),
        "OBJSENSE",
        _fields((5, "MAX"),),
        "ROWS",
        _fields((2, "N"), (5, "obj")),
    ]
    out += [_fields((2, _MPS_SENSE[row.sense]), (5, row.name)) for row in model.rows]
    out.append("COLUMNS")
    in_int = False
    for j, col in enumerate(cols):
        is_int = col.kind == BINARY
        if is_int != in_int:
            marker = "'INTORG'" if is_int else "'INTEND'"
            out.append(_fields((5, "MARKER"), (15, "'MARKER'"), (40, marker)))
            in_int = is_int
        entries = by_col[j] or [("obj", 0.0)]
        out += [_fields((5, col.name), (15, r), (25, format_number(a))) for r, a in entries]
    if in_int:
        out.append(_fields((5, "MARKER"), (15, "'MARKER'"), (40, "'INTEND'")))
    out.append("RHS")
    if model.constant != 0:
        out.append(_fields((5, "RHS"), (15, "obj"), (25, format_number(-model.constant))))
    out += [_fields((5, "RHS"), (15, row.name), (25, format_number(row.rhs))) for row in model.rows if row.rhs != 0]
    out.append("BOUNDS")
    for col in cols:
        if col.kind == BINARY:
            # the INTORG markers already make a fixed binary integral
            if col.fixed:
                out.append(_fields((2, "FX"), (5, "BND"), (15, col.name), (25, format_number(col.lb))))
                continue
            out.append(_fields((2, "BV"), (5, "BND"), (15, col.name)))
            if (col.lb, col.ub) != (0.0, 1.0):
                out.append(_fields((2, "LO"), (5, "BND"), (15, col.name), (25, format_number(col.lb))))
                out.append(_fields((2, "UP"), (5, "BND"), (15, col.name), (25, format_number(col.ub))))
        elif col.fixed:
            out.append(_fields((2, "FX"), (5, "BND"), (15, col.name), (25, format_number(col.lb))))
        else:
            if col.lb == -np.inf and col.ub == np.inf:
                out.append(_fields((2, "FR"), (5, "BND"), (15, col.name)))
                continue
            if col.lb == -np.inf:
                out.append(_fields((2, "MI"), (5, "BND"), (15, col.name)))
            elif col.lb != 0:
                out.append(_fields((2, "LO"), (5, "BND"), (15, col.name), (25, format_number(col.lb))))
            if col.ub != np.inf:
                out.append(_fields((2, "UP"), (5, "BND"), (15, col.name), (25, format_number(col.ub))))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(text: str) -> MilpModel:
    """Read back what ``export_mps`` writes (whitespace-separated fields).

    Only maximisation is accepted, since that is all ``MilpModel`` expresses.
    """
    section = None
    name = "model"
    obj_row = None
    row_names: list[str] = []
    row_sense: dict[str, str] = {}
    col_names: list[str] = []
    col_kind: dict[str, str] = {}
    entries: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    lb: dict[str, float] = {}
    ub: dict[str, float] = {}
    integer = False
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            toks = raw.split()
            section = toks[0].upper()
            if section == "NAME" and len(toks) > 1:
                name = toks[1]
            if section == "ENDATA":
                break
            continue
        toks = raw.split()
        if section == "OBJSENSE":
            if toks[0].upper() not in ("MAX", "MAXIMIZE"):
                raise ValueError(f"unsupported objective sense {toks[0]}")
        elif section == "ROWS":
            kind, rname = toks
            if kind == "N":
                obj_row = obj_row or rname
            else:
                row_names.append(rname)
                row_sense[rname] = _MPS_SENSE_INV[kind]
        elif section == "COLUMNS":
            if len(toks) >= 3 and toks[1] == "'MARKER'":
                integer = toks[2] == "'INTORG'"
                continue
            cname = toks[0]
            if cname not in entries:
                col_names.append(cname)
                entries[cname] = {}
                col_kind[cname] = BINARY if integer else CONTINUOUS
                lb[cname], ub[cname] = 0.0, (1.0 if integer else np.inf)
            pairs = toks[1:]
            for k in range(0, len(pairs), 2):
                entries[cname][pairs[k]] = float(pairs[k + 1])
        elif section == "RHS":
            pairs = toks[1:]
            for k in range(0, len(pairs), 2):
                rhs[pairs[k]] = float(pairs[k + 1])
        elif section == "BOUNDS":
            kind, cname = toks[0], toks[2]
            val = float(toks[3]) if len(toks) > 3 else None
            if kind == "BV":
                col_kind[cname] = BINARY
                lb[cname], ub[cname] = 0.0, 1.0
            elif kind == "FX":
                lb[cname] = ub[cname] = val
            elif kind == "LO":
                lb[cname] = val
            elif kind == "UP":
                ub[cname] = val
            elif kind == "MI":
                lb[cname] = -np.inf
            elif kind == "PL":
                ub[cname] = np.inf
            elif kind == "FR":
                lb[cname], ub[cname] = -np.inf, np.inf
            else:
                raise ValueError(f"unsupported bound type {kind}")

    col_idx = {c: j for j, c in enumerate(col_names)}
    columns = tuple(Column(c, col_kind[c], lb[c], ub[c]) for c in col_names)
    by_row: dict[str, list[tuple[int, float]]] = {r: [] for r in row_names}
    objective = []
    for c in col_names:
        for rname, a in entries[c].items():
            if rname == obj_row:
                if a != 0:
                    objective.append((col_idx[c], a))
            else:
                by_row[rname].append((col_idx[c], a))
    rows = tuple(Row(r, tuple(by_row[r]), row_sense[r], rhs.get(r, 0.0)) for r in row_names)
    constant = -rhs.get(obj_row, 0.0) if obj_row else 0.0
    return MilpModel(columns, rows, tuple(objective), constant + 0.0, name)
