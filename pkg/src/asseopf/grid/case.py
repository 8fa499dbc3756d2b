"""MATPOWER-style case files: parsing, validation, and serialization.

Supports the subset needed here: a `baseMVA` scalar and `bus`, `gen`,
`branch`, `gencost` matrices with polynomial (type 2) costs.  Transformer
taps and phase shifts are not supported; other unused columns are ignored,
with a warning record kept on the parsed case.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "CaseParseError",
    "UnsupportedFeatureError",
    "Bus",
    "Branch",
    "Generator",
    "PowerSystemCase",
    "parse_matpower_case",
    "serialize_case",
    "load_case",
]

_BUS_TYPES = {1: "PQ", 2: "PV", 3: "slack"}


class CaseParseError(ValueError):
    """Malformed case text; message carries the offending section or line."""


class UnsupportedFeatureError(ValueError):
    """Valid MATPOWER construct outside the supported subset."""


@dataclass(frozen=True)
class Bus:
    id: int
    btype: str  # slack | PV | PQ
    pd: float  # MW
    qd: float  # MVAr
    gs: float  # MW at V=1 p.u.
    bs: float  # MVAr at V=1 p.u.
    vmax: float
    vmin: float
    vm0: float = 1.0
    va0: float = 0.0  # degrees
    base_kv: float = 0.0


@dataclass(frozen=True)
class Branch:
    f_bus: int
    t_bus: int
    r: float
    x: float
    b: float
    rate_mva: float  # 0 = unlimited


@dataclass(frozen=True)
class Generator:
    bus: int
    pmin: float
    pmax: float
    qmin: float
    qmax: float
    vg: float
    pg0: float
    qg0: float
    c2: float
    c1: float
    c0: float


@dataclass(frozen=True)
class PowerSystemCase:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    name: str = "case"
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def slack_position(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.btype == "slack")

    def cost(self, pg_mw) -> float:
        """Total generation cost in $/h for per-generator outputs in MW."""
        total = 0.0
        for g, p in zip(self.generators, pg_mw):
            total += g.c2 * p * p + g.c1 * p + g.c0
        return total


def _strip_comment(line: str) -> str:
    pos = line.find("%")
    return line if pos < 0 else line[:pos]


_SECTION_RE = re.compile(r"^\s*(?:\w+\.)?(baseMVA|version|bus|gen|branch|gencost)\s*=\s*(.*)$")


def _tokenize(text: str):
    """Yield (line_no, section, payload) with matrices gathered until '];'."""
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = _strip_comment(lines[i])
        m = _SECTION_RE.match(raw)
        if not m:
            i += 1
            continue
        name, rest = m.group(1), m.group(2)
        start = i + 1
        if name in ("baseMVA", "version"):
            yield start, name, rest.strip().rstrip(";").strip()
            i += 1
            continue
        body = rest
        while "]" not in body:
            i += 1
            if i >= len(lines):
                raise CaseParseError(f"line {start}: unterminated matrix '{name}'")
            body += "\n" + _strip_comment(lines[i])
        body = body[: body.index("]")].lstrip()
        if body.startswith("["):
            body = body[1:]
        yield start, name, body
        i += 1


def _parse_matrix(name: str, body: str, start_line: int) -> list[list[float]]:
    rows = []
    for k, chunk in enumerate(body.split(";")):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = []
        for tok in chunk.split():
            try:
                vals.append(float(tok))
            except ValueError:
                raise CaseParseError(
                    f"line {start_line + k}: non-numeric token {tok!r} in '{name}'"
                ) from None
        rows.append(vals)
    return rows


def parse_matpower_case(text: str, name: str = "case") -> PowerSystemCase:
    """Parse MATPOWER-style case text into a validated PowerSystemCase."""
    sections: dict[str, tuple[int, object]] = {}
    for line_no, sec, payload in _tokenize(text):
        if sec == "version":
            continue
        if sec == "baseMVA":
            try:
                sections["baseMVA"] = (line_no, float(payload))
            except ValueError:
                raise CaseParseError(f"line {line_no}: bad baseMVA value {payload!r}") from None
        else:
            sections[sec] = (line_no, _parse_matrix(sec, payload, line_no))

    for required in ("baseMVA", "bus", "gen", "branch", "gencost"):
        if required not in sections:
            raise CaseParseError(f"missing {required}")

    warnings: list[str] = []
    base_mva = sections["baseMVA"][1]
    if base_mva <= 0:
        raise CaseParseError("baseMVA must be positive")

    buses = []
    for ln, row in enumerate(sections["bus"][1], start=sections["bus"][0]):
        if len(row) < 13:
            raise CaseParseError(f"line {ln}: bus row needs 13 columns, got {len(row)}")
        code = int(row[1])
        if code not in _BUS_TYPES:
            raise UnsupportedFeatureError(f"line {ln}: unsupported bus type code {code}")
        buses.append(
            Bus(
                id=int(row[0]),
                btype=_BUS_TYPES[code],
                pd=row[2],
                qd=row[3],
                gs=row[4],
                bs=row[5],
                vmax=row[11],
                vmin=row[12],
                vm0=row[7],
                va0=row[8],
                base_kv=row[9],
            )
        )

    branches = []
    for ln, row in enumerate(sections["branch"][1], start=sections["branch"][0]):
        if len(row) < 11:
            raise CaseParseError(f"line {ln}: branch row needs 11 columns, got {len(row)}")
        if row[10] == 0:
            warnings.append(f"branch {int(row[0])}-{int(row[1])} out of service, skipped")
            continue
        if row[8] not in (0.0, 1.0) or row[9] != 0.0:
            raise UnsupportedFeatureError(
                f"line {ln}: transformer taps / phase shifts are not supported"
            )
        branches.append(
            Branch(
                f_bus=int(row[0]),
                t_bus=int(row[1]),
                r=row[2],
                x=row[3],
                b=row[4],
                rate_mva=row[5],
            )
        )

    gen_rows = sections["gen"][1]
    cost_rows = sections["gencost"][1]
    if len(cost_rows) != len(gen_rows):
        raise CaseParseError(
            f"gencost has {len(cost_rows)} rows for {len(gen_rows)} generators"
        )
    generators = []
    for ln, (row, cost) in enumerate(zip(gen_rows, cost_rows), start=sections["gen"][0]):
        if len(row) < 10:
            raise CaseParseError(f"line {ln}: gen row needs 10 columns, got {len(row)}")
        if row[7] == 0:
            warnings.append(f"generator at bus {int(row[0])} out of service, skipped")
            continue
        model = int(cost[0])
        if model == 1:
            raise UnsupportedFeatureError("piecewise-linear generator costs are not supported")
        if model != 2:
            raise CaseParseError(f"unknown gencost model {model}")
        ncoef = int(cost[3])
        coeffs = cost[4 : 4 + ncoef]
        if len(coeffs) != ncoef:
            raise CaseParseError(f"gencost row for bus {int(row[0])} is short of coefficients")
        if ncoef > 3:
            raise UnsupportedFeatureError("polynomial costs above quadratic are not supported")
        padded = [0.0] * (3 - ncoef) + list(coeffs)
        generators.append(
            Generator(
                bus=int(row[0]),
                pmin=row[9],
                pmax=row[8],
                qmin=row[4],
                qmax=row[3],
                vg=row[5],
                pg0=row[1],
                qg0=row[2],
                c2=padded[0],
                c1=padded[1],
                c0=padded[2],
            )
        )

    case = PowerSystemCase(
        base_mva=base_mva,
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
        name=name,
        warnings=tuple(warnings),
    )
    _validate(case)
    return case


def _validate(case: PowerSystemCase):
    ids = [b.id for b in case.buses]
    if len(set(ids)) != len(ids):
        raise CaseParseError("duplicate bus ids")
    slack = [b for b in case.buses if b.btype == "slack"]
    if len(slack) != 1:
        raise CaseParseError(f"expected exactly one slack bus, found {len(slack)}")
    known = set(ids)
    for br in case.branches:
        if br.f_bus not in known or br.t_bus not in known:
            raise CaseParseError(f"branch {br.f_bus}-{br.t_bus} references an unknown bus")
    for g in case.generators:
        if g.bus not in known:
            raise CaseParseError(f"generator references unknown bus {g.bus}")
        if g.pmin > g.pmax or g.qmin > g.qmax:
            raise CaseParseError(f"generator at bus {g.bus} has inverted limits")
        if g.c2 < 0:
            raise CaseParseError(f"generator at bus {g.bus} has negative quadratic cost")
    for b in case.buses:
        if not b.vmin < b.vmax:
            raise CaseParseError(f"bus {b.id} has Vmin >= Vmax")


def _fmt(v: float) -> str:
    return format(v, ".17g")


def serialize_case(case: PowerSystemCase) -> str:
    """Emit parseable MATPOWER-style text (full double precision)."""
    code = {"PQ": 1, "PV": 2, "slack": 3}
    out = [f"function mpc = {case.name}", "mpc.version = '2';", f"mpc.baseMVA = {_fmt(case.base_mva)};"]
    out.append("mpc.bus = [")
    for b in case.buses:
        out.append(
            "\t"
            + "\t".join(
                [
                    str(b.id),
                    str(code[b.btype]),
                    _fmt(b.pd),
                    _fmt(b.qd),
                    _fmt(b.gs),
                    _fmt(b.bs),
                    "1",
                    _fmt(b.vm0),
                    _fmt(b.va0),
                    _fmt(b.base_kv),
                    "1",
                    _fmt(b.vmax),
                    _fmt(b.vmin),
                ]
            )
            + ";"
        )
    out.append("];")
    out.append("mpc.gen = [")
    for g in case.generators:
        out.append(
            "\t"
            + "\t".join(
                [
                    str(g.bus),
                    _fmt(g.pg0),
                    _fmt(g.qg0),
                    _fmt(g.qmax),
                    _fmt(g.qmin),
                    _fmt(g.vg),
                    _fmt(case.base_mva),
                    "1",
                    _fmt(g.pmax),
                    _fmt(g.pmin),
                ]
            )
            + ";"
        )
    out.append("];")
    out.append("mpc.branch = [")
    for br in case.branches:
        out.append(
            "\t"
            + "\t".join(
                [
                    str(br.f_bus),
                    str(br.t_bus),
                    _fmt(br.r),
                    _fmt(br.x),
                    _fmt(br.b),
                    _fmt(br.rate_mva),
                    _fmt(br.rate_mva),
                    _fmt(br.rate_mva),
                    "0",
                    "0",
                    "1",
                    "-360",
                    "360",
                ]
            )
            + ";"
        )
    out.append("];")
    out.append("mpc.gencost = [")
    for g in case.generators:
        out.append(
            "\t"
            + "\t".join(["2", "0", "0", "3", _fmt(g.c2), _fmt(g.c1), _fmt(g.c0)])
            + ";"
        )
    out.append("];")
    return "\n".join(out) + "\n"


def load_case(path) -> PowerSystemCase:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = re.sub(r"\W", "_", str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0])
    return parse_matpower_case(text, name=name or "case")
