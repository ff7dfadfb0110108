"""Reading agent documents and batch files, and writing report tables."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Sequence

import numpy as np

from .credal import CredalSet, psr_report
from .polytope import OptConfig
from .scoring import RULE_NAMES, make_rule
from .second_order import (
    DirichletBelief,
    EnsembleBelief,
    classic_decomposition,
    probabilistic_report,
    psr_decomposition,
    sample_dirichlet,
)
from .simplex import DEFAULT_TOL, LogBase, ValidationError, validate_prob_matrix, validate_prob_vec

AGENT_TYPES = ("probabilistic", "bayesian", "credal", "dirichlet")
METHODS = ("classic", "psr")
REPORT_COLUMNS = (
    "instance_id", "agent", "loss", "method", "base",
    "au_lower", "au_upper", "eu", "tu_lower", "tu_upper", "status",
)


class SchemaError(ValueError):
    """A document or file does not follow the expected layout."""


class ConfigError(ValueError):
    """An unsupported combination of agent, method and loss."""


@dataclass(frozen=True)
class AgentDocument:
    agent: str
    k: int
    theta: np.ndarray | None = None
    members: np.ndarray | None = None
    weights: np.ndarray | None = None
    vertices: np.ndarray | None = None
    alpha: np.ndarray | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"agent": self.agent}
        for key in ("theta", "members", "weights", "vertices", "alpha"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value.tolist()
        return out

    def reinterpret(self, agent: str) -> "AgentDocument":
        """Read an ensemble's members as credal vertices or vice versa."""
        if agent == self.agent:
            return self
        if self.agent == "bayesian" and agent == "credal":
            return AgentDocument("credal", self.k, vertices=self.members)
        if self.agent == "credal" and agent == "bayesian":
            return AgentDocument("bayesian", self.k, members=self.vertices)
        raise ConfigError(f"cannot read a {self.agent} document as a {agent} agent")


@dataclass
class BatchDataset:
    """Instances in input order; a failed instance holds its error message."""

    rows: list[tuple[str, AgentDocument | str]] = field(default_factory=list)

    @property
    def k(self) -> int | None:
        for _, doc in self.rows:
            if isinstance(doc, AgentDocument):
                return doc.k
        return None

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ReportRow:
    instance_id: str
    agent: str
    loss: str
    method: str
    base: str
    au_lower: float | None = None
    au_upper: float | None = None
    eu: float | None = None
    tu_lower: float | None = None
    tu_upper: float | None = None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _matrix(value, where: str, tol: float) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise SchemaError(f"{where}: expected a nonempty list of probability vectors")
    try:
        return validate_prob_matrix(value, tol)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def parse_agent(obj: Any, tol: float = DEFAULT_TOL, where: str = "document") -> AgentDocument:
    """Validate one decoded JSON agent document."""
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    agent = obj.get("agent")
    if agent not in AGENT_TYPES:
        raise SchemaError(f"{where}.agent: expected one of {', '.join(AGENT_TYPES)}, got {agent!r}")

    if agent == "probabilistic":
        if not isinstance(obj.get("theta"), list):
            raise SchemaError(f"{where}.theta: missing probability vector")
        try:
            theta = validate_prob_vec(obj["theta"], tol)
        except ValidationError as exc:
            raise ValidationError(f"{where}.theta: {exc}") from None
        return AgentDocument(agent, theta.size, theta=theta)

    if agent == "bayesian":
        members = _matrix(obj.get("members"), f"{where}.members", tol)
        weights = obj.get("weights")
        if weights is not None:
            try:
                weights = EnsembleBelief(members, weights).weights
            except ValidationError as exc:
                raise ValidationError(f"{where}.weights: {exc}") from None
        return AgentDocument(agent, members.shape[1], members=members, weights=weights)

    if agent == "credal":
        vertices = _matrix(obj.get("vertices"), f"{where}.vertices", tol)
        return AgentDocument(agent, vertices.shape[1], vertices=vertices)

    alpha = obj.get("alpha")
    if not isinstance(alpha, list):
        raise SchemaError(f"{where}.alpha: missing concentration parameters")
    try:
        alpha = DirichletBelief(alpha).alpha
    except (ValidationError, ValueError, TypeError) as exc:
        raise ValidationError(f"{where}.alpha: {exc}") from None
    return AgentDocument(agent, alpha.size, alpha=alpha)


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text(encoding="utf-8")


def parse_agent_file(source, tol: float = DEFAULT_TOL) -> AgentDocument:
    """Parse a single JSON agent document from a path or open stream."""
    try:
        obj = json.loads(_read_text(source))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return parse_agent(obj, tol)


def parse_json_batch(source, tol: float = DEFAULT_TOL, strict: bool = True) -> BatchDataset:
    """Parse one document or a JSON array of documents (optional ``"id"`` each)."""
    try:
        obj = json.loads(_read_text(source))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    items = obj if isinstance(obj, list) else [obj]
    if not items:
        raise SchemaError("no instances")
    ds = BatchDataset()
    seen: set[str] = set()
    for i, item in enumerate(items):
        ident = str(item.get("id", i)) if isinstance(item, dict) else str(i)
        if ident in seen:
            raise SchemaError(f"duplicate instance id {ident!r}")
        seen.add(ident)
        try:
            ds.rows.append((ident, parse_agent(item, tol, where=f"instance {ident}")))
        except (ValidationError, SchemaError) as exc:
            if strict:
                raise
            ds.rows.append((ident, str(exc)))
    _check_homogeneous(ds)
    return ds


def _check_homogeneous(ds: BatchDataset) -> None:
    ks = {doc.k for _, doc in ds.rows if isinstance(doc, AgentDocument)}
    if len(ks) > 1:
        raise SchemaError(f"instances disagree on the number of classes: {sorted(ks)}")


def _member_key(member_id: str):
    try:
        return (0, int(member_id), member_id)
    except ValueError:
        return (1, 0, member_id)


def parse_batch_csv(source, agent: str = "bayesian", tol: float = DEFAULT_TOL,
                    strict: bool = True) -> BatchDataset:
    """Parse long-format CSV: ``instance_id, member_id, p_1, ..., p_K``.

    Rows are grouped by instance (first-appearance order) and sorted by
    member id.  Layout problems always raise; with ``strict=False`` a bad
    probability row only invalidates its own instance.
    """
    if agent not in ("bayesian", "credal", "probabilistic"):
        raise ConfigError(f"CSV input cannot describe a {agent} agent")
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or [h.strip() for h in header[:2]] != ["instance_id", "member_id"]:
        raise SchemaError("line 1: header must start with instance_id,member_id")
    k = len(header) - 2
    expected = [f"p_{i}" for i in range(1, k + 1)]
    if [h.strip() for h in header[2:]] != expected:
        raise SchemaError(f"line 1: probability columns must be {','.join(expected) or 'p_1..p_K'}")
    if k < 2:
        raise SchemaError("line 1: need at least two probability columns")

    groups: dict[str, list[tuple[str, int, list[str]]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != k + 2:
            raise SchemaError(f"line {lineno}: expected {k + 2} fields, got {len(row)}")
        inst, member = row[0].strip(), row[1].strip()
        bucket = groups.setdefault(inst, [])
        if any(m == member for m, _, _ in bucket):
            raise SchemaError(f"line {lineno}: duplicate member {member!r} for instance {inst!r}")
        bucket.append((member, lineno, row[2:]))
    if not groups:
        raise SchemaError("no instances")

    ds = BatchDataset()
    for inst, bucket in groups.items():
        bucket.sort(key=lambda item: _member_key(item[0]))
        try:
            rows = []
            for member, lineno, cells in bucket:
                try:
                    rows.append(validate_prob_vec([float(c) for c in cells], tol))
                except ValueError as exc:
                    raise ValidationError(f"line {lineno}: {exc}") from None
            mat = np.stack(rows)
            if agent == "probabilistic":
                if len(mat) != 1:
                    raise ValidationError(f"instance {inst!r}: probabilistic agents need exactly one row")
                doc = AgentDocument(agent, k, theta=mat[0])
            elif agent == "credal":
                doc = AgentDocument(agent, k, vertices=mat)
            else:
                doc = AgentDocument(agent, k, members=mat)
        except ValidationError as exc:
            if strict:
                raise
            doc = str(exc)
        ds.rows.append((inst, doc))
    return ds


@dataclass(frozen=True)
class ReportConfig:
    loss: str = "log"
    method: str = "psr"
    base: LogBase = LogBase.BITS
    seed: int = 0
    alpha_samples: int = 1000
    epsilon: float | None = None
    fail_fast: bool = False
    opt: OptConfig = OptConfig()


def check_config(config: ReportConfig, agents: Iterable[str]) -> None:
    if config.method not in METHODS:
        raise ConfigError(f"unknown method {config.method!r}")
    if make_rule(config.loss).name not in RULE_NAMES:
        raise ConfigError(f"unknown loss {config.loss!r}")
    if config.method == "classic":
        if make_rule(config.loss).name != "log":
            raise ConfigError("the classic method is defined for the log loss only")
        if "credal" in set(agents):
            raise ConfigError("the classic method needs probabilistic, bayesian or dirichlet agents")


def _row_for(ident: str, doc: AgentDocument, config: ReportConfig, index: int) -> ReportRow:
    rule = make_rule(config.loss, config.base, config.epsilon)
    meta = dict(instance_id=ident, agent=doc.agent, loss=rule.name, method=config.method,
                base=config.base.value)
    if doc.agent == "credal":
        rep = psr_report(CredalSet(doc.vertices), rule, config.opt)
        return ReportRow(**meta, au_lower=float(rep.au_lower), au_upper=float(rep.au_upper),
                         eu=float(rep.eu), tu_lower=float(rep.tu_lower), tu_upper=float(rep.tu_upper))

    if doc.agent == "probabilistic":
        rep = probabilistic_report(doc.theta, rule, config.method)
    else:
        if doc.agent == "dirichlet":
            belief = sample_dirichlet(DirichletBelief(doc.alpha), config.alpha_samples,
                                      seed=[config.seed, index])
        else:
            belief = EnsembleBelief(doc.members, doc.weights)
        if config.method == "classic":
            rep = classic_decomposition(belief, config.base)
        else:
            rep = psr_decomposition(belief, rule)
    return ReportRow(**meta, au_lower=float(rep.au), au_upper=float(rep.au), eu=float(rep.eu),
                     tu_lower=float(rep.tu), tu_upper=float(rep.tu))


def compute_report(ds: BatchDataset, config: ReportConfig) -> list[ReportRow]:
    """One report row per instance, in input order.

    Failures land in the row's ``status`` unless ``config.fail_fast`` is set.
    """
    check_config(config, [doc.agent for _, doc in ds.rows if isinstance(doc, AgentDocument)])
    out = []
    for index, (ident, doc) in enumerate(ds.rows):
        agent = doc.agent if isinstance(doc, AgentDocument) else ""
        meta = dict(instance_id=ident, agent=agent, loss=make_rule(config.loss).name,
                    method=config.method, base=config.base.value)
        if not isinstance(doc, AgentDocument):
            if config.fail_fast:
                raise ValidationError(doc)
            out.append(ReportRow(**meta, status=f"error: {doc}"))
            continue
        try:
            out.append(_row_for(ident, doc, config, index))
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            if config.fail_fast:
                raise
            out.append(ReportRow(**meta, status=f"error: {exc}"))
    return out


def format_number(x: float | None) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".9g")


def write_csv(rows: Sequence[ReportRow], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([row.instance_id, row.agent, row.loss, row.method, row.base,
                         *(format_number(getattr(row, c)) for c in REPORT_COLUMNS[5:10]),
                         row.status])


def _json_value(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(format(x, ".9g"))
    return x


def write_json(rows: Sequence[ReportRow], stream: IO[str]) -> None:
    payload = [{c: _json_value(getattr(row, c)) for c in REPORT_COLUMNS} for row in rows]
    json.dump(payload, stream, indent=2)
    stream.write("\n")
