"""Definition expansion, arithmetic evaluation, and dataset verification.

Expansion rewrites every application whose head has a definitional FMP in its
CD, innermost first, pass by pass until nothing changes.  Head symbols in the
base environment are never expanded; symbols without a definition stay in
place and show up in the residual set.  A definition-set that keeps changing
past the depth budget is reported as cyclic.

Evaluation is plain 64-bit float arithmetic over the base environment
(the seven arith1 operations by default); integers widen to float at
application time.  Division by zero is an error, not infinity: in
statistical data a zero denominator is a data bug worth surfacing.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from decimal import Decimal
from pathlib import Path
from typing import Callable, Iterable

from .annotations import (
    DataPoint,
    Derivation,
    CyclicDerivationError,
    decimal_to_om,
    derivation_to_om,
    extract_data_points,
    extract_derivations,
)
from .cd import ContentDictionary, DefinitionalFMP, find_definition, parse_cd_xml
from .config import DEFAULT_VOCAB, StatVocab
from .errors import ToolkitError
from .om import (
    DEFAULT_CDBASE,
    OMApplication,
    OMBinding,
    OMFloat,
    OMInteger,
    OMObject,
    OMSymbol,
    OMVariable,
    free_variables,
    iter_symbols,
    parse_symbol_uri,
    serialize_om_xml,
    symbol_iri,
)
from .rdf import RDF_TYPE, XSD_DECIMAL, Graph, Iri, Literal, Triple


class UnboundVariableError(ToolkitError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable: {name}")


class DepthExceededError(ToolkitError):
    def __init__(self, max_depth: int, chain: list[str]):
        self.max_depth = max_depth
        self.chain = chain
        super().__init__(
            f"no fixpoint after {max_depth} rewrite passes; still expanding: "
            + ", ".join(chain)
        )


class ArityMismatchError(ToolkitError):
    def __init__(self, symbol: str, expected: int, got: int):
        self.symbol = symbol
        self.expected = expected
        self.got = got
        super().__init__(f"{symbol} expects {expected} argument(s), got {got}")


class DivisionByZeroError(ToolkitError):
    def __init__(self, location: str):
        self.location = location
        super().__init__(f"division by zero in {location}")


class UnknownSymbolError(ToolkitError):
    def __init__(self, uri: str):
        self.uri = uri
        super().__init__(f"no definition and no base operation for {uri}")


class FreeVariableError(ToolkitError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"cannot evaluate open term; free variable {name}")


class NonNumericLeafError(ToolkitError):
    pass


class NoComputableRegionError(ToolkitError):
    pass


# ---------------------------------------------------------------------------
# CD store
# ---------------------------------------------------------------------------


class CdStore:
    """CDs by (cdbase, cdname), with an optional fetch hook for misses.

    A stored CD is never silently replaced; re-adding an identical CD is a
    no-op, a conflicting one is an error.  Failed fetches are remembered so a
    run stays deterministic and does not hammer an unreachable host.
    """

    def __init__(self, fetch: Callable[[str, str], ContentDictionary] | None = None):
        self._fetch = fetch
        self._cds: dict[tuple[str, str], ContentDictionary] = {}
        self._fetch_errors: dict[tuple[str, str], Exception] = {}
        self._lock = threading.Lock()

    def add(self, cd: ContentDictionary) -> None:
        key = (cd.cdbase.rstrip("/"), cd.cdname)
        with self._lock:
            existing = self._cds.get(key)
            if existing is None:
                self._cds[key] = cd
            elif existing != cd:
                raise ValueError(f"CD already stored for {key}; refusing to replace it")

    def load_directory(self, path: str | Path) -> int:
        """Parse every .ocd file in a directory into the store."""
        count = 0
        for file in sorted(Path(path).glob("*.ocd")):
            self.add(parse_cd_xml(file.read_text(encoding="utf-8"), source_url=file.as_uri()))
            count += 1
        return count

    def lookup(self, cdbase: str, cdname: str) -> ContentDictionary | None:
        key = (cdbase.rstrip("/"), cdname)
        with self._lock:
            if key in self._cds:
                return self._cds[key]
            if self._fetch is None or key in self._fetch_errors:
                return None
        try:
            cd = self._fetch(cdbase, cdname)
        except Exception as exc:
            with self._lock:
                self._fetch_errors.setdefault(key, exc)
            return None
        with self._lock:
            self._cds.setdefault(key, cd)
            return self._cds[key]

    def fetch_error(self, cdbase: str, cdname: str) -> Exception | None:
        return self._fetch_errors.get((cdbase.rstrip("/"), cdname))


# ---------------------------------------------------------------------------
# Base environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseOp:
    name: str
    arity: int | None  # None: n-ary, at least one argument
    apply: Callable[[list[float]], float]


class BaseEnv:
    """Numeric meaning for the base symbols expansion must not rewrite."""

    def __init__(self, ops: dict[tuple[str, str, str], BaseOp]):
        self._ops = ops

    def contains(self, sym: OMSymbol) -> bool:
        return (sym.cdbase.rstrip("/"), sym.cd, sym.name) in self._ops

    def op_for(self, sym: OMSymbol) -> BaseOp | None:
        return self._ops.get((sym.cdbase.rstrip("/"), sym.cd, sym.name))

    @classmethod
    def arith1(cls) -> "BaseEnv":
        def k(name: str) -> tuple[str, str, str]:
            return (DEFAULT_CDBASE, "arith1", name)

        def fold(fn):
            def apply(args: list[float]) -> float:
                acc = args[0]
                for a in args[1:]:
                    acc = fn(acc, a)
                return acc

            return apply

        ops = {
            k("plus"): BaseOp("plus", None, fold(lambda a, b: a + b)),
            k("times"): BaseOp("times", None, fold(lambda a, b: a * b)),
            k("minus"): BaseOp("minus", 2, lambda a: a[0] - a[1]),
            k("divide"): BaseOp("divide", 2, lambda a: a[0] / a[1]),
            k("power"): BaseOp("power", 2, lambda a: a[0] ** a[1]),
            k("unary_minus"): BaseOp("unary_minus", 1, lambda a: -a[0]),
            k("abs"): BaseOp("abs", 1, lambda a: abs(a[0])),
        }
        return cls(ops)


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


def _fresh_name(base: str, taken: set[str]) -> str:
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def _replace(obj: OMObject, mapping: dict[str, OMObject], bound: frozenset[str]) -> OMObject:
    """Replace free occurrences of mapped variables; unmapped ones survive."""
    if isinstance(obj, OMVariable):
        if obj.name in bound or obj.name not in mapping:
            return obj
        return mapping[obj.name]
    if isinstance(obj, OMApplication):
        return OMApplication(
            _replace(obj.head, mapping, bound),
            tuple(_replace(a, mapping, bound) for a in obj.args),
        )
    if isinstance(obj, OMBinding):
        names = {v.name for v in obj.variables}
        body_free = free_variables(obj.body)
        active = {
            k: v
            for k, v in mapping.items()
            if k in body_free and k not in names and k not in bound
        }
        # Rename any bound variable that would capture a free variable of an
        # incoming replacement value.
        incoming = set()
        for value in active.values():
            incoming |= free_variables(value)
        clashes = sorted(names & incoming)
        variables = obj.variables
        body = obj.body
        if clashes:
            taken = names | incoming | set(mapping) | bound | free_variables(body)
            renames: dict[str, OMObject] = {}
            new_vars = []
            for v in variables:
                if v.name in clashes:
                    fresh = _fresh_name(v.name, taken)
                    taken.add(fresh)
                    renames[v.name] = OMVariable(fresh)
                    new_vars.append(OMVariable(fresh))
                else:
                    new_vars.append(v)
            body = _replace(body, renames, frozenset())
            variables = tuple(new_vars)
            names = {v.name for v in variables}
        return OMBinding(
            _replace(obj.binder, mapping, bound),
            variables,
            _replace(body, mapping, bound | frozenset(names)),
        )
    return obj


def substitute(body: OMObject, bindings: dict[str, OMObject]) -> OMObject:
    """Capture-avoiding substitution; every free variable must be bound."""
    missing = sorted(free_variables(body) - set(bindings))
    if missing:
        raise UnboundVariableError(missing[0])
    return _replace(body, dict(bindings), frozenset())


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------


def _definition_for(sym: OMSymbol, store: CdStore) -> DefinitionalFMP | None:
    cd = store.lookup(sym.cdbase, sym.cd)
    if cd is None:
        return None
    found = find_definition(cd, sym.name)
    return found if isinstance(found, DefinitionalFMP) else None


def _rewrite_pass(
    obj: OMObject, store: CdStore, base: BaseEnv, rewritten: list[str]
) -> OMObject:
    """One innermost-first pass; substituted bodies wait for the next pass."""
    if isinstance(obj, OMApplication):
        new_args = tuple(_rewrite_pass(a, store, base, rewritten) for a in obj.args)
        head = obj.head
        if isinstance(head, OMSymbol):
            if not base.contains(head):
                defn = _definition_for(head, store)
                if defn is not None:
                    if defn.arity != len(new_args):
                        raise ArityMismatchError(
                            symbol_iri(head).value, defn.arity, len(new_args)
                        )
                    rewritten.append(symbol_iri(head).value)
                    mapping = {p.name: a for p, a in zip(defn.params, new_args)}
                    return _replace(defn.body, mapping, frozenset())
        else:
            head = _rewrite_pass(head, store, base, rewritten)
        return OMApplication(head, new_args)
    if isinstance(obj, OMSymbol) and not base.contains(obj):
        defn = _definition_for(obj, store)
        if defn is not None and defn.arity == 0:
            rewritten.append(symbol_iri(obj).value)
            return defn.body
        return obj
    if isinstance(obj, OMBinding):
        return OMBinding(
            _rewrite_pass(obj.binder, store, base, rewritten),
            obj.variables,
            _rewrite_pass(obj.body, store, base, rewritten),
        )
    return obj


def expand(obj: OMObject, store: CdStore, base: BaseEnv, max_depth: int = 32) -> OMObject:
    """Rewrite to fixpoint with at most ``max_depth`` changing passes."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    term = obj
    passes = 0
    while True:
        rewritten: list[str] = []
        new_term = _rewrite_pass(term, store, base, rewritten)
        if not rewritten and new_term == term:
            return term
        passes += 1
        if passes > max_depth:
            raise DepthExceededError(max_depth, sorted(set(rewritten)))
        term = new_term


def residual_symbols(obj: OMObject, base: BaseEnv) -> list[str]:
    """Non-base symbols left in a term, as sorted hash URIs."""
    return sorted({symbol_iri(s).value for s in iter_symbols(obj) if not base.contains(s)})


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(obj: OMObject, base: BaseEnv) -> float:
    """Evaluate a closed, fully-expanded term to a 64-bit float."""
    if isinstance(obj, OMInteger):
        return float(obj.value)
    if isinstance(obj, OMFloat):
        return obj.value
    if isinstance(obj, OMVariable):
        raise FreeVariableError(obj.name)
    if isinstance(obj, OMApplication):
        head = obj.head
        if not isinstance(head, OMSymbol):
            raise NonNumericLeafError("application head is not a symbol")
        op = base.op_for(head)
        if op is None:
            raise UnknownSymbolError(symbol_iri(head).value)
        args = [evaluate(a, base) for a in obj.args]
        if op.arity is not None and len(args) != op.arity:
            raise ArityMismatchError(symbol_iri(head).value, op.arity, len(args))
        try:
            return op.apply(args)
        except ZeroDivisionError:
            raise DivisionByZeroError(serialize_om_xml(obj)) from None
    if isinstance(obj, OMSymbol):
        if base.contains(obj):
            raise NonNumericLeafError(f"bare operation {obj.cd}#{obj.name} is not a number")
        raise UnknownSymbolError(symbol_iri(obj).value)
    raise NonNumericLeafError(f"cannot evaluate {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Verification and recomputation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointResult:
    point_id: Iri
    status: str  # "match" | "mismatch" | "uncomputable"
    stored: float | None = None
    computed: float | None = None
    delta: float | None = None
    reason: str | None = None


@dataclass(frozen=True)
class VerificationReport:
    results: tuple[PointResult, ...]

    @property
    def all_match(self) -> bool:
        return all(r.status == "match" for r in self.results)

    @property
    def any_mismatch(self) -> bool:
        return any(r.status == "mismatch" for r in self.results)

    @property
    def any_uncomputable(self) -> bool:
        return any(r.status == "uncomputable" for r in self.results)

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            if r.status == "match":
                lines.append(f"MATCH {r.point_id} stored={r.stored!r} computed={r.computed!r}")
            elif r.status == "mismatch":
                lines.append(
                    f"MISMATCH {r.point_id} stored={r.stored!r} "
                    f"computed={r.computed!r} delta={r.delta!r}"
                )
            else:
                lines.append(f"UNCOMPUTABLE {r.point_id} reason={r.reason}")
        return "\n".join(lines)

    def to_records(self) -> list[dict]:
        return [
            {
                "id": r.point_id.value,
                "status": r.status,
                "stored": r.stored,
                "computed": r.computed,
                "delta": r.delta,
                "reason": r.reason,
            }
            for r in self.results
        ]


def _compute_derivation(
    derivation: Derivation,
    points: dict[str, DataPoint],
    derivations: dict[str, Derivation],
    store: CdStore,
    base: BaseEnv,
    max_depth: int,
) -> float:
    term = derivation_to_om(derivation, points, derivations, max_depth=max_depth)
    expanded = expand(term, store, base, max_depth=max_depth)
    residual = residual_symbols(expanded, base)
    if residual:
        uri = residual[0]
        sym = parse_symbol_uri(uri)
        fetch_exc = store.fetch_error(sym.cdbase, sym.cd)
        if fetch_exc is not None:
            if isinstance(fetch_exc, ToolkitError):
                raise fetch_exc
            raise ToolkitError(f"{type(fetch_exc).__name__}: {fetch_exc}")
        raise UnknownSymbolError(uri)
    return evaluate(expanded, base)


def verify_dataset(
    graph: Graph,
    store: CdStore,
    base: BaseEnv,
    tolerance: float,
    vocab: StatVocab = DEFAULT_VOCAB,
    max_depth: int = 32,
) -> VerificationReport:
    """Recompute every derived point and compare against its stored value.

    A point matches when |stored - computed| <= tolerance * max(1, |stored|).
    Failures never abort the run; they are reported per point.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    points = {p.id.value: p for p in extract_data_points(graph, vocab)}
    derivations = {d.point_id.value: d for d in extract_derivations(graph, vocab)}

    results = []
    for pid in sorted(derivations):
        derivation = derivations[pid]
        point = points.get(pid)
        if point is None or point.value is None:
            results.append(
                PointResult(derivation.point_id, "uncomputable", reason="no stored value")
            )
            continue
        stored = float(point.value)
        try:
            computed = _compute_derivation(
                derivation, points, derivations, store, base, max_depth
            )
        except ToolkitError as exc:
            results.append(
                PointResult(
                    derivation.point_id,
                    "uncomputable",
                    stored=stored,
                    reason=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        delta = abs(stored - computed)
        if delta <= tolerance * max(1.0, abs(stored)):
            results.append(PointResult(derivation.point_id, "match", stored, computed, delta))
        else:
            results.append(PointResult(derivation.point_id, "mismatch", stored, computed, delta))
    return VerificationReport(tuple(results))


def canonical_decimal(value: float) -> str:
    """Shortest exact decimal form, without exponent notation."""
    import math

    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    text = repr(value)
    if "e" in text or "E" in text:
        return format(Decimal(text), "f")
    return text


def _topological_order(derivations: dict[str, Derivation]) -> list[str]:
    """Derived points ordered so every derived dependency comes first."""
    order: list[str] = []
    state: dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(pid: str, stack: tuple[str, ...]):
        mark = state.get(pid)
        if mark == 2:
            return
        if mark == 1:
            cycle = [*stack[stack.index(pid):], pid] if pid in stack else [pid, pid]
            raise CyclicDerivationError(list(cycle))
        state[pid] = 1
        for arg in derivations[pid].args:
            if arg.source is not None and arg.source.value in derivations:
                visit(arg.source.value, (*stack, pid))
        state[pid] = 2
        order.append(pid)

    for pid in sorted(derivations):
        visit(pid, ())
    return order


def recompute(
    graph: Graph,
    store: CdStore,
    base: BaseEnv,
    vocab: StatVocab = DEFAULT_VOCAB,
    max_depth: int = 32,
) -> Graph:
    """Replace every derived point's stored value with a fresh computation.

    Chains are handled in dependency order, so a derived input is recomputed
    before anything that consumes it.  Underived points are untouched.
    """
    points = {p.id.value: p for p in extract_data_points(graph, vocab)}
    derivations = {d.point_id.value: d for d in extract_derivations(graph, vocab)}
    order = _topological_order(derivations)

    current = dict(points)
    new_values: dict[str, str] = {}
    for pid in order:
        derivation = derivations[pid]
        computed = _compute_derivation(derivation, current, {}, store, base, max_depth)
        lexical = canonical_decimal(computed)
        new_values[pid] = lexical
        point = current.get(pid)
        if point is None:
            point = DataPoint(id=derivation.point_id, dimensions=())
        current[pid] = replace(point, value=Decimal(lexical))

    derived_ids = {Iri(pid) for pid in new_values}
    triples = {
        t
        for t in graph.triples
        if not (t.subject in derived_ids and t.predicate == vocab.value)
    }
    for pid, lexical in new_values.items():
        triples.add(Triple(Iri(pid), vocab.value, Literal(lexical, datatype=Iri(XSD_DECIMAL))))
    return Graph(triples=frozenset(triples), prefixes=dict(graph.prefixes))


# ---------------------------------------------------------------------------
# Compute-then-query
# ---------------------------------------------------------------------------


def query_max_increase(
    graph: Graph,
    metric_function: Iri,
    region_type: Iri,
    t1: Iri,
    t2: Iri,
    store: CdStore,
    base: BaseEnv,
    vocab: StatVocab = DEFAULT_VOCAB,
    max_depth: int = 32,
) -> tuple[Iri, float]:
    """The region whose computed metric grew the most between t1 and t2.

    Regions are the dimension IRIs typed as ``region_type``.  The metric for
    a (region, time) pair is computed from the derivation whose function is
    ``metric_function``; stored values are ignored.  Ties go to the
    lexicographically smaller region IRI.
    """
    points = {p.id.value: p for p in extract_data_points(graph, vocab)}
    derivations = {d.point_id.value: d for d in extract_derivations(graph, vocab)}

    def is_region(dim: Iri) -> bool:
        return bool(graph.match(dim, Iri(RDF_TYPE), region_type))

    values: dict[tuple[str, str], float] = {}
    for pid in sorted(derivations):
        derivation = derivations[pid]
        if derivation.function_uri != metric_function:
            continue
        point = points.get(pid)
        if point is None:
            continue
        dims = set(point.dimensions)
        time = t1 if t1 in dims else (t2 if t2 in dims else None)
        if time is None:
            continue
        regions = [d for d in point.dimensions if is_region(d)]
        if len(regions) != 1:
            continue
        try:
            value = _compute_derivation(derivation, points, derivations, store, base, max_depth)
        except ToolkitError:
            continue
        values.setdefault((regions[0].value, time.value), value)

    increases: list[tuple[str, float]] = []
    for region in sorted({r for (r, _) in values}):
        v1 = values.get((region, t1.value))
        v2 = values.get((region, t2.value))
        if v1 is not None and v2 is not None:
            increases.append((region, v2 - v1))
    if not increases:
        raise NoComputableRegionError("no region has the metric at both times")
    best = sorted(increases, key=lambda rv: (-rv[1], rv[0]))[0]
    return Iri(best[0]), best[1]
