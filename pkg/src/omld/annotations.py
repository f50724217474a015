"""Data points, derivation annotations, and their OpenMath translation.

A data point is any IRI subject carrying at least one dimension triple; its
numeric value, when present, comes from an ``rdf:value`` literal and is kept
as an exact Decimal until evaluation.  A derivation records which function
computed the point and which sources fill which argument positions; argument
positions must be exactly 1..n.

Translation to OpenMath applies the function symbol (parsed from its URI)
to the argument values in position order.  Sources that are themselves
derived points are inlined recursively, up to a depth cap.  The reverse
direction emits the same blank-node shape the extractor reads, so the two
form a round trip.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Callable, Mapping

from .config import DEFAULT_VOCAB, StatVocab
from .errors import ToolkitError
from .om import (
    OMApplication,
    OMFloat,
    OMInteger,
    OMObject,
    OMSymbol,
    symbol_from_iri,
    symbol_iri,
)
from .rdf import (
    RDF_VALUE,
    XSD_NS,
    BlankNode,
    Graph,
    Iri,
    Literal,
    Term,
    Triple,
    term_key,
)

log = logging.getLogger(__name__)

XSD_INT = XSD_NS + "int"


class BadValueLiteralError(ToolkitError):
    def __init__(self, point_id: Iri, lexical: str):
        self.point_id = point_id
        super().__init__(f"{point_id}: rdf:value {lexical!r} is not numeric")


class MissingFunctionError(ToolkitError):
    def __init__(self, point_id: Iri):
        self.point_id = point_id
        super().__init__(f"{point_id}: derivation has no sl:function")


class BadArgPositionsError(ToolkitError):
    def __init__(self, point_id: Iri, detail: str):
        self.point_id = point_id
        super().__init__(f"{point_id}: {detail}")


class UnresolvedArgumentError(ToolkitError):
    def __init__(self, source: Iri | str):
        self.source = source
        super().__init__(f"cannot resolve argument: {source}")


class CyclicDerivationError(ToolkitError):
    def __init__(self, chain: list[str]):
        self.chain = chain
        super().__init__("cyclic derivation: " + " -> ".join(chain))


class NotAnApplicationError(ToolkitError):
    pass


@dataclass(frozen=True)
class DataPoint:
    id: Iri
    dimensions: tuple[Iri, ...]
    value: Decimal | None = None
    dataset: Iri | None = None


@dataclass(frozen=True)
class DerivationArg:
    """One argument slot: either a data-point reference or an inline constant."""

    position: int
    source: Iri | None = None
    literal: Decimal | None = None

    def __post_init__(self):
        if (self.source is None) == (self.literal is None):
            raise ValueError("exactly one of source/literal must be set")


@dataclass(frozen=True)
class Derivation:
    point_id: Iri
    function_uri: Iri
    args: tuple[DerivationArg, ...]

    def __post_init__(self):
        positions = [a.position for a in self.args]
        if positions != list(range(1, len(positions) + 1)):
            raise ValueError(f"argument positions must be 1..n, got {positions}")


def _decimal(lexical: str) -> Decimal:
    value = Decimal(lexical)
    if not value.is_finite():
        raise InvalidOperation(lexical)
    return value


def extract_data_points(graph: Graph, vocab: StatVocab = DEFAULT_VOCAB) -> list[DataPoint]:
    """One DataPoint per IRI subject with at least one dimension triple."""
    subjects: list[Iri] = []
    for t in graph.match(predicate=vocab.dimension):
        if isinstance(t.subject, Iri) and t.subject not in subjects:
            subjects.append(t.subject)
    subjects.sort(key=lambda s: s.value)

    points = []
    for subject in subjects:
        dims = sorted(
            {o.value for o in graph.objects(subject, vocab.dimension) if isinstance(o, Iri)}
        )
        value = None
        values = graph.objects(subject, vocab.value)
        if values:
            first = values[0]
            if not isinstance(first, Literal):
                raise BadValueLiteralError(subject, term_key(first))
            try:
                value = _decimal(first.lexical)
            except InvalidOperation:
                raise BadValueLiteralError(subject, first.lexical) from None
        dataset = None
        for o in graph.objects(subject, vocab.dataset):
            if isinstance(o, Iri):
                dataset = o
                break
        points.append(
            DataPoint(
                id=subject,
                dimensions=tuple(Iri(d) for d in dims),
                value=value,
                dataset=dataset,
            )
        )
    return points


def _parse_position(term: Term) -> int | None:
    if not isinstance(term, Literal):
        return None
    try:
        return int(term.lexical)
    except ValueError:
        return None


def extract_derivations(graph: Graph, vocab: StatVocab = DEFAULT_VOCAB) -> list[Derivation]:
    """One Derivation per point annotated with a computed-from structure."""
    by_point: dict[Iri, list[Term]] = {}
    for t in graph.match(predicate=vocab.computed_from):
        if isinstance(t.subject, Iri):
            by_point.setdefault(t.subject, []).append(t.object)

    derivations = []
    for point_id in sorted(by_point, key=lambda s: s.value):
        nodes = sorted(by_point[point_id], key=term_key)
        if len(nodes) > 1:
            log.warning("%s has multiple computed-from annotations; keeping the first", point_id)
        node = nodes[0]
        if not isinstance(node, (Iri, BlankNode)):
            raise MissingFunctionError(point_id)

        function_uri = None
        for o in graph.objects(node, vocab.function):
            if isinstance(o, Iri):
                function_uri = o
                break
        if function_uri is None:
            raise MissingFunctionError(point_id)

        args = []
        for arg_node in graph.objects(node, vocab.arguments):
            if not isinstance(arg_node, (Iri, BlankNode)):
                raise BadArgPositionsError(point_id, "argument entry is a literal")
            positions = [
                p
                for p in (_parse_position(o) for o in graph.objects(arg_node, vocab.arg_position))
                if p is not None
            ]
            if len(positions) != 1:
                raise BadArgPositionsError(point_id, "argument lacks a single integer position")
            position = positions[0]
            values = graph.objects(arg_node, vocab.arg_value)
            if not values:
                raise BadArgPositionsError(point_id, f"argument {position} has no value")
            value = values[0]
            if isinstance(value, Iri):
                args.append(DerivationArg(position=position, source=value))
            elif isinstance(value, Literal):
                try:
                    args.append(DerivationArg(position=position, literal=_decimal(value.lexical)))
                except InvalidOperation:
                    raise BadValueLiteralError(point_id, value.lexical) from None
            else:
                raise BadArgPositionsError(point_id, f"argument {position} points at a blank node")

        args.sort(key=lambda a: a.position)
        positions = [a.position for a in args]
        if not positions or positions != list(range(1, len(args) + 1)):
            raise BadArgPositionsError(point_id, f"positions {positions} are not exactly 1..n")
        derivations.append(
            Derivation(point_id=point_id, function_uri=function_uri, args=tuple(args))
        )
    return derivations


def decimal_to_om(value: Decimal) -> OMInteger | OMFloat:
    """Integer-valued decimals become OMI, everything else OMF."""
    if value == value.to_integral_value():
        return OMInteger(int(value))
    return OMFloat(float(value))


def derivation_to_om(
    derivation: Derivation,
    points: Mapping[str, DataPoint],
    derivations: Mapping[str, Derivation] | None = None,
    max_depth: int = 32,
) -> OMObject:
    """Translate a derivation into a function application over its inputs.

    ``points`` and ``derivations`` are keyed by the point IRI string.  A
    source with a stored value becomes a number; a source that is itself a
    derived point is translated recursively.
    """
    derivations = derivations or {}

    def translate(d: Derivation, visiting: tuple[str, ...]) -> OMObject:
        pid = d.point_id.value
        if pid in visiting:
            raise CyclicDerivationError([*visiting, pid])
        if len(visiting) >= max_depth:
            raise CyclicDerivationError([*visiting, pid])
        head = symbol_from_iri(d.function_uri)
        om_args: list[OMObject] = []
        for arg in d.args:
            if arg.literal is not None:
                om_args.append(decimal_to_om(arg.literal))
                continue
            source = arg.source
            point = points.get(source.value)
            if point is not None and point.value is not None:
                om_args.append(decimal_to_om(point.value))
            elif source.value in derivations:
                om_args.append(translate(derivations[source.value], (*visiting, pid)))
            else:
                raise UnresolvedArgumentError(source)
        return OMApplication(head, tuple(om_args))

    return translate(derivation, ())


def om_to_derivation(
    point_id: Iri,
    obj: OMObject,
    source_of: Callable[[OMObject], Iri | None],
    vocab: StatVocab = DEFAULT_VOCAB,
) -> frozenset[Triple]:
    """Emit the computed-from triples for an application.

    ``source_of`` maps an argument back to the data point it came from;
    returning None stores the argument as an inline numeric constant.
    """
    if not isinstance(obj, OMApplication) or not isinstance(obj.head, OMSymbol):
        raise NotAnApplicationError(f"cannot annotate a non-application: {type(obj).__name__}")

    triples: set[Triple] = set()
    derivation_node = BlankNode("d0")
    triples.add(Triple(point_id, vocab.computed_from, derivation_node))
    triples.add(Triple(derivation_node, vocab.function, symbol_iri(obj.head)))

    for index, arg in enumerate(obj.args, start=1):
        arg_node = BlankNode(f"a{index}")
        triples.add(Triple(derivation_node, vocab.arguments, arg_node))
        triples.add(
            Triple(arg_node, vocab.arg_position, Literal(str(index), datatype=Iri(XSD_INT)))
        )
        source = source_of(arg)
        if source is not None:
            triples.add(Triple(arg_node, vocab.arg_value, source))
        elif isinstance(arg, OMInteger):
            triples.add(
                Triple(
                    arg_node,
                    vocab.arg_value,
                    Literal(str(arg.value), datatype=Iri(XSD_NS + "integer")),
                )
            )
        elif isinstance(arg, OMFloat):
            triples.add(
                Triple(
                    arg_node,
                    vocab.arg_value,
                    Literal(repr(arg.value), datatype=Iri(XSD_NS + "double")),
                )
            )
        else:
            raise UnresolvedArgumentError(f"argument {index} is neither a number nor a known point")
    return frozenset(triples)
