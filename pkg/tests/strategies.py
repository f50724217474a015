"""Hypothesis strategies for graphs, OpenMath objects, and derivations."""

from __future__ import annotations

from decimal import Decimal

from hypothesis import strategies as st

from omld.annotations import Derivation, DerivationArg
from omld.rdf import XSD_NS, BlankNode, Graph, Iri, Literal, Triple

_WORD = st.from_regex(r"[a-z][a-z0-9]{0,8}", fullmatch=True)
_LOCAL = st.from_regex(r"[A-Za-z0-9_][A-Za-z0-9_\-]{0,10}", fullmatch=True)


@st.composite
def iris(draw) -> Iri:
    host = draw(_WORD)
    path = draw(st.lists(_LOCAL, min_size=0, max_size=3))
    frag = draw(st.one_of(st.none(), _LOCAL))
    value = f"http://{host}.example" + "".join("/" + p for p in path)
    if frag is not None:
        value += "#" + frag
    return Iri(value)


_LEXICAL = st.text(
    alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x7E) | st.sampled_from("\n\t\"\\äπ"),
    max_size=20,
)


@st.composite
def literals(draw) -> Literal:
    kind = draw(st.sampled_from(["plain", "typed", "lang", "int", "dec"]))
    if kind == "int":
        return Literal(str(draw(st.integers(-10**6, 10**6))), datatype=Iri(XSD_NS + "integer"))
    if kind == "dec":
        whole = draw(st.integers(-10**4, 10**4))
        frac = draw(st.integers(0, 999))
        return Literal(f"{whole}.{frac:03d}", datatype=Iri(XSD_NS + "decimal"))
    lex = draw(_LEXICAL)
    if kind == "typed":
        return Literal(lex, datatype=draw(iris()))
    if kind == "lang":
        tag = draw(st.from_regex(r"[a-z]{2}(-[a-z0-9]{1,4})?", fullmatch=True))
        return Literal(lex, language=tag)
    return Literal(lex)


def bnodes() -> st.SearchStrategy[BlankNode]:
    return st.integers(0, 7).map(lambda n: BlankNode(f"n{n}"))


@st.composite
def triples(draw) -> Triple:
    subject = draw(st.one_of(iris(), bnodes()))
    predicate = draw(iris())
    obj = draw(st.one_of(iris(), bnodes(), literals()))
    return Triple(subject, predicate, obj)


@st.composite
def graphs(draw) -> Graph:
    ts = draw(st.lists(triples(), min_size=0, max_size=12))
    prefixes = {}
    if draw(st.booleans()):
        prefixes["ex"] = "http://ex.example/"
    return Graph(triples=frozenset(ts), prefixes=prefixes)


def om_objects(max_leaves: int = 12):
    from omld import om

    ncname = st.from_regex(r"[A-Za-z_][A-Za-z0-9_\-]{0,8}", fullmatch=True)
    symbols = st.builds(
        om.OMSymbol,
        cd=ncname,
        name=ncname,
        cdbase=st.sampled_from(
            ["http://www.openmath.org/cd", "http://example.org", "http://cdba.se/om"]
        ),
    )
    floats = st.floats(allow_nan=False, allow_infinity=False, width=64)
    leaves = st.one_of(
        symbols,
        st.builds(om.OMInteger, st.integers(-10**30, 10**30)),
        st.builds(om.OMFloat, floats),
        st.builds(om.OMVariable, ncname),
        st.builds(om.OMString, _LEXICAL),
    )

    def compose(children):
        applications = st.builds(
            lambda head, args: om.OMApplication(head, tuple(args)),
            children,
            st.lists(children, min_size=1, max_size=4),
        )
        bindings = st.builds(
            lambda binder, names, body: om.OMBinding(
                binder, tuple(om.OMVariable(n) for n in names), body
            ),
            children,
            st.lists(ncname, min_size=1, max_size=3, unique=True),
            children,
        )
        return st.one_of(applications, bindings)

    return st.recursive(leaves, compose, max_leaves=max_leaves)


@st.composite
def derivations(draw) -> Derivation:
    point = draw(iris())
    cd = draw(st.from_regex(r"[a-z][a-z0-9]{0,6}", fullmatch=True))
    name = draw(st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True))
    function = Iri(f"http://cds.example/{cd}#{name}")
    n = draw(st.integers(1, 5))
    args = []
    for position in range(1, n + 1):
        if draw(st.booleans()):
            args.append(DerivationArg(position=position, source=draw(iris())))
        else:
            value = Decimal(draw(st.integers(-999, 999))) / Decimal(draw(st.sampled_from([1, 2, 4, 8])))
            args.append(DerivationArg(position=position, literal=value))
    return Derivation(point_id=point, function_uri=function, args=tuple(args))
