"""Test-only reference implementations kept independent of the engine."""

from __future__ import annotations

from omld.cd import DefinitionalFMP, find_definition
from omld.om import OMApplication, OMBinding, OMObject, OMSymbol
from omld.rewrite import BaseEnv, CdStore, _replace


def _definition(sym: OMSymbol, store: CdStore) -> DefinitionalFMP | None:
    cd = store.lookup(sym.cdbase, sym.cd)
    if cd is None:
        return None
    found = find_definition(cd, sym.name)
    return found if isinstance(found, DefinitionalFMP) else None


def _outermost_pass(obj: OMObject, store: CdStore, base: BaseEnv, hits: list) -> OMObject:
    """Rewrite outermost redexes first; a rewritten node is not re-entered."""
    if isinstance(obj, OMApplication):
        head = obj.head
        if isinstance(head, OMSymbol) and not base.contains(head):
            defn = _definition(head, store)
            if defn is not None and defn.arity == len(obj.args):
                hits.append(head)
                mapping = {p.name: a for p, a in zip(defn.params, obj.args)}
                return _replace(defn.body, mapping, frozenset())
        new_head = head if isinstance(head, OMSymbol) else _outermost_pass(head, store, base, hits)
        return OMApplication(new_head, tuple(_outermost_pass(a, store, base, hits) for a in obj.args))
    if isinstance(obj, OMSymbol) and not base.contains(obj):
        defn = _definition(obj, store)
        if defn is not None and defn.arity == 0:
            hits.append(obj)
            return defn.body
        return obj
    if isinstance(obj, OMBinding):
        return OMBinding(
            _outermost_pass(obj.binder, store, base, hits),
            obj.variables,
            _outermost_pass(obj.body, store, base, hits),
        )
    return obj


def expand_outermost(obj: OMObject, store: CdStore, base: BaseEnv, max_passes: int = 64) -> OMObject:
    term = obj
    for _ in range(max_passes):
        hits: list = []
        term2 = _outermost_pass(term, store, base, hits)
        if not hits:
            return term2
        term = term2
    raise AssertionError("outermost expansion did not reach a fixpoint")
