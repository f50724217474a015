"""Toolkit configuration: prefix table, vocabulary IRIs, and knobs.

The statistical vocabularies in the example datasets are abbreviated; the
actual namespace IRIs are a local choice and live here (or in a user config
file) rather than being hard-coded across modules.  ``rdf:``/``xsd:`` are the
W3C namespaces and ``scv:`` is the published SCOVO namespace; the rest are
minted under example.org.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .cd import RDFS_SEE_ALSO
from .errors import ToolkitError
from .om import OPENMATH_XML_MIME
from .rdf import RDF_NS, RDFS_NS, XSD_NS, Iri, _SCHEME_RE

DEFAULT_PREFIXES: dict[str, str] = {
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "xsd": XSD_NS,
    "scv": "http://purl.org/NET/scovo#",
    "sl": "http://example.org/ns/sl#",
    "env": "http://example.org/ns/env#",
    "ahs": "http://example.org/ns/ahs#",
    "ahs2": "http://example.org/ns/ahs2#",
}

DEFAULT_REGION_TYPE = DEFAULT_PREFIXES["env"] + "Region"


class ConfigError(ToolkitError):
    pass


@dataclass(frozen=True)
class StatVocab:
    """The RDF terms the annotation layer reads and writes."""

    computed_from: Iri
    function: Iri
    arguments: Iri
    arg_position: Iri
    arg_value: Iri
    dimension: Iri
    dataset: Iri
    value: Iri

    @classmethod
    def from_prefixes(cls, prefixes: dict[str, str]) -> "StatVocab":
        sl = prefixes["sl"]
        scv = prefixes["scv"]
        rdf = prefixes["rdf"]
        return cls(
            computed_from=Iri(sl + "computedFrom"),
            function=Iri(sl + "function"),
            arguments=Iri(sl + "arguments"),
            arg_position=Iri(sl + "argPosition"),
            arg_value=Iri(sl + "argValue"),
            dimension=Iri(scv + "dimension"),
            dataset=Iri(scv + "dataset"),
            value=Iri(rdf + "value"),
        )


DEFAULT_VOCAB = StatVocab.from_prefixes(DEFAULT_PREFIXES)


@dataclass(frozen=True)
class ToolkitConfig:
    prefixes: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_PREFIXES))
    tolerance: float = 1e-9
    max_depth: int = 32
    cache_ttl: float = 300.0
    base_env: str = "arith1"
    link_predicates: tuple[str, ...] = (RDFS_SEE_ALSO,)
    region_type: str = DEFAULT_REGION_TYPE
    cd_dirs: tuple[str, ...] = ()
    # server settings
    bind_address: str = "127.0.0.1"
    port: int = 8080
    cd_directory: str | None = None
    base_iri: str | None = None
    default_representation: str = OPENMATH_XML_MIME

    def __post_init__(self):
        if self.tolerance < 0:
            raise ConfigError("tolerance must be >= 0")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.cache_ttl <= 0:
            raise ConfigError("cache_ttl must be > 0")
        for prefix, iri in self.prefixes.items():
            if not _SCHEME_RE.match(iri):
                raise ConfigError(f"prefix {prefix!r} maps to a non-absolute IRI: {iri!r}")
        for iri in self.link_predicates:
            if not _SCHEME_RE.match(iri):
                raise ConfigError(f"link predicate is not an absolute IRI: {iri!r}")
        if self.base_iri is not None and self.base_iri.endswith("#"):
            raise ConfigError("base_iri must not end with '#'")

    @property
    def vocab(self) -> StatVocab:
        return StatVocab.from_prefixes(self.prefixes)


_KNOWN_KEYS = {
    "prefixes",
    "tolerance",
    "max_depth",
    "cache_ttl",
    "base_env",
    "link_predicates",
    "region_type",
    "cd_dirs",
    "bind_address",
    "port",
    "cd_directory",
    "base_iri",
    "default_representation",
}


def load_config(path: str) -> ToolkitConfig:
    """Read a JSON config file; unknown keys are rejected to catch typos."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    kwargs = dict(raw)
    if "prefixes" in kwargs:
        merged = dict(DEFAULT_PREFIXES)
        merged.update(kwargs["prefixes"])
        kwargs["prefixes"] = merged
    for key in ("link_predicates", "cd_dirs"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return ToolkitConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc


def with_overrides(cfg: ToolkitConfig, **overrides) -> ToolkitConfig:
    """Apply CLI flag overrides; None values mean 'keep the config value'."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg
