"""Publish a directory of CDs as dereferenceable Linked Data.

The canonical CD URI serves the XML encoding directly; asking for HTML gets
a 303 redirect to the ``.xhtml`` rendering (the CD is a dictionary, the HTML
page is merely one representation of it); asking for Turtle gets a small RDF
description.  Slash routes serve a one-definition CD fragment so clients
interested in a single symbol need not download the whole dictionary.

Routing is a pure function over an immutable snapshot of loaded CDs, so
requests can run concurrently and a reload just swaps the snapshot.
"""

from __future__ import annotations

import html
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .cd import (
    ContentDictionary,
    DEFAULT_LINK_PREDICATES,
    extract_links,
    parse_cd_xml,
    serialize_cd_xml,
)
from .om import OPENMATH_XML_MIME, om_element_text
from .rdf import XSD_NS, Graph, Iri, Literal, Triple, serialize_turtle

TEXT_HTML = "text/html"
TEXT_TURTLE = "text/turtle"
SUPPORTED_TYPES = (OPENMATH_XML_MIME, TEXT_HTML, TEXT_TURTLE)


@dataclass(frozen=True)
class ServerConfig:
    cd_directory: str
    base_iri: str
    bind_address: str = "127.0.0.1"
    port: int = 8080
    default_representation: str = OPENMATH_XML_MIME

    def __post_init__(self):
        if self.base_iri.endswith("#"):
            raise ValueError("base_iri must not end with '#'")
        if not Path(self.cd_directory).is_dir():
            raise ValueError(f"CD directory does not exist: {self.cd_directory}")


@dataclass(frozen=True)
class _LoadedCd:
    cd: ContentDictionary
    raw: bytes


def parse_accept(header: str | None) -> list[tuple[str, float]]:
    """Accept header as (media-type, q) pairs, highest preference first."""
    if not header:
        return []
    out = []
    for i, part in enumerate(header.split(",")):
        fields = part.strip().split(";")
        mime = fields[0].strip().lower()
        if not mime:
            continue
        q = 1.0
        for param in fields[1:]:
            param = param.strip()
            if param.startswith("q="):
                try:
                    q = float(param[2:])
                except ValueError:
                    q = 0.0
        out.append((mime, q, i))
    out.sort(key=lambda t: (-t[1], t[2]))
    return [(mime, q) for mime, q, _ in out]


def negotiate(header: str | None, default: str) -> str | None:
    """Pick a supported representation for an Accept header, or None for 406."""
    prefs = parse_accept(header)
    if not prefs:
        return default
    for mime, q in prefs:
        if q <= 0:
            continue
        if mime == "*/*":
            return default
        if mime in SUPPORTED_TYPES:
            return mime
        if mime == "application/*":
            return OPENMATH_XML_MIME
        if mime == "text/*":
            return TEXT_HTML
    return None


def render_cd_html(cd: ContentDictionary, link_predicates=DEFAULT_LINK_PREDICATES) -> str:
    """A human-readable page with machine-readable about/property hooks."""
    links_by_symbol: dict[str, list] = {}
    for link in extract_links(cd, link_predicates):
        for definition in cd.definitions:
            if link.subject == cd.symbol_uri(definition.name):
                links_by_symbol.setdefault(definition.name, []).append(link)

    cd_uri = f"{cd.cdbase.rstrip('/')}/{cd.cdname}"
    out = [
        "<!DOCTYPE html>",
        "<html>",
        f"<head><meta charset=\"utf-8\"/><title>{html.escape(cd.cdname)}</title></head>",
        "<body>",
        f'<h1 about="{html.escape(cd_uri, quote=True)}">{html.escape(cd.cdname)}</h1>',
        f'<p property="description">{html.escape(cd.description)}</p>',
    ]
    for definition in cd.definitions:
        uri = cd.symbol_uri(definition.name).value
        out.append(
            f'<section id="{html.escape(definition.name, quote=True)}" '
            f'about="{html.escape(uri, quote=True)}">'
        )
        out.append(f"<h2>{html.escape(definition.name)}</h2>")
        out.append(f'<p property="description">{html.escape(definition.description)}</p>')
        for cmp_text in definition.cmps:
            out.append(f"<p>{html.escape(cmp_text)}</p>")
        for fmp in definition.fmps:
            out.append(f"<pre><code>{html.escape(om_element_text(fmp))}</code></pre>")
        for link in links_by_symbol.get(definition.name, []):
            out.append(
                f'<p><a rel="{html.escape(link.predicate.value, quote=True)}" '
                f'href="{html.escape(link.object.value, quote=True)}">'
                f"{html.escape(link.object.value)}</a></p>"
            )
        out.append("</section>")
    out.append("</body>")
    out.append("</html>")
    return "\n".join(out)


def cd_to_rdf(
    cd: ContentDictionary, base_iri: Iri | str, link_predicates=DEFAULT_LINK_PREDICATES
) -> Graph:
    """A minimal RDF description: names, descriptions, containment, links."""
    base = (base_iri.value if isinstance(base_iri, Iri) else base_iri).rstrip("/")
    vocab = f"{base}/vocab#"
    name_pred = Iri(vocab + "name")
    desc_pred = Iri(vocab + "description")
    contained_pred = Iri(vocab + "definedIn")
    cd_resource = Iri(f"{base}/{cd.cdname}")

    triples = {
        Triple(cd_resource, name_pred, Literal(cd.cdname)),
        Triple(cd_resource, desc_pred, Literal(cd.description)),
    }
    for definition in cd.definitions:
        symbol = Iri(f"{base}/{cd.cdname}#{definition.name}")
        triples.add(Triple(symbol, name_pred, Literal(definition.name)))
        triples.add(Triple(symbol, desc_pred, Literal(definition.description)))
        triples.add(Triple(symbol, contained_pred, cd_resource))
    for link in extract_links(cd, link_predicates):
        subject = link.subject
        for definition in cd.definitions:
            if subject == cd.symbol_uri(definition.name):
                subject = Iri(f"{base}/{cd.cdname}#{definition.name}")
                break
        triples.add(Triple(subject, link.predicate, link.object))
    prefixes = {"xsd": XSD_NS, "v": vocab}
    return Graph(triples=frozenset(triples), prefixes=prefixes)


class CdApp:
    """Pure request routing over an immutable snapshot of CDs."""

    def __init__(
        self,
        cds: dict[str, _LoadedCd],
        base_iri: str,
        default_representation: str = OPENMATH_XML_MIME,
        link_predicates=DEFAULT_LINK_PREDICATES,
    ):
        self.cds = cds
        self.base_iri = base_iri.rstrip("/")
        self.default_representation = default_representation
        self.link_predicates = link_predicates

    def route(
        self, method: str, path: str, accept: str | None
    ) -> tuple[int, dict[str, str], bytes]:
        if method != "GET":
            return 405, {"Content-Type": "text/plain", "Allow": "GET"}, b"GET only\n"
        segments = [s for s in path.split("/") if s]

        if len(segments) == 1 and segments[0].endswith(".xhtml"):
            name = segments[0][: -len(".xhtml")]
            loaded = self.cds.get(name)
            if loaded is None:
                return self._not_found(path)
            body = render_cd_html(loaded.cd, self.link_predicates).encode("utf-8")
            return 200, {"Content-Type": f"{TEXT_HTML}; charset=utf-8"}, body

        if len(segments) == 1:
            loaded = self.cds.get(segments[0])
            if loaded is None:
                return self._not_found(path)
            return self._negotiated_cd(segments[0], loaded, accept)

        if len(segments) == 2:
            loaded = self.cds.get(segments[0])
            if loaded is None:
                return self._not_found(path)
            return self._symbol_fragment(loaded, segments[1])

        return self._not_found(path)

    def _not_found(self, path: str) -> tuple[int, dict[str, str], bytes]:
        return 404, {"Content-Type": "text/plain"}, f"not found: {path}\n".encode()

    def _negotiated_cd(self, name: str, loaded: _LoadedCd, accept: str | None):
        chosen = negotiate(accept, self.default_representation)
        if chosen is None:
            body = "not acceptable; supported: " + ", ".join(SUPPORTED_TYPES) + "\n"
            return 406, {"Content-Type": "text/plain"}, body.encode()
        if chosen == OPENMATH_XML_MIME:
            return 200, {"Content-Type": OPENMATH_XML_MIME}, loaded.raw
        if chosen == TEXT_HTML:
            location = f"{self.base_iri}/{name}.xhtml"
            return 303, {"Location": location, "Content-Type": "text/plain"}, b"see " + location.encode() + b"\n"
        graph = cd_to_rdf(loaded.cd, self.base_iri, self.link_predicates)
        return 200, {"Content-Type": TEXT_TURTLE}, serialize_turtle(graph).encode("utf-8")

    def _symbol_fragment(self, loaded: _LoadedCd, symbol: str):
        definition = loaded.cd.definition(symbol)
        if definition is None:
            return self._not_found(f"/{loaded.cd.cdname}/{symbol}")
        fragment = ContentDictionary(
            cdbase=loaded.cd.cdbase,
            cdname=loaded.cd.cdname,
            description=loaded.cd.description,
            definitions=(definition,),
            source_url=loaded.cd.source_url,
        )
        body = serialize_cd_xml(fragment).encode("utf-8")
        return 200, {"Content-Type": OPENMATH_XML_MIME}, body


def load_cd_directory(directory: str | Path) -> dict[str, _LoadedCd]:
    cds: dict[str, _LoadedCd] = {}
    for file in sorted(Path(directory).glob("*.ocd")):
        raw = file.read_bytes()
        cd = parse_cd_xml(raw.decode("utf-8"), source_url=file.as_uri())
        if cd.cdname in cds:
            raise ValueError(f"two CD files define {cd.cdname!r}")
        cds[cd.cdname] = _LoadedCd(cd=cd, raw=raw)
    return cds


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def do_GET(self):  # noqa: N802 (http.server API)
        app = self.server.app  # type: ignore[attr-defined]
        status, headers, body = app.route("GET", self.path, self.headers.get("Accept"))
        self.send_response(status)
        for key, value in headers.items():
            self.send_header(key, value)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, format, *args):  # quiet by default
        pass


class CdServer:
    """The HTTP face of CdApp: start/serve/reload/close."""

    def __init__(
        self,
        cd_directory: str | Path,
        port: int = 0,
        bind_address: str = "127.0.0.1",
        base_iri: str | None = None,
        default_representation: str = OPENMATH_XML_MIME,
        link_predicates=DEFAULT_LINK_PREDICATES,
    ):
        self.cd_directory = str(cd_directory)
        self._httpd = ThreadingHTTPServer((bind_address, port), _Handler)
        self._httpd.daemon_threads = True
        actual_port = self._httpd.server_address[1]
        self.base_iri = (base_iri or f"http://{bind_address}:{actual_port}").rstrip("/")
        self.port = actual_port
        self._default_representation = default_representation
        self._link_predicates = link_predicates
        self._thread: threading.Thread | None = None
        self._httpd.app = self._build_app()  # type: ignore[attr-defined]

    def _build_app(self) -> CdApp:
        return CdApp(
            load_cd_directory(self.cd_directory),
            self.base_iri,
            self._default_representation,
            self._link_predicates,
        )

    @property
    def app(self) -> CdApp:
        return self._httpd.app  # type: ignore[attr-defined]

    def start(self) -> "CdServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def reload(self) -> None:
        """Re-scan the CD directory and swap the snapshot atomically."""
        self._httpd.app = self._build_app()  # type: ignore[attr-defined]

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
