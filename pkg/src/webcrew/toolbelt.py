"""The agents' tool set: fetching, HTML cleaning, search, conversion, and
sandboxed execution of generated collection programs.

Tools are registered in a :class:`Toolbelt` and dispatched by name from the
deliberation loop.  Artifact-producing tools persist their output through a
:class:`~webcrew.cache.CacheRecorder` so the bytes stay out of the message
channel; the observation string carries only the cache id.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Any, Callable, Protocol
from urllib.parse import urljoin, urlparse
from xml.sax.saxutils import quoteattr

import requests

from .cache import Artifact, CacheRecorder
from .errors import (
    ConversionError,
    FetchError,
    FetchTimeoutError,
    PolicyError,
    SandboxError,
    SearchError,
    ToolError,
)
from .hypergraph import NodeId

DEFAULT_USER_AGENT = "webcrew/0.1"
DEFAULT_POLITENESS_DELAY_S = 0.5
MAX_REDIRECTS = 5


# -- politeness ---------------------------------------------------------------

class HostLimiter:
    """One request per host per ``delay_s``; shared across all fetches."""

    def __init__(self, delay_s: float = DEFAULT_POLITENESS_DELAY_S):
        self.delay_s = delay_s
        self._lock = threading.Lock()
        self._next_slot: dict[str, float] = {}

    def wait(self, host: str) -> None:
        if self.delay_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next_slot.get(host, now))
            self._next_slot[host] = slot + self.delay_s
        pause = slot - now
        if pause > 0:
            time.sleep(pause)


# -- fetching -----------------------------------------------------------------

def _check_url_policy(url: str, allowed_hosts: list[str] | None) -> str:
    parts = urlparse(url)
    if parts.scheme not in ("http", "https"):
        raise PolicyError(f"scheme {parts.scheme!r} not allowed (http/https only): {url}")
    if not parts.netloc:
        raise PolicyError(f"not an absolute URL: {url}")
    if allowed_hosts is not None and parts.netloc.lower() not in {
        h.lower() for h in allowed_hosts
    }:
        raise PolicyError(f"host {parts.netloc} is not in the configured allowlist")
    return parts.netloc.lower()


def fetch_url(
    url: str,
    allowed_hosts: list[str] | None = None,
    limiter: HostLimiter | None = None,
    timeout_s: float = 30.0,
    user_agent: str = DEFAULT_USER_AGENT,
) -> Artifact:
    """GET a page and return its body as an artifact.

    Follows at most five redirects, re-checking the host policy and paying
    the per-host politeness delay on every hop.  Non-2xx responses raise
    FetchError with the status; timeouts raise FetchTimeoutError.
    """
    limiter = limiter or HostLimiter(0)
    current = url
    for _ in range(MAX_REDIRECTS + 1):
        host = _check_url_policy(current, allowed_hosts)
        limiter.wait(host)
        try:
            resp = requests.get(
                current,
                allow_redirects=False,
                timeout=timeout_s,
                headers={"User-Agent": user_agent},
            )
        except requests.Timeout as exc:
            raise FetchTimeoutError(current, detail=f"timeout after {timeout_s}s") from exc
        except requests.RequestException as exc:
            raise FetchError(current, detail=str(exc)) from exc
        if resp.status_code in (301, 302, 303, 307, 308):
            location = resp.headers.get("Location")
            if not location:
                raise FetchError(current, resp.status_code, "redirect without Location")
            current = urljoin(current, location)
            continue
        if not 200 <= resp.status_code < 300:
            raise FetchError(current, resp.status_code)
        media_type = resp.headers.get("Content-Type", "application/octet-stream")
        media_type = media_type.split(";")[0].strip() or "application/octet-stream"
        return Artifact(
            data=resp.content,
            media_type=media_type,
            description=f"fetched {current}",
            origin="fetch_url",
            placeholder=not resp.content,
        )
    raise FetchError(url, detail=f"more than {MAX_REDIRECTS} redirects")


# -- HTML cleaning --------------------------------------------------------------

_KEEP_ATTRS = {"href", "src", "id", "class"}
_DROP_TAGS = {"script", "style"}


class _CleaningParser(HTMLParser):
    def __init__(self, keep_attrs: bool = True):
        super().__init__(convert_charrefs=False)
        self.keep_attrs = keep_attrs
        self.out: list[str] = []
        self._drop_depth = 0

    def _emit_tag(self, tag: str, attrs, self_closing: bool) -> None:
        parts = [f"<{tag}"]
        if self.keep_attrs:
            for name, value in attrs:
                if name.lower() in _KEEP_ATTRS:
                    parts.append(f" {name}" if value is None else f" {name}={quoteattr(value)}")
        parts.append("/>" if self_closing else ">")
        self.out.append("".join(parts))

    def handle_starttag(self, tag, attrs):
        if tag in _DROP_TAGS:
            self._drop_depth += 1
            return
        if not self._drop_depth:
            self._emit_tag(tag, attrs, self_closing=False)

    def handle_startendtag(self, tag, attrs):
        if tag not in _DROP_TAGS and not self._drop_depth:
            self._emit_tag(tag, attrs, self_closing=True)

    def handle_endtag(self, tag):
        if tag in _DROP_TAGS:
            self._drop_depth = max(0, self._drop_depth - 1)
            return
        if not self._drop_depth:
            self.out.append(f"</{tag}>")

    def handle_data(self, data):
        if not self._drop_depth:
            self.out.append(data)

    def handle_entityref(self, name):
        if not self._drop_depth:
            self.out.append(f"&{name};")

    def handle_charref(self, name):
        if not self._drop_depth:
            self.out.append(f"&#{name};")

    def handle_comment(self, data):
        pass  # comments are always dropped

    def handle_decl(self, decl):
        if not self._drop_depth:
            self.out.append(f"<!{decl}>")

    def handle_pi(self, data):
        pass


def _clean_html_text(text: str, keep_attrs: bool) -> str:
    parser = _CleaningParser(keep_attrs=keep_attrs)
    parser.feed(text)
    parser.close()
    return "".join(parser.out)


def clean_html(artifact: Artifact) -> Artifact:
    """Strip script/style/comment nodes and all attributes except
    href/src/id/class, preserving every visible text node and element order.

    Idempotent, and never longer than its input: in the rare case where
    attribute re-quoting would grow the document, all attributes are
    dropped instead.
    """
    if artifact.media_type != "text/html":
        raise ToolError(f"clean_html expects text/html, got {artifact.media_type}")
    text = artifact.data.decode("utf-8", errors="replace")
    cleaned = _clean_html_text(text, keep_attrs=True)
    if len(cleaned.encode("utf-8")) > len(artifact.data):
        cleaned = _clean_html_text(text, keep_attrs=False)
    data = cleaned.encode("utf-8")
    return Artifact(
        data=data,
        media_type="text/html",
        description=f"cleaned: {artifact.description}",
        origin="clean_html",
        placeholder=not data,
    )


# -- text extraction and conversion ----------------------------------------------

class _TextParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._drop_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _DROP_TAGS:
            self._drop_depth += 1

    def handle_endtag(self, tag):
        if tag in _DROP_TAGS:
            self._drop_depth = max(0, self._drop_depth - 1)

    def handle_data(self, data):
        if not self._drop_depth:
            self.chunks.append(data)


def extract_text(html_text: str) -> str:
    """Visible text of a document: entities decoded, whitespace collapsed."""
    parser = _TextParser()
    parser.feed(html_text)
    parser.close()
    return " ".join("".join(parser.chunks).split())


def _json_records_to_csv(data: bytes) -> bytes:
    try:
        records = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConversionError(f"input is not valid JSON: {exc}") from exc
    if not isinstance(records, list) or any(not isinstance(r, dict) for r in records):
        raise ConversionError("json→csv needs a list of flat records")
    fields = sorted({k for r in records for k in r})
    for i, record in enumerate(records):
        missing = sorted(set(fields) - set(record))
        if missing:
            raise ConversionError(
                f"record {i} is missing fields: {', '.join(missing)} (ragged data)"
            )
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow({k: record[k] for k in fields})
    return buf.getvalue().encode("utf-8")


def _csv_to_json_records(data: bytes) -> bytes:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConversionError(f"input is not UTF-8 text: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ConversionError("csv input has no header row")
    rows = [dict(row) for row in reader]
    return json.dumps(rows, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )


_CONVERSIONS: dict[tuple[str, str], Callable[[bytes], bytes]] = {
    ("text/html", "text/plain"): lambda d: extract_text(d.decode("utf-8", "replace")).encode("utf-8"),
    ("application/json", "text/csv"): _json_records_to_csv,
    ("text/csv", "application/json"): _csv_to_json_records,
}


def convert(artifact: Artifact, target: str) -> Artifact:
    """Convert between the supported media-type pairs.

    html→plain text, json→csv (rectangular records, canonical sorted
    header), csv→json.  Unsupported pairs raise ConversionError.
    """
    fn = _CONVERSIONS.get((artifact.media_type, target))
    if fn is None:
        raise ConversionError(f"unsupported conversion: {artifact.media_type} -> {target}")
    data = fn(artifact.data)
    return Artifact(
        data=data,
        media_type=target,
        description=f"converted to {target}: {artifact.description}",
        origin="convert",
        placeholder=not data,
    )


# -- search ---------------------------------------------------------------------

class SearchProvider(Protocol):
    def search(self, query: str) -> list[tuple[str, str, str]]: ...


_TOKEN_RE = re.compile(r"[a-z0-9]+")
_TITLE_RE = re.compile(r"<title[^>]*>(.*?)</title>", re.IGNORECASE | re.DOTALL)


class OfflineSearchProvider:
    """Deterministic corpus search: ranks pages by query-token overlap,
    with title-token matches counted twice; ties break on corpus order."""

    def __init__(self, corpus_dir: str | Path, base_url: str):
        self.corpus_dir = Path(corpus_dir)
        self.base_url = base_url.rstrip("/")
        self._index: list[tuple[str, str, str, frozenset[str], frozenset[str]]] = []
        for path in sorted(self.corpus_dir.rglob("*.html")):
            text = path.read_text(encoding="utf-8", errors="replace")
            title_match = _TITLE_RE.search(text)
            visible = extract_text(text)
            title = (
                " ".join(title_match.group(1).split()) if title_match else path.stem
            )
            url = f"{self.base_url}/{path.relative_to(self.corpus_dir).as_posix()}"
            tokens = frozenset(_TOKEN_RE.findall((title + " " + visible).lower()))
            title_tokens = frozenset(_TOKEN_RE.findall(title.lower()))
            self._index.append((title, url, visible[:160], tokens, title_tokens))

    def search(self, query: str) -> list[tuple[str, str, str]]:
        terms = set(_TOKEN_RE.findall(query.lower()))
        if not terms:
            return []
        scored = []
        for i, (title, url, snippet, tokens, title_tokens) in enumerate(self._index):
            score = len(terms & tokens) + len(terms & title_tokens)
            if score > 0:
                scored.append((-score, i, (title, url, snippet)))
        scored.sort()
        return [row for _, _, row in scored]


class RemoteSearchProvider:
    """GETs ``endpoint?q=...`` and expects a JSON list of result objects."""

    def __init__(self, endpoint: str, timeout_s: float = 10.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def search(self, query: str) -> list[tuple[str, str, str]]:
        if not query.strip():
            return []
        try:
            resp = requests.get(self.endpoint, params={"q": query}, timeout=self.timeout_s)
            resp.raise_for_status()
            rows = resp.json()
            return [(r["title"], r["url"], r.get("snippet", "")) for r in rows]
        except (requests.RequestException, ValueError, KeyError, TypeError) as exc:
            raise SearchError(f"search provider failed: {exc}") from exc


def search(query: str, provider: SearchProvider) -> list[tuple[str, str, str]]:
    """Ordered (title, url, snippet) results; empty query yields no results."""
    if not query.strip():
        return []
    return provider.search(query)


# -- sandboxed program execution ---------------------------------------------------

_NETGUARD_DIR = ".netguard"
_NETGUARD_SOURCE = """\
import socket


def _blocked(*args, **kwargs):
    raise OSError("network access is disabled in this sandbox")


socket.socket.connect = _blocked
socket.socket.connect_ex = _blocked
socket.create_connection = _blocked
"""

_unshare_works: bool | None = None


def _probe_unshare() -> bool:
    global _unshare_works
    if _unshare_works is None:
        try:
            proc = subprocess.run(
                ["unshare", "-n", "true"], capture_output=True, timeout=5
            )
            _unshare_works = proc.returncode == 0
        except (OSError, subprocess.TimeoutExpired):
            _unshare_works = False
    return _unshare_works


@dataclass(frozen=True)
class ExecLimits:
    wall_clock_s: float = 20.0
    output_bytes: int = 1_000_000
    network_allowed: bool = True

    def __post_init__(self) -> None:
        if self.wall_clock_s <= 0 or self.output_bytes <= 0:
            raise ValueError("execution limits must be positive")


@dataclass(frozen=True)
class RunResult:
    exit_status: int | None  # absent when timed out
    timed_out: bool
    stdout: bytes
    stderr: bytes
    stdout_truncated: bool
    stderr_truncated: bool
    duration_s: float
    products: tuple[str, ...]  # new files relative to the sandbox directory
    sandbox_dir: str


def execute_program(
    source: Artifact,
    entrypoint: str,
    limits: ExecLimits,
    sandbox_dir: str | Path,
    source_filename: str = "program.py",
) -> RunResult:
    """Run a cached program in a fresh sandbox directory as a child process.

    The source bytes are materialized as ``source_filename`` inside the
    sandbox and the entrypoint command line runs with the sandbox as its
    working directory.  Wall clock is enforced (kill at the limit, ≤2 s
    grace); stdout/stderr are truncated at the byte limit; timeouts come
    back as a flagged RunResult, not an exception.

    With ``network_allowed=False`` the child runs inside a detached network
    namespace when the host supports it, falling back to an interpreter
    level socket guard for the default Python program runtime.
    """
    if not source.data:
        raise SandboxError("program source is empty")
    sandbox = Path(sandbox_dir)
    try:
        sandbox.mkdir(parents=True, exist_ok=True)
        (sandbox / source_filename).write_bytes(source.data)
    except OSError as exc:
        raise SandboxError(f"cannot prepare sandbox {sandbox}: {exc}") from exc

    pre_existing = {p.relative_to(sandbox).as_posix() for p in sandbox.rglob("*") if p.is_file()}

    argv = shlex.split(entrypoint)
    if not argv:
        raise SandboxError("empty entrypoint")
    env = None
    if not limits.network_allowed:
        if _probe_unshare():
            argv = ["unshare", "-n", "--"] + argv
        else:
            guard_dir = sandbox / _NETGUARD_DIR
            guard_dir.mkdir(exist_ok=True)
            (guard_dir / "sitecustomize.py").write_text(_NETGUARD_SOURCE, encoding="utf-8")
            env = dict(os.environ)
            prior = env.get("PYTHONPATH", "")
            env["PYTHONPATH"] = str(guard_dir) + (os.pathsep + prior if prior else "")

    start = time.monotonic()
    try:
        proc = subprocess.Popen(
            argv,
            cwd=sandbox,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            env=env,
            start_new_session=True,
        )
    except OSError as exc:
        raise SandboxError(f"cannot spawn {argv[0]!r}: {exc}") from exc

    timed_out = False
    try:
        stdout, stderr = proc.communicate(timeout=limits.wall_clock_s)
    except subprocess.TimeoutExpired:
        timed_out = True
        proc.kill()
        try:
            stdout, stderr = proc.communicate(timeout=2.0)
        except subprocess.TimeoutExpired:
            stdout, stderr = b"", b""
    duration = time.monotonic() - start

    stdout_truncated = len(stdout) > limits.output_bytes
    stderr_truncated = len(stderr) > limits.output_bytes
    guard_prefix = _NETGUARD_DIR + "/"
    products = sorted(
        p.relative_to(sandbox).as_posix()
        for p in sandbox.rglob("*")
        if p.is_file()
        and p.relative_to(sandbox).as_posix() not in pre_existing
        and p.relative_to(sandbox).as_posix() != source_filename
        and not p.relative_to(sandbox).as_posix().startswith(guard_prefix)
    )
    return RunResult(
        exit_status=None if timed_out else proc.returncode,
        timed_out=timed_out,
        stdout=stdout[: limits.output_bytes],
        stderr=stderr[: limits.output_bytes],
        stdout_truncated=stdout_truncated,
        stderr_truncated=stderr_truncated,
        duration_s=duration,
        products=tuple(products),
        sandbox_dir=str(sandbox),
    )


# -- the registry ------------------------------------------------------------------

@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    input_shape: dict[str, str]
    produces_artifact: bool = False


class Toolbelt:
    """Named tool registry with dispatch for the deliberation loop.

    Dispatch returns an observation string; tool failures raise ToolError
    subclasses which the loop records as error observations.
    """

    def __init__(self) -> None:
        self._tools: dict[str, tuple[ToolSpec, Callable[..., str]]] = {}

    def register(self, spec: ToolSpec, fn: Callable[..., str]) -> None:
        if spec.name in self._tools:
            raise ValueError(f"tool {spec.name} already registered")
        self._tools[spec.name] = (spec, fn)

    def names(self) -> list[str]:
        return list(self._tools)

    def spec(self, name: str) -> ToolSpec:
        try:
            return self._tools[name][0]
        except KeyError:
            raise ToolError(f"unknown tool: {name}") from None

    def describe(self, names: tuple[str, ...]) -> str:
        lines = []
        for name in names:
            if name in self._tools:
                spec = self._tools[name][0]
                args = ", ".join(f"{k}: {v}" for k, v in spec.input_shape.items())
                lines.append(f"- {name}: {spec.description} (args: {args or 'none'})")
        return "\n".join(lines) or "(none)"

    def dispatch(
        self,
        caller: NodeId,
        name: str,
        args: dict[str, Any],
        allowed: tuple[str, ...],
    ) -> str:
        if name not in self._tools:
            raise ToolError(f"unknown tool: {name}")
        if name not in allowed:
            raise ToolError(f"tool {name} is not available to {caller.value}")
        _, fn = self._tools[name]
        return fn(**args)


@dataclass
class ExecutionLog:
    """Remembers sandbox runs so the orchestrator can locate run products."""

    runs: list[RunResult] = field(default_factory=list)

    @property
    def last(self) -> RunResult | None:
        return self.runs[-1] if self.runs else None


def build_default_toolbelt(
    recorder: CacheRecorder,
    *,
    allowed_hosts: list[str] | None,
    politeness_delay_s: float = DEFAULT_POLITENESS_DELAY_S,
    fetch_timeout_s: float = 30.0,
    search_provider: SearchProvider | None = None,
    exec_limits: ExecLimits = ExecLimits(),
    sandbox_root: str | Path = "sandbox",
    execution_log: ExecutionLog | None = None,
) -> Toolbelt:
    """Wire the standard tool set against one run's cache and sandbox."""
    belt = Toolbelt()
    limiter = HostLimiter(politeness_delay_s)
    sandbox_root = Path(sandbox_root)
    log = execution_log if execution_log is not None else ExecutionLog()
    counter = {"step": 0}

    def _fetch(url: str) -> str:
        artifact = fetch_url(
            url, allowed_hosts=allowed_hosts, limiter=limiter, timeout_s=fetch_timeout_s
        )
        cid = recorder.record(artifact)
        return (
            f"fetched {url} ({artifact.media_type}, {len(artifact.data)} bytes), "
            f"cached as {cid}"
        )

    def _clean(cache_id: str) -> str:
        artifact = recorder.cache.retrieve(cache_id)
        cleaned = clean_html(artifact)
        cid = recorder.record(cleaned)
        return (
            f"cleaned {cache_id} ({len(artifact.data)} -> {len(cleaned.data)} bytes), "
            f"cached as {cid}"
        )

    def _search(query: str) -> str:
        if search_provider is None:
            raise SearchError("no search provider configured")
        results = search(query, search_provider)
        if not results:
            return "no results"
        lines = [
            f"{i}. {title} | {url} | {snippet}"
            for i, (title, url, snippet) in enumerate(results[:5], start=1)
        ]
        return "\n".join(lines)

    def _convert(cache_id: str, target: str) -> str:
        artifact = recorder.cache.retrieve(cache_id)
        converted = convert(artifact, target)
        cid = recorder.record(converted)
        return f"converted {cache_id} to {target}, cached as {cid}"

    def _cache_get(cache_id: str) -> str:
        artifact = recorder.cache.retrieve(cache_id)
        preview = artifact.data[:2000].decode("utf-8", errors="replace")
        return (
            f"{cache_id} ({artifact.media_type}, {len(artifact.data)} bytes):\n{preview}"
        )

    def _cache_store(content: str, media_type: str = "text/plain", description: str = "") -> str:
        artifact = Artifact(
            data=content.encode("utf-8"),
            media_type=media_type,
            description=description or "stored by agent",
            origin="cache_store",
            placeholder=not content,
        )
        cid = recorder.record(artifact)
        return f"stored {len(artifact.data)} bytes as {cid}"

    def _execute(program_cache_id: str, entrypoint: str) -> str:
        source = recorder.cache.retrieve(program_cache_id)
        counter["step"] += 1
        sandbox = sandbox_root / f"{counter['step']:03d}"
        result = execute_program(source, entrypoint, exec_limits, sandbox)
        log.runs.append(result)
        stdout_cid = recorder.record(
            Artifact(
                data=result.stdout,
                media_type="text/plain",
                description="program stdout",
                origin="execute_program",
                placeholder=not result.stdout,
            )
        )
        return (
            f"exit_status={result.exit_status} timed_out={result.timed_out} "
            f"stdout_cache={stdout_cid} stdout_bytes={len(result.stdout)} "
            f"products={list(result.products)}"
        )

    belt.register(
        ToolSpec(
            "fetch_url",
            "download a page or endpoint body over HTTP(S)",
            {"url": "absolute URL"},
            produces_artifact=True,
        ),
        _fetch,
    )
    belt.register(
        ToolSpec(
            "clean_html",
            "strip scripts, styles, comments, and noisy attributes from a cached HTML page",
            {"cache_id": "cache id of a text/html artifact"},
            produces_artifact=True,
        ),
        _clean,
    )
    belt.register(
        ToolSpec(
            "search",
            "search the configured corpus or provider",
            {"query": "search terms"},
        ),
        _search,
    )
    belt.register(
        ToolSpec(
            "convert",
            "convert a cached artifact between media types (html→text, json↔csv)",
            {"cache_id": "cache id", "target": "target media type"},
            produces_artifact=True,
        ),
        _convert,
    )
    belt.register(
        ToolSpec(
            "cache_get",
            "read back a cached artifact (metadata plus a text preview)",
            {"cache_id": "cache id"},
        ),
        _cache_get,
    )
    belt.register(
        ToolSpec(
            "cache_store",
            "persist content (for example a program) into the artifact cache",
            {"content": "text content", "media_type": "media type", "description": "short label"},
            produces_artifact=True,
        ),
        _cache_store,
    )
    belt.register(
        ToolSpec(
            "execute_program",
            "run a cached program in a fresh sandbox and report the outcome",
            {"program_cache_id": "cache id of the program source", "entrypoint": "command line"},
            produces_artifact=True,
        ),
        _execute,
    )
    return belt
