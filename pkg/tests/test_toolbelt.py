import json
import time

import pytest

from oracles import visible_text_oracle
from webcrew.cache import Artifact
from webcrew.errors import (
    ConversionError,
    FetchError,
    PolicyError,
    SandboxError,
    SearchError,
    ToolError,
)
from webcrew.toolbelt import (
    ExecLimits,
    HostLimiter,
    OfflineSearchProvider,
    RemoteSearchProvider,
    clean_html,
    convert,
    execute_program,
    fetch_url,
    search,
)


def _html(data: str) -> Artifact:
    return Artifact(data=data.encode(), media_type="text/html", description="d", origin="t")


class TestFetch:
    def test_fixture_page_round_trips_exact_bytes(self, fixture_server, fixtures_dir):
        url = f"{fixture_server.base_url}/proceedings/2017.html"
        artifact = fetch_url(url)
        on_disk = (fixtures_dir / "site" / "proceedings" / "2017.html").read_bytes()
        assert artifact.data == on_disk
        assert artifact.media_type == "text/html"

    def test_404_raises_with_status(self, fixture_server):
        with pytest.raises(FetchError) as err:
            fetch_url(f"{fixture_server.base_url}/missing")
        assert err.value.status == 404

    def test_allowlist_blocks_unknown_host(self, fixture_server):
        with pytest.raises(PolicyError, match="allowlist"):
            fetch_url(f"{fixture_server.base_url}/index.html", allowed_hosts=["other:1"])

    def test_allowlisted_host_passes(self, fixture_server):
        from urllib.parse import urlparse

        netloc = urlparse(fixture_server.base_url).netloc
        artifact = fetch_url(
            f"{fixture_server.base_url}/index.html", allowed_hosts=[netloc]
        )
        assert artifact.data

    def test_non_http_scheme_rejected(self):
        with pytest.raises(PolicyError, match="scheme"):
            fetch_url("ftp://host/file")

    def test_short_redirect_chain_followed(self, fixture_server, fixtures_dir):
        artifact = fetch_url(f"{fixture_server.base_url}/redir/hop1")
        index = (fixtures_dir / "site" / "index.html").read_bytes()
        assert artifact.data == index

    def test_deep_redirect_chain_rejected(self, fixture_server):
        with pytest.raises(FetchError, match="redirects"):
            fetch_url(f"{fixture_server.base_url}/redir/deep1")

    def test_politeness_spacing_between_same_host_requests(self, fixture_server):
        limiter = HostLimiter(0.2)
        url = f"{fixture_server.base_url}/index.html"
        start = time.monotonic()
        fetch_url(url, limiter=limiter)
        fetch_url(url, limiter=limiter)
        assert time.monotonic() - start >= 0.2

    def test_default_politeness_delay_is_half_a_second(self):
        from webcrew.toolbelt import DEFAULT_POLITENESS_DELAY_S

        assert DEFAULT_POLITENESS_DELAY_S == 0.5
        assert HostLimiter().delay_s == 0.5


class TestCleanHtml:
    def test_scripts_styles_comments_removed(self):
        artifact = _html("<html><script>x=1</script><!-- hidden --><style>p{}</style><p>Hi</p></html>")
        cleaned = clean_html(artifact).data.decode()
        assert "<p>Hi</p>" in cleaned
        assert "script" not in cleaned
        assert "hidden" not in cleaned
        assert "style" not in cleaned

    def test_attribute_filtering_keeps_only_allowed(self):
        artifact = _html('<a href="/x" onclick="evil()" class="y" data-z="1">t</a>')
        cleaned = clean_html(artifact).data.decode()
        assert 'href="/x"' in cleaned
        assert 'class="y"' in cleaned
        assert "onclick" not in cleaned
        assert "data-z" not in cleaned

    def test_idempotent(self):
        artifact = _html('<div id="a"><script>x</script><p class=unquoted>text &amp; more</p></div>')
        once = clean_html(artifact)
        twice = clean_html(once)
        assert once.data == twice.data

    def test_never_longer_than_input(self, fixtures_dir):
        for path in sorted((fixtures_dir / "site").rglob("*.html")):
            artifact = _html(path.read_text(encoding="utf-8"))
            assert len(clean_html(artifact).data) <= len(artifact.data)

    def test_visible_text_preserved_on_fixture_corpus(self, fixtures_dir):
        for path in sorted((fixtures_dir / "site").rglob("*.html")):
            raw = path.read_text(encoding="utf-8")
            cleaned = clean_html(_html(raw)).data.decode()
            assert visible_text_oracle(cleaned) == visible_text_oracle(raw)

    def test_non_html_rejected(self):
        artifact = Artifact(data=b"{}", media_type="application/json", description="d", origin="t")
        with pytest.raises(ToolError, match="text/html"):
            clean_html(artifact)


class TestExtractAndConvert:
    def test_html_to_text_matches_oracle_on_fixture(self, fixtures_dir):
        page = (fixtures_dir / "site" / "papers" / "2017" / "p01.html").read_text()
        cleaned = clean_html(_html(page))
        converted = convert(cleaned, "text/plain")
        assert converted.data.decode() == visible_text_oracle(cleaned.data.decode())

    def test_csv_json_round_trip_canonical(self):
        csv_data = "a,b\n1,2\n3,4\n"
        artifact = Artifact(data=csv_data.encode(), media_type="text/csv", description="d", origin="t")
        as_json = convert(artifact, "application/json")
        assert json.loads(as_json.data) == [{"a": "1", "b": "2"}, {"a": "3", "b": "4"}]
        back = convert(as_json, "text/csv")
        assert back.data.decode() == csv_data

    def test_ragged_json_names_missing_fields(self):
        rows = [{"a": 1, "b": 2}, {"a": 3}]
        artifact = Artifact(
            data=json.dumps(rows).encode(), media_type="application/json", description="d", origin="t"
        )
        with pytest.raises(ConversionError, match="missing fields: b"):
            convert(artifact, "text/csv")

    def test_unsupported_pair_rejected(self):
        with pytest.raises(ConversionError, match="unsupported"):
            convert(_html("<p>x</p>"), "application/pdf")


class TestSearch:
    def test_fixture_title_query_ranks_target_first(self, fixtures_dir, fixture_server):
        provider = OfflineSearchProvider(fixtures_dir / "site", fixture_server.base_url)
        results = search("MiniConf 2018 proceedings", provider)
        assert results
        assert results[0][1].endswith("/proceedings/2018.html")

    def test_empty_query_is_empty(self, fixtures_dir, fixture_server):
        provider = OfflineSearchProvider(fixtures_dir / "site", fixture_server.base_url)
        assert search("", provider) == []
        assert search("   ", provider) == []

    def test_results_are_deterministic(self, fixtures_dir, fixture_server):
        provider = OfflineSearchProvider(fixtures_dir / "site", fixture_server.base_url)
        a = search("record linkage cache", provider)
        b = search("record linkage cache", provider)
        assert a == b

    def test_remote_provider_failure_is_an_error_not_empty(self):
        provider = RemoteSearchProvider("http://127.0.0.1:9/search", timeout_s=0.2)
        with pytest.raises(SearchError):
            search("anything", provider)


def _program(source: str) -> Artifact:
    return Artifact(data=source.encode(), media_type="text/x-python", description="p", origin="engr")


class TestExecuteProgram:
    def test_hello_world(self, tmp_path):
        result = execute_program(
            _program('print("hello")'), "python3 program.py", ExecLimits(), tmp_path / "sb"
        )
        assert result.exit_status == 0
        assert result.stdout == b"hello\n"
        assert not result.timed_out

    def test_busy_loop_times_out_within_grace(self, tmp_path):
        result = execute_program(
            _program("while True: pass"),
            "python3 program.py",
            ExecLimits(wall_clock_s=1.0),
            tmp_path / "sb",
        )
        assert result.timed_out
        assert result.exit_status is None
        assert 1.0 <= result.duration_s <= 3.0

    def test_products_enumerated_relative_to_sandbox(self, tmp_path):
        source = 'open("out.csv", "w").write("a,b\\n1,2\\n")'
        result = execute_program(
            _program(source), "python3 program.py", ExecLimits(), tmp_path / "sb"
        )
        assert result.products == ("out.csv",)

    def test_stdout_truncated_at_limit(self, tmp_path):
        result = execute_program(
            _program('print("x" * 10000)'),
            "python3 program.py",
            ExecLimits(output_bytes=100),
            tmp_path / "sb",
        )
        assert result.stdout_truncated
        assert len(result.stdout) == 100

    def test_network_disallowed_blocks_fixture_server(self, tmp_path, fixture_server):
        probe = (
            "import urllib.request\n"
            "try:\n"
            f"    urllib.request.urlopen({fixture_server.base_url + '/index.html'!r}, timeout=3)\n"
            "    print('CONNECTED')\n"
            "except Exception as exc:\n"
            "    print('BLOCKED')\n"
        )
        result = execute_program(
            _program(probe),
            "python3 program.py",
            ExecLimits(wall_clock_s=15.0, network_allowed=False),
            tmp_path / "sb",
        )
        assert result.stdout.strip() == b"BLOCKED"

    def test_network_allowed_reaches_fixture_server(self, tmp_path, fixture_server):
        probe = (
            "import urllib.request\n"
            f"print(len(urllib.request.urlopen({fixture_server.base_url + '/index.html'!r}).read()))\n"
        )
        result = execute_program(
            _program(probe), "python3 program.py", ExecLimits(), tmp_path / "sb"
        )
        assert result.exit_status == 0
        assert int(result.stdout.strip()) > 0

    def test_spawn_failure_is_environment_error(self, tmp_path):
        with pytest.raises(SandboxError, match="spawn"):
            execute_program(
                _program("x"), "no-such-binary-anywhere", ExecLimits(), tmp_path / "sb"
            )

    def test_limits_must_be_positive(self):
        with pytest.raises(ValueError):
            ExecLimits(wall_clock_s=0)
