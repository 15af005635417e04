#!/usr/bin/env python3
"""Regenerate the fixture corpus, ground truth, transcripts, and configs.

Everything under fixtures/ is derived deterministically from the tables in
this script.  Cache ids referenced inside the scripted transcripts are
content hashes of fixture bytes, so the site, the collector programs, and
the transcripts must be regenerated together:

    python scripts/gen_fixtures.py

Fixture pages use site-relative links so their bytes (and hence their
cache ids) do not depend on the server port; every absolute URL in
transcripts, configs, and truth files goes through {BASE_URL}
substitution at load time instead.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"

CONFERENCE_ABBR = "MiniConf"
YEARS = [2017, 2018, 2019]
TRACK = "Main Track"

TOPICS = [
    "Sparse Indexes for Tiny Archives",
    "Streaming Joins over Bursty Feeds",
    "Robust Parsers for Messy Markup",
    "Incremental Crawl Scheduling",
    "Cache-Aware Record Linkage",
    "Declarative Wrappers for Tabular Pages",
    "Adaptive Politeness for Small Hosts",
    "Content Hashing for Replayable Pipelines",
    "Layered Validation of Scraped Records",
    "Lightweight Provenance for Web Datasets",
    "Selective Routing in Agent Ensembles",
    "Structured Messages for Tool Chains",
    "Deterministic Replay of Collection Runs",
    "Budgeted Deliberation under Tool Errors",
    "Schema Contracts for Generated Programs",
    "Sandbox Limits for Untrusted Collectors",
    "Redirect Graphs and Their Fixed Points",
    "Offline Ranking for Corpus Search",
    "Round-Trip Safe Format Conversion",
    "Attribute-Level Scoring for Extraction",
    "Blueprint-First Program Synthesis",
    "Evidence Caching for Auditable Agents",
    "Monotone Clocks for Message Stores",
    "Fail-Loop Bounds in Pipeline Control",
    "Canonical Serialization of Run Traces",
    "Host Allowlists for Test Harnesses",
    "Minimal Fixtures for Integration Suites",
    "Stable ETags for Static Corpora",
    "Composable Checks for Data Integrity",
    "Portable Entrypoints for Sandboxed Jobs",
]

AUTHOR_POOL = [
    "Ada Calloway",
    "Bram Ortiz",
    "Chiyo Tanaka",
    "Dmitri Vassiliev",
    "Esi Mensah",
    "Farid Khanlou",
    "Greta Lindqvist",
    "Hugo Marchetti",
    "Imani Okafor",
    "Jonas Petersen",
    "Katya Rudenko",
    "Liang Wen",
]


def paper_id(year: int, i: int) -> str:
    return f"p{i + 1:02d}"


def paper_record(year: int, i: int) -> dict:
    global_index = YEARS.index(year) * 10 + i
    title = TOPICS[global_index]
    first = AUTHOR_POOL[global_index % len(AUTHOR_POOL)]
    second = AUTHOR_POOL[(global_index + 5) % len(AUTHOR_POOL)]
    authors = [first, second]
    if global_index % 2 == 0:
        authors.append(AUTHOR_POOL[(global_index + 9) % len(AUTHOR_POOL)])
    abstract = (
        f"We study {title.lower()} in reproducible web data collection. "
        f"Across {12 + global_index} synthetic workloads the approach keeps "
        f"extraction exact while reducing coordination overhead."
    )
    pid = paper_id(year, i)
    has_supp = global_index % 3 == 0
    return {
        "TITLE": title,
        "AUTHORS": ", ".join(authors),
        "ABSTRACT": abstract,
        "CONFERENCE": f"{CONFERENCE_ABBR} {year} Annual Meeting",
        "ABBR": CONFERENCE_ABBR,
        "TRACK": TRACK,
        "PAPER_LINK": f"{{BASE_URL}}/papers/{year}/{pid}.pdf",
        "BIBTEX_LINK": f"{{BASE_URL}}/papers/{year}/{pid}.bib",
        "SUPP_LINK": f"{{BASE_URL}}/papers/{year}/{pid}-supp.zip" if has_supp else "None",
    }


def detail_page(year: int, i: int, record: dict) -> str:
    pid = paper_id(year, i)
    supp_anchor = (
        f'<a id="supp-link" href="/papers/{year}/{pid}-supp.zip">supplemental</a>'
        if record["SUPP_LINK"] != "None"
        else ""
    )
    return f"""<!DOCTYPE html>
<html>
<head><title>{record['TITLE']} | {CONFERENCE_ABBR} {year}</title></head>
<body>
<h1 id="title">{record['TITLE']}</h1>
<p class="authors">{record['AUTHORS']}</p>
<div class="abstract">{record['ABSTRACT']}</div>
<ul class="meta">
<li id="conference">{record['CONFERENCE']}</li>
<li id="abbr">{record['ABBR']}</li>
<li id="track">{record['TRACK']}</li>
</ul>
<p class="links">
<a id="paper-link" href="/papers/{year}/{pid}.pdf">paper</a>
<a id="bibtex-link" href="/papers/{year}/{pid}.bib">bibtex</a>
{supp_anchor}
</p>
</body>
</html>
"""


def proceedings_page(year: int, records: list[dict]) -> str:
    items = "\n".join(
        f'<li class="paper"><a href="/papers/{year}/{paper_id(year, i)}.html">{r["TITLE"]}</a></li>'
        for i, r in enumerate(records)
    )
    return f"""<!DOCTYPE html>
<html>
<head><title>{CONFERENCE_ABBR} {year} Proceedings</title></head>
<body>
<h1>{CONFERENCE_ABBR} {year} Proceedings ({TRACK})</h1>
<ul class="papers">
{items}
</ul>
</body>
</html>
"""


INDEX_PAGE = f"""<!DOCTYPE html>
<html>
<head><title>{CONFERENCE_ABBR} Proceedings Archive</title></head>
<body>
<h1>{CONFERENCE_ABBR} Proceedings Archive</h1>
<!-- navigation -->
<script>var unused = "never rendered";</script>
<ul>
{chr(10).join(f'<li><a class="year" href="/proceedings/{y}.html">{CONFERENCE_ABBR} {y}</a></li>' for y in YEARS)}
</ul>
<p>Daily market snapshots are served under <a href="/api/stock/XMPL/2020.json">the stock endpoint</a>.</p>
</body>
</html>
"""

ACADEMIC_PROGRAM = r'''import json
import re
import sys
import urllib.request

base = sys.argv[1].rstrip("/")
years = [int(y) for y in sys.argv[2].split(",")]


def get(path):
    with urllib.request.urlopen(base + path) as resp:
        return resp.read().decode("utf-8")


def first(pattern, text):
    m = re.search(pattern, text, re.DOTALL)
    return m.group(1).strip() if m else ""


records = []
for year in years:
    listing = get("/proceedings/%d.html" % year)
    hrefs = re.findall(r'<a href="(/papers/%d/p\d+\.html)">' % year, listing)
    for href in hrefs:
        page = get(href)
        supp = first(r'<a id="supp-link" href="([^"]+)"', page)
        records.append(
            {
                "TITLE": first(r'<h1 id="title">(.*?)</h1>', page),
                "AUTHORS": first(r'<p class="authors">(.*?)</p>', page),
                "ABSTRACT": first(r'<div class="abstract">(.*?)</div>', page),
                "CONFERENCE": first(r'<li id="conference">(.*?)</li>', page),
                "ABBR": first(r'<li id="abbr">(.*?)</li>', page),
                "TRACK": first(r'<li id="track">(.*?)</li>', page),
                "PAPER_LINK": base + first(r'<a id="paper-link" href="([^"]+)"', page),
                "BIBTEX_LINK": base + first(r'<a id="bibtex-link" href="([^"]+)"', page),
                "SUPP_LINK": (base + supp) if supp else "None",
            }
        )

with open("dataset.jsonl", "w", encoding="utf-8") as out:
    for record in records:
        out.write(json.dumps(record, ensure_ascii=False) + "\n")
print("records=%d" % len(records))
'''

STOCK_PROGRAM = r'''import json
import sys
import urllib.request

base = sys.argv[1].rstrip("/")
symbol = sys.argv[2]
year = sys.argv[3]

with urllib.request.urlopen("%s/api/stock/%s/%s.json" % (base, symbol, year)) as resp:
    rows = json.loads(resp.read().decode("utf-8"))

with open("dataset.jsonl", "w", encoding="utf-8") as out:
    for row in rows:
        out.write(json.dumps(row, ensure_ascii=False) + "\n")
print("records=%d" % len(rows))
'''

STUBBORN_PROGRAM = 'print("boom")\n'

STOCK_DATES = [
    "2020-01-02",
    "2020-01-03",
    "2020-01-06",
    "2020-01-07",
    "2020-01-08",
    "2020-01-09",
    "2020-01-10",
    "2020-01-13",
    "2020-01-14",
    "2020-01-15",
]


def stock_rows() -> list[dict]:
    rows = []
    for i, date in enumerate(STOCK_DATES):
        base_price = 180.0 + 1.25 * i
        rows.append(
            {
                "Date": date,
                "Open": round(base_price, 2),
                "High": round(base_price + 2.4, 2),
                "Low": round(base_price - 1.8, 2),
                "Close": round(base_price + 0.75, 2),
                "Volume": 31250000 + 13000 * i,
                "adjOpen": round(base_price * 0.98, 4),
                "adjHigh": round((base_price + 2.4) * 0.98, 4),
                "adjLow": round((base_price - 1.8) * 0.98, 4),
                "adjClose": round((base_price + 0.75) * 0.98, 4),
                "adjVolume": 31250000 + 13000 * i,
                "divCash": 0.22 if i == 6 else 0.0,
            }
        )
    return rows


def ohc(data: bytes) -> str:
    return "ohc-" + hashlib.sha256(data).hexdigest()


def write(path: Path, text: str) -> bytes:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    path.write_bytes(data)
    return data


def write_jsonl(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_transcripts(root: Path, per_role: dict[str, list[str]]) -> None:
    for role, outputs in per_role.items():
        role_dir = root / role
        role_dir.mkdir(parents=True, exist_ok=True)
        for i, text in enumerate(outputs):
            (role_dir / f"{i:02d}.txt").write_text(text, encoding="utf-8")


def main() -> None:
    site = FIX / "site"

    # --- academic pages -------------------------------------------------
    truth_academic: list[dict] = []
    page_bytes: dict[str, bytes] = {}
    for year in YEARS:
        records = [paper_record(year, i) for i in range(10)]
        truth_academic.extend(records)
        page_bytes[f"proceedings/{year}.html"] = write(
            site / "proceedings" / f"{year}.html", proceedings_page(year, records)
        )
        for i, record in enumerate(records):
            pid = paper_id(year, i)
            page_bytes[f"papers/{year}/{pid}.html"] = write(
                site / "papers" / str(year) / f"{pid}.html", detail_page(year, i, record)
            )
    write(site / "index.html", INDEX_PAGE)

    # --- stock endpoint ---------------------------------------------------
    rows = stock_rows()
    api_bytes = write(
        site / "api" / "stock" / "XMPL" / "2020.json",
        json.dumps(rows, ensure_ascii=False, indent=1) + "\n",
    )

    # --- redirect chains (for fetch tests) ---------------------------------
    write(site / "redir" / "hop1.302", "/redir/hop2")
    write(site / "redir" / "hop2.302", "/index.html")
    for i in range(1, 7):
        write(site / "redir" / f"deep{i}.302", f"/redir/deep{i + 1}" if i < 6 else "/index.html")

    # --- ground truth ------------------------------------------------------
    write_jsonl(FIX / "truth" / "academic_2017_2019.jsonl", truth_academic)
    truth_stock = []
    for row in rows:
        truth_stock.append(
            {
                "Date": row["Date"],
                "Open": f"{row['Open']:.4f}",
                "High": f"{row['High']:.4f}",
                "Low": f"{row['Low']:.4f}",
                "Close": f"{row['Close']:.4f}",
                "Volume": str(row["Volume"]),
                "adjOpen": f"{row['adjOpen']:.4f}",
                "adjHigh": f"{row['adjHigh']:.4f}",
                "adjLow": f"{row['adjLow']:.4f}",
                "adjClose": f"{row['adjClose']:.4f}",
                "adjVolume": str(row["adjVolume"]),
                "divCash": f"{row['divCash']:.4f}",
            }
        )
    write_jsonl(FIX / "truth" / "stock_xmpl_2020.jsonl", truth_stock)

    # --- cache ids the transcripts reference --------------------------------
    h_pro_2017 = ohc(page_bytes["proceedings/2017.html"])
    h_p01 = ohc(page_bytes["papers/2017/p01.html"])
    h_prog_academic = ohc(ACADEMIC_PROGRAM.encode("utf-8"))
    h_stdout_academic = ohc(b"records=30\n")
    h_api = ohc(api_bytes)
    h_prog_stock = ohc(STOCK_PROGRAM.encode("utf-8"))
    h_stdout_stock = ohc(b"records=10\n")
    h_prog_stubborn = ohc(STUBBORN_PROGRAM.encode("utf-8"))
    h_stdout_stubborn = ohc(b"boom\n")

    # --- academic transcripts -------------------------------------------------
    academic = {
        "plan": [
            """THOUGHT: The instruction asks for the full proceedings across three years.
FINAL:
GOAL: Collect every paper accepted at MiniConf from 2017 to 2019 with complete metadata.
STEPS:
- Review the proceedings listings for 2017, 2018, and 2019.
- Inspect one paper page to identify the metadata fields and link anchors.
- Write a blueprint covering all three years and the nine output fields.
- Implement the collection program, run it, and validate the records.
""",
        ],
        "web": [
            """THOUGHT: Start from the 2017 proceedings listing.
ACTION: fetch_url
ACTION_INPUT: {"url": "{BASE_URL}/proceedings/2017.html"}
""",
            """THOUGHT: Inspect one paper page to confirm the field structure.
ACTION: fetch_url
ACTION_INPUT: {"url": "{BASE_URL}/papers/2017/p01.html"}
""",
            f"""THOUGHT: The listing links per-paper pages; each page exposes labeled metadata.
FINAL:
SOURCE_URL: {{BASE_URL}}/proceedings/2017.html
FINDINGS: Proceedings pages list anchors to /papers/<year>/p<num>.html. Each paper page exposes h1#title, p.authors, div.abstract, li#conference, li#abbr, li#track, plus a#paper-link and a#bibtex-link anchors; a#supp-link is present only when a supplemental exists.
EVIDENCE_CACHE_IDS:
- {h_pro_2017}
- {h_p01}
""",
        ],
        "tool": [
            """THOUGHT: Confirm the other proceedings years exist in the corpus.
ACTION: search
ACTION_INPUT: {"query": "MiniConf 2018 2019 proceedings"}
""",
            """THOUGHT: All three listing pages share the same markup.
FINAL:
TOOL: search
INPUT_SUMMARY: corpus search for the 2018 and 2019 proceedings listings
RESULT: The corpus serves /proceedings/2017.html, /proceedings/2018.html, and /proceedings/2019.html with identical listing markup, each linking ten paper pages.
""",
        ],
        "bp": [
            """THOUGHT: Findings cover the listing layout and per-paper fields; write the blueprint.
FINAL:
TARGETS:
- {BASE_URL}/proceedings/2017.html
- {BASE_URL}/proceedings/2018.html
- {BASE_URL}/proceedings/2019.html
ACCESS_METHOD: crawl
EXTRACTION_RULES:
- Follow each listing anchor matching /papers/<year>/p<num>.html.
- Read TITLE from h1#title, AUTHORS from p.authors, ABSTRACT from div.abstract.
- Read CONFERENCE, ABBR, TRACK from the li elements with those ids.
- Resolve the paper-link and bibtex-link anchors to absolute URLs.
- Use the supp-link anchor when present; otherwise record the literal None.
OUTPUT_SCHEMA:
- TITLE
- AUTHORS
- ABSTRACT
- CONFERENCE
- ABBR
- TRACK
- PAPER_LINK
- BIBTEX_LINK
- SUPP_LINK
PAGINATION: none; each year is a single listing page
VALIDATION_RULES:
- Every record has a non-empty TITLE.
- Exactly 30 records are collected across the three years.
- PAPER_LINK and BIBTEX_LINK are absolute URLs on the target host.
""",
        ],
        "engr": [
            "THOUGHT: Implement the crawler exactly as the blueprint prescribes and cache it.\n"
            "ACTION: cache_store\n"
            "ACTION_INPUT: "
            + json.dumps(
                {
                    "content": ACADEMIC_PROGRAM,
                    "media_type": "text/x-python",
                    "description": "proceedings collector program",
                }
            )
            + "\n",
            f"""THOUGHT: The program is cached; report the entrypoint.
FINAL:
PROGRAM_CACHE_ID: {h_prog_academic}
ENTRYPOINT: python3 program.py {{BASE_URL}} 2017,2018,2019
NOTES: Crawls the three proceedings listings, follows every paper anchor, extracts the nine schema fields, writes dataset.jsonl, and prints the record count.
""",
        ],
        "test": [
            "THOUGHT: Run the cached program against the target host.\n"
            "ACTION: execute_program\n"
            "ACTION_INPUT: "
            + json.dumps(
                {
                    "program_cache_id": h_prog_academic,
                    "entrypoint": "python3 program.py {BASE_URL} 2017,2018,2019",
                }
            )
            + "\n",
            f"""THOUGHT: Exit status 0 and the expected record count were reported.
FINAL:
STATUS: pass
STDOUT_CACHE_ID: {h_stdout_academic}
FAILURES: (none)
""",
        ],
        "val": [
            f"""THOUGHT: Confirm the program output before checking the blueprint rules.
ACTION: cache_get
ACTION_INPUT: {{"cache_id": "{h_stdout_academic}"}}
""",
            """THOUGHT: All three declared rules hold for the collected records.
FINAL:
STATUS: pass
CHECKED_RULES:
- Every record has a non-empty TITLE.
- Exactly 30 records are collected across the three years.
- PAPER_LINK and BIBTEX_LINK are absolute URLs on the target host.
DEFECTS: (none)
""",
        ],
    }
    write_transcripts(FIX / "transcripts" / "academic", academic)

    # --- stock transcripts ---------------------------------------------------
    stock = {
        "plan": [
            """THOUGHT: Daily stock rows for one symbol and year; the corpus serves a JSON endpoint.
FINAL:
GOAL: Collect the daily XMPL stock rows for 2020 with all twelve attributes.
STEPS:
- Fetch the stock endpoint for the requested symbol and year.
- Verify the row fields against the required output schema.
- Blueprint a REST collection program, run it, and validate.
""",
        ],
        "web": [
            """THOUGHT: Fetch the endpoint once to inspect its shape.
ACTION: fetch_url
ACTION_INPUT: {"url": "{BASE_URL}/api/stock/XMPL/2020.json"}
""",
            f"""THOUGHT: The endpoint returns one JSON array with a row per trading day.
FINAL:
SOURCE_URL: {{BASE_URL}}/api/stock/XMPL/2020.json
FINDINGS: The endpoint returns a JSON array of daily rows carrying Date, Open, High, Low, Close, Volume, adjOpen, adjHigh, adjLow, adjClose, adjVolume, and divCash.
EVIDENCE_CACHE_IDS:
- {h_api}
""",
        ],
        "tool": [
            f"""THOUGHT: Confirm the rows convert cleanly to tabular form.
ACTION: convert
ACTION_INPUT: {{"cache_id": "{h_api}", "target": "text/csv"}}
""",
            """THOUGHT: Conversion succeeded, so the rows are rectangular.
FINAL:
TOOL: convert
INPUT_SUMMARY: converted the cached endpoint response to CSV
RESULT: The JSON rows are rectangular with twelve columns and convert cleanly, confirming a consistent schema across all trading days.
""",
        ],
        "bp": [
            """THOUGHT: One endpoint, no pagination; copy rows verbatim.
FINAL:
TARGETS:
- {BASE_URL}/api/stock/XMPL/2020.json
ACCESS_METHOD: rest-api
EXTRACTION_RULES:
- GET the endpoint once and parse the JSON array.
- Copy each row's twelve attributes verbatim into one output record per trading day.
OUTPUT_SCHEMA:
- Date
- Open
- High
- Low
- Close
- Volume
- adjOpen
- adjHigh
- adjLow
- adjClose
- adjVolume
- divCash
PAGINATION: none; the endpoint returns the whole year
VALIDATION_RULES:
- Every record has a Date in YYYY-MM-DD form.
- Exactly 10 records are collected.
""",
        ],
        "engr": [
            "THOUGHT: A small REST client suffices; cache it.\n"
            "ACTION: cache_store\n"
            "ACTION_INPUT: "
            + json.dumps(
                {
                    "content": STOCK_PROGRAM,
                    "media_type": "text/x-python",
                    "description": "stock endpoint collector program",
                }
            )
            + "\n",
            f"""THOUGHT: The program is cached; report the entrypoint.
FINAL:
PROGRAM_CACHE_ID: {h_prog_stock}
ENTRYPOINT: python3 program.py {{BASE_URL}} XMPL 2020
NOTES: Fetches the YEAR endpoint for the symbol, writes one JSON line per trading day to dataset.jsonl, and prints the record count.
""",
        ],
        "test": [
            "THOUGHT: Execute the cached collector.\n"
            "ACTION: execute_program\n"
            "ACTION_INPUT: "
            + json.dumps(
                {
                    "program_cache_id": h_prog_stock,
                    "entrypoint": "python3 program.py {BASE_URL} XMPL 2020",
                }
            )
            + "\n",
            f"""THOUGHT: Exit status 0 with ten records reported.
FINAL:
STATUS: pass
STDOUT_CACHE_ID: {h_stdout_stock}
FAILURES: (none)
""",
        ],
        "val": [
            """THOUGHT: Both declared rules hold.
FINAL:
STATUS: pass
CHECKED_RULES:
- Every record has a Date in YYYY-MM-DD form.
- Exactly 10 records are collected.
DEFECTS: (none)
""",
        ],
    }
    write_transcripts(FIX / "transcripts" / "stock", stock)

    # --- stubborn transcripts: the test agent always fails --------------------
    fail_engr = [
        "THOUGHT: Cache the candidate program.\n"
        "ACTION: cache_store\n"
        "ACTION_INPUT: "
        + json.dumps(
            {
                "content": STUBBORN_PROGRAM,
                "media_type": "text/x-python",
                "description": "candidate program",
            }
        )
        + "\n",
        f"""THOUGHT: Report the cached program.
FINAL:
PROGRAM_CACHE_ID: {h_prog_stubborn}
ENTRYPOINT: python3 program.py
NOTES: Candidate collector; prints a marker and exits.
""",
    ]
    fail_test = [
        "THOUGHT: Execute the candidate.\n"
        "ACTION: execute_program\n"
        "ACTION_INPUT: "
        + json.dumps({"program_cache_id": h_prog_stubborn, "entrypoint": "python3 program.py"})
        + "\n",
        f"""THOUGHT: The program produced no dataset file.
FINAL:
STATUS: fail
STDOUT_CACHE_ID: {h_stdout_stubborn}
FAILURES:
- dataset.jsonl was not produced
""",
    ]
    stubborn = {
        "plan": [
            """THOUGHT: Plan the collection.
FINAL:
GOAL: Collect the requested records.
STEPS:
- Research the source.
- Blueprint, implement, and validate.
""",
        ],
        "web": [
            """THOUGHT: Report the source without fetching.
FINAL:
SOURCE_URL: {BASE_URL}/index.html
FINDINGS: The source lists the records to collect.
EVIDENCE_CACHE_IDS: (none)
""",
        ],
        "bp": [
            """THOUGHT: Write a minimal blueprint.
FINAL:
TARGETS:
- {BASE_URL}/index.html
ACCESS_METHOD: crawl
EXTRACTION_RULES:
- Extract every record from the index.
OUTPUT_SCHEMA:
- TITLE
PAGINATION: none
VALIDATION_RULES:
- dataset.jsonl is produced
""",
        ],
        # Enough repeated copies to keep failing through any retry budget.
        "engr": fail_engr * 4,
        "test": fail_test * 4,
        "val": [],
    }
    write_transcripts(FIX / "transcripts" / "stubborn", stubborn)

    # --- configs ---------------------------------------------------------------
    configs = FIX / "configs"
    configs.mkdir(parents=True, exist_ok=True)
    academic_cfg = {
        "instruction": "Collect all papers accepted in MiniConf from 2017 to 2019.",
        "output_dir": "runs/academic",
        "backend": {"variant": "scripted", "transcript_dir": "../transcripts/academic"},
        "budgets": {"max_rounds": 12, "react_budget": 8, "phase_retries": 2},
        "ablations": {"broadcast": False, "formatter_bypass": False, "cache_bypass": False},
        "fixture_dir": "../site",
        "fixture_autostart": True,
        "allowed_hosts": [],
        "politeness_delay_s": 0.05,
        "research_sequence": ["web", "tool"],
        "sandbox": {"wall_clock_s": 30, "output_bytes": 1000000, "network": True},
    }
    (configs / "academic.json").write_text(
        json.dumps(academic_cfg, indent=2) + "\n", encoding="utf-8"
    )
    stock_cfg = dict(academic_cfg)
    stock_cfg.update(
        {
            "instruction": "Collect daily stock information for XMPL in 2020.",
            "output_dir": "runs/stock",
            "backend": {"variant": "scripted", "transcript_dir": "../transcripts/stock"},
        }
    )
    (configs / "stock.json").write_text(json.dumps(stock_cfg, indent=2) + "\n", encoding="utf-8")
    stubborn_cfg = dict(academic_cfg)
    stubborn_cfg.update(
        {
            "instruction": "Collect the records.",
            "output_dir": "runs/stubborn",
            "backend": {"variant": "scripted", "transcript_dir": "../transcripts/stubborn"},
            "budgets": {"max_rounds": 4, "react_budget": 8, "phase_retries": 2},
            "fixture_autostart": False,
            "fixture_dir": "",
            "fixture_base_url": "http://127.0.0.1:9",
            "research_sequence": ["web"],
        }
    )
    (configs / "stubborn.json").write_text(
        json.dumps(stubborn_cfg, indent=2) + "\n", encoding="utf-8"
    )

    # --- bench suites -------------------------------------------------------------
    suites = FIX / "suites"
    suites.mkdir(parents=True, exist_ok=True)
    suite = {
        "fixture_dir": "../site",
        "fixture_port": 8473,
        "tasks": [
            {
                "id": "academic-t3",
                "template": "T3",
                "bindings": {"Conference": "MiniConf", "Start Year": "2017", "End Year": "2019"},
                "truth": "../truth/academic_2017_2019.jsonl",
                "schema": "academic",
                "config": "../configs/academic.json",
            },
            {
                "id": "stock-t4",
                "template": "T4",
                "bindings": {"Stock": "XMPL", "Year": "2020"},
                "truth": "../truth/stock_xmpl_2020.jsonl",
                "schema": "stock",
                "config": "../configs/stock.json",
            },
        ],
        "ablation_compare": ["broadcast", "cache-bypass"],
    }
    (suites / "fixture_suite.json").write_text(
        json.dumps(suite, indent=2) + "\n", encoding="utf-8"
    )
    academic_only = {
        "fixture_dir": "../site",
        "fixture_port": 8473,
        "tasks": [suite["tasks"][0]],
        "ablation_compare": ["broadcast", "cache-bypass"],
    }
    (suites / "academic_only.json").write_text(
        json.dumps(academic_only, indent=2) + "\n", encoding="utf-8"
    )

    print(f"fixtures written under {FIX}")
    print(f"  academic program  {h_prog_academic}")
    print(f"  stock program     {h_prog_stock}")
    print(f"  stubborn program  {h_prog_stubborn}")


if __name__ == "__main__":
    main()
