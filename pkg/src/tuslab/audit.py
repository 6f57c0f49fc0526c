"""Ground-truth auditing: disagreement extraction and LLM adjudication.

Adjudication protocol: each disputed pair is judged over several independent
low-temperature runs. A run's verdict is read from the first non-empty line,
``UNIONABLE: Yes|No`` (case-insensitive, tolerant of leading numbering). An
unparseable run is retried once, then recorded as unparseable. The pair label
is the majority over parseable runs; ties resolve to non-unionable and are
flagged for manual review. Per-run results go to an append-only NDJSON
journal so interrupted audits resume without repeating provider calls.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .corpus import Table
from .errors import (
    AdjudicationFailedError,
    DegenerateInputError,
    FormatError,
    MissingGroundTruthError,
    TemplateError,
)
from .metrics import GroundTruth
from .providers import ChatProvider
from .search import Ranking

logger = logging.getLogger(__name__)

QUERY_PLACEHOLDER = "<Query Table Data>"
CANDIDATE_PLACEHOLDER = "<Candidate Table Data>"
FEW_SHOT_PLACEHOLDER = "<Few-Shot Examples>"

DEFAULT_PROMPT_TEMPLATE = """You are an experienced data curator evaluating if two database tables can be meaningfully combined vertically (unioned). The goal of unioning is to create a single, larger dataset containing the same kind of information or describing the same type of entity/event.

Your task is to determine if TABLE 1 and TABLE 2 are conceptually compatible enough for a union operation.

CORE PRINCIPLES FOR UNIONABILITY:

1.  Conceptual Coherence: Do both tables fundamentally describe the same type of entity (e.g., customers, products, logs) or record the same type of event (e.g., sales, website visits)? Appending rows from one table to the other should result in a dataset that makes logical sense.

2.  Meaningful Column Alignment: There must be a reasonable set of columns across the two tables that represent the same underlying attributes or concepts.
    * These columns can have DIFFERENT NAMES (e.g., "Cust_ID" vs. "ClientIdentifier").
    * They can have DIFFERENT FORMATS (e.g., "2023-01-15" vs. "1/15/2023").
    * They may have LITTLE TO NO OVERLAP in actual data values.
    * Focus on the semantic meaning of the columns in the context of their respective tables.

3. Sufficient Column Matching: The alignment shouldn't rely on just one incidental or minor column. There should be enough matching among key columns to confidently conclude that the tables represent the same underlying information. More aligned columns representing core attributes increase confidence.

4.  Distinction from Joins: We are NOT looking for keys to join tables horizontally. We are assessing if they can be stacked vertically.

[EXAMPLES OF UNIONABILITY/NON-UNIONABILTY:]
<Few-Shot Examples>

YOUR TASK:

Examine the following two tables based on the principles and examples above:

TABLE 1:
<Query Table Data>

TABLE 2:
<Candidate Table Data>

PROVIDE YOUR ANSWER IN THE FOLLOWING FORMAT:

1.  First line: `UNIONABLE: Yes` or `UNIONABLE: No`
2.  Second line: `EXPLANATION:` followed by a brief justification focusing on the conceptual coherence and the sufficiency of semantic column alignment. Explain why they are or are not the same kind of data.
"""

DISAGREEMENTS_CSV_HEADER = ["query", "candidate", "kind", "rank", "score"]

_warned_keys: set[str] = set()


def _warn_once(key: str, message: str) -> None:
    if key not in _warned_keys:
        _warned_keys.add(key)
        logger.warning(message)


class DisagreementKind(enum.Enum):
    GTFP = "gtfp"  # retrieved within top-k', not labeled unionable
    GTFN = "gtfn"  # labeled unionable, not retrieved within top-k'


class Label(enum.Enum):
    UNIONABLE = "unionable"
    NON_UNIONABLE = "non_unionable"
    UNPARSEABLE = "unparseable"


@dataclass(frozen=True)
class DisagreementPair:
    query: str
    candidate: str
    kind: DisagreementKind
    rank: int | None  # 1-based; None when not retrieved at all
    score: float | None


@dataclass
class AuditVerdict:
    pair: DisagreementPair
    run_labels: list[Label]
    majority: Label
    runs: int
    explanations: list[str]
    tie: bool = False


@dataclass(frozen=True)
class AgreementBreakdown:
    counts: dict[tuple[str, str], int]  # (gt label, judge label) -> count
    total: int

    def to_dict(self) -> dict:
        cells = {}
        for gt_label in ("unionable", "non_unionable"):
            for judge in ("unionable", "non_unionable"):
                c = self.counts.get((gt_label, judge), 0)
                cells[f"gt_{gt_label}/judge_{judge}"] = {
                    "count": c,
                    "pct": round(100.0 * c / self.total, 1) if self.total else 0.0,
                }
        return {"total_pairs": self.total, "cells": cells}


def extract_disagreements(
    rankings: list[Ranking], gt: GroundTruth, k_prime: int
) -> list[DisagreementPair]:
    """Pairs where the retriever and the labels disagree at the top ranks."""
    if k_prime < 1:
        raise DegenerateInputError("k_prime must be >= 1")
    pairs: list[DisagreementPair] = []
    for r in rankings:
        if r.query_id not in gt:
            raise MissingGroundTruthError(f"query {r.query_id!r} has no ground-truth entry")
        g = gt[r.query_id]
        if not g:
            continue  # consistent with metrics: empty-G queries are not evaluated
        top = r.entries[:k_prime]
        top_ids = {c for c, _ in top}
        for rank, (cand, score) in enumerate(top, start=1):
            if cand not in g:
                pairs.append(
                    DisagreementPair(r.query_id, cand, DisagreementKind.GTFP, rank, score)
                )
        position = {c: (i + 1, s) for i, (c, s) in enumerate(r.entries)}
        for cand in sorted(g):
            if cand in top_ids:
                continue
            rank, score = position.get(cand, (None, None))
            pairs.append(
                DisagreementPair(r.query_id, cand, DisagreementKind.GTFN, rank, score)
            )
    pairs.sort(key=lambda p: (p.query, p.rank if p.rank is not None else 1 << 30, p.candidate))
    return pairs


def _markdown_cell(value: str | None) -> str:
    if value is None:
        return ""
    return value.replace("|", "\\|").replace("\n", " ")


def _table_markdown(table: Table, max_rows: int) -> str:
    header = "| " + " | ".join(_markdown_cell(c.name) for c in table.columns) + " |"
    sep = "| " + " | ".join("---" for _ in table.columns) + " |"
    lines = [header, sep]
    for i in range(min(table.row_count, max_rows)):
        cells = (_markdown_cell(c.values[i]) for c in table.columns)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)


def serialize_pair_markdown(q: Table, c: Table, max_rows: int = 50) -> tuple[str, str]:
    """Pipe-delimited Markdown for both tables; names stay out of the text."""
    if max_rows < 1:
        raise DegenerateInputError("max_rows must be >= 1")
    return _table_markdown(q, max_rows), _table_markdown(c, max_rows)


def build_prompt(
    query_md: str,
    candidate_md: str,
    few_shot_path: str | Path | None = None,
    template_path: str | Path | None = None,
) -> str:
    """Fill the adjudication template; overrides must keep both table slots."""
    if template_path is not None:
        template = Path(template_path).read_text(encoding="utf-8")
        for placeholder in (QUERY_PLACEHOLDER, CANDIDATE_PLACEHOLDER):
            if placeholder not in template:
                raise TemplateError(f"template override is missing {placeholder!r}")
    else:
        template = DEFAULT_PROMPT_TEMPLATE

    few_shot = ""
    if few_shot_path is not None:
        few_shot = Path(few_shot_path).read_text(encoding="utf-8").strip()
    if not few_shot:
        _warn_once("empty-few-shot", "no few-shot examples supplied; the examples block will be empty")
    if FEW_SHOT_PLACEHOLDER in template:
        template = template.replace(FEW_SHOT_PLACEHOLDER, few_shot)
    elif few_shot:
        _warn_once("no-few-shot-slot", "template has no few-shot slot; supplied examples were dropped")
    return template.replace(QUERY_PLACEHOLDER, query_md).replace(
        CANDIDATE_PLACEHOLDER, candidate_md
    )


_VERDICT_RE = re.compile(
    r"^\s*(?:\d+[.)]\s*|[-*]\s*)?`?\s*UNIONABLE\s*:\s*(Yes|No)\b", re.IGNORECASE
)


def parse_verdict(text: str) -> Label | None:
    """First-line rule: the first non-empty line must carry the verdict."""
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _VERDICT_RE.match(line)
        if m is None:
            return None
        return Label.UNIONABLE if m.group(1).lower() == "yes" else Label.NON_UNIONABLE
    return None


class VerdictJournal:
    """Append-only NDJSON of per-run results keyed by (query, candidate, run)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str, int], dict] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    e = json.loads(line)
                    self._entries[(e["query"], e["candidate"], e["run"])] = e

    def get(self, query: str, candidate: str, run: int) -> dict | None:
        return self._entries.get((query, candidate, run))

    def record(self, query: str, candidate: str, run: int, label: Label, text: str) -> None:
        entry = {
            "query": query,
            "candidate": candidate,
            "run": run,
            "label": label.value,
            "text": text,
        }
        with self._lock:
            self._entries[(query, candidate, run)] = entry
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")


def adjudicate_pair(
    pair: DisagreementPair,
    prompt: str,
    provider: ChatProvider,
    runs: int = 5,
    temperature: float = 0.1,
    journal: VerdictJournal | None = None,
) -> AuditVerdict:
    """Run the multi-vote protocol for one pair; journaled runs are not re-asked."""
    labels: list[Label] = []
    texts: list[str] = []
    for run in range(runs):
        recorded = journal.get(pair.query, pair.candidate, run) if journal else None
        if recorded is not None:
            labels.append(Label(recorded["label"]))
            texts.append(recorded["text"])
            continue
        text = provider.chat(prompt, temperature)
        label = parse_verdict(text)
        if label is None:  # one retry for an unparseable response
            text = provider.chat(prompt, temperature)
            label = parse_verdict(text) or Label.UNPARSEABLE
        if journal:
            journal.record(pair.query, pair.candidate, run, label, text)
        labels.append(label)
        texts.append(text)

    parseable = [l for l in labels if l is not Label.UNPARSEABLE]
    if not parseable:
        raise AdjudicationFailedError(
            f"all {runs} runs unparseable for pair ({pair.query}, {pair.candidate})"
        )
    yes = sum(1 for l in parseable if l is Label.UNIONABLE)
    no = len(parseable) - yes
    tie = yes == no
    majority = Label.UNIONABLE if yes > no else Label.NON_UNIONABLE
    if tie:
        logger.warning(
            "tie verdict for (%s, %s); recording non-unionable, flagged for review",
            pair.query,
            pair.candidate,
        )
    return AuditVerdict(
        pair=pair, run_labels=labels, majority=majority, runs=runs,
        explanations=texts, tie=tie,
    )


def adjudicate_pairs(
    pairs: list[DisagreementPair],
    query_tables: dict[str, Table],
    lake_tables: dict[str, Table],
    provider: ChatProvider,
    runs: int = 5,
    temperature: float = 0.1,
    max_rows: int = 50,
    few_shot_path: str | Path | None = None,
    template_path: str | Path | None = None,
    journal: VerdictJournal | None = None,
    in_flight: int = 1,
) -> tuple[list[AuditVerdict], list[tuple[DisagreementPair, str]]]:
    """Adjudicate many pairs, optionally concurrently; verdicts sorted by pair.

    The query side resolves against the query tables first, the candidate
    against the lake first (an id may exist in both roles).
    """

    def one(pair: DisagreementPair):
        q = query_tables.get(pair.query) or lake_tables.get(pair.query)
        c = lake_tables.get(pair.candidate) or query_tables.get(pair.candidate)
        if q is None or c is None:
            return pair, None, f"missing table for pair ({pair.query}, {pair.candidate})"
        q_md, c_md = serialize_pair_markdown(q, c, max_rows)
        prompt = build_prompt(q_md, c_md, few_shot_path, template_path)
        try:
            verdict = adjudicate_pair(pair, prompt, provider, runs, temperature, journal)
            return pair, verdict, None
        except AdjudicationFailedError as exc:
            return pair, None, str(exc)

    if in_flight > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=in_flight) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(p) for p in pairs]

    verdicts = [v for _, v, _ in results if v is not None]
    failures = [(p, err) for p, _, err in results if err is not None]
    verdicts.sort(key=lambda v: (v.pair.query, v.pair.candidate))
    return verdicts, failures


def agreement_breakdown(verdicts: list[AuditVerdict], gt: GroundTruth) -> AgreementBreakdown:
    """2x2 (gt label x judge label) percentages over adjudicated pairs."""
    counts: dict[tuple[str, str], int] = {}
    for v in verdicts:
        in_gt = v.pair.candidate in gt.get(v.pair.query, set())
        gt_label = "unionable" if in_gt else "non_unionable"
        counts[(gt_label, v.majority.value)] = counts.get((gt_label, v.majority.value), 0) + 1
    return AgreementBreakdown(counts=counts, total=len(verdicts))


def write_disagreements_csv(pairs: list[DisagreementPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DISAGREEMENTS_CSV_HEADER)
        for p in pairs:
            w.writerow(
                [
                    p.query,
                    p.candidate,
                    p.kind.value,
                    "" if p.rank is None else p.rank,
                    "" if p.score is None else f"{p.score:.6f}",
                ]
            )


def read_disagreements_csv(path: str | Path) -> list[DisagreementPair]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != DISAGREEMENTS_CSV_HEADER:
        raise FormatError(f"{path}: expected header {','.join(DISAGREEMENTS_CSV_HEADER)}")
    pairs = []
    for q, c, kind, rank, score in rows[1:]:
        pairs.append(
            DisagreementPair(
                query=q,
                candidate=c,
                kind=DisagreementKind(kind),
                rank=int(rank) if rank else None,
                score=float(score) if score else None,
            )
        )
    return pairs
