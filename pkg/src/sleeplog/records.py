"""Core record types, JSONL ingestion, and duplicate removal.

Everything downstream (parsing, filtering, analytics) consumes the types
defined here.  Counts for every stage are tracked in a PipelineLedger so
that no record is ever silently dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, TextIO


class RejectReason(Enum):
    MALFORMED_JSON = "MALFORMED_JSON"
    DUPLICATE_ID = "DUPLICATE_ID"
    DUPLICATE_CONTENT = "DUPLICATE_CONTENT"
    NOT_SLEEP_LOG = "NOT_SLEEP_LOG"
    NON_ENGLISH_NOTATION = "NON_ENGLISH_NOTATION"
    UNPARSEABLE_TIME = "UNPARSEABLE_TIME"
    MISSING_FIELDS = "MISSING_FIELDS"
    TOO_SHORT = "TOO_SHORT"
    TOO_LONG = "TOO_LONG"
    MISSING_DEEP_SLEEP = "MISSING_DEEP_SLEEP"
    ANCHOR_UNRESOLVED = "ANCHOR_UNRESOLVED"


class IngestError(Exception):
    """Fatal ingestion problem (unreadable file, not a bad line)."""


# Timestamps arrive either as ISO 8601 or in the classic tweet form
# "Sat Oct 24 05:31:08 +0000 2015".
_CLASSIC_FORMAT = "%a %b %d %H:%M:%S %z %Y"


def parse_timestamp(raw: str) -> datetime:
    """Parse a timestamp string to an aware UTC datetime."""
    if not isinstance(raw, str) or not raw.strip():
        raise ValueError(f"empty timestamp: {raw!r}")
    text = raw.strip()
    dt = None
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        try:
            dt = datetime.strptime(text, _CLASSIC_FORMAT)
        except ValueError:
            raise ValueError(f"unparseable timestamp: {raw!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass(frozen=True)
class RawTweet:
    """One tweet as ingested, with the profile fields we rely on later."""

    tweet_id: str
    text: str
    created_at: datetime  # aware, UTC
    user_id: str
    screen_name: str
    location_text: str | None = None
    time_zone: str | None = None
    utc_offset_seconds: int | None = None
    interface_lang: str | None = None
    bio: str | None = None
    friends_count: int | None = None
    followers_count: int | None = None
    statuses_count: int | None = None
    account_created_at: datetime | None = None

    def __post_init__(self) -> None:
        if not self.tweet_id:
            raise ValueError("tweet_id must be non-empty")
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        for name in ("friends_count", "followers_count", "statuses_count"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    def to_json(self) -> str:
        doc: dict = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, datetime):
                value = value.isoformat()
            doc[f.name] = value
        return json.dumps(doc, ensure_ascii=True)

    @classmethod
    def from_record(cls, doc: dict) -> "RawTweet":
        """Build from a decoded JSON object; raises ValueError when invalid."""
        if not isinstance(doc, dict):
            raise ValueError("tweet record must be a JSON object")

        def req_str(key: str) -> str:
            value = doc.get(key)
            if not isinstance(value, str) or not value:
                raise ValueError(f"missing or empty field: {key}")
            return value

        def opt_str(key: str) -> str | None:
            value = doc.get(key)
            if value is None:
                return None
            if not isinstance(value, str):
                raise ValueError(f"field {key} must be a string")
            return value

        def opt_int(key: str) -> int | None:
            value = doc.get(key)
            if value is None:
                return None
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"field {key} must be an integer")
            return value

        account_raw = doc.get("account_created_at")
        account_created = parse_timestamp(account_raw) if account_raw else None
        return cls(
            tweet_id=req_str("tweet_id"),
            text=req_str("text"),
            created_at=parse_timestamp(req_str("created_at")),
            user_id=req_str("user_id"),
            screen_name=req_str("screen_name"),
            location_text=opt_str("location_text"),
            time_zone=opt_str("time_zone"),
            utc_offset_seconds=opt_int("utc_offset_seconds"),
            interface_lang=opt_str("interface_lang"),
            bio=opt_str("bio"),
            friends_count=opt_int("friends_count"),
            followers_count=opt_int("followers_count"),
            statuses_count=opt_int("statuses_count"),
            account_created_at=account_created,
        )


@dataclass
class StageEntry:
    """Exact accounting for one pipeline stage."""

    name: str
    input: int
    kept: int
    rejected_by_reason: dict[str, int]
    distinct_users_kept: int

    def rejected_total(self) -> int:
        return sum(self.rejected_by_reason.values())

    def validate(self) -> None:
        if self.input != self.kept + self.rejected_total():
            raise AssertionError(
                f"ledger stage {self.name!r}: input {self.input} != kept "
                f"{self.kept} + rejected {self.rejected_total()}"
            )


class PipelineLedger:
    """Ordered per-stage counts; every input is kept or rejected, never lost."""

    def __init__(self) -> None:
        self.stages: list[StageEntry] = []

    def record(
        self,
        name: str,
        input_count: int,
        kept: int,
        rejected_by_reason: dict[str, int],
        distinct_users_kept: int,
    ) -> StageEntry:
        entry = StageEntry(
            name=name,
            input=input_count,
            kept=kept,
            rejected_by_reason=dict(rejected_by_reason),
            distinct_users_kept=distinct_users_kept,
        )
        entry.validate()
        self.stages.append(entry)
        return entry

    @property
    def counts(self) -> dict[str, dict]:
        return {
            s.name: {
                "input": s.input,
                "kept": s.kept,
                "rejected_by_reason": dict(s.rejected_by_reason),
            }
            for s in self.stages
        }

    @property
    def distinct_users_per_stage(self) -> dict[str, int]:
        return {s.name: s.distinct_users_kept for s in self.stages}

    def validate_chain(self) -> None:
        """Per-stage conservation plus kept[k] == input[k+1] between stages."""
        for entry in self.stages:
            entry.validate()
        for prev, nxt in zip(self.stages, self.stages[1:]):
            if prev.kept != nxt.input:
                raise AssertionError(
                    f"ledger chain broken: {prev.name!r} kept {prev.kept} but "
                    f"{nxt.name!r} saw input {nxt.input}"
                )

    def to_json(self) -> str:
        doc = {
            "stages": [
                {
                    "name": s.name,
                    "input": s.input,
                    "kept": s.kept,
                    "rejected_by_reason": dict(sorted(s.rejected_by_reason.items())),
                    "distinct_users_kept": s.distinct_users_kept,
                }
                for s in self.stages
            ]
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineLedger":
        doc = json.loads(text)
        ledger = cls()
        for s in doc["stages"]:
            ledger.record(
                s["name"],
                s["input"],
                s["kept"],
                s["rejected_by_reason"],
                s["distinct_users_kept"],
            )
        return ledger


@dataclass(frozen=True)
class RejectedLine:
    """A rejected input, with enough context to audit the decision."""

    line_number: int
    reason: RejectReason
    tweet_id: str | None = None
    detail: str | None = None


def _distinct_users(tweets: Iterable[RawTweet]) -> int:
    return len({t.user_id for t in tweets})


def ingest(
    lines: Iterable[str],
    ledger: PipelineLedger | None = None,
) -> tuple[list[RawTweet], list[RejectedLine]]:
    """Parse JSON Lines into RawTweets, preserving input order.

    A malformed line (bad JSON, missing required field, bad timestamp) is
    counted under MALFORMED_JSON and skipped; it never aborts the run.
    """
    kept: list[RawTweet] = []
    rejected: list[RejectedLine] = []
    total = 0
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        total += 1
        try:
            doc = json.loads(line)
            tweet = RawTweet.from_record(doc)
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            tweet_id = None
            if isinstance(doc_maybe := _safe_loads(line), dict):
                raw_id = doc_maybe.get("tweet_id")
                tweet_id = raw_id if isinstance(raw_id, str) else None
            rejected.append(
                RejectedLine(line_number, RejectReason.MALFORMED_JSON, tweet_id, str(exc))
            )
            continue
        kept.append(tweet)
    if ledger is not None:
        ledger.record(
            "ingest",
            total,
            len(kept),
            _reason_counts(r.reason for r in rejected),
            _distinct_users(kept),
        )
    return kept, rejected


def _safe_loads(line: str):
    try:
        return json.loads(line)
    except (json.JSONDecodeError, ValueError):
        return None


def _reason_counts(reasons: Iterable[RejectReason]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for reason in reasons:
        counts[reason.value] = counts.get(reason.value, 0) + 1
    return counts


def ingest_file(path: str, ledger: PipelineLedger | None = None):
    """Ingest from a file path; an unreadable file is fatal (IngestError)."""
    try:
        handle: TextIO = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with handle:
        return ingest(handle, ledger)


def dedupe(
    tweets: Iterable[RawTweet],
    ledger: PipelineLedger | None = None,
    by_id: bool = True,
    by_content: bool = True,
) -> tuple[list[RawTweet], list[RejectedLine]]:
    """Drop repeated tweets, keeping the first occurrence.

    Two independent rules, each optional: a repeated tweet_id is rejected as
    DUPLICATE_ID; a repeat of (user_id, byte-identical text) under a fresh id
    is rejected as DUPLICATE_CONTENT.  The id rule is checked first.
    """
    seen_ids: set[str] = set()
    seen_content: set[tuple[str, str]] = set()
    kept: list[RawTweet] = []
    rejected: list[RejectedLine] = []
    total = 0
    for position, tweet in enumerate(tweets, start=1):
        total += 1
        if by_id and tweet.tweet_id in seen_ids:
            rejected.append(
                RejectedLine(position, RejectReason.DUPLICATE_ID, tweet.tweet_id)
            )
            continue
        content_key = (tweet.user_id, tweet.text)
        if by_content and content_key in seen_content:
            rejected.append(
                RejectedLine(position, RejectReason.DUPLICATE_CONTENT, tweet.tweet_id)
            )
            continue
        seen_ids.add(tweet.tweet_id)
        seen_content.add(content_key)
        kept.append(tweet)
    if ledger is not None:
        ledger.record(
            "dedupe",
            total,
            len(kept),
            _reason_counts(r.reason for r in rejected),
            _distinct_users(kept),
        )
    return kept, rejected


def read_tweets_jsonl(lines: Iterable[str]) -> Iterator[RawTweet]:
    """Read already-normalized tweet JSONL (strict: malformed lines raise)."""
    for line in lines:
        if line.strip():
            yield RawTweet.from_record(json.loads(line))
