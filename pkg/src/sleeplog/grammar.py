"""Parsing and formatting of app-generated sleep-log tweets.

The tracked tweets follow one rigid template with a handful of notation
variants (24-hour vs 12-hour clocks, ':' vs '.' separators, plain vs dotted
meridiems).  parse_tweet recognizes exactly that template; everything else is
rejected with a specific reason so the funnel stays auditable.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from datetime import datetime, time, timedelta, timezone
from enum import Enum
from zoneinfo import ZoneInfo

from .records import RawTweet, RejectReason

PREFIX = "Sleep as Android: "

# Minutes of slack allowed between a stated wake-up time and the tweet's
# local timestamp: the app can post a minute or two before the stated end
# once rounding is involved.
DEFAULT_SLACK_MINUTES = 15


class TimeNotation(Enum):
    H24 = "H24"
    H12_AMPM = "H12_AMPM"
    H12_DOTTED_AMPM = "H12_DOTTED_AMPM"


class Separator(Enum):
    COLON = "COLON"
    DOT = "DOT"


_SEP_CHAR = {Separator.COLON: ":", Separator.DOT: "."}

_MERIDIEM_HOUR_SHIFT = {
    "AM": 0, "am": 0, "a.m.": 0,
    "PM": 12, "pm": 12, "p.m.": 12,
}
_DOTTED_MERIDIEMS = {"a.m.", "p.m."}

_MER = r"(?:AM|PM|am|pm|a\.m\.|p\.m\.)"


def _time_group(prefix: str) -> str:
    return (
        rf"(?P<{prefix}h>[0-9]{{1,2}})(?P<{prefix}sep>[:.])(?P<{prefix}m>[0-9]{{2}})"
        rf"(?: ?(?P<{prefix}mer>{_MER}))?"
    )


# Body grammar, applied after the fixed prefix:
#   junk* "sleeping for" DUR "from" TIME "to" TIME ["with" INT "% deep sleep"] rest*
_STRICT_BODY = re.compile(
    r"(?s)^.*?sleeping for "
    r"(?P<dh>[0-9]{1,2})(?P<dsep>[:.])(?P<dm>[0-9]{2})"
    r" from " + _time_group("s") + r" to " + _time_group("e") +
    r"(?: with (?P<deep>[0-9]{1,3})% deep sleep)?"
    r".*$"
)

# Permissive variant used only for diagnosis once the strict pass fails:
# a meridiem may be any short token (so non-English markers are caught), but
# never one of the structural words.
_LOOSE_MER = r"(?!to\b|with\b|from\b)[^\s]{1,6}"


def _loose_time_group(prefix: str) -> str:
    return (
        rf"(?P<{prefix}h>[0-9]{{1,2}})(?P<{prefix}sep>[:.])(?P<{prefix}m>[0-9]{{2}})"
        rf"(?: ?(?P<{prefix}mer>{_LOOSE_MER}))?"
    )


_LOOSE_BODY = re.compile(
    r"(?s)^.*?sleeping for "
    r"(?P<dh>[0-9]{1,2})(?P<dsep>[:.])(?P<dm>[0-9]{2})"
    r" from " + _loose_time_group("s") + r" to " + _loose_time_group("e") +
    r"(?: with (?P<deep>[0-9]{1,3})% deep sleep)?"
    r".*$"
)

# Fullwidth/alternate punctuation that shows up around non-ASCII digits.
_PUNCT_MAP = {"：": ":", "．": ".", "％": "%", "　": " "}


@dataclass(frozen=True)
class Rejection:
    reason: RejectReason
    span: tuple[int, int] | None = None


@dataclass(frozen=True)
class SleepLog:
    """One parsed sleep record.

    Civil times always exist; local/UTC instants are filled in only when the
    tweet carried enough timezone information to anchor dates.
    """

    tweet_id: str
    user_id: str
    start_civil: time
    end_civil: time
    duration_minutes: int
    deep_sleep_pct: int | None
    notation: TimeNotation
    separator: Separator
    start_local: datetime | None = None
    end_local: datetime | None = None
    start_utc: datetime | None = None
    end_utc: datetime | None = None
    duration_inconsistent: bool = False

    def __post_init__(self) -> None:
        if self.duration_minutes <= 0:
            raise ValueError("duration_minutes must be positive")
        if self.deep_sleep_pct is not None and not 0 <= self.deep_sleep_pct <= 100:
            raise ValueError("deep_sleep_pct must be within [0, 100]")
        if (self.start_utc is None) != (self.end_utc is None):
            raise ValueError("start/end instants must be both present or both absent")
        if self.start_utc is not None and self.end_utc <= self.start_utc:
            raise ValueError("sleep end must be strictly after sleep start")

    @property
    def anchored(self) -> bool:
        return self.start_utc is not None

    def to_record(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "user_id": self.user_id,
            "start_civil": self.start_civil.strftime("%H:%M"),
            "end_civil": self.end_civil.strftime("%H:%M"),
            "duration_minutes": self.duration_minutes,
            "deep_sleep_pct": self.deep_sleep_pct,
            "notation": self.notation.value,
            "separator": self.separator.value,
            "start_local": _iso_or_none(self.start_local),
            "end_local": _iso_or_none(self.end_local),
            "start_utc": _iso_or_none(self.start_utc),
            "end_utc": _iso_or_none(self.end_utc),
            "duration_inconsistent": self.duration_inconsistent,
        }

    @classmethod
    def from_record(cls, doc: dict) -> "SleepLog":
        return cls(
            tweet_id=doc["tweet_id"],
            user_id=doc["user_id"],
            start_civil=_parse_hhmm(doc["start_civil"]),
            end_civil=_parse_hhmm(doc["end_civil"]),
            duration_minutes=doc["duration_minutes"],
            deep_sleep_pct=doc["deep_sleep_pct"],
            notation=TimeNotation(doc["notation"]),
            separator=Separator(doc["separator"]),
            start_local=_dt_or_none(doc["start_local"]),
            end_local=_dt_or_none(doc["end_local"]),
            start_utc=_dt_or_none(doc["start_utc"]),
            end_utc=_dt_or_none(doc["end_utc"]),
            duration_inconsistent=doc["duration_inconsistent"],
        )


ParseOutcome = SleepLog | Rejection


def _iso_or_none(dt: datetime | None) -> str | None:
    return dt.isoformat() if dt is not None else None


def _dt_or_none(raw: str | None) -> datetime | None:
    return datetime.fromisoformat(raw) if raw else None


def _parse_hhmm(raw: str) -> time:
    hh, mm = raw.split(":")
    return time(int(hh), int(mm))


def recomputed_duration(start: time, end: time) -> int:
    """Minutes from start to the next occurrence of end (equal times -> 24h)."""
    start_m = start.hour * 60 + start.minute
    end_m = end.hour * 60 + end.minute
    return (end_m - start_m - 1) % 1440 + 1


def anchor_dates(
    start_civil: time,
    end_civil: time,
    tweet_time_local: datetime,
    slack_minutes: int = DEFAULT_SLACK_MINUTES,
) -> tuple[datetime, datetime]:
    """Resolve civil times to local dates around the tweet's local timestamp.

    The wake-up is the most recent occurrence of end_civil at or before the
    tweet time plus slack; the sleep start is the most recent occurrence of
    start_civil strictly before that, crossing midnight when needed.
    """
    cutoff = tweet_time_local + timedelta(minutes=slack_minutes)
    end_local = datetime.combine(cutoff.date(), end_civil)
    if end_local > cutoff:
        end_local -= timedelta(days=1)
    start_local = datetime.combine(end_local.date(), start_civil)
    if start_local >= end_local:
        start_local -= timedelta(days=1)
    return start_local, end_local


def user_tzinfo(tweet: RawTweet):
    """Timezone for local-time math: explicit offset first, else IANA name."""
    if tweet.utc_offset_seconds is not None:
        return timezone(timedelta(seconds=tweet.utc_offset_seconds))
    if tweet.time_zone:
        try:
            return ZoneInfo(tweet.time_zone)
        except (KeyError, ValueError):
            return None
    return None


@dataclass(frozen=True)
class AnchorPolicy:
    slack_minutes: int = DEFAULT_SLACK_MINUTES


def parse_tweet(tweet: RawTweet, anchor_policy: AnchorPolicy | None = None) -> ParseOutcome:
    """Parse one tweet into a SleepLog, or a Rejection explaining why not.

    Rejection reasons are checked in a fixed precedence: a missing prefix or
    template marker trumps everything (NOT_SLEEP_LOG); non-ASCII digits or
    meridiem tokens inside the time fields come next (NON_ENGLISH_NOTATION);
    then malformed time fields (UNPARSEABLE_TIME); finally an absent
    from/to clause (MISSING_FIELDS).
    """
    policy = anchor_policy or AnchorPolicy()
    text = tweet.text
    if not text.startswith(PREFIX):
        return Rejection(RejectReason.NOT_SLEEP_LOG)
    body = text[len(PREFIX):]
    offset = len(PREFIX)
    if "sleeping for " not in body:
        return Rejection(RejectReason.NOT_SLEEP_LOG)

    match = _STRICT_BODY.match(body)
    if match is not None:
        return _build_log(tweet, match, offset, policy)

    # Strict pass failed.  Normalize non-ASCII digits and retry to decide
    # whether the failure is about notation rather than structure.
    translated = _ascii_fold(body)
    if translated != body:
        alt = _STRICT_BODY.match(translated) or _LOOSE_BODY.match(translated)
        if alt is not None:
            span = _non_ascii_span(body, alt, offset)
            if span is not None:
                return Rejection(RejectReason.NON_ENGLISH_NOTATION, span)

    loose = _LOOSE_BODY.match(body)
    if loose is not None:
        span = _non_ascii_span(body, loose, offset)
        if span is not None:
            return Rejection(RejectReason.NON_ENGLISH_NOTATION, span)
        return Rejection(RejectReason.UNPARSEABLE_TIME, _clause_span(body, offset))

    after = body.split("sleeping for ", 1)[1]
    padded = " " + after
    from_at = padded.find(" from ")
    if from_at != -1 and " to " in padded[from_at + len(" from "):]:
        if padded[1:from_at].strip():
            return Rejection(RejectReason.UNPARSEABLE_TIME, _clause_span(body, offset))
    return Rejection(RejectReason.MISSING_FIELDS)


def _ascii_fold(body: str) -> str:
    out = []
    for ch in body:
        if not ch.isascii() and ch.isdigit():
            out.append(str(unicodedata.digit(ch)))
        else:
            out.append(_PUNCT_MAP.get(ch, ch))
    return "".join(out)


_FIELD_GROUPS = ("dh", "dm", "sh", "sm", "smer", "eh", "em", "emer", "deep")


def _non_ascii_span(original: str, match: re.Match, offset: int) -> tuple[int, int] | None:
    """Span (in full-text coordinates) of the first time field holding non-ASCII."""
    for group in _FIELD_GROUPS:
        lo, hi = match.span(group)
        if lo == -1:
            continue
        segment = original[lo:hi]
        if any(not c.isascii() for c in segment):
            return (offset + lo, offset + hi)
    return None


def _clause_span(body: str, offset: int) -> tuple[int, int]:
    lo = body.find("sleeping for ")
    return (offset + lo, offset + len(body))


def _build_log(
    tweet: RawTweet, match: re.Match, offset: int, policy: AnchorPolicy
) -> ParseOutcome:
    def bad(group: str) -> Rejection:
        lo, hi = match.span(group)
        return Rejection(RejectReason.UNPARSEABLE_TIME, (offset + lo, offset + hi))

    dur_h, dur_m = int(match["dh"]), int(match["dm"])
    if dur_h > 23 or dur_m > 59:
        return bad("dm" if dur_m > 59 else "dh")
    stated = dur_h * 60 + dur_m
    if stated == 0:
        return bad("dh")

    start = _read_time(match, "s")
    if isinstance(start, str):
        return bad(start)
    end = _read_time(match, "e")
    if isinstance(end, str):
        return bad(end)
    start_civil, start_mer, start_sep = start
    end_civil, end_mer, end_sep = end

    # A meridiem on only one endpoint leaves the other ambiguous.
    if (start_mer is None) != (end_mer is None):
        return bad("emer" if end_mer is None else "smer")

    deep_raw = match["deep"]
    deep = None
    if deep_raw is not None:
        deep = int(deep_raw)
        if deep > 100:
            return bad("deep")

    if start_mer is None:
        notation = TimeNotation.H24
    elif start_mer in _DOTTED_MERIDIEMS or end_mer in _DOTTED_MERIDIEMS:
        notation = TimeNotation.H12_DOTTED_AMPM
    else:
        notation = TimeNotation.H12_AMPM
    separator = Separator.COLON if start_sep == ":" else Separator.DOT

    recomputed = recomputed_duration(start_civil, end_civil)
    inconsistent = abs(recomputed - stated) > 1

    start_local = end_local = start_utc = end_utc = None
    tz = user_tzinfo(tweet)
    if tz is not None:
        tweet_local = tweet.created_at.astimezone(tz).replace(tzinfo=None)
        start_local, end_local = anchor_dates(
            start_civil, end_civil, tweet_local, policy.slack_minutes
        )
        start_utc = start_local.replace(tzinfo=tz).astimezone(timezone.utc)
        end_utc = end_local.replace(tzinfo=tz).astimezone(timezone.utc)

    return SleepLog(
        tweet_id=tweet.tweet_id,
        user_id=tweet.user_id,
        start_civil=start_civil,
        end_civil=end_civil,
        duration_minutes=stated,
        deep_sleep_pct=deep,
        notation=notation,
        separator=separator,
        start_local=start_local,
        end_local=end_local,
        start_utc=start_utc,
        end_utc=end_utc,
        duration_inconsistent=inconsistent,
    )


def _read_time(match: re.Match, prefix: str):
    """Return (time, meridiem, separator) or the offending group name."""
    hour = int(match[prefix + "h"])
    minute = int(match[prefix + "m"])
    meridiem = match[prefix + "mer"]
    if minute > 59:
        return prefix + "m"
    if meridiem is not None:
        if hour > 12:
            return prefix + "h"
        shift = _MERIDIEM_HOUR_SHIFT[meridiem]
        hour = hour % 12 + shift
    elif hour > 23:
        return prefix + "h"
    return time(hour, minute), meridiem, match[prefix + "sep"]


def format_sleeplog(
    log: SleepLog,
    notation: TimeNotation | None = None,
    separator: Separator | None = None,
) -> str:
    """Render the canonical tweet text for a log (inverse of parse_tweet).

    The deep-sleep clause is elided when the log has no deep-sleep value.
    """
    notation = notation if notation is not None else log.notation
    separator = separator if separator is not None else log.separator
    sep = _SEP_CHAR[separator]
    dur = f"{log.duration_minutes // 60}{sep}{log.duration_minutes % 60:02d}"
    start = _format_time(log.start_civil, notation, sep)
    end = _format_time(log.end_civil, notation, sep)
    deep = ""
    if log.deep_sleep_pct is not None:
        deep = f" with {log.deep_sleep_pct}% deep sleep"
    return (
        f"{PREFIX}I was sleeping for {dur} from {start} to {end}{deep}"
        " #sleep_as_android"
    )


def _format_time(value: time, notation: TimeNotation, sep: str) -> str:
    if notation is TimeNotation.H24:
        return f"{value.hour}{sep}{value.minute:02d}"
    hour12 = value.hour % 12 or 12
    if notation is TimeNotation.H12_AMPM:
        meridiem = "AM" if value.hour < 12 else "PM"
    else:
        meridiem = "a.m." if value.hour < 12 else "p.m."
    return f"{hour12}{sep}{value.minute:02d} {meridiem}"


def read_logs_jsonl(lines) -> list[SleepLog]:
    import json as _json

    return [SleepLog.from_record(_json.loads(line)) for line in lines if line.strip()]
