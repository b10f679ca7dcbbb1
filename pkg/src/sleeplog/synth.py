"""Synthetic tweet corpora with planted ground truth.

Every tweet the generator emits is labeled: either a valid sleep log with
its true fields, or an injected invalid (spam, non-English digits, an
implausible duration, a duplicate) with the rejection reason the pipeline
is expected to produce.  Known effects are planted behind the text so the
full pipeline can be scored end to end.

Randomness: MT19937 (random.Random).  Every user gets independent
substreams derived as sha256(seed/label/index), so corpora are reproducible
across platforms and insensitive to generation order.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, asdict
from datetime import date, datetime, time, timedelta, timezone

from .grammar import SleepLog, Separator, TimeNotation, format_sleeplog
from .records import RejectReason

# Countries with their timezone pool (name, fixed UTC offset seconds) and
# the interface language the profile claims.
ZONES_BY_COUNTRY: dict[str, list[tuple[str, int]]] = {
    "JP": [("Asia/Tokyo", 32400)],
    "US": [
        ("America/New_York", -18000),
        ("America/Chicago", -21600),
        ("America/Denver", -25200),
        ("America/Los_Angeles", -28800),
    ],
    "RU": [("Europe/Moscow", 10800)],
    "GB": [("Europe/London", 0)],
    "DE": [("Europe/Berlin", 3600)],
    "FR": [("Europe/Paris", 3600)],
    "BR": [("America/Sao_Paulo", -10800)],
    "AU": [("Australia/Sydney", 36000)],
    "KR": [("Asia/Seoul", 32400)],
    "NL": [("Europe/Amsterdam", 3600)],
    "IN": [("Asia/Kolkata", 19800)],
}

LANG_BY_COUNTRY = {
    "JP": "ja", "US": "en", "RU": "ru", "GB": "en", "DE": "de", "FR": "fr",
    "BR": "pt", "AU": "en", "KR": "ko", "NL": "nl", "IN": "en",
}

OTHER_POOL = ("DE", "FR", "BR", "AU", "KR", "NL", "IN")

_SPAM_TEMPLATES = (
    "Best sleep tracker I have tried, get it now #sleep_as_android ({k})",
    "My review of every sleep app this year #sleep_as_android post {k}",
    "This alarm keeps surprising me #sleep_as_android take {k}",
    "Deals deals deals on phone gadgets {k} #sleep_as_android",
)

_TIMELINE_TEMPLATES = (
    "late night thoughts, take {k}",
    "can't put this book down ({k})",
    "one more episode... ({k})",
    "long day, finally home ({k})",
)

# Start-of-sleep window used for the planted clock share: [22:00, 03:00),
# expressed in minutes where values past 1440 wrap into the next day.
WINDOW_LO = 22 * 60
WINDOW_HI = 27 * 60
DAY_MINUTES = 1440


@dataclass
class SynthConfig:
    seed: int = 20151024
    n_users: int = 100
    logs_per_user_range: tuple[int, int] = (1, 633)
    days: int = 60
    corpus_start: str = "2015-10-01"

    country_mix: dict[str, float] = field(
        default_factory=lambda: {"JP": 0.44, "US": 0.14, "RU": 0.07, "GB": 0.04, "other": 0.31}
    )
    # Within-window start sub-range per country (minutes; wraps past 1440).
    start_profile: dict[str, tuple[int, int]] = field(
        default_factory=lambda: {"JP": (1410, WINDOW_HI), "US": (WINDOW_LO, 1530)}
    )
    start_window_share: float = 0.77

    duration_mean_by_country: dict[str, float] = field(
        default_factory=lambda: {"JP": 337.0, "US": 388.0, "*": 370.0}
    )
    duration_user_sd: float = 25.0
    duration_log_sd: float = 35.0

    deep_mean_by_country: dict[str, float] = field(
        default_factory=lambda: {"JP": 52.0, "US": 44.0, "*": 46.0}
    )
    deep_user_sd: float = 6.0
    deep_log_sd: float = 10.0
    deep_absent_rate: float = 0.05

    notation_mix: dict[str, float] = field(
        default_factory=lambda: {
            "H24:COLON": 0.40,
            "H24:DOT": 0.12,
            "H12_AMPM:COLON": 0.15,
            "H12_AMPM:DOT": 0.08,
            "H12_DOTTED_AMPM:COLON": 0.15,
            "H12_DOTTED_AMPM:DOT": 0.10,
        }
    )

    injection_rates: dict[str, float] = field(
        default_factory=lambda: {
            "spam": 0.02,
            "non_english": 0.02,
            "too_short": 0.01,
            "too_long": 0.01,
            "duplicate": 0.01,
        }
    )

    # Planted effects.
    presleep_quality_delta: float = -5.0   # deep-sleep pp at prob=1 vs prob=0
    activity_start_shift_minutes: float = 0.0
    friends_duration_delta_minutes: float = 0.0
    evening_duration_mean: float | None = None  # duration mean for [18,21) starts
    weekend_end_shift_minutes: float = 0.0

    presleep_prob_range: tuple[float, float] = (0.05, 0.95)
    timeline_background_mean: float = 2.0

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["logs_per_user_range"] = list(self.logs_per_user_range)
        doc["presleep_prob_range"] = list(self.presleep_prob_range)
        doc["start_profile"] = {k: list(v) for k, v in self.start_profile.items()}
        return doc

    def run_id(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _substream(seed: int, label: str, index: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}/{label}/{index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _gauss(rng: random.Random) -> float:
    # Box-Muller on top of .random() keeps the stream portable.
    u1 = 1.0 - rng.random()
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _log_uniform_int(rng: random.Random, lo: int, hi: int) -> int:
    value = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return min(hi, max(lo, round(value)))


def _poisson(rng: random.Random, lam: float) -> int:
    threshold = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


def _weighted(rng: random.Random, weights: dict[str, float]) -> str:
    total = sum(weights.values())
    x = rng.random() * total
    acc = 0.0
    for key, w in weights.items():
        acc += w
        if x < acc:
            return key
    return key  # float fringe


@dataclass
class _User:
    index: int
    user_id: str
    country: str
    zone: str
    offset_seconds: int
    n_logs: int
    statuses_count: int
    age_days: int
    friends_count: int
    presleep_pi: float
    duration_mean: float
    deep_mean: float
    start_shift: float = 0.0

    @property
    def tweets_per_day_planted(self) -> float:
        return self.statuses_count / self.age_days


@dataclass
class SynthResult:
    tweets: list[dict]
    timelines: list[dict]
    truth: list[dict]
    manifest: dict


def _pick_mean(table: dict[str, float], country: str) -> float:
    return table.get(country, table["*"])


def generate(config: SynthConfig) -> SynthResult:
    """Build a corpus, its user timelines, and per-tweet ground truth."""
    start_date = date.fromisoformat(config.corpus_start)
    users = _build_users(config)

    tweets: list[tuple[datetime, str, dict]] = []
    timelines: list[tuple[datetime, str, dict]] = []
    truth: list[dict] = []
    counts = {"valid": 0}
    spam_counter = 0

    for user in users:
        rng = _substream(config.seed, "logs", user.index)
        emitted_texts: set[str] = set()
        serial = 0

        def next_id() -> str:
            nonlocal serial
            serial += 1
            return f"t{user.index:05d}x{serial:04d}"

        profile = _profile_fields(user, start_date)

        for _ in range(user.n_logs):
            log, start_local, end_local = _draw_log(config, user, rng, emitted_texts)
            created_local = end_local + timedelta(minutes=rng.randint(0, 10))
            created_utc = _to_utc(created_local, user.offset_seconds)
            tweet_id = next_id()
            text = format_sleeplog(log)
            emitted_texts.add(text)
            tweets.append(
                (created_utc, tweet_id, _tweet_record(tweet_id, text, created_utc, profile))
            )
            truth.append(
                {
                    "tweet_id": tweet_id,
                    "label": "valid",
                    "reason": None,
                    "true_fields": {
                        "user_id": user.user_id,
                        "country": user.country,
                        "start_local": start_local.isoformat(),
                        "end_local": end_local.isoformat(),
                        "duration_minutes": log.duration_minutes,
                        "deep_sleep_pct": log.deep_sleep_pct,
                        "notation": log.notation.value,
                        "separator": log.separator.value,
                    },
                }
            )
            counts["valid"] += 1

            # Pre-sleep timeline tweet for this night.
            if rng.random() < user.presleep_pi:
                before = rng.randint(10, 110)
                t_local = start_local - timedelta(minutes=before)
                t_utc = _to_utc(t_local, user.offset_seconds)
                m_id = f"m{user.index:05d}x{serial:04d}"
                timelines.append(
                    (
                        t_utc,
                        m_id,
                        _tweet_record(
                            m_id,
                            _TIMELINE_TEMPLATES[serial % len(_TIMELINE_TEMPLATES)].format(k=serial),
                            t_utc,
                            profile,
                        ),
                    )
                )

            # Injections ride along with the valid stream at fixed rates.
            rates = config.injection_rates
            if rng.random() < rates.get("duplicate", 0.0):
                dup_id = next_id()
                dup_at = created_utc + timedelta(minutes=rng.randint(1, 2880))
                tweets.append((dup_at, dup_id, _tweet_record(dup_id, text, dup_at, profile)))
                truth.append(_invalid(dup_id, RejectReason.DUPLICATE_CONTENT))
                counts["duplicate"] = counts.get("duplicate", 0) + 1
            if rng.random() < rates.get("non_english", 0.0):
                nid = next_id()
                n_log, _, n_end = _draw_log(config, user, rng, emitted_texts)
                ascii_text = format_sleeplog(n_log)
                n_text = _fullwidth_digits(ascii_text)
                emitted_texts.add(ascii_text)
                emitted_texts.add(n_text)
                n_at = _to_utc(n_end + timedelta(minutes=rng.randint(0, 10)), user.offset_seconds)
                tweets.append((n_at, nid, _tweet_record(nid, n_text, n_at, profile)))
                truth.append(_invalid(nid, RejectReason.NON_ENGLISH_NOTATION))
                counts["non_english"] = counts.get("non_english", 0) + 1
            if rng.random() < rates.get("too_short", 0.0):
                sid = next_id()
                s_text, s_at = _extreme_log(config, user, rng, emitted_texts, (10, 119))
                tweets.append((s_at, sid, _tweet_record(sid, s_text, s_at, profile)))
                truth.append(_invalid(sid, RejectReason.TOO_SHORT))
                counts["too_short"] = counts.get("too_short", 0) + 1
            if rng.random() < rates.get("too_long", 0.0):
                lid = next_id()
                l_text, l_at = _extreme_log(config, user, rng, emitted_texts, (721, 1380))
                tweets.append((l_at, lid, _tweet_record(lid, l_text, l_at, profile)))
                truth.append(_invalid(lid, RejectReason.TOO_LONG))
                counts["too_long"] = counts.get("too_long", 0) + 1
            if rng.random() < rates.get("spam", 0.0):
                spam_counter += 1
                spam_idx = spam_counter % 5
                spam_user = f"s{spam_idx:03d}"
                spam_id = f"sp{spam_counter:06d}"
                spam_at = created_utc + timedelta(minutes=rng.randint(-600, 600))
                template = _SPAM_TEMPLATES[spam_counter % len(_SPAM_TEMPLATES)]
                spam_profile = {
                    "user_id": spam_user,
                    "screen_name": f"deals{spam_idx:03d}",
                    "location_text": None,
                    "time_zone": None,
                    "utc_offset_seconds": None,
                    "interface_lang": "en",
                    "bio": "offers and opinions",
                    "friends_count": 13,
                    "followers_count": 7,
                    "statuses_count": 99999,
                    "account_created_at": None,
                }
                tweets.append(
                    (
                        spam_at,
                        spam_id,
                        _tweet_record(spam_id, template.format(k=spam_counter), spam_at, spam_profile),
                    )
                )
                truth.append(_invalid(spam_id, RejectReason.NOT_SLEEP_LOG))
                counts["spam"] = counts.get("spam", 0) + 1

        # Background timeline chatter, unrelated to sleep.
        bg_rng = _substream(config.seed, "background", user.index)
        for b in range(_poisson(bg_rng, config.timeline_background_mean)):
            day = bg_rng.randint(0, config.days - 1)
            minute = bg_rng.randint(0, DAY_MINUTES - 1)
            t_local = datetime.combine(start_date + timedelta(days=day), time(0, 0)) + timedelta(minutes=minute)
            t_utc = _to_utc(t_local, user.offset_seconds)
            b_id = f"b{user.index:05d}x{b:04d}"
            timelines.append(
                (
                    t_utc,
                    b_id,
                    _tweet_record(
                        b_id,
                        _TIMELINE_TEMPLATES[b % len(_TIMELINE_TEMPLATES)].format(k=1000 + b),
                        t_utc,
                        profile,
                    ),
                )
            )

    tweets.sort(key=lambda item: (item[0], item[1]))
    timelines.sort(key=lambda item: (item[0], item[1]))
    counts["tweets_total"] = len(tweets)

    manifest = {
        "run_id": config.run_id(),
        "config": config.to_dict(),
        "counts": dict(sorted(counts.items())),
        "planted": {
            "start_window_share": config.start_window_share,
            "duration_mean_by_country": dict(config.duration_mean_by_country),
            "presleep_quality_delta": config.presleep_quality_delta,
        },
    }
    truth_meta = {"record": "meta", "run_id": config.run_id()}
    return SynthResult(
        tweets=[doc for _, _, doc in tweets],
        timelines=[doc for _, _, doc in timelines],
        truth=[truth_meta] + truth,
        manifest=manifest,
    )


def _build_users(config: SynthConfig) -> list[_User]:
    users = []
    for i in range(config.n_users):
        rng = _substream(config.seed, "user", i)
        bucket = _weighted(rng, config.country_mix)
        country = bucket if bucket != "other" else OTHER_POOL[int(rng.random() * len(OTHER_POOL)) % len(OTHER_POOL)]
        zone, offset = ZONES_BY_COUNTRY[country][int(rng.random() * len(ZONES_BY_COUNTRY[country])) % len(ZONES_BY_COUNTRY[country])]
        lo, hi = config.logs_per_user_range
        pi_lo, pi_hi = config.presleep_prob_range
        users.append(
            _User(
                index=i,
                user_id=f"u{i:05d}",
                country=country,
                zone=zone,
                offset_seconds=offset,
                n_logs=_log_uniform_int(rng, lo, hi),
                statuses_count=_log_uniform_int(rng, 50, 50_000),
                age_days=rng.randint(300, 2000),
                friends_count=_log_uniform_int(rng, 10, 5_000),
                presleep_pi=rng.uniform(pi_lo, pi_hi),
                duration_mean=_pick_mean(config.duration_mean_by_country, country)
                + _gauss(rng) * config.duration_user_sd,
                deep_mean=_pick_mean(config.deep_mean_by_country, country)
                + _gauss(rng) * config.deep_user_sd,
            )
        )

    # Planted user-level effects need corpus-wide ranks, hence a second pass.
    if config.activity_start_shift_minutes:
        ranked = sorted(users, key=lambda u: u.tweets_per_day_planted)
        denom = max(1, len(ranked) - 1)
        for rank, user in enumerate(ranked):
            rho = rank / denom
            user.start_shift = config.activity_start_shift_minutes * (rho - 0.5) * 2.0
    if config.friends_duration_delta_minutes:
        counts = sorted(u.friends_count for u in users)
        median = counts[math.ceil(len(counts) / 2) - 1]
        for user in users:
            if user.friends_count <= median:
                user.duration_mean += config.friends_duration_delta_minutes
    for user in users:
        user.deep_mean += config.presleep_quality_delta * user.presleep_pi
    return users


def _draw_log(
    config: SynthConfig,
    user: _User,
    rng: random.Random,
    emitted_texts: set[str],
) -> tuple[SleepLog, datetime, datetime]:
    """One night's log whose formatted text is unique within the user."""
    start_date = date.fromisoformat(config.corpus_start)
    window = config.start_profile.get(user.country, (WINDOW_LO, WINDOW_HI))
    for _ in range(200):
        day = rng.randint(0, config.days - 1)
        if rng.random() < config.start_window_share:
            minute = rng.randint(window[0], window[1] - 1)
        else:
            minute = rng.randint(3 * 60, WINDOW_LO - 1)
        minute += int(round(user.start_shift))
        minute %= 2 * DAY_MINUTES

        start_local = datetime.combine(start_date + timedelta(days=day), time(0, 0)) + timedelta(
            minutes=minute
        )

        mean = user.duration_mean
        if config.evening_duration_mean is not None and 18 * 60 <= minute % DAY_MINUTES < 21 * 60:
            mean = config.evening_duration_mean
        duration = int(round(mean + _gauss(rng) * config.duration_log_sd))
        duration = max(125, min(715, duration))
        end_local = start_local + timedelta(minutes=duration)

        if config.weekend_end_shift_minutes and end_local.weekday() >= 5:
            shift = int(config.weekend_end_shift_minutes)
            start_local += timedelta(minutes=shift)
            end_local += timedelta(minutes=shift)

        if rng.random() < config.deep_absent_rate:
            deep = None
        else:
            deep = int(round(user.deep_mean + _gauss(rng) * config.deep_log_sd))
            deep = max(0, min(100, deep))

        notation_key = _weighted(rng, config.notation_mix)
        notation_name, sep_name = notation_key.split(":")
        log = SleepLog(
            tweet_id="pending",
            user_id=user.user_id,
            start_civil=start_local.time(),
            end_civil=end_local.time(),
            duration_minutes=duration,
            deep_sleep_pct=deep,
            notation=TimeNotation(notation_name),
            separator=Separator(sep_name),
        )
        if format_sleeplog(log) not in emitted_texts:
            return log, start_local, end_local
    raise RuntimeError("could not draw a unique log fingerprint after 200 tries")


def _extreme_log(
    config: SynthConfig,
    user: _User,
    rng: random.Random,
    emitted_texts: set[str],
    duration_range: tuple[int, int],
) -> tuple[str, datetime]:
    """A grammatical log with an implausible duration (filtered later)."""
    start_date = date.fromisoformat(config.corpus_start)
    for _ in range(200):
        day = rng.randint(0, config.days - 1)
        minute = rng.randint(0, DAY_MINUTES - 1)
        duration = rng.randint(*duration_range)
        start_local = datetime.combine(start_date + timedelta(days=day), time(0, 0)) + timedelta(
            minutes=minute
        )
        end_local = start_local + timedelta(minutes=duration)
        log = SleepLog(
            tweet_id="pending",
            user_id=user.user_id,
            start_civil=start_local.time(),
            end_civil=end_local.time(),
            duration_minutes=duration,
            deep_sleep_pct=rng.randint(20, 70),
            notation=TimeNotation.H24,
            separator=Separator.COLON,
        )
        text = format_sleeplog(log)
        if text not in emitted_texts:
            emitted_texts.add(text)
            created = _to_utc(end_local + timedelta(minutes=rng.randint(0, 10)), user.offset_seconds)
            return text, created
    raise RuntimeError("could not draw a unique extreme log after 200 tries")


def _fullwidth_digits(text: str) -> str:
    return "".join(chr(ord(c) + 0xFEE0) if "0" <= c <= "9" else c for c in text)


def _to_utc(local: datetime, offset_seconds: int) -> datetime:
    tz = timezone(timedelta(seconds=offset_seconds))
    return local.replace(tzinfo=tz).astimezone(timezone.utc)


def _profile_fields(user: _User, start_date: date) -> dict:
    account_created = datetime.combine(
        start_date - timedelta(days=user.age_days), time(12, 0), tzinfo=timezone.utc
    )
    return {
        "user_id": user.user_id,
        "screen_name": f"sleeper_{user.index:05d}",
        "location_text": None,
        "time_zone": user.zone,
        "utc_offset_seconds": user.offset_seconds,
        "interface_lang": LANG_BY_COUNTRY[user.country],
        "bio": None,
        "friends_count": user.friends_count,
        "followers_count": user.friends_count // 2,
        "statuses_count": user.statuses_count,
        "account_created_at": account_created.isoformat(),
    }


def _tweet_record(tweet_id: str, text: str, created_at: datetime, profile: dict) -> dict:
    doc = {"tweet_id": tweet_id, "text": text, "created_at": created_at.isoformat()}
    doc.update(profile)
    return doc


def _invalid(tweet_id: str, reason: RejectReason) -> dict:
    return {"tweet_id": tweet_id, "label": "invalid", "reason": reason.value, "true_fields": None}


def write_corpus(result: SynthResult, out_dir: str) -> dict[str, str]:
    """Write corpus.jsonl, timelines.jsonl, truth.jsonl, synth_manifest.json."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "corpus": os.path.join(out_dir, "corpus.jsonl"),
        "timelines": os.path.join(out_dir, "timelines.jsonl"),
        "truth": os.path.join(out_dir, "truth.jsonl"),
        "manifest": os.path.join(out_dir, "synth_manifest.json"),
    }
    for key, docs in (("corpus", result.tweets), ("timelines", result.timelines), ("truth", result.truth)):
        with open(paths[key], "w", encoding="utf-8") as handle:
            for doc in docs:
                handle.write(json.dumps(doc, ensure_ascii=True) + "\n")
    with open(paths["manifest"], "w", encoding="utf-8") as handle:
        json.dump(result.manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return paths


# --- Scoring ------------------------------------------------------------------

@dataclass(frozen=True)
class PrecisionRecall:
    precision: float
    recall: float
    n_predicted: int
    n_truth: int

    def to_record(self) -> dict:
        return dict(self.__dict__.items())


@dataclass
class ScoreReport:
    per_reason: dict[str, PrecisionRecall]
    valid: PrecisionRecall
    per_notation_recall: dict[str, float]
    recovered: dict[str, dict]

    def to_record(self) -> dict:
        return {
            "per_reason": {k: v.to_record() for k, v in self.per_reason.items()},
            "valid": self.valid.to_record(),
            "per_notation_recall": self.per_notation_recall,
            "recovered": self.recovered,
        }


def _pr(predicted: set[str], actual: set[str]) -> PrecisionRecall:
    hit = len(predicted & actual)
    return PrecisionRecall(
        precision=hit / len(predicted) if predicted else 1.0,
        recall=hit / len(actual) if actual else 1.0,
        n_predicted=len(predicted),
        n_truth=len(actual),
    )


def score(
    truth_records: list[dict],
    kept_logs: list[SleepLog],
    rejected: dict[str, str],
    planted: dict | None = None,
    truth_run_id: str | None = None,
    pipeline_run_id: str | None = None,
) -> ScoreReport:
    """Compare pipeline decisions against ground truth.

    rejected maps tweet_id -> reason string across all stages.  Any pipeline
    id unknown to the truth set means the corpus and the run do not belong
    together and is fatal, as are explicitly mismatched run ids.
    """
    if truth_run_id is not None and pipeline_run_id is not None and truth_run_id != pipeline_run_id:
        raise ValueError(f"run id mismatch: truth {truth_run_id} vs pipeline {pipeline_run_id}")

    truth_by_id: dict[str, dict] = {}
    for record in truth_records:
        if record.get("record") == "meta":
            if truth_run_id is None:
                truth_run_id = record.get("run_id")
                if pipeline_run_id is not None and truth_run_id != pipeline_run_id:
                    raise ValueError(
                        f"run id mismatch: truth {truth_run_id} vs pipeline {pipeline_run_id}"
                    )
            continue
        truth_by_id[record["tweet_id"]] = record

    kept_ids = {log.tweet_id for log in kept_logs}
    for tweet_id in list(kept_ids) + list(rejected):
        if tweet_id not in truth_by_id:
            raise ValueError(f"pipeline tweet {tweet_id!r} is not in the ground truth")

    reasons = sorted(
        {r["reason"] for r in truth_by_id.values() if r["reason"]} | set(rejected.values())
    )
    per_reason = {}
    for reason in reasons:
        predicted = {tid for tid, r in rejected.items() if r == reason}
        actual = {tid for tid, r in truth_by_id.items() if r["reason"] == reason}
        per_reason[reason] = _pr(predicted, actual)

    valid_truth = {tid for tid, r in truth_by_id.items() if r["label"] == "valid"}
    valid = _pr(kept_ids, valid_truth)

    per_notation: dict[str, float] = {}
    notation_totals: dict[str, int] = {}
    notation_hits: dict[str, int] = {}
    for tid in valid_truth:
        fields_ = truth_by_id[tid]["true_fields"]
        key = f"{fields_['notation']}:{fields_['separator']}"
        notation_totals[key] = notation_totals.get(key, 0) + 1
        if tid in kept_ids:
            notation_hits[key] = notation_hits.get(key, 0) + 1
    for key in sorted(notation_totals):
        per_notation[key] = notation_hits.get(key, 0) / notation_totals[key]

    recovered: dict[str, dict] = {}
    if kept_logs:
        in_window = sum(
            1 for log in kept_logs if log.start_civil.hour in (22, 23, 0, 1, 2)
        )
        share = in_window / len(kept_logs)
        entry = {"recovered": share}
        if planted and "start_window_share" in planted:
            entry["planted"] = planted["start_window_share"]
            entry["abs_error"] = abs(share - planted["start_window_share"])
        recovered["start_window_share"] = entry

        by_country: dict[str, list[int]] = {}
        for log in kept_logs:
            record = truth_by_id[log.tweet_id]
            if record["true_fields"]:
                by_country.setdefault(record["true_fields"]["country"], []).append(
                    log.duration_minutes
                )
        planted_means = (planted or {}).get("duration_mean_by_country", {})
        for country in sorted(by_country):
            values = by_country[country]
            entry = {"recovered": sum(values) / len(values), "n_logs": len(values)}
            if country in planted_means:
                entry["planted"] = planted_means[country]
                entry["abs_error"] = abs(entry["recovered"] - planted_means[country])
            recovered[f"duration_mean:{country}"] = entry

    return ScoreReport(
        per_reason=per_reason,
        valid=valid,
        per_notation_recall=per_notation,
        recovered=recovered,
    )
