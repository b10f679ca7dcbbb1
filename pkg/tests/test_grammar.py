"""Sleep-log grammar: parsing, formatting, rejection reasons, date anchoring.

parse_tweet is regex-driven, so the reference implementation here is a
deliberately different token-scanning parser; agreement between the two on
generated texts is the main correctness argument.
"""

from __future__ import annotations

import random
from datetime import date, datetime, time, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from sleeplog.grammar import (
    AnchorPolicy,
    Rejection,
    Separator,
    SleepLog,
    TimeNotation,
    anchor_dates,
    format_sleeplog,
    parse_tweet,
    recomputed_duration,
)
from sleeplog.records import RejectReason

PREFIX = "Sleep as Android: "


# --- Independent oracle parser ---------------------------------------------------

def _oracle_time(token: str, meridiem: str | None) -> time | None:
    for sep in (":", "."):
        if sep in token:
            hh, _, mm = token.partition(sep)
            break
    else:
        return None
    if not (hh.isdigit() and mm.isdigit() and len(mm) == 2 and 1 <= len(hh) <= 2):
        return None
    hour, minute = int(hh), int(mm)
    if minute > 59:
        return None
    if meridiem is not None:
        if hour > 12:
            return None
        hour = hour % 12 + (12 if meridiem.lower().replace(".", "") == "pm" else 0)
    elif hour > 23:
        return None
    return time(hour, minute)


def oracle_parse(text: str) -> dict | None:
    """Token-scanning reference parse; returns fields or None when invalid."""
    if not text.startswith(PREFIX) or "sleeping for " not in text:
        return None
    tail = text.split("sleeping for ", 1)[1]
    if " from " not in tail:
        return None
    dur_tok, _, rest = tail.partition(" from ")
    if " to " not in rest:
        return None
    start_part, _, rest = rest.partition(" to ")
    deep = None
    if " with " in rest and "% deep sleep" in rest:
        end_part, _, deep_tail = rest.partition(" with ")
        deep_tok = deep_tail.split("% deep sleep", 1)[0]
        if deep_tok.isdigit():
            if int(deep_tok) > 100:
                return None
            deep = int(deep_tok)
        # A non-numeric "with ...% deep sleep" tail is not the deep clause at
        # all, just trailing junk; the log still parses without deep sleep.
    else:
        end_part = rest.split(" #", 1)[0].split(" with ", 1)[0]

    def split_meridiem(part: str) -> tuple[str, str | None]:
        tokens = part.split(" ")
        if len(tokens) >= 2 and tokens[1] in ("AM", "PM", "am", "pm", "a.m.", "p.m."):
            return tokens[0], tokens[1]
        return tokens[0], None

    start_tok, start_mer = split_meridiem(start_part)
    end_tok, end_mer = split_meridiem(end_part.strip())
    if (start_mer is None) != (end_mer is None):
        return None
    start = _oracle_time(start_tok, start_mer)
    end = _oracle_time(end_tok, end_mer)
    dur = _oracle_time(dur_tok, None)
    if start is None or end is None or dur is None:
        return None
    duration = dur.hour * 60 + dur.minute
    if duration == 0:
        return None
    return {
        "start": start,
        "end": end,
        "duration": duration,
        "deep": deep,
        "h24": start_mer is None,
    }


def random_log(rng: random.Random, tweet_id: str = "t", user_id: str = "u") -> SleepLog:
    start = time(rng.randrange(24), rng.randrange(60))
    end = time(rng.randrange(24), rng.randrange(60))
    # Stated durations live in 1..1439 (duration hour field is 0-23); equal
    # start/end recomputes to 1440, which no tweet text can state.
    if rng.random() < 0.7 and start != end:
        stated = recomputed_duration(start, end)
    else:
        stated = rng.randrange(1, 1440)
    deep = rng.choice([None, rng.randrange(0, 101)])
    return SleepLog(
        tweet_id=tweet_id,
        user_id=user_id,
        start_civil=start,
        end_civil=end,
        duration_minutes=stated,
        deep_sleep_pct=deep,
        notation=rng.choice(list(TimeNotation)),
        separator=rng.choice(list(Separator)),
        duration_inconsistent=abs(recomputed_duration(start, end) - stated) > 1,
    )


class TestAgainstOracle:
    def test_oracle_agrees_on_generated_corpus(self, make_tweet):
        rng = random.Random(99)
        for i in range(2000):
            log = random_log(rng)
            tweet = make_tweet(text=format_sleeplog(log))
            parsed = parse_tweet(tweet)
            reference = oracle_parse(tweet.text)
            assert isinstance(parsed, SleepLog), tweet.text
            assert reference is not None, tweet.text
            assert parsed.start_civil == reference["start"]
            assert parsed.end_civil == reference["end"]
            assert parsed.duration_minutes == reference["duration"]
            assert parsed.deep_sleep_pct == reference["deep"]
            assert (parsed.notation is TimeNotation.H24) == reference["h24"]

    def test_oracle_agrees_on_rejection_of_mangled_texts(self, make_tweet):
        rng = random.Random(7)
        mangled = 0
        for _ in range(500):
            text = format_sleeplog(random_log(rng))
            pos = rng.randrange(len(PREFIX), len(text))
            if not text[pos].isdigit():
                continue
            # Blow away one time digit with a letter: both parsers must reject.
            text = text[:pos] + "Q" + text[pos + 1:]
            outcome = parse_tweet(make_tweet(text=text))
            if isinstance(outcome, Rejection):
                assert oracle_parse(text) is None or outcome.reason in (
                    RejectReason.UNPARSEABLE_TIME,
                )
                mangled += 1
            else:
                # A digit inside a 2-digit hour can degrade to a valid 1-digit
                # hour; then both parsers must agree on the fields.
                ref = oracle_parse(text)
                assert ref is not None
                assert outcome.start_civil == ref["start"]
        assert mangled > 50


class TestRoundTrip:
    @settings(max_examples=300, deadline=None)
    @given(
        start_h=st.integers(0, 23), start_m=st.integers(0, 59),
        end_h=st.integers(0, 23), end_m=st.integers(0, 59),
        stated=st.integers(1, 1439),
        deep=st.one_of(st.none(), st.integers(0, 100)),
        notation=st.sampled_from(list(TimeNotation)),
        separator=st.sampled_from(list(Separator)),
    )
    def test_parse_inverts_format(self, start_h, start_m, end_h, end_m,
                                  stated, deep, notation, separator):
        start, end = time(start_h, start_m), time(end_h, end_m)
        log = SleepLog(
            tweet_id="t1", user_id="u1",
            start_civil=start, end_civil=end,
            duration_minutes=stated, deep_sleep_pct=deep,
            notation=notation, separator=separator,
            duration_inconsistent=abs(recomputed_duration(start, end) - stated) > 1,
        )
        from sleeplog.records import RawTweet
        tweet = RawTweet(
            tweet_id="t1", text=format_sleeplog(log),
            created_at=datetime(2015, 10, 24, 6, tzinfo=timezone.utc),
            user_id="u1", screen_name="s",
        )
        assert parse_tweet(tweet) == log

    def test_explicit_notation_override(self):
        log = SleepLog(
            tweet_id="t", user_id="u", start_civil=time(23, 40), end_civil=time(5, 53),
            duration_minutes=373, deep_sleep_pct=21,
            notation=TimeNotation.H24, separator=Separator.COLON,
        )
        text = format_sleeplog(log, notation=TimeNotation.H12_DOTTED_AMPM, separator=Separator.DOT)
        assert "11.40 p.m." in text and "5.53 a.m." in text and "6.13" in text


class TestNotationVariants:
    CASES = [
        ("7:10 from 23:02 to 6:12", time(23, 2), time(6, 12), TimeNotation.H24, Separator.COLON),
        ("7.10 from 23.02 to 6.12", time(23, 2), time(6, 12), TimeNotation.H24, Separator.DOT),
        ("7:10 from 11:02 PM to 6:12 AM", time(23, 2), time(6, 12), TimeNotation.H12_AMPM, Separator.COLON),
        ("7.10 from 11.02 PM to 6.12 AM", time(23, 2), time(6, 12), TimeNotation.H12_AMPM, Separator.DOT),
        ("7:10 from 11:02 p.m. to 6:12 a.m.", time(23, 2), time(6, 12), TimeNotation.H12_DOTTED_AMPM, Separator.COLON),
        ("7.10 from 11.02 p.m. to 6.12 a.m.", time(23, 2), time(6, 12), TimeNotation.H12_DOTTED_AMPM, Separator.DOT),
    ]

    @pytest.mark.parametrize("clause, start, end, notation, separator", CASES)
    def test_variant(self, make_tweet, clause, start, end, notation, separator):
        tweet = make_tweet(text=f"{PREFIX}I was sleeping for {clause} #sleep_as_android")
        log = parse_tweet(tweet)
        assert isinstance(log, SleepLog)
        assert (log.start_civil, log.end_civil) == (start, end)
        assert log.notation is notation and log.separator is separator

    def test_midnight_noon_twelve_oclock(self, make_tweet):
        log = parse_tweet(make_tweet(
            text=f"{PREFIX}sleeping for 12:00 from 12:30 AM to 12:30 PM"
        ))
        assert log.start_civil == time(0, 30)
        assert log.end_civil == time(12, 30)

    def test_lowercase_meridiem(self, make_tweet):
        log = parse_tweet(make_tweet(text=f"{PREFIX}sleeping for 8:00 from 10:00 pm to 6:00 am"))
        assert isinstance(log, SleepLog)
        assert log.start_civil == time(22, 0)

    def test_junk_between_prefix_and_template(self, make_tweet):
        log = parse_tweet(make_tweet(
            text=f"{PREFIX}Oh wow I was sleeping for 6:00 from 1:00 to 7:00 today #sleep_as_android"
        ))
        assert isinstance(log, SleepLog)
        assert log.duration_minutes == 360


class TestRejections:
    def reason(self, make_tweet, text: str) -> Rejection:
        outcome = parse_tweet(make_tweet(text=text))
        assert isinstance(outcome, Rejection), f"unexpectedly parsed: {text}"
        return outcome

    def test_missing_prefix(self, make_tweet):
        r = self.reason(make_tweet, "I was sleeping for 7:10 from 23:02 to 6:12")
        assert r.reason is RejectReason.NOT_SLEEP_LOG

    def test_prefix_without_template(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}best alarm app ever #sleep_as_android")
        assert r.reason is RejectReason.NOT_SLEEP_LOG

    def test_fullwidth_digits(self, make_tweet):
        text = f"{PREFIX}I was sleeping for 7:10 from ２３:０２ to 6:12 #sleep_as_android"
        r = self.reason(make_tweet, text)
        assert r.reason is RejectReason.NON_ENGLISH_NOTATION
        lo, hi = r.span
        assert "２３" in text[lo:hi] or "０２" in text[lo:hi]

    def test_fullwidth_separator_and_digits(self, make_tweet):
        text = f"{PREFIX}sleeping for 7:10 from ７：０２ to 6:12"
        r = self.reason(make_tweet, text)
        assert r.reason is RejectReason.NON_ENGLISH_NOTATION

    def test_non_ascii_meridiem(self, make_tweet):
        text = f"{PREFIX}sleeping for 7:10 from 11:02 午後 to 6:12 午前"
        r = self.reason(make_tweet, text)
        assert r.reason is RejectReason.NON_ENGLISH_NOTATION

    def test_non_english_beats_unparseable(self, make_tweet):
        # Fullwidth digits AND an out-of-range minute: notation wins.
        text = f"{PREFIX}sleeping for 7:10 from ２３:０２ to 6:72"
        r = self.reason(make_tweet, text)
        assert r.reason is RejectReason.NON_ENGLISH_NOTATION

    def test_hour_out_of_range(self, make_tweet):
        text = f"{PREFIX}sleeping for 7:10 from 25:02 to 6:12"
        r = self.reason(make_tweet, text)
        assert r.reason is RejectReason.UNPARSEABLE_TIME
        lo, hi = r.span
        assert text[lo:hi] == "25"

    def test_minute_out_of_range(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for 7:10 from 23:02 to 6:72")
        assert r.reason is RejectReason.UNPARSEABLE_TIME

    def test_meridiem_hour_above_twelve(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for 7:10 from 23:02 PM to 6:12 AM")
        assert r.reason is RejectReason.UNPARSEABLE_TIME

    def test_meridiem_on_one_endpoint_only(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for 7:10 from 11:02 PM to 6:12")
        assert r.reason is RejectReason.UNPARSEABLE_TIME

    def test_zero_duration(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for 0:00 from 23:02 to 6:12")
        assert r.reason is RejectReason.UNPARSEABLE_TIME

    def test_deep_sleep_above_100(self, make_tweet):
        r = self.reason(
            make_tweet, f"{PREFIX}sleeping for 7:10 from 23:02 to 6:12 with 150% deep sleep"
        )
        assert r.reason is RejectReason.UNPARSEABLE_TIME

    def test_word_duration_token(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for seven hours from 23:02 to 6:12")
        assert r.reason is RejectReason.UNPARSEABLE_TIME

    def test_missing_from_to_clause(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for 7:10 #sleep_as_android")
        assert r.reason is RejectReason.MISSING_FIELDS

    def test_missing_duration_and_times(self, make_tweet):
        r = self.reason(make_tweet, f"{PREFIX}sleeping for  from  to  #sleep_as_android")
        assert r.reason is RejectReason.MISSING_FIELDS

    def test_span_is_within_text(self, make_tweet):
        text = f"{PREFIX}sleeping for 7:10 from 99:00 to 6:12"
        r = self.reason(make_tweet, text)
        lo, hi = r.span
        assert 0 <= lo < hi <= len(text)


class TestDurationConsistency:
    def test_consistent_flag_false(self, make_tweet):
        log = parse_tweet(make_tweet(text=f"{PREFIX}sleeping for 7:10 from 23:02 to 6:12"))
        assert log.duration_inconsistent is False

    def test_off_by_one_tolerated(self, make_tweet):
        log = parse_tweet(make_tweet(text=f"{PREFIX}sleeping for 7:09 from 23:02 to 6:12"))
        assert log.duration_inconsistent is False

    def test_off_by_two_flagged(self, make_tweet):
        log = parse_tweet(make_tweet(text=f"{PREFIX}sleeping for 7:08 from 23:02 to 6:12"))
        assert log.duration_inconsistent is True

    def test_recomputed_equal_times_is_full_day(self):
        assert recomputed_duration(time(6, 0), time(6, 0)) == 1440

    def test_recomputed_wraps_midnight(self):
        assert recomputed_duration(time(23, 30), time(6, 30)) == 420


# --- Date anchoring ---------------------------------------------------------------

def oracle_anchor(start_civil, end_civil, tweet_local, slack_minutes):
    """Brute-force: scan day by day for the latest candidates."""
    cutoff = tweet_local + timedelta(minutes=slack_minutes)
    end = None
    for back in range(-2, 4):
        candidate = datetime.combine(cutoff.date() - timedelta(days=back), end_civil)
        if candidate <= cutoff and (end is None or candidate > end):
            end = candidate
    start = None
    for back in range(-2, 4):
        candidate = datetime.combine(end.date() - timedelta(days=back), start_civil)
        if candidate < end and (start is None or candidate > start):
            start = candidate
    return start, end


class TestAnchoring:
    @pytest.mark.parametrize("slack", [0, 15, 120])
    def test_matches_brute_force_grid(self, slack):
        rng = random.Random(slack)
        for _ in range(400):
            start = time(rng.randrange(24), rng.randrange(60))
            end = time(rng.randrange(24), rng.randrange(60))
            tweet_local = datetime(2015, 10, rng.randrange(1, 29), rng.randrange(24), rng.randrange(60))
            got = anchor_dates(start, end, tweet_local, slack)
            assert got == oracle_anchor(start, end, tweet_local, slack)

    def test_wake_just_after_tweet_uses_slack(self):
        # Stated end 06:12, tweet at 06:05: within 15 min slack, same morning.
        start, end = anchor_dates(time(23, 2), time(6, 12), datetime(2015, 10, 24, 6, 5))
        assert end == datetime(2015, 10, 24, 6, 12)
        assert start == datetime(2015, 10, 23, 23, 2)

    def test_wake_beyond_slack_goes_to_previous_day(self):
        start, end = anchor_dates(time(23, 2), time(6, 30), datetime(2015, 10, 24, 6, 5))
        assert end == datetime(2015, 10, 23, 6, 30)

    def test_same_day_sleep(self):
        start, end = anchor_dates(time(1, 0), time(8, 0), datetime(2015, 10, 24, 8, 1))
        assert start == datetime(2015, 10, 24, 1, 0)
        assert end == datetime(2015, 10, 24, 8, 0)

    def test_instants_from_utc_offset(self, make_tweet):
        tweet = make_tweet(
            created_at=datetime(2015, 10, 23, 21, 20, tzinfo=timezone.utc),  # 06:20 JST
            utc_offset_seconds=32400,
        )
        log = parse_tweet(tweet)
        assert log.anchored
        assert log.end_local == datetime(2015, 10, 24, 6, 12)
        assert log.end_utc == datetime(2015, 10, 23, 21, 12, tzinfo=timezone.utc)
        assert (log.end_utc - log.start_utc) == timedelta(minutes=430)

    def test_instants_from_zone_name(self, make_tweet):
        tweet = make_tweet(
            created_at=datetime(2015, 10, 23, 21, 20, tzinfo=timezone.utc),
            time_zone="Asia/Tokyo",
        )
        log = parse_tweet(tweet)
        assert log.anchored
        assert log.end_local == datetime(2015, 10, 24, 6, 12)

    def test_unknown_zone_leaves_unanchored(self, make_tweet):
        log = parse_tweet(make_tweet(time_zone="Middle/Nowhere"))
        assert isinstance(log, SleepLog) and not log.anchored

    def test_no_zone_info_leaves_unanchored(self, make_tweet):
        log = parse_tweet(make_tweet())
        assert not log.anchored
        assert log.start_civil == time(23, 2)

    def test_custom_slack_policy(self, make_tweet):
        tweet = make_tweet(
            created_at=datetime(2015, 10, 24, 6, 0, tzinfo=timezone.utc),
            utc_offset_seconds=0,
            text=f"{PREFIX}sleeping for 7:10 from 23:02 to 6:12",
        )
        wide = parse_tweet(tweet, AnchorPolicy(slack_minutes=30))
        assert wide.end_local == datetime(2015, 10, 24, 6, 12)
        tight = parse_tweet(tweet, AnchorPolicy(slack_minutes=5))
        assert tight.end_local == datetime(2015, 10, 23, 6, 12)

    def test_dst_fall_back_still_anchors(self, make_tweet):
        # US DST ended 2015-11-01 02:00; wake times around it must not crash.
        tweet = make_tweet(
            created_at=datetime(2015, 11, 1, 11, 30, tzinfo=timezone.utc),
            time_zone="America/New_York",
            text=f"{PREFIX}sleeping for 8:00 from 22:30 to 6:30",
        )
        log = parse_tweet(tweet)
        assert log.anchored
        assert log.end_local.time() == time(6, 30)
