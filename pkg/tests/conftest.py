"""Shared fixtures: tweet factories and an instrumented geocoder transport."""

from __future__ import annotations

import json
from datetime import datetime, timezone

import pytest

from sleeplog.records import RawTweet


@pytest.fixture
def make_tweet():
    """Factory for RawTweets with sane defaults; every field overridable."""
    counter = {"n": 0}

    def build(text: str = "Sleep as Android: I was sleeping for 7:10 from 23:02 to 6:12 "
                          "with 21% deep sleep #sleep_as_android",
              **overrides) -> RawTweet:
        counter["n"] += 1
        fields = {
            "tweet_id": f"t{counter['n']:06d}",
            "text": text,
            "created_at": datetime(2015, 10, 24, 6, 20, tzinfo=timezone.utc),
            "user_id": "u000001",
            "screen_name": "sleeper",
            "location_text": None,
            "time_zone": None,
            "utc_offset_seconds": None,
            "interface_lang": None,
            "bio": None,
            "friends_count": 120,
            "followers_count": 80,
            "statuses_count": 4000,
            "account_created_at": datetime(2013, 1, 1, tzinfo=timezone.utc),
        }
        fields.update(overrides)
        return RawTweet(**fields)

    return build


class FixtureTransport:
    """Stand-in for the HTTP fetch callable; counts every outbound call."""

    def __init__(self, answers: dict[str, str | None] | None = None,
                 failures: int = 0, status: int = 200):
        self.answers = answers or {}
        self.failures = failures  # raise this many times before answering
        self.status = status
        self.calls: list[str] = []

    def __call__(self, url: str, params: dict, timeout: float) -> tuple[int, str]:
        query = params.get("q", "")
        self.calls.append(query)
        if self.failures > 0:
            self.failures -= 1
            raise ConnectionError("injected transport failure")
        if query in self.answers:
            code = self.answers[query]
            if code is None:
                return self.status, "[]"
            return self.status, json.dumps([{"address": {"country_code": code.lower()}}])
        return 404, "[]"


@pytest.fixture
def transport():
    return FixtureTransport


class FakeClock:
    """Deterministic monotonic clock; sleeping advances it."""

    def __init__(self) -> None:
        self.now = 100.0
        self.sleeps: list[float] = []

    def monotonic(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds


@pytest.fixture
def fake_clock():
    return FakeClock()
