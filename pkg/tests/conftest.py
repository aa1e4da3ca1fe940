import json
import os

import pytest

from duplex_kit import create_toolkit
from duplex_kit.codec.rvq import RvqCodec
from duplex_kit.models import (
    Channel, ConversationTimeline, FrameClock, Role, SampleInterval, UtteranceEvent, WordAlignment,
)

SPF = 1920
FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def utterance(channel, role, start_frame, words, frames_per_word=3, tag=""):
    """An utterance whose words sit back to back on frame boundaries."""
    aligned = []
    frame = start_frame
    for word in words:
        aligned.append(WordAlignment(word, SampleInterval(frame * SPF, (frame + frames_per_word) * SPF)))
        frame += frames_per_word
    return UtteranceEvent(
        channel=Channel(channel),
        role=Role(role),
        interval=SampleInterval(start_frame * SPF, frame * SPF),
        words=tuple(aligned),
        content_tag=tag,
    )


def timeline(*events, session_id="s1"):
    return ConversationTimeline(session_id=session_id, clock=FrameClock(), events=tuple(events))


@pytest.fixture(scope="session")
def toolkit():
    """Toolkit built from the testing profile."""
    return create_toolkit("testing")


@pytest.fixture
def clock():
    return FrameClock()


@pytest.fixture(scope="session")
def codec():
    """Small seeded mock codec shared by the whole run."""
    return RvqCodec.random(depths=4, codebook_size=16, dimension=8, seed=3)


@pytest.fixture
def make_utterance():
    return utterance


@pytest.fixture
def make_timeline():
    return timeline


@pytest.fixture
def dialogue_timeline():
    """User asks, assistant answers with two words, user backchannels inside the answer."""
    return timeline(
        utterance("user", "speech", 0, ["hello", "there"], tag="t1"),
        utterance("assistant", "speech", 8, ["hi", "friend"], frames_per_word=4, tag="t1"),
        utterance("user", "backchannel", 10, ["mm"], frames_per_word=2, tag="t1"),
    )


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture(scope="session")
def behavior_rows():
    with open(os.path.join(FIXTURES, "behavior_distributions.json"), encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def suite_scores():
    with open(os.path.join(FIXTURES, "suite_scores.json"), encoding="utf-8") as fh:
        return json.load(fh)
