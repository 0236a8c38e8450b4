import pytest
from hypothesis import given, settings, strategies as st

from cascade_st.backends import RefineVerdict, RuleRefiner, TranscriptChunk
from cascade_st.refiner import CAPACITY, RefineBuffer, ReleaseReason, flush, push_chunk

RULE = RuleRefiner()


def chunk(text, t=0.0):
    return TranscriptChunk(text, "en", t, t + 1.0)


class AlwaysComplete:
    name = "always"

    def assess_phrase(self, candidate, context, lang):
        return RefineVerdict(True, candidate.strip())


def test_natural_release():
    buf, out = push_chunk(RefineBuffer(), chunk("Hello there."), RULE)
    assert [(r.text, r.release_reason, r.source_chunk_count) for r in out] == \
           [("Hello there.", ReleaseReason.NATURAL, 1)]
    assert buf.pending == []
    assert list(buf.context) == ["Hello there."]


def test_multi_chunk_natural_release_keeps_first_onset():
    buf = RefineBuffer()
    push_chunk(buf, chunk("the meeting", 1.0), RULE)
    _, out = push_chunk(buf, chunk("um starts at noon.", 3.0), RULE)
    assert out[0].text == "the meeting starts at noon."
    assert out[0].onset_s == 1.0 and out[0].source_chunk_count == 2


def test_sixth_incomplete_chunk_forces_flush():
    buf = RefineBuffer()
    for k, t in enumerate("abcde"):
        _, out = push_chunk(buf, chunk(t, k), RULE)
        assert out == []
    assert len(buf.pending) == CAPACITY
    _, out = push_chunk(buf, chunk("f", 5), RULE)
    assert [(r.text, r.release_reason, r.source_chunk_count, r.onset_s) for r in out] == \
           [("a b c d e", ReleaseReason.FORCED, 5, 0)]
    assert [p.text for p in buf.pending] == ["f"]
    assert list(buf.context) == ["a b c d e"]


def test_sixth_chunk_completing_sentence_releases_naturally():
    buf = RefineBuffer()
    for t in "abcde":
        push_chunk(buf, chunk(t), RULE)
    _, out = push_chunk(buf, chunk("f."), RULE)
    assert out[0].text == "a b c d e f." and out[0].release_reason is ReleaseReason.NATURAL
    assert out[0].source_chunk_count == 6


def test_empty_chunk_is_dropped():
    buf = RefineBuffer()
    push_chunk(buf, chunk("so"), RULE)
    before = buf.to_json()
    _, out = push_chunk(buf, chunk("   "), RULE)
    assert out == [] and buf.to_json() == before


def test_filler_only_chunk_adds_nothing():
    buf = RefineBuffer()
    push_chunk(buf, chunk("so we"), RULE)
    _, out = push_chunk(buf, chunk("um"), RULE)
    assert out == [] and [p.text for p in buf.pending] == ["so we"]


def test_filler_across_chunk_boundary():
    buf = RefineBuffer()
    push_chunk(buf, chunk("we you"), RULE)
    _, out = push_chunk(buf, chunk("know it"), RULE)
    assert out == []
    assert [p.text for p in buf.pending] == ["we you", "know it"]
    _, out = push_chunk(buf, chunk("works."), RULE)
    assert out[0].text == "we it works."


@pytest.mark.parametrize("pending,text,count", [
    (["so we"], "so we", 1),
    (["a", "b"], "a b", 2),
])
def test_flush(pending, text, count):
    buf = RefineBuffer()
    for p in pending:
        push_chunk(buf, chunk(p), RULE)
    buf, rel = flush(buf)
    assert (rel.text, rel.release_reason, rel.source_chunk_count) == (text, ReleaseReason.FORCED, count)
    assert buf.pending == [] and list(buf.context) == [text]


def test_flush_empty():
    buf, rel = flush(RefineBuffer())
    assert rel is None and buf.pending == []


def test_context_keeps_last_five():
    buf = RefineBuffer()
    for k in range(8):
        push_chunk(buf, chunk(f"s{k}."), RULE)
    assert list(buf.context) == [f"s{k}." for k in range(3, 8)]


def test_context_passed_to_backend():
    seen = []

    class Spy(AlwaysComplete):
        def assess_phrase(self, candidate, context, lang):
            seen.append(list(context))
            return super().assess_phrase(candidate, context, lang)

    buf = RefineBuffer()
    push_chunk(buf, chunk("one"), Spy())
    push_chunk(buf, chunk("two"), Spy())
    assert seen == [[], ["one"]]


def test_always_complete_backend_never_buffers():
    buf = RefineBuffer()
    for k in range(20):
        _, out = push_chunk(buf, chunk(f"w{k}"), AlwaysComplete())
        assert len(out) == 1 and buf.pending == []


chunk_texts = st.lists(
    st.lists(st.sampled_from(["we", "are", "here", "um", "uh", "you know", "today", "now."]),
             max_size=4).map(" ".join),
    max_size=25)


@settings(max_examples=300, deadline=None)
@given(chunk_texts)
def test_conservation_and_bounds(texts):
    buf = RefineBuffer()
    released = []
    last_onset = -1.0
    for k, t in enumerate(texts):
        buf, out = push_chunk(buf, chunk(t, float(k)), RULE)
        released.extend(out)
        assert len(buf.pending) <= CAPACITY
    buf, rel = flush(buf)
    if rel:
        released.append(rel)
    cleaned = [RULE.clean(t, "en") for t in texts]
    assert " ".join(r.text for r in released).split() == " ".join(cleaned).split()
    for r in released:
        assert r.onset_s >= last_onset
        last_onset = r.onset_s
