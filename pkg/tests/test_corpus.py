import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echoscope.corpus import (DEFAULT_OFFICIAL_CLIENTS, ClientClass, ClientClassifier, TweetRecord, classify_client,
                              dumps_record, parse_corpus, parse_time, record_from_dict, write_corpus)
from echoscope.errors import InputError


def rec(i, ts=100.0, kind="retweet", **kw):
    d = {"tweet_id": f"t{i}", "user_id": f"u{i}", "timestamp": ts, "kind": kind,
         "source_user_id": None if kind == "original" else "v", "urls": [], "client": "Twitter Web App"}
    d.update(kw)
    return d


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def test_window_keeps_in_range_records_in_file_order(tmp_path):
    p = write_lines(tmp_path / "c.jsonl", [json.dumps(rec(i, ts)) for i, ts in enumerate([5, 10, 20, 30])])
    c = parse_corpus(p, window=(10, 30))
    assert [r.tweet_id for r in c] == ["t1", "t2", "t3"]
    assert c.diagnostics == ()


def test_empty_file(tmp_path):
    p = tmp_path / "e.jsonl"
    p.write_text("")
    c = parse_corpus(p)
    assert len(c) == 0 and c.diagnostics == ()


def test_missing_user_id_gives_line_diagnostic(tmp_path):
    d = rec(0)
    del d["user_id"]
    c = parse_corpus(write_lines(tmp_path / "c.jsonl", [json.dumps(d)]))
    assert len(c) == 0
    assert len(c.diagnostics) == 1
    assert c.diagnostics[0].line == 1
    assert "user_id" in c.diagnostics[0].message


@pytest.mark.parametrize("line,needle", [
    ("{not json", "invalid JSON"),
    ("[1, 2]", "not a JSON object"),
    ('{"a": 1} {"b": 2}', "invalid JSON"),
    ("", "blank line"),
])
def test_malformed_lines_do_not_abort(tmp_path, line, needle):
    good = json.dumps(rec(1))
    c = parse_corpus(write_lines(tmp_path / "c.jsonl", [good, line, good]))
    assert len(c) == 2
    assert [d.line for d in c.diagnostics] == [2]
    assert needle in c.diagnostics[0].message


@pytest.mark.parametrize("mutation,needle", [
    ({"kind": "original", "source_user_id": "v"}, "original"),
    ({"kind": "quote", "source_user_id": None}, "without source_user_id"),
    ({"timestamp": -1}, "non-negative"),
    ({"timestamp": "yesterday"}, "number"),
    ({"kind": "like"}, "unknown kind"),
    ({"urls": "http://x.com"}, "urls"),
    ({"verified": "yes"}, "verified"),
])
def test_schema_violations(mutation, needle):
    with pytest.raises(ValueError, match=needle):
        record_from_dict(rec(0, **mutation))


def test_nonfinite_timestamp_rejected(tmp_path):
    p = write_lines(tmp_path / "c.jsonl", ['{"tweet_id":"1","user_id":"u","timestamp":Infinity,"kind":"original"}'])
    c = parse_corpus(p)
    assert len(c) == 0 and "finite" in c.diagnostics[0].message


def test_integer_ids_are_normalised_to_strings():
    r = record_from_dict(rec(0, tweet_id=17, user_id=4, source_user_id=9))
    assert (r.tweet_id, r.user_id, r.source_user_id) == ("17", "4", "9")


def test_inverted_window_is_fatal(tmp_path):
    p = write_lines(tmp_path / "c.jsonl", [json.dumps(rec(0))])
    with pytest.raises(InputError):
        parse_corpus(p, window=(10, 5))


def test_unreadable_file_is_fatal(tmp_path):
    with pytest.raises(InputError):
        parse_corpus(tmp_path / "absent.jsonl")
    bad = tmp_path / "latin.jsonl"
    bad.write_bytes(b'{"x": "\xff"}\n')
    with pytest.raises(InputError):
        parse_corpus(bad)


def test_line_separator_inside_string_is_not_a_newline(tmp_path):
    p = write_lines(tmp_path / "c.jsonl", [json.dumps(rec(0, text="a\u2028b"), ensure_ascii=False)])
    c = parse_corpus(p)
    assert len(c) == 1 and c.records[0].text == "a\u2028b"


def test_crlf_lines(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_bytes((json.dumps(rec(0)) + "\r\n" + json.dumps(rec(1)) + "\r\n").encode())
    c = parse_corpus(p)
    assert len(c) == 2 and not c.diagnostics


def test_multiple_files_merge_in_order(tmp_path):
    a = write_lines(tmp_path / "a.jsonl", [json.dumps(rec(0))])
    b = write_lines(tmp_path / "b.jsonl", [json.dumps(rec(1))])
    assert [r.tweet_id for r in parse_corpus([b, a])] == ["t1", "t0"]


def test_chunk_boundary_fallback(tmp_path, monkeypatch):
    import echoscope.corpus as corpus
    monkeypatch.setattr(corpus, "CHUNK_LINES", 3)
    lines = [json.dumps(rec(i)) for i in range(7)]
    lines[4] = "oops"
    c = parse_corpus(write_lines(tmp_path / "c.jsonl", lines))
    assert len(c) == 6 and [d.line for d in c.diagnostics] == [5]


ids = st.text(alphabet="abcxyz0123456789_", min_size=1, max_size=8)
records = st.builds(
    lambda i, u, ts, kind, src, urls, client, ver, text: TweetRecord(
        i, u, ts, kind, None if kind == "original" else src, tuple(urls), client, ver, text),
    ids, ids, st.floats(min_value=0, max_value=2e9, allow_nan=False),
    st.sampled_from(["original", "retweet", "quote", "reply"]), ids,
    st.lists(st.text(max_size=20), max_size=3), st.text(max_size=12), st.sampled_from([None, True, False]),
    st.one_of(st.none(), st.text(max_size=30)),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(records, max_size=20))
def test_round_trip_identity(tmp_path_factory, recs):
    p = tmp_path_factory.mktemp("rt") / "c.jsonl"
    write_corpus(recs, p)
    once = parse_corpus(p)
    assert list(once.records) == recs
    p2 = p.with_name("again.jsonl")
    write_corpus(once.records, p2)
    assert parse_corpus(p2).records == once.records
    assert p.read_bytes() == p2.read_bytes()


@settings(max_examples=50, deadline=None)
@given(st.lists(records, max_size=15), st.lists(st.sampled_from(["{", "null", "[]", "7"]), max_size=4))
def test_record_count_bounded_by_lines(tmp_path_factory, recs, junk):
    p = tmp_path_factory.mktemp("cnt") / "c.jsonl"
    lines = [dumps_record(r) for r in recs] + junk
    write_lines(p, lines)
    c = parse_corpus(p)
    assert len(c) <= c.n_lines == len(lines)
    assert (len(c) == c.n_lines) == (not c.diagnostics)


def test_classify_client_examples():
    assert classify_client("Twitter Web Client") is ClientClass.OFFICIAL
    assert classify_client("twitter for IPHONE") is ClientClass.OFFICIAL
    assert classify_client("SocialFlow") is ClientClass.UNOFFICIAL
    assert classify_client("") is ClientClass.UNOFFICIAL
    assert classify_client("Twitter Web Client ") is ClientClass.UNOFFICIAL
    with pytest.raises(InputError):
        classify_client("x", [])


@given(st.lists(st.text(max_size=10), max_size=30), st.sets(st.text(min_size=1, max_size=10), min_size=1, max_size=4))
def test_client_classes_partition_and_agree(clients, official):
    bulk = ClientClassifier(official)
    n_off = sum(classify_client(c, official) is ClientClass.OFFICIAL for c in clients)
    n_uno = sum(classify_client(c, official) is ClientClass.UNOFFICIAL for c in clients)
    assert n_off + n_uno == len(clients)
    assert all(bulk(c) is classify_client(c, official) for c in clients)


def test_default_official_list_is_nonempty():
    assert "Twitter for Android" in DEFAULT_OFFICIAL_CLIENTS


def test_parse_time():
    assert parse_time(5) == 5.0
    assert parse_time("12.5") == 12.5
    assert parse_time("2020-06-01") == 1590969600.0
    assert parse_time("2020-06-01T00:00:00Z") == parse_time("2020-06-01T02:00:00+02:00") == 1590969600.0
    with pytest.raises(InputError):
        parse_time("June first")
