from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from echoscope.corpus import TweetRecord
from echoscope.errors import InputError
from echoscope.media_catalog import (CATEGORIES, MediaCategory, Outlet, OutletCatalog, UnclassifiableURL,
                                     URLClassifier, assign_modal_categories, assign_user_modal_category,
                                     builtin_catalog, category_flow, category_position, category_volumes,
                                     classify_url, extract_domain, load_catalog, prune_insignificant,
                                     user_category_counts, write_catalog)

C = MediaCategory


@pytest.mark.parametrize("url,host", [
    ("https://www.cnn.com/2020/story", "cnn.com"),
    ("http://abcnews.go.com/x?y=1", "abcnews.go.com"),
    ("HTTPS://WWW.FoxNews.com", "foxnews.com"),
    ("nytimes.com/section", "nytimes.com"),
    ("http://user@www.npr.org:8080/a", "npr.org"),
    ("https://www.www.example.org/", "www.example.org"),
    ("https://m.cnn.com#frag", "m.cnn.com"),
])
def test_extract_domain(url, host):
    assert extract_domain(url) == host


@pytest.mark.parametrize("url", ["not a url", "", "https://", "https://localhost/x", "http://a..b/", "mailto:x"])
def test_extract_domain_rejects(url):
    with pytest.raises(UnclassifiableURL):
        extract_domain(url)


def test_unclassifiable_is_an_input_error():
    assert issubclass(UnclassifiableURL, InputError)


def test_category_positions():
    assert len(CATEGORIES) == 8
    assert category_position(C.FAKE_NEWS) == Fraction(4, 3)
    assert category_position(C.CENTER) == 0
    for right, left in [(C.RIGHT_LEANING, C.LEFT_LEANING), (C.RIGHT, C.LEFT),
                        (C.EXTREME_BIAS_RIGHT, C.EXTREME_BIAS_LEFT)]:
        assert category_position(right) == -category_position(left)


def test_parse_category():
    assert MediaCategory.parse(" Center ") is C.CENTER
    with pytest.raises(InputError):
        MediaCategory.parse("Centre")


def catalog(**hosts):
    return OutletCatalog({h.replace("_", "."): Outlet(c, n) for h, (c, n) in hosts.items()})


def test_classify_url_and_diagnostics():
    cat = catalog(cnn_com=(C.LEFT_LEANING, 10))
    assert classify_url("https://www.cnn.com/a", cat) is C.LEFT_LEANING
    assert classify_url("https://edition.cnn.com/a", cat) is None
    diags = []
    assert classify_url("garbage here", cat, diags) is None
    assert len(diags) == 1


@given(st.sampled_from(["cnn.com", "foxnews.com", "unknown.org", "abcnews.go.com"]),
       st.sampled_from(["http://", "https://", "https://www.", "", "HTTP://WWW."]),
       st.sampled_from(["", "/", "/a/b?c=1", "#x"]))
def test_classify_url_depends_only_on_domain(host, prefix, suffix):
    cat = builtin_catalog("2020")
    u1 = f"{prefix}{host}{suffix}"
    u2 = f"https://{host}"
    assert extract_domain(u1) == extract_domain(u2)
    assert classify_url(u1, cat) == classify_url(u2, cat)


def test_url_classifier_caches_and_counts():
    clf = URLClassifier(catalog(cnn_com=(C.LEFT_LEANING, 1), foxnews_com=(C.RIGHT, 1)))
    assert clf.categories(["https://cnn.com/a", "https://foxnews.com", "bad url"]) == {C.LEFT_LEANING, C.RIGHT}
    assert clf("bad url") is None
    assert clf.n_unparseable == 1


def test_builtin_catalogs():
    for year in ("2016", "2020"):
        cat = builtin_catalog(year)
        assert len(cat) > 100
        assert all(h == h.lower() and not h.startswith("www.") and "://" not in h for h in cat.entries)
        assert {o.category for o in cat.entries.values()} == set(CATEGORIES)
    assert builtin_catalog("2020").get("abcnews.go.com") is C.LEFT_LEANING


def test_catalog_round_trip(tmp_path):
    cat = builtin_catalog("2016")
    p = tmp_path / "cat.tsv"
    write_catalog(cat, p)
    again = load_catalog(p)
    assert dict(again.entries) == dict(cat.entries)


def test_load_catalog_normalises_and_validates(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("hostname,category,tweet_count\nWWW.Example.COM,Center,5\nhttps://www.b.org/x,Left,\n")
    cat = load_catalog(p)
    assert cat.get("example.com") is C.CENTER and cat.entries["b.org"].tweet_count is None
    p.write_text("hostname,category\na.com,Center\na.com,Left\n")
    with pytest.raises(InputError, match="listed under"):
        load_catalog(p)
    p.write_text("hostname,category\na.com,Middle\n")
    with pytest.raises(InputError):
        load_catalog(p)
    p.write_text("host,category\na.com,Center\n")
    with pytest.raises(InputError, match="lacks"):
        load_catalog(p)
    p.write_text("hostname,category,tweet_count\na.com,Center,-3\n")
    with pytest.raises(InputError):
        load_catalog(p)


def test_prune_uses_strictly_more_popular_outlets():
    cat = catalog(a_com=(C.CENTER, 1000), b_com=(C.CENTER, 500), c_com=(C.CENTER, 14), d_com=(C.CENTER, 15),
                  e_com=(C.LEFT, 3))
    kept = prune_insignificant(cat, 0.01)
    # c: 14 < 0.01 * 1515; d: 15 >= 0.01 * 1500; e is alone in its category
    assert set(kept.entries) == {"a.com", "b.com", "d.com", "e.com"}
    assert kept.meta["pruned"] == ["c.com"]


def test_prune_needs_counts():
    with pytest.raises(InputError):
        prune_insignificant(catalog(a_com=(C.CENTER, None)))


@given(st.lists(st.tuples(st.sampled_from(CATEGORIES[:3]), st.integers(0, 10_000)), min_size=1, max_size=25),
       st.floats(0.0, 0.5))
def test_prune_is_idempotent(items, thr):
    cat = OutletCatalog({f"h{i}.com": Outlet(c, n) for i, (c, n) in enumerate(items)})
    once = prune_insignificant(cat, thr)
    twice = prune_insignificant(once, thr)
    assert dict(once.entries) == dict(twice.entries)


def test_modal_category_ties_are_seeded():
    links = {C.CENTER: 3, C.LEFT: 3, C.RIGHT: 1}
    draws = {assign_user_modal_category(links, s) for s in range(40)}
    assert draws == {C.CENTER, C.LEFT}
    assert assign_user_modal_category(links, 5, "u1") is assign_user_modal_category(links, 5, "u1")
    assert assign_user_modal_category({C.RIGHT: 2, C.LEFT: 1}, 0) is C.RIGHT
    assert assign_user_modal_category({}, 0) is None


@given(st.dictionaries(st.sampled_from(CATEGORIES), st.integers(0, 5), max_size=8), st.integers(0, 10**6),
       st.text(max_size=5))
def test_modal_category_is_pure(links, seed, user):
    assert assign_user_modal_category(links, seed, user) == assign_user_modal_category(dict(links), seed, user)


def test_modal_assignment_ignores_iteration_order():
    counts = {f"u{i}": {C.CENTER: 1, C.LEFT: 1} for i in range(30)}
    rev = dict(reversed(list(counts.items())))
    assert assign_modal_categories(counts, 9) == assign_modal_categories(rev, 9)


def test_category_flow_examples():
    same = {f"u{i}": C.CENTER for i in range(5)}
    flow = category_flow(same, same)
    assert flow[C.CENTER.index, C.CENTER.index] == 5 and flow.sum() == 5
    assert category_flow({"a": C.LEFT}, {"b": C.LEFT}).sum() == 0
    a = {"u1": C.CENTER, "u2": C.CENTER, "u3": C.CENTER, "u4": C.LEFT}
    b = {u: C.LEFT_LEANING for u in a}
    flow = category_flow(a, b)
    assert flow[C.CENTER.index, C.LEFT_LEANING.index] == 3
    assert flow[C.LEFT.index, C.LEFT_LEANING.index] == 1
    assert flow.sum() == 4


def _t(i, user, kind="original", urls=(), client="Twitter Web App"):
    return TweetRecord(f"t{i}", user, 0.0, kind, None if kind == "original" else "x", tuple(urls), client)


def test_user_counts_and_volumes():
    clf = URLClassifier(catalog(cnn_com=(C.LEFT_LEANING, 1), foxnews_com=(C.RIGHT, 1)))
    recs = [
        _t(1, "a", urls=["https://cnn.com/1", "https://foxnews.com/1"]),
        _t(2, "a", urls=["https://cnn.com/2"], client="Bot"),
        _t(3, "b", kind="retweet", urls=["https://foxnews.com/3"]),
        _t(4, "b", kind="reply", urls=["https://foxnews.com/4"]),
        _t(5, "c", urls=["https://unknown.org"]),
    ]
    counts = user_category_counts(recs, clf)
    assert counts == {"a": {C.LEFT_LEANING: 2, C.RIGHT: 1}, "b": {C.RIGHT: 1}}
    modal = assign_modal_categories(counts, 0)
    assert modal == {"a": C.LEFT_LEANING, "b": C.RIGHT}
    vols = {v.category: v for v in category_volumes(recs, clf, modal, lambda c: c != "Bot")}
    left, right = vols[C.LEFT_LEANING], vols[C.RIGHT]
    assert (left.n_tweets, right.n_tweets) == (2, 2)
    assert (left.n_users, right.n_users) == (1, 1)
    assert left.frac_tweets == 0.5 and left.frac_users == 0.5
    assert left.frac_tweets_unofficial == 0.5 and right.frac_tweets_unofficial == 0.0
    assert left.frac_users_unofficial == 1.0
    assert np.isnan(vols[C.CENTER].tweets_per_user)
