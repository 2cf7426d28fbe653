"""Stage orchestration: configuration, artifacts, manifests and the
two-period comparison report."""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import math
import platform
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping

import networkx
import numpy as np
import scipy
import yaml

from . import __version__
from ._backend import BACKEND
from .corpus import DEFAULT_OFFICIAL_CLIENTS, ClientClassifier, TweetRecord, parse_corpus, parse_time, write_corpus
from .errors import InputError, MissingArtifactError, NumericalError
from .ideology import (average_leaning, build_retweet_matrix, estimate_ideology, read_positions,
                       robustness_variant, write_positions)
from .influence import (collective_influence_out, pagerank_ranking, rank_overlap, read_ranking,
                        write_ranking)
from .media_catalog import (CATEGORIES, MediaCategory, URLClassifier, assign_modal_categories,
                            builtin_catalog, category_flow, category_volumes, load_catalog,
                            prune_insignificant, user_category_counts, write_catalog)
from .retweet_graph import build_category_graphs, degree_stats, read_graph, write_graph
from .shifts import (TYPES, load_labels, new_entrant_fraction, rank_shifts, type_shares,
                     write_shifts, write_type_shares)
from .similarity import (build_similarity, louvain, modularity, normalized_cut, retweet_count_vectors,
                         subsample_se, write_partition, write_similarity)
from .stats import dip_test, pearson_correlation, quote_retweet_ratio
from .synth import SynthConfig, generate_corpus, write_synth

log = logging.getLogger(__name__)

PERIOD_STAGES = ("ingest", "classify", "graph", "rank", "compare-ranks", "similarity", "ideology", "stats")
PAIR_STAGES = ("shifts", "report")
STAGES = PERIOD_STAGES + PAIR_STAGES + ("synth",)


# -- configuration -----------------------------------------------------------

def default_config() -> dict:
    text = resources.files("echoscope").joinpath("data/default_config.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def _merge(base: dict, upd: Mapping) -> dict:
    for k, v in upd.items():
        if isinstance(v, Mapping) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = copy.deepcopy(v)
    return base


def _resolve(p, root: Path):
    if p is None or (isinstance(p, str) and p.startswith("builtin:")):
        return p
    q = Path(p)
    return str(q if q.is_absolute() else root / q)


def load_config(path: str | Path | None = None, overrides: Mapping | None = None) -> dict:
    """Defaults, then the YAML file (relative paths resolve against its
    directory), then ``overrides``."""
    cfg = default_config()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise InputError(f"config file {path} not found")
        try:
            user = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise InputError(f"cannot parse config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise InputError(f"config {path} must be a mapping")
        unknown = set(user) - set(cfg)
        if unknown:
            raise InputError(f"unknown config section(s): {sorted(unknown)}")
        root = path.parent
        p = user.get("paths", {})
        if isinstance(p.get("corpus"), (str, list)):
            c = p["corpus"]
            p["corpus"] = [_resolve(x, root) for x in ([c] if isinstance(c, str) else c)]
        for key in ("catalog", "labels", "output"):
            if key in p:
                p[key] = _resolve(p[key], root)
        for key in ("period_a", "period_b", "labels_a", "labels_b"):
            if key in user.get("compare", {}):
                user["compare"][key] = _resolve(user["compare"][key], root)
        _merge(cfg, user)
    if overrides:
        _merge(cfg, overrides)
    if isinstance(cfg["paths"]["corpus"], str):
        cfg["paths"]["corpus"] = [cfg["paths"]["corpus"]]
    return cfg


def _categories(cfg: dict) -> list[MediaCategory]:
    cats = cfg["graph"]["categories"]
    if cats in (None, "all"):
        return list(CATEGORIES)
    return [MediaCategory.parse(c) for c in cats]


def _official(cfg: dict) -> ClientClassifier:
    lst = cfg.get("official_clients")
    return ClientClassifier(DEFAULT_OFFICIAL_CLIENTS if lst is None else lst)


# -- artifact helpers ----------------------------------------------------------

def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, MediaCategory):
        return obj.value
    return obj


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def load_json(path: Path) -> dict:
    if not path.exists():
        raise MissingArtifactError(f"missing artifact {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"missing upstream artifact {path}")
    return path


def _write_tsv(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_tsv(path: Path) -> list[dict]:
    with _require(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


class Context:
    """Per-stage bookkeeping of inputs read and outputs written."""

    def __init__(self, cfg: dict, stage: str):
        self.cfg = cfg
        self.stage = stage
        self.root = Path(cfg["paths"]["output"])
        self.dir = self.root / stage
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []

    def upstream(self, stage: str, name: str, root: Path | None = None) -> Path:
        p = _require((root or self.root) / stage / name)
        self.inputs[str(p)] = sha256(p)
        return p

    def external(self, p: str | Path) -> Path:
        p = Path(p)
        if not p.exists():
            raise InputError(f"input file {p} not found")
        self.inputs[str(p)] = sha256(p)
        return p

    def out(self, name: str) -> Path:
        p = self.dir / name
        self.outputs.append(p)
        return p

    def records(self, root: Path | None = None) -> tuple[TweetRecord, ...]:
        p = self.upstream("ingest", "records.jsonl", root)
        key = (str(p.resolve()), self.inputs[str(p)])
        if key not in _RECORDS:
            _RECORDS.clear()
            _RECORDS[key] = parse_corpus(p).records
        return _RECORDS[key]


# parsed ingest output keyed by (path, sha256); stages in one process share it
_RECORDS: dict[tuple[str, str], tuple[TweetRecord, ...]] = {}


STAGE_PARAMS = {
    "ingest": ("window", "official_clients"),
    "classify": ("classify", "official_clients"),
    "graph": ("graph",),
    "rank": ("rank",),
    "compare-ranks": ("rank",),
    "similarity": ("similarity",),
    "ideology": ("ideology", "official_clients"),
    "stats": ("stats",),
    "shifts": ("shifts", "compare"),
    "report": ("shifts", "compare", "stats"),
    "synth": ("synth",),
}


def params_of(cfg: dict, stage: str) -> dict:
    """Parameters recorded for a stage; ``threads`` is excluded because it
    never changes results."""
    out = {k: cfg.get(k) for k in STAGE_PARAMS[stage]}
    out["seed"] = cfg["seed"]
    return out


def _versions() -> dict:
    return {"echoscope": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "networkx": networkx.__version__, "backend": BACKEND}


def write_manifest(ctx: Context) -> Path:
    params = params_of(ctx.cfg, ctx.stage)
    blob = json.dumps(_clean(params), sort_keys=True).encode()
    manifest = {
        "stage": ctx.stage,
        "seed": ctx.cfg["seed"],
        "params": params,
        "params_hash": hashlib.sha256(blob).hexdigest(),
        "inputs": dict(sorted(ctx.inputs.items())),
        "outputs": {p.name: sha256(p) for p in sorted(ctx.outputs)},
        "versions": _versions(),
    }
    path = ctx.dir / "manifest.json"
    dump_json(manifest, path)
    return path


# -- per-period stages ----------------------------------------------------------

def stage_ingest(ctx: Context) -> None:
    cfg = ctx.cfg
    files = cfg["paths"]["corpus"]
    if not files:
        raise InputError("no corpus files configured (paths.corpus)")
    paths = [ctx.external(p) for p in files]
    window = cfg.get("window")
    if window is not None:
        if len(window) != 2:
            raise InputError("window must be [start, end]")
        window = (parse_time(window[0]), parse_time(window[1]))
    corpus = parse_corpus(paths, window)
    write_corpus(corpus.records, ctx.out("records.jsonl"))
    _write_tsv(ctx.out("diagnostics.tsv"), ["path", "line", "message"],
               ((d.path, d.line, d.message) for d in corpus.diagnostics))
    kinds: dict[str, int] = {}
    for r in corpus.records:
        kinds[r.kind] = kinds.get(r.kind, 0) + 1
    dump_json({"n_lines": corpus.n_lines, "n_records": len(corpus.records), "n_diagnostics": len(corpus.diagnostics),
               "kinds": dict(sorted(kinds.items())), "n_users": len({r.user_id for r in corpus.records}),
               "window": None if window is None else list(window)}, ctx.out("summary.json"))


def _catalog(ctx: Context):
    spec = ctx.cfg["paths"]["catalog"]
    if isinstance(spec, str) and spec.startswith("builtin:"):
        cat = builtin_catalog(spec.split(":", 1)[1])
    else:
        cat = load_catalog(ctx.external(spec))
    if ctx.cfg["classify"]["prune"]:
        cat = prune_insignificant(cat, ctx.cfg["classify"]["prune_threshold"])
    return cat


def stage_classify(ctx: Context) -> None:
    cfg = ctx.cfg
    records = ctx.records()
    catalog = _catalog(ctx)
    clf = URLClassifier(catalog)
    counts = user_category_counts(records, clf)
    modal = assign_modal_categories(counts, cfg["seed"])
    write_catalog(catalog, ctx.out("catalog.tsv"))
    users = sorted(counts)
    _write_tsv(ctx.out("user_categories.tsv"), ["user_id", *(c.value for c in CATEGORIES)],
               ([u, *(counts[u].get(c, 0) for c in CATEGORIES)] for u in users))
    _write_tsv(ctx.out("modal.tsv"), ["user_id", "category"], ((u, modal[u].value) for u in sorted(modal)))
    min_t = cfg["ideology"]["min_leaning_tweets"]
    rows = []
    for u in users:
        v = average_leaning(counts[u], min_t)
        if v is not None:
            rows.append((u, repr(v)))
    _write_tsv(ctx.out("leaning.tsv"), ["user_id", "leaning"], rows)
    vols = category_volumes(records, clf, modal, _official(cfg).is_official)
    fields = ["category", "n_tweets", "n_users", "frac_tweets", "frac_users", "tweets_per_user",
              "frac_tweets_unofficial", "frac_users_unofficial", "tweets_per_user_unofficial"]
    _write_tsv(ctx.out("volumes.tsv"), fields,
               ([v.category.value, *(_fmt(getattr(v, f)) for f in fields[1:])] for v in vols))


def stage_graph(ctx: Context) -> None:
    records = ctx.records()
    catalog = load_catalog(ctx.upstream("classify", "catalog.tsv"))
    graphs = build_category_graphs(records, catalog, _categories(ctx.cfg), ctx.cfg["graph"]["kinds"])
    rows = []
    for cat, g in graphs.items():
        write_graph(g, ctx.out(f"{cat.value}.edges.tsv"), ctx.out(f"{cat.value}.nodes.tsv"))
        s = degree_stats(g)
        rows.append([cat.value, *(_fmt(s[k]) for k in ("nodes", "edges", "mean_degree", "heterogeneity_in",
                                                       "heterogeneity_out", "max_in", "max_out", "total_weight"))])
    _write_tsv(ctx.out("degree_stats.tsv"), ["category", "nodes", "edges", "mean_degree", "heterogeneity_in",
                                             "heterogeneity_out", "max_in", "max_out", "total_weight"], rows)


def _load_graph(ctx: Context, cat: MediaCategory, root: Path | None = None):
    e = ctx.upstream("graph", f"{cat.value}.edges.tsv", root)
    n = ctx.upstream("graph", f"{cat.value}.nodes.tsv", root)
    return read_graph(e, n, cat.value)


def stage_rank(ctx: Context) -> None:
    rc = ctx.cfg["rank"]
    best: dict[str, tuple[int, str]] = {}
    for cat in _categories(ctx.cfg):
        g = _load_graph(ctx, cat)
        r = collective_influence_out(g, rc["radius"], rc["top_k"])
        write_ranking(r, ctx.out(f"{cat.value}.tsv"))
        for rank, (u, k) in enumerate(zip(r.order, r.k_out), start=1):
            if k > 0 and (u not in best or rank < best[u][0]):
                best[u] = (rank, cat.value)
    _write_tsv(ctx.out("influencers.tsv"), ["user_id", "best_rank", "category"],
               ((u, *best[u]) for u in sorted(best)))


def read_influencers(ctx: Context, root: Path | None = None) -> list[str]:
    return [row["user_id"] for row in _read_tsv(ctx.upstream("rank", "influencers.tsv", root))]


def stage_compare_ranks(ctx: Context) -> None:
    rc = ctx.cfg["rank"]
    rows = []
    for cat in _categories(ctx.cfg):
        ci = read_ranking(ctx.upstream("rank", f"{cat.value}.tsv"), rc["radius"])
        g = _load_graph(ctx, cat)
        if len(ci) == 0:
            rows.append([cat.value, "", "", rc["rbo_p"], 0])
            continue
        pr = pagerank_ranking(g, top_k=rc["top_k"], damping=rc["damping"])
        cmp = rank_overlap(list(ci.order), pr, p=rc["rbo_p"], depth=rc["top_k"])
        rows.append([cat.value, repr(cmp.rbo), repr(cmp.jaccard), cmp.p, cmp.depth])
    _write_tsv(ctx.out("comparison.tsv"), ["category", "rbo", "jaccard", "p", "depth"], rows)


def stage_similarity(ctx: Context) -> None:
    sc = ctx.cfg["similarity"]
    seed = ctx.cfg["seed"]
    infl = read_influencers(ctx)
    records = ctx.records()
    counts = retweet_count_vectors(records, infl, sc["kind"])
    net = build_similarity(counts, infl)
    part = louvain(net, seed=seed, resolution=sc["resolution"])
    write_similarity(net, ctx.out("similarity.tsv"))
    write_partition(part, net.influencers, ctx.out("partition.tsv"))
    q_mean, q_se = subsample_se(net, "modularity", sc["fraction"], sc["reps"], seed)
    c_mean, c_se = subsample_se(net, "normalized_cut", sc["fraction"], sc["reps"], seed)
    dump_json({
        "kind": sc["kind"],
        "n_influencers": net.size,
        "user_dimension": net.user_dimension,
        "excluded": list(net.excluded),
        "n_communities": part.n_communities,
        "modularity": modularity(net, part),
        "normalized_cut": normalized_cut(net, part),
        "modularity_subsample_mean": q_mean,
        "modularity_se": q_se,
        "normalized_cut_subsample_mean": c_mean,
        "normalized_cut_se": c_se,
        "fraction": sc["fraction"],
        "reps": sc["reps"],
        "seed": seed,
    }, ctx.out("metrics.json"))


def _read_leaning(ctx: Context, root: Path | None = None) -> dict[str, float]:
    return {row["user_id"]: float(row["leaning"]) for row in _read_tsv(ctx.upstream("classify", "leaning.tsv", root))}


def stage_ideology(ctx: Context) -> None:
    ic = ctx.cfg["ideology"]
    seed = ctx.cfg["seed"]
    infl = read_influencers(ctx)
    leaning = _read_leaning(ctx)
    records = ctx.records()
    mat = build_retweet_matrix(records, infl, ic["min_distinct"], official=_official(ctx.cfg))
    if ic["variant"]:
        mat = robustness_variant(mat, ic["variant"], ic["subsample_fraction"], seed)
    scale = estimate_ideology(mat, leaning, weighted_median=ic["weighted_median"], seed=seed)
    if ic["orientation_check"]:
        corr = scale.orientation_corr
        if corr is None or corr < ic["orientation_min"]:
            raise NumericalError(f"orientation check failed: correlation with average leaning is {corr}")
    write_positions(scale, ctx.out("users.tsv"), ctx.out("influencers.tsv"))
    dump_json({**scale.meta, "singular_value": scale.singular_value, "orientation_corr": scale.orientation_corr,
               "variant": ic["variant"], "dropped_influencers": mat.meta.get("dropped_influencers", []),
               "dropped_users": mat.meta.get("dropped_users", 0), "seed": seed}, ctx.out("meta.json"))


def stage_stats(ctx: Context) -> None:
    st = ctx.cfg["stats"]
    seed, threads = ctx.cfg["seed"], max(1, int(ctx.cfg.get("threads") or 1))
    users = read_positions(ctx.upstream("ideology", "users.tsv"))
    infl = read_positions(ctx.upstream("ideology", "influencers.tsv"))
    leaning = _read_leaning(ctx)
    records = ctx.records()
    out: dict[str, Any] = {"seed": seed, "B_null": st["B_null"], "B_boot": st["B_boot"], "level": st["level"]}
    text = []
    for name, pos in (("users", users), ("influencers", infl)):
        x = np.array([pos[k] for k in sorted(pos)])
        if x.size < 4:
            out[f"dip_{name}"] = None
            text.append(f"dip ({name}): not computed, n = {x.size}")
            continue
        res = dip_test(x, B_null=st["B_null"], seed=seed, B_boot=st["B_boot"], level=st["level"], threads=threads)
        out[f"dip_{name}"] = res.as_dict()
        text.append(f"dip ({name}): {res.format()}, seed = {seed}, B_boot = {res.B_boot}")
    common = sorted(set(users) & set(leaning))
    corr = None
    if len(common) >= 2:
        try:
            corr = pearson_correlation([users[u] for u in common], [leaning[u] for u in common])
        except NumericalError as exc:
            log.warning("leaning correlation undefined: %s", exc)
    out["leaning_correlation"] = corr
    out["leaning_n"] = len(common)
    text.append(f"correlation with average leaning: {'undefined' if corr is None else f'{corr:.4f}'} "
                f"(n = {len(common)})")
    qr = quote_retweet_ratio(records, users, infl)
    out["quote_retweet"] = {"table": qr.table(), "overall": qr.overall(),
                            "quotes": {f"{a}->{b}": v for (a, b), v in qr.quotes.items()},
                            "retweets": {f"{a}->{b}": v for (a, b), v in qr.retweets.items()}}
    for k, v in qr.table().items():
        text.append(f"quote/retweet {k}: {'undefined' if v is None else f'{v:.4f}'}")
    dump_json(out, ctx.out("stats.json"))
    ctx.out("stats.txt").write_text("\n".join(text) + "\n", encoding="utf-8")


# -- two-period stages ------------------------------------------------------------

def _period_roots(cfg: dict) -> tuple[Path, Path]:
    a, b = cfg["compare"]["period_a"], cfg["compare"]["period_b"]
    if not a or not b:
        raise InputError("compare.period_a and compare.period_b must both be set")
    return Path(a), Path(b)


def _rankings(ctx: Context, root: Path):
    out = {}
    for cat in _categories(ctx.cfg):
        out[cat] = read_ranking(ctx.upstream("rank", f"{cat.value}.tsv", root), ctx.cfg["rank"]["radius"])
    return out


def _labels(ctx: Context, key: str):
    p = ctx.cfg["compare"].get(key) or ctx.cfg["paths"].get("labels")
    if not p:
        return None
    return load_labels(ctx.external(p))


def _shift_tables(ctx: Context):
    ra, rb = _period_roots(ctx.cfg)
    rank_a, rank_b = _rankings(ctx, ra), _rankings(ctx, rb)
    top_n = ctx.cfg["shifts"]["top_n"]
    shifts = rank_shifts(rank_a, rank_b, top_n)
    shares = {}
    diags: list = []
    for key, ranks in (("a", rank_a), ("b", rank_b)):
        lab = _labels(ctx, f"labels_{key}")
        if lab is not None:
            shares[key] = type_shares(lab, ranks, ctx.cfg["shifts"]["type_top_n"], diags)
    return rank_a, rank_b, shifts, shares, diags


def stage_shifts(ctx: Context) -> None:
    _, _, shifts, shares, diags = _shift_tables(ctx)
    write_shifts(shifts, ctx.out("rank_shifts.tsv"))
    for key, sh in shares.items():
        write_type_shares(sh, ctx.out(f"type_shares_{key}.tsv"))
    has_b = any(s.rank_2 is not None for s in shifts)
    dump_json({"top_n": ctx.cfg["shifts"]["top_n"], "n_users": len(shifts),
               "new_entrant_fraction": new_entrant_fraction(shifts) if has_b else None,
               "unlabeled": [d.message for d in diags]}, ctx.out("summary.json"))


def _direction(a, b) -> str | None:
    if a is None or b is None:
        return None
    return "increase" if b > a else "decrease" if b < a else "unchanged"


def _change(a, b) -> dict:
    return {"a": a, "b": b, "delta": None if a is None or b is None else b - a, "direction": _direction(a, b)}


def _read_modal(ctx: Context, root: Path) -> dict[str, MediaCategory]:
    return {r["user_id"]: MediaCategory(r["category"]) for r in _read_tsv(ctx.upstream("classify", "modal.tsv", root))}


def stage_report(ctx: Context) -> None:
    ra, rb = _period_roots(ctx.cfg)
    periods = {}
    for key, root in (("a", ra), ("b", rb)):
        summary = load_json(ctx.upstream("ingest", "summary.json", root))
        if summary["n_records"] == 0:
            raise InputError(f"period {key.upper()} ({root}) has no records")
        periods[key] = {
            "root": str(root),
            "n_records": summary["n_records"],
            "n_users": summary["n_users"],
            "stats": load_json(ctx.upstream("stats", "stats.json", root)),
            "similarity": load_json(ctx.upstream("similarity", "metrics.json", root)),
            "influencers": read_influencers(ctx, root),
        }
    warnings = []
    ia, ib = set(periods["a"]["influencers"]), set(periods["b"]["influencers"])
    if ia != ib:
        warnings.append(f"influencer universes differ: {len(ia & ib)} shared, {len(ia - ib)} only in A, "
                        f"{len(ib - ia)} only in B; rank shifts use each period's own lists")

    def dip(key, who):
        d = periods[key]["stats"].get(f"dip_{who}")
        return None if d is None else d["statistic"]

    def sim(key, name):
        return periods[key]["similarity"][name]

    changes = {
        "dip_users": _change(dip("a", "users"), dip("b", "users")),
        "dip_influencers": _change(dip("a", "influencers"), dip("b", "influencers")),
        "modularity": _change(sim("a", "modularity"), sim("b", "modularity")),
        "normalized_cut": _change(sim("a", "normalized_cut"), sim("b", "normalized_cut")),
        "leaning_correlation": _change(periods["a"]["stats"]["leaning_correlation"],
                                       periods["b"]["stats"]["leaning_correlation"]),
    }
    rank_a, rank_b, shifts, shares, diags = _shift_tables(ctx)
    if diags:
        warnings.append(f"{len(diags)} top user(s) without a type label counted as other")
    has_b = any(s.rank_2 is not None for s in shifts)
    flow = category_flow(_read_modal(ctx, ra), _read_modal(ctx, rb))
    top_n = ctx.cfg["shifts"]["top_n"]
    report = {
        "periods": {k: {"root": v["root"], "n_records": v["n_records"], "n_users": v["n_users"],
                        "dip_users": v["stats"].get("dip_users"),
                        "dip_influencers": v["stats"].get("dip_influencers"),
                        "modularity": sim(k, "modularity"), "modularity_se": sim(k, "modularity_se"),
                        "normalized_cut": sim(k, "normalized_cut"), "normalized_cut_se": sim(k, "normalized_cut_se"),
                        "n_communities": sim(k, "n_communities"),
                        "quote_retweet": v["stats"]["quote_retweet"],
                        "leaning_correlation": v["stats"]["leaning_correlation"]}
                    for k, v in periods.items()},
        "changes": changes,
        "ci_top": {k: {c.value: list(r[c].order[:top_n]) for c in r} for k, r in (("a", rank_a), ("b", rank_b))},
        "rank_shifts": {
            "top_n": top_n,
            "n_users": len(shifts),
            "new_entrant_fraction": new_entrant_fraction(shifts) if has_b else None,
            "rows": [[s.user_id, s.rank_1, s.category_1, s.rank_2, s.category_2] for s in shifts],
        },
        "type_shares": {k: {c.value: ts.shares for c, ts in sh.items()} for k, sh in shares.items()},
        "category_flow": {"categories": [c.value for c in CATEGORIES], "counts": flow.tolist()},
        "warnings": warnings,
    }
    for w in warnings:
        log.warning(w)
    dump_json(report, ctx.out("report.json"))
    ctx.out("report.md").write_text(render_report(report), encoding="utf-8")


def _f(x, digits=4) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def render_report(rep: dict) -> str:
    lines = ["# Period comparison", ""]
    lines += ["| metric | A | B | delta | direction |", "|---|---|---|---|---|"]
    for name, ch in rep["changes"].items():
        lines.append(f"| {name} | {_f(ch['a'])} | {_f(ch['b'])} | {_f(ch['delta'])} | {ch['direction'] or 'n/a'} |")
    lines.append("")
    for key in ("a", "b"):
        p = rep["periods"][key]
        lines.append(f"## Period {key.upper()} ({p['n_records']} records, {p['n_users']} users)")
        for who in ("users", "influencers"):
            d = p[f"dip_{who}"]
            if d is not None:
                pct = round(d["level"] * 100)
                lines.append(f"- dip ({who}): D = {d['statistic']:.4f} ({pct}% CI: [{d['ci_low']:.4f},"
                             f"{d['ci_high']:.4f}]), p = {d['p_value']:.3g}, n = {d['n']}")
        lines.append(f"- modularity: {_f(p['modularity'])} (SE = {_f(p['modularity_se'])}), "
                     f"{p['n_communities']} communities")
        lines.append(f"- normalized cut: {_f(p['normalized_cut'])} (SE = {_f(p['normalized_cut_se'])})")
        qt = p["quote_retweet"]["table"]
        lines.append("- quote/retweet: " + ", ".join(f"{k} {_f(v)}" for k, v in qt.items()))
        lines.append("")
    rs = rep["rank_shifts"]
    lines.append(f"## Rank shifts (top {rs['top_n']})")
    lines.append(f"- users in either top list: {rs['n_users']}; new entrants in B: {_f(rs['new_entrant_fraction'], 3)}")
    lines.append("")
    lines.append("## Category flow (rows A, columns B)")
    cats = rep["category_flow"]["categories"]
    lines.append("| | " + " | ".join(cats) + " |")
    lines.append("|---" * (len(cats) + 1) + "|")
    for c, row in zip(cats, rep["category_flow"]["counts"]):
        lines.append(f"| {c} | " + " | ".join(str(v) for v in row) + " |")
    if rep["type_shares"]:
        lines += ["", "## Influencer types"]
        for key, sh in rep["type_shares"].items():
            for cat, shares in sh.items():
                lines.append(f"- {key.upper()} {cat}: " + ", ".join(f"{t} {shares[t]:.2f}" for t in TYPES))
    if rep["warnings"]:
        lines += ["", "## Warnings"] + [f"- {w}" for w in rep["warnings"]]
    return "\n".join(lines) + "\n"


def stage_synth(ctx: Context) -> None:
    s = ctx.cfg["synth"]
    seed = ctx.cfg["seed"] if s.get("seed") is None else s["seed"]
    sc = generate_corpus(SynthConfig(
        n_users=int(s["users"]), n_influencers=int(s["influencers"]), epsilon=float(s["epsilon"]),
        n_amplifiers=int(s["amplifiers"]), quote_fraction=float(s["quote_fraction"]),
        unofficial_fraction=float(s["unofficial_fraction"]), side_split=float(s["side_split"]), seed=int(seed)))
    for p in write_synth(sc, ctx.dir).values():
        ctx.outputs.append(p)
    dump_json(sc.config.to_dict(), ctx.out("synth_config.json"))


STAGE_FUNCS: dict[str, Callable[[Context], None]] = {
    "ingest": stage_ingest,
    "classify": stage_classify,
    "graph": stage_graph,
    "rank": stage_rank,
    "compare-ranks": stage_compare_ranks,
    "similarity": stage_similarity,
    "ideology": stage_ideology,
    "stats": stage_stats,
    "shifts": stage_shifts,
    "report": stage_report,
    "synth": stage_synth,
}


def run_stage(stage: str, cfg: dict) -> Path:
    """Run one stage, write its artifacts and manifest; returns the stage dir."""
    if stage not in STAGE_FUNCS:
        raise InputError(f"unknown stage {stage!r}")
    ctx = Context(cfg, stage)
    ctx.dir.mkdir(parents=True, exist_ok=True)
    log.info("stage %s -> %s", stage, ctx.dir)
    STAGE_FUNCS[stage](ctx)
    write_manifest(ctx)
    return ctx.dir


def run_all(cfg: dict, stages=PERIOD_STAGES) -> Path:
    for s in stages:
        run_stage(s, cfg)
    return Path(cfg["paths"]["output"])
