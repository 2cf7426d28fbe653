"""Command-line entry point: ``echoscope <stage> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .errors import EchoscopeError
from .pipeline import PERIOD_STAGES, load_config, run_all, run_stage

log = logging.getLogger("echoscope")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--config", "-c", help="YAML configuration file")
    g.add_argument("--output", "-o", help="output directory (paths.output)")
    g.add_argument("--seed", type=int, help="global seed")
    g.add_argument("--threads", type=int, help="worker threads for resampling (results do not depend on it)")
    g.add_argument("--verbose", "-v", action="count", default=0)


def _period_opts(p):
    p.add_argument("--input", nargs="+", help="corpus file(s)")
    p.add_argument("--from", dest="t_from", help="window start (epoch seconds or ISO date)")
    p.add_argument("--to", dest="t_to", help="window end")
    p.add_argument("--official-clients", nargs="+", help="official client names")
    p.add_argument("--catalog", help="catalog file or builtin:2016 / builtin:2020")
    p.add_argument("--prune", action="store_true", default=None, help="drop insignificant outlets")
    p.add_argument("--category", nargs="+", help="media categories to build (default: all)")
    p.add_argument("--kinds", nargs="+", choices=["retweet", "quote"], help="interaction kinds forming edges")
    p.add_argument("--radius", type=int, help="CI ball radius")
    p.add_argument("--top-k", type=int, help="ranking length per category")
    p.add_argument("--damping", type=float, help="PageRank damping")
    p.add_argument("--rbo-p", type=float, help="RBO persistence")
    p.add_argument("--kind", choices=["retweet", "quote"], help="similarity interaction kind")
    p.add_argument("--fraction", type=float, help="subsample fraction for standard errors")
    p.add_argument("--reps", type=int, help="subsample repetitions")
    p.add_argument("--min-distinct", type=int, help="minimum distinct influencers per user")
    p.add_argument("--variant", choices=["drop_ones", "log_weights", "subsample"], help="robustness variant")
    p.add_argument("--orientation-check", action="store_true", default=None,
                   help="fail unless the axis correlates with average leaning")
    p.add_argument("--b-null", type=int, help="Monte Carlo null samples for the dip test")
    p.add_argument("--b-boot", type=int, help="bootstrap resamples")


def _pair_opts(p):
    p.add_argument("--period-a", help="output directory of the earlier period")
    p.add_argument("--period-b", help="output directory of the later period")
    p.add_argument("--labels", help="influencer type labels for both periods")
    p.add_argument("--labels-a")
    p.add_argument("--labels-b")
    p.add_argument("--top-n", type=int, help="top-N cut for rank shifts")


def _synth_opts(p):
    p.add_argument("--epsilon", type=float)
    p.add_argument("--users", type=int)
    p.add_argument("--influencers", type=int)
    p.add_argument("--amplifiers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="echoscope", description="Echo-chamber analysis of news-sharing corpora.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "ingest": "parse the corpus into normalised records",
        "classify": "classify links and users by media category",
        "graph": "build per-category retweet networks",
        "rank": "rank influencers by Collective Influence",
        "compare-ranks": "compare CI and PageRank rankings (RBO, Jaccard)",
        "similarity": "influencer similarity network, communities, separation",
        "ideology": "latent ideology by correspondence analysis",
        "stats": "dip tests, leaning correlation, quote/retweet ratios",
        "run-all": "run every per-period stage in order",
        "shifts": "rank shifts and type shares between two periods",
        "report": "compare two processed periods",
        "synth": "generate a synthetic two-sided corpus",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name in PERIOD_STAGES or name == "run-all":
            _period_opts(p)
        elif name == "synth":
            _synth_opts(p)
        else:
            _pair_opts(p)
    return ap


def overrides_from_args(a: argparse.Namespace) -> dict:
    o: dict = {}

    def put(path: str, value):
        if value is None:
            return
        d = o
        *head, last = path.split(".")
        for k in head:
            d = d.setdefault(k, {})
        d[last] = value

    g = lambda name: getattr(a, name, None)  # noqa: E731
    put("seed", a.seed)
    put("threads", a.threads)
    put("paths.output", a.output)
    put("paths.corpus", g("input"))
    put("paths.catalog", g("catalog"))
    put("official_clients", g("official_clients"))
    if g("t_from") is not None or g("t_to") is not None:
        if g("t_from") is None or g("t_to") is None:
            raise SystemExit("--from and --to must be given together")
        put("window", [a.t_from, a.t_to])
    put("classify.prune", g("prune"))
    put("graph.categories", g("category"))
    put("graph.kinds", g("kinds"))
    put("rank.radius", g("radius"))
    put("rank.top_k", g("top_k"))
    put("rank.damping", g("damping"))
    put("rank.rbo_p", g("rbo_p"))
    put("similarity.kind", g("kind"))
    put("similarity.fraction", g("fraction"))
    put("similarity.reps", g("reps"))
    put("ideology.min_distinct", g("min_distinct"))
    put("ideology.variant", g("variant"))
    put("ideology.orientation_check", g("orientation_check"))
    put("stats.B_null", g("b_null"))
    put("stats.B_boot", g("b_boot"))
    put("compare.period_a", g("period_a"))
    put("compare.period_b", g("period_b"))
    put("compare.labels_a", g("labels_a"))
    put("compare.labels_b", g("labels_b"))
    put("paths.labels", g("labels"))
    put("shifts.top_n", g("top_n"))
    put("synth.epsilon", g("epsilon"))
    put("synth.users", g("users"))
    put("synth.influencers", g("influencers"))
    put("synth.amplifiers", g("amplifiers"))
    if a.command == "synth" and a.seed is not None:
        put("synth.seed", a.seed)
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, overrides_from_args(args))
        if args.command == "run-all":
            out = run_all(cfg)
        else:
            out = run_stage(args.command, cfg)
    except EchoscopeError as exc:
        print(f"echoscope: error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
