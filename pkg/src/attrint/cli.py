"""``attrint`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import attrsim, encoder, evaluation, interaction
from .coverage import HeterogenizeConfig, heterogenize, profile, write_histogram
from .errors import AttrIntError, StageError
from .kg import load_alignment, load_kg, load_links, write_kg, write_links
from .matrix import read_dense, read_sparse, write_dense, write_sparse
from .pipeline import ExperimentConfig, parse_ratio, run_pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _graph_args(p, links=True):
    p.add_argument("--data", metavar="DIR", help="OpenEA-style directory (rel_triples_1, attr_triples_1, ...)")
    p.add_argument("--kg1", nargs=2, metavar=("REL", "ATTR"), help="first graph's triple files")
    p.add_argument("--kg2", nargs=2, metavar=("REL", "ATTR"), help="second graph's triple files")
    if links:
        p.add_argument("--links", help="gold links file (default: DIR/ent_links)")


def _load_graphs(args):
    if args.kg1 and args.kg2:
        kg1, kg2 = load_kg(*args.kg1), load_kg(*args.kg2)
    elif args.data:
        d = Path(args.data)
        kg1 = load_kg(d / "rel_triples_1", d / "attr_triples_1")
        kg2 = load_kg(d / "rel_triples_2", d / "attr_triples_2")
    else:
        raise _UsageError("give --data DIR or both --kg1 and --kg2")
    return kg1, kg2


def _links_path(args):
    if getattr(args, "links", None):
        return Path(args.links)
    if args.data:
        return Path(args.data) / "ent_links"
    raise _UsageError("give --links or --data")


class _UsageError(Exception):
    pass


def _pairs_from(files, kg1, kg2):
    pairs = []
    for f in files:
        pairs += load_links(f, kg1, kg2)
    return pairs


def _axes(pairs):
    return sorted({s for s, _ in pairs}), sorted({t for _, t in pairs})


def _norm_options(args):
    return attrsim.NormalizeOptions(strip_datatype=args.strip_datatype, strip_language=args.strip_language)


def cmd_ingest(args):
    kg = load_kg(args.rel, args.attr)
    if args.report:
        text = "".join(f"{k}\t{v}\n" for k, v in kg.stats().items())
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)


def cmd_split(args):
    kg1, kg2 = _load_graphs(args)
    aset = load_alignment(_links_path(args), kg1, kg2, parse_ratio(args.ratio), args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "valid", "test"):
        write_links(out / f"links.{name}", getattr(aset, name), kg1, kg2)
    print(f"train={len(aset.train)} valid={len(aset.valid)} test={len(aset.test)}")


def cmd_coverage(args):
    kg1, kg2 = _load_graphs(args)
    pairs = load_links(_links_path(args), kg1, kg2)
    prof = profile(kg1, kg2, pairs)
    write_histogram(prof, args.out)
    if args.pairs_out:
        with open(args.pairs_out, "w", encoding="utf-8", newline="\n") as fh:
            for (e1, e2), c in sorted(prof.per_pair.items()):
                fh.write(f"{kg1.entities.surface(e1)}\t{kg2.entities.surface(e2)}\t{c!r}\n")
    if prof.degenerate:
        logging.getLogger(__name__).warning("%d pairs have an empty neighbourhood", len(prof.degenerate))


def cmd_heterogenize(args):
    kg1, kg2 = _load_graphs(args)
    pairs = load_links(_links_path(args), kg1, kg2)
    cfg = HeterogenizeConfig(args.target, args.min_degree, args.seed, not args.no_alternate)
    new1, new2, log = heterogenize(kg1, kg2, pairs, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_kg(new1, out / "rel_triples_1", out / "attr_triples_1")
    write_kg(new2, out / "rel_triples_2", out / "attr_triples_2")
    write_links(out / "ent_links", pairs, kg1, kg2)
    log.write(out / "removal_log.tsv", kg1, kg2)
    write_histogram(profile(kg1, kg2, pairs), out / "coverage_before.tsv")
    write_histogram(profile(new1, new2, pairs), out / "coverage_after.tsv")
    print(f"removed {len(log.removed)} triples; {len(log.unreachable)} pairs above target")


def cmd_attr_sim(args):
    kg1, kg2 = _load_graphs(args)
    rows, cols = _axes(_pairs_from(args.pairs, kg1, kg2))
    m = attrsim.build_attr_matrix(kg1, kg2, rows, cols, args.mode, args.combiner,
                                  _norm_options(args), args.min_frequency)
    write_sparse(m, args.out, kg1, kg2)
    print(f"{m.data.nnz} scored pairs over {m.shape[0]}x{m.shape[1]}")


def cmd_encode_baseline(args):
    kg1, kg2 = _load_graphs(args)
    rows, cols = _axes(_pairs_from(args.pairs, kg1, kg2))
    write_dense(encoder.baseline_literal_encoder(kg1, kg2, rows, cols), args.out, kg1, kg2)


def cmd_import_matrix(args):
    kg1, kg2 = _load_graphs(args)
    if args.easim:
        m = read_dense(args.easim, kg1, kg2)
    else:
        if not (args.scores and args.rows and args.cols):
            raise _UsageError("give --easim FILE, or --scores with --rows and --cols")
        scores = np.load(args.scores) if args.scores.endswith(".npy") else np.loadtxt(args.scores, ndmin=2)
        row_names = Path(args.rows).read_text(encoding="utf-8").splitlines()
        col_names = Path(args.cols).read_text(encoding="utf-8").splitlines()
        m = encoder.import_scores(scores, row_names, col_names, kg1, kg2)
    write_dense(m, args.out, kg1, kg2)
    print(f"imported {m.shape[0]}x{m.shape[1]} matrix")


def _fusion_inputs(args):
    kg1, kg2 = _load_graphs(args)
    s_ea = read_dense(args.ea, kg1, kg2)
    s_at = read_sparse(args.at, kg1, kg2)
    return kg1, kg2, s_ea, s_at


def cmd_combine(args):
    kg1, kg2, s_ea, s_at = _fusion_inputs(args)
    if args.method == "ps":
        s_at = s_at.reindex(s_ea.rows, s_ea.cols)
        if not args.no_normalize:
            s_ea = encoder.minmax_to_frequency(s_ea)
        else:
            s_ea.normalized = True
        combined = interaction.ps_combine(s_ea, s_at, interaction.PsConfig(args.c_ea, args.c_at))
        write_dense(combined, args.out, kg1, kg2)
    else:
        test = load_links(args.pairs, kg1, kg2)
        sources, targets = _axes(test)
        predictions = evaluation.top1(s_ea, sources, targets)
        corrected = interaction.rc_combine(predictions, s_at.reindex(sources, targets),
                                           interaction.RcConfig(args.tau, args.margin))
        write_links(args.out, sorted(corrected.items()), kg1, kg2)
        changed = sum(1 for s in predictions if predictions[s] != corrected[s])
        print(f"overrode {changed} of {len(predictions)} predictions; "
              f"hits@1 {evaluation.metrics_top1(corrected, test):.4f}")


def cmd_grid_search(args):
    kg1, kg2, s_ea, s_at = _fusion_inputs(args)
    s_at = s_at.reindex(s_ea.rows, s_ea.cols)
    s_ea = encoder.minmax_to_frequency(s_ea)
    valid = load_links(args.valid, kg1, kg2)
    result = interaction.grid_search(s_ea, s_at, valid, interaction.parse_grid(args.grid))
    if args.out:
        Path(args.out).write_text(result.to_tsv(), encoding="utf-8")
    print(f"best c_ea={result.c_ea} c_at={result.c_at} hits@1={result.hits1:.4f}")


def cmd_evaluate(args):
    kg1, kg2 = _load_graphs(args)
    test = load_links(args.links, kg1, kg2)
    ks = tuple(int(k) for k in args.k.split(","))
    if args.predictions:
        preds = dict(load_links(args.predictions, kg1, kg2, one_to_one=False))
        rep = evaluation.RankingReport({1: evaluation.metrics_top1(preds, test)}, None, {}, {"n": len(test)})
    else:
        m = read_dense(args.matrix, kg1, kg2)
        rep = evaluation.evaluate(m, test, ks, bidirectional=args.bidirectional)
    if args.out:
        rep.write(args.out)
    print(evaluation.format_table([(args.name, rep)], ks if not args.predictions else (1,)))


def cmd_run(args):
    cfg = ExperimentConfig.from_file(args.config)
    if args.output_dir:
        cfg.output_dir = str(Path(args.output_dir).resolve())
    reports, grid = run_pipeline(cfg, force=args.force)
    ks = tuple(int(k) for k in cfg.ks.split(","))
    print(f"config {cfg.config_hash}")
    if grid is not None:
        print(f"grid search: c_ea={grid.c_ea} c_at={grid.c_at} valid hits@1={grid.hits1:.4f}")
    names = {"encoder": "encoder", "rc": "Attr-Int(RC)", "ps": "Attr-Int(PS)"}
    print(evaluation.format_table([(names[k], reports[k]) for k in ("encoder", "rc", "ps") if k in reports], ks))


def build_parser():
    parser = _Parser(prog="attrint", description="Attribute-interaction entity alignment toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load triple files and report statistics")
    p.add_argument("--rel", required=True)
    p.add_argument("--attr", required=True)
    p.add_argument("--report", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="shuffle and partition gold links")
    _graph_args(p)
    p.add_argument("--ratio", default="2:1:7")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("coverage", help="coverage-rate histogram of gold pairs")
    _graph_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--pairs-out")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("heterogenize", help="remove relation triples to lower coverage")
    _graph_args(p)
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--min-degree", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--no-alternate", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_heterogenize)

    def norm_flags(p):
        p.add_argument("--strip-datatype", action="store_true")
        p.add_argument("--strip-language", action="store_true")

    p = sub.add_parser("attr-sim", help="sparse attribute similarity matrix")
    _graph_args(p, links=False)
    p.add_argument("--pairs", nargs="+", required=True, help="links files whose entities form rows/cols")
    p.add_argument("--mode", choices=attrsim.MODES, default="noisy-or")
    p.add_argument("--combiner", choices=attrsim.COMBINERS, default="product")
    p.add_argument("--min-frequency", type=float, default=0.0)
    norm_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attr_sim)

    p = sub.add_parser("encode-baseline", help="character-trigram name similarity matrix")
    _graph_args(p, links=False)
    p.add_argument("--pairs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode_baseline)

    p = sub.add_parser("import-matrix", help="convert an external encoder's scores to EASIM")
    _graph_args(p, links=False)
    p.add_argument("--easim")
    p.add_argument("--scores", help=".npy or whitespace-separated text matrix")
    p.add_argument("--rows", help="source surfaces, one per line")
    p.add_argument("--cols", help="target surfaces, one per line")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_matrix)

    p = sub.add_parser("combine", help="fuse encoder and attribute matrices")
    csub = p.add_subparsers(dest="method", required=True)
    ps = csub.add_parser("ps", help="belief revision with fixed confidences")
    rc = csub.add_parser("rc", help="result correction of encoder top-1 predictions")
    for q in (ps, rc):
        _graph_args(q, links=False)
        q.add_argument("--ea", required=True)
        q.add_argument("--at", required=True)
        q.add_argument("--out", required=True)
        q.set_defaults(func=cmd_combine)
    ps.add_argument("--c-ea", type=float, required=True)
    ps.add_argument("--c-at", type=float, required=True)
    ps.add_argument("--no-normalize", action="store_true", help="encoder scores already lie in [0, 1]")
    rc.add_argument("--pairs", required=True, help="test links (candidate pool and scoring)")
    rc.add_argument("--tau", type=float, default=0.9)
    rc.add_argument("--margin", type=float, default=0.0)

    p = sub.add_parser("grid-search", help="search PS confidences on validation pairs")
    _graph_args(p, links=False)
    p.add_argument("--ea", required=True)
    p.add_argument("--at", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--grid", default="0.05:0.95:0.05")
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("evaluate", help="Hits@k and MRR of a matrix or top-1 predictions")
    _graph_args(p, links=False)
    p.add_argument("--links", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--matrix")
    group.add_argument("--predictions")
    p.add_argument("--k", default="1,10")
    p.add_argument("--bidirectional", action="store_true")
    p.add_argument("--name", default="result")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.add_argument("--force", action="store_true", help="overwrite results of a different config")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"attrint: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"attrint: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, (AttrIntError, OSError, ValueError)) else EXIT_INTERNAL
    except (AttrIntError, OSError, ValueError) as exc:
        print(f"attrint: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"attrint: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
