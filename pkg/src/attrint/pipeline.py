"""End-to-end experiment: ingest, split, (heterogenize), attribute matrix,
encoder matrix, PS and/or RC fusion, evaluation.

Configuration is a flat ``key = value`` text file; relative paths are taken
relative to the file.  Every report carries the hash of the canonical config
text, and ``manifest.json`` in the output directory records the hash plus a
checksum of every artifact.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import attrsim, encoder, evaluation, interaction
from .coverage import HeterogenizeConfig, heterogenize, profile, write_histogram
from .errors import AttrIntError, ConfigError, StageError
from .kg import load_alignment, load_kg, write_kg, write_links
from .matrix import write_dense, write_sparse

logger = logging.getLogger(__name__)

OPENEA_FILES = {
    "kg1_rel": "rel_triples_1",
    "kg1_attr": "attr_triples_1",
    "kg2_rel": "rel_triples_2",
    "kg2_attr": "attr_triples_2",
    "links": "ent_links",
}
PATH_KEYS = tuple(OPENEA_FILES)
METHODS = ("both", "ps", "rc")


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_ratio(text):
    parts = tuple(int(x) for x in text.replace(",", ":").split(":"))
    if len(parts) != 3 or min(parts) <= 0:
        raise ValueError(f"ratio must be three positive integers like 2:1:7, got {text!r}")
    return parts


@dataclass
class ExperimentConfig:
    kg1_rel: str = ""
    kg1_attr: str = ""
    kg2_rel: str = ""
    kg2_attr: str = ""
    links: str = ""
    data_dir: str = ""
    ratio: str = "2:1:7"
    seed: int = 42
    heterogenize: bool = False
    target_max_coverage: float = 0.5
    min_degree: int = 1
    alternate_sides: bool = True
    attr_mode: str = "noisy-or"
    combiner: str = "product"
    strip_datatype: bool = False
    strip_language: bool = False
    min_frequency: float = 0.0
    encoder: str = "baseline"
    method: str = "both"
    grid: str = "0.05:0.95:0.05"
    c_ea: float = 0.0
    c_at: float = 0.0
    tau: float = 0.9
    margin: float = 0.0
    ks: str = "1,10"
    output_dir: str = "out"
    base_dir: str = "."

    @classmethod
    def from_text(cls, text, base_dir="."):
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip().replace("-", "_"), value.strip()
            if not sep or key not in known or key == "base_dir":
                raise ConfigError(f"config line {lineno}: unknown or malformed entry {raw!r}")
            typ = known[key]
            try:
                if typ in (bool, "bool"):
                    values[key] = _parse_bool(value)
                elif typ in (int, "int"):
                    values[key] = int(value)
                elif typ in (float, "float"):
                    values[key] = float(value)
                else:
                    values[key] = value
            except ValueError as exc:
                raise ConfigError(f"config line {lineno}: {exc}") from None
        cfg = cls(base_dir=str(base_dir), **values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, base_dir=path.parent)

    def validate(self):
        try:
            parse_ratio(self.ratio)
            interaction.parse_grid(self.grid)
            [int(k) for k in self.ks.split(",")]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.attr_mode not in attrsim.MODES:
            raise ConfigError(f"attr_mode must be one of {attrsim.MODES}")
        if self.method != "rc" and self.attr_mode == "sum":
            raise ConfigError("PS needs frequencies in [0, 1]; use attr_mode noisy-or or clamp")
        if self.combiner not in attrsim.COMBINERS:
            raise ConfigError(f"combiner must be one of {attrsim.COMBINERS}")
        if (self.c_ea > 0) != (self.c_at > 0):
            raise ConfigError("set both c_ea and c_at, or neither to grid-search them")

    def canonical_text(self):
        """Stable text form used for hashing; excludes where outputs go."""
        d = asdict(self)
        d.pop("output_dir")
        d.pop("base_dir")
        return "".join(f"{k}={d[k]}\n" for k in sorted(d))

    @property
    def config_hash(self):
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]

    def path(self, key):
        value = getattr(self, key)
        if not value and self.data_dir:
            value = str(Path(self.data_dir) / OPENEA_FILES[key])
        if not value:
            raise ConfigError(f"no path configured for {key} (set it or data_dir)")
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def out(self):
        p = Path(self.output_dir)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def preflight(self):
        paths = {k: self.path(k) for k in PATH_KEYS}
        if self.encoder != "baseline":
            paths["encoder"] = self.path_of(self.encoder)
        missing = [f"{k}={p}" for k, p in paths.items() if not p.is_file()]
        if missing:
            raise ConfigError("missing input files: " + ", ".join(missing))

    def path_of(self, value):
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _Manifest:
    def __init__(self, cfg, force=False):
        self.path = cfg.out / "manifest.json"
        self.cfg = cfg
        if self.path.exists() and not force:
            try:
                old = json.loads(self.path.read_text(encoding="utf-8"))
            except ValueError:
                old = {}
            if old.get("config_hash") not in (None, cfg.config_hash):
                raise ConfigError(
                    f"{cfg.out} holds results of config {old.get('config_hash')}, not {cfg.config_hash}; "
                    "use a fresh output directory or force")
        self.stages = []
        self.files = {}

    def record(self, stage, *paths):
        self.stages.append(stage)
        for p in paths:
            self.files[str(Path(p).relative_to(self.cfg.out))] = _sha256(p)

    def write(self, status, failed_stage=None):
        doc = {
            "config_hash": self.cfg.config_hash,
            "config": self.cfg.canonical_text(),
            "status": status,
            "stages": self.stages,
            "files": dict(sorted(self.files.items())),
        }
        if failed_stage:
            doc["failed_stage"] = failed_stage
            doc["stale"] = sorted(self.files)
        self.path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_pipeline(cfg, force=False):
    """Run every stage; return ``{name: RankingReport}`` plus the grid result (or None)."""
    cfg.validate()
    cfg.preflight()
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(cfg, force=force)
    manifest.write("running")
    meta = {"config_hash": cfg.config_hash}
    ks = tuple(int(k) for k in cfg.ks.split(","))
    state = {}

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            manifest.write("failed", failed_stage=name)
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc

    def ingest():
        kg1 = load_kg(cfg.path("kg1_rel"), cfg.path("kg1_attr"))
        kg2 = load_kg(cfg.path("kg2_rel"), cfg.path("kg2_attr"))
        lines = [f"# config_hash={cfg.config_hash}", "statistic\tkg1\tkg2"]
        s1, s2 = kg1.stats(), kg2.stats()
        lines += [f"{k}\t{s1[k]}\t{s2[k]}" for k in s1]
        (out / "stats.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        manifest.record("ingest", out / "stats.tsv")
        state["kg1"], state["kg2"] = kg1, kg2

    def split():
        kg1, kg2 = state["kg1"], state["kg2"]
        aset = load_alignment(cfg.path("links"), kg1, kg2, parse_ratio(cfg.ratio), cfg.seed)
        d = out / "split"
        d.mkdir(exist_ok=True)
        for name in ("train", "valid", "test"):
            write_links(d / f"links.{name}", getattr(aset, name), kg1, kg2)
        manifest.record("split", *(d / f"links.{n}" for n in ("train", "valid", "test")))
        state["aset"] = aset

    def hetero():
        kg1, kg2, aset = state["kg1"], state["kg2"], state["aset"]
        hcfg = HeterogenizeConfig(cfg.target_max_coverage, cfg.min_degree, cfg.seed, cfg.alternate_sides)
        d = out / "hs"
        d.mkdir(exist_ok=True)
        write_histogram(profile(kg1, kg2, aset.pairs), d / "coverage_before.tsv")
        new1, new2, log = heterogenize(kg1, kg2, aset.pairs, hcfg)
        write_histogram(profile(new1, new2, aset.pairs), d / "coverage_after.tsv")
        write_kg(new1, d / "rel_triples_1", d / "attr_triples_1")
        write_kg(new2, d / "rel_triples_2", d / "attr_triples_2")
        log.write(d / "removal_log.tsv", kg1, kg2)
        manifest.record("heterogenize", *(d / n for n in (
            "coverage_before.tsv", "coverage_after.tsv", "rel_triples_1", "attr_triples_1",
            "rel_triples_2", "attr_triples_2", "removal_log.tsv")))
        state["kg1"], state["kg2"] = new1, new2

    def attr():
        kg1, kg2, aset = state["kg1"], state["kg2"], state["aset"]
        pairs = aset.valid + aset.test
        rows = sorted(s for s, _ in pairs)
        cols = sorted(t for _, t in pairs)
        opts = attrsim.NormalizeOptions(strip_datatype=cfg.strip_datatype, strip_language=cfg.strip_language)
        m = attrsim.build_attr_matrix(kg1, kg2, rows, cols, cfg.attr_mode, cfg.combiner, opts, cfg.min_frequency)
        write_sparse(m, out / "attr.simsp", kg1, kg2, config=cfg.config_hash)
        manifest.record("attr-sim", out / "attr.simsp", out / "attr.simsp.rows", out / "attr.simsp.cols")
        state["rows"], state["cols"], state["s_at"] = rows, cols, m

    def enc():
        kg1, kg2 = state["kg1"], state["kg2"]
        rows, cols = state["rows"], state["cols"]
        if cfg.encoder == "baseline":
            m = encoder.baseline_literal_encoder(kg1, kg2, rows, cols)
        else:
            m = encoder.load_encoder_matrix(cfg.path_of(cfg.encoder), kg1, kg2).reindex(rows, cols)
        write_dense(m, out / "encoder.bin", kg1, kg2)
        manifest.record("encoder", out / "encoder.bin")
        state["s_ea"] = m

    reports = {}

    def evaluate_encoder():
        rep = evaluation.evaluate(state["s_ea"], state["aset"].test, ks)
        rep.metadata.update(meta, method="encoder")
        rep.write(out / "report_encoder.tsv")
        manifest.record("evaluate-encoder", out / "report_encoder.tsv")
        reports["encoder"] = rep

    grid_result = None

    def ps():
        nonlocal grid_result
        s_ea = encoder.minmax_to_frequency(state["s_ea"])
        s_at = state["s_at"]
        if cfg.c_ea > 0:
            c_ea, c_at = cfg.c_ea, cfg.c_at
        else:
            grid_result = interaction.grid_search(s_ea, s_at, state["aset"].valid, interaction.parse_grid(cfg.grid))
            c_ea, c_at = grid_result.c_ea, grid_result.c_at
            (out / "grid.tsv").write_text(f"# config_hash={cfg.config_hash}\n" + grid_result.to_tsv(),
                                          encoding="utf-8")
            manifest.record("grid-search", out / "grid.tsv")
        combined = interaction.ps_combine(s_ea, s_at, interaction.PsConfig(c_ea, c_at))
        write_dense(combined, out / "combined_ps.bin", state["kg1"], state["kg2"])
        rep = evaluation.evaluate(combined, state["aset"].test, ks)
        rep.metadata.update(meta, method="ps", c_ea=c_ea, c_at=c_at)
        rep.write(out / "report_ps.tsv")
        manifest.record("combine-ps", out / "combined_ps.bin", out / "report_ps.tsv")
        reports["ps"] = rep

    def rc():
        kg1, kg2 = state["kg1"], state["kg2"]
        test = state["aset"].test
        sources = sorted(s for s, _ in test)
        targets = sorted(t for _, t in test)
        predictions = evaluation.top1(state["s_ea"], sources, targets)
        s_at = state["s_at"].reindex(sources, targets)
        corrected = interaction.rc_combine(predictions, s_at, interaction.RcConfig(cfg.tau, cfg.margin))
        write_links(out / "predictions_rc.tsv", sorted(corrected.items()), kg1, kg2)
        h1 = evaluation.metrics_top1(corrected, test)
        rep = evaluation.RankingReport({1: h1}, None, {}, dict(meta, method="rc", tau=cfg.tau,
                                                              margin=cfg.margin, n=len(test)))
        rep.write(out / "report_rc.tsv")
        manifest.record("combine-rc", out / "predictions_rc.tsv", out / "report_rc.tsv")
        reports["rc"] = rep

    stage("ingest", ingest)
    stage("split", split)
    if cfg.heterogenize:
        stage("heterogenize", hetero)
    stage("attr-sim", attr)
    stage("encoder", enc)
    stage("evaluate", evaluate_encoder)
    if cfg.method in ("both", "ps"):
        stage("combine-ps", ps)
    if cfg.method in ("both", "rc"):
        stage("combine-rc", rc)
    manifest.write("complete")
    logger.info("pipeline finished: %s", ", ".join(reports))
    return reports, grid_result


__all__ = ["ExperimentConfig", "run_pipeline", "parse_ratio", "AttrIntError"]
