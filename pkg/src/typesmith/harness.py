"""Campaign orchestration: generate, gate, emit, compile, classify, report.

The pipeline per definition: draw a valid substitution, enumerate typing
sequences for each requested mode, realize them into programs, optionally
erase type arguments, then gate everything through the reference checker.
Well-typed programs must pass it and ill-typed ones must fail at their
recorded fault; a gate violation is a bug in this tool and aborts the
campaign rather than being filed against the compiler under test.

Programs are then emitted and, unless --no-compile, handed to the external
compiler in batches; expected-accept batches that fail are re-compiled
individually to isolate blame, expected-reject programs always compile
individually so each verdict is attributable. Every program yields one
JSONL report row; identical configs and seeds reproduce identical rows
(timings aside).
"""

from __future__ import annotations

import glob
import hashlib
import json
import logging
import re
import shlex
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

from .checker import check
from .emit import PROFILES, emit
from .enumeration import (
    EnumCaps,
    UnsatisfiableBounds,
    draw_substitution,
    enumerate_ill_typed,
    enumerate_well_typed,
)
from .erasure import erase_program
from .graph import build_graph, to_dot
from .ingest import RawApiDocument, load_api, skip_unusable
from .inhabitants import SynthLimits, realize
from .ir import ApiSpec, Program, sig_type_vars
from .rng import derive_rng

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

MODES = ("well", "well-erased", "ill", "ill-erased")

ACCEPT = "accept"
REJECT = "reject"
CRASH = "crash"
TIMEOUT = "timeout"


class ConfigError(Exception):
    """Bad campaign configuration; maps to exit code 2."""


class InternalGateError(Exception):
    """The synthesis pipeline and the reference checker disagreed; maps to
    exit code 3 and is never reported as a compiler finding."""


@dataclass(frozen=True)
class CampaignCaps:
    max_sequences_per_def: int = 500
    incompatible_per_slot: int = 5
    path_limit: int = 1
    substitution_depth: int = 2
    program_depth: int = 2
    substitutions_per_def: int = 1


@dataclass(frozen=True)
class CampaignConfig:
    api_globs: tuple[str, ...] = ()
    documents: tuple[dict, ...] = ()
    dialect: str = "ir"
    modes: tuple[str, ...] = ("well",)
    seed: int = 0
    caps: CampaignCaps = CampaignCaps()
    compiler_cmd: Optional[str] = None
    classpath: str = ""
    batch_size: int = 45
    out_dir: Optional[str] = None
    workers: int = 1
    no_compile: bool = False
    timeout_s: float = 60.0
    crash_patterns: tuple[str, ...] = (
        "Internal error",
        "StackOverflow",
        "exception while",
    )
    dump_graph: bool = False
    max_programs: Optional[int] = None

    def validate(self) -> None:
        if not self.modes:
            raise ConfigError("at least one mode is required")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r} (choose from {MODES})")
        if self.dialect not in PROFILES:
            raise ConfigError(
                f"unknown dialect {self.dialect!r} (choose from {tuple(PROFILES)})"
            )
        if not self.api_globs and not self.documents:
            raise ConfigError("no API input: pass api_globs or documents")
        if self.batch_size < 1 or self.workers < 1:
            raise ConfigError("batch_size and workers must be positive")
        if not self.no_compile and self.compiler_cmd is None:
            raise ConfigError(
                "no compiler command; pass compiler_cmd or set no_compile"
            )

    def campaign_id(self) -> str:
        blob = json.dumps(
            {
                "globs": self.api_globs,
                "documents": self.documents,
                "dialect": self.dialect,
                "modes": self.modes,
                "seed": self.seed,
                "caps": asdict(self.caps),
            },
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


@dataclass
class VerdictRecord:
    v: int
    program_hash: str
    def_id: int
    def_name: str
    mode: str
    seed: int
    expected: str
    outcome: str
    classification: str
    faulted_slot: Optional[str]
    file: str
    diagnostic: str
    time_ms: float

    def as_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class CampaignReport:
    campaign_id: str
    seed: int
    records: list[VerdictRecord]
    skipped_defs: list[int]
    masked_ill_dropped: int
    out_dir: Optional[str]
    report_path: Optional[str]

    def summary(self) -> dict:
        candidates = [r for r in self.records if r.classification != "pass"]
        by_class: dict[str, int] = {}
        for r in self.records:
            by_class[r.classification] = by_class.get(r.classification, 0) + 1
        return {
            "campaign_id": self.campaign_id,
            "seed": self.seed,
            "programs": len(self.records),
            "pass": by_class.get("pass", 0),
            "candidates": len(candidates),
            "unique_candidates": len(dedupe(candidates)),
            "by_classification": by_class,
            "skipped_defs": len(self.skipped_defs),
            "masked_ill_dropped": self.masked_ill_dropped,
        }

    @property
    def exit_code(self) -> int:
        return 1 if any(r.classification != "pass" for r in self.records) else 0


def classify(expected: str, outcome: str) -> str:
    """Map the oracle's expectation against the compiler's behavior."""
    if outcome == CRASH:
        return "candidate-crash"
    if outcome == TIMEOUT:
        return "candidate-CPI"
    if expected == outcome:
        return "pass"
    if expected == ACCEPT and outcome == REJECT:
        return "candidate-UCTE"
    return "candidate-URB"


# Directory paths and bare file names (word.ext) both count as paths.
_PATH_RE = re.compile(
    r"(?:[A-Za-z]:)?(?:(?:[\w.~+-]+[/\\])+[\w.~+-]+|[\w~+-]+\.[A-Za-z]\w*)"
)
_NUM_RE = re.compile(r"\d+")


def fingerprint(diagnostic: str) -> str:
    """First diagnostic line with file paths and numbers stripped, so the
    same underlying failure collapses across runs and line shifts."""
    first = diagnostic.strip().splitlines()[0] if diagnostic.strip() else ""
    first = _PATH_RE.sub("<path>", first)
    return _NUM_RE.sub("<n>", first)


def dedupe(records: list[VerdictRecord]) -> list[VerdictRecord]:
    """Collapse records agreeing on definition, faulted slot, and stripped
    diagnostic; the first occurrence survives."""
    seen: set[tuple] = set()
    out = []
    for r in records:
        key = (r.def_id, r.faulted_slot, fingerprint(r.diagnostic))
        if key in seen:
            continue
        seen.add(key)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@dataclass
class _Pending:
    program: Program
    mode: str
    def_id: int
    def_name: str
    expected: str
    faulted_slot: Optional[str]
    text: str
    filename: str
    gen_ms: float
    outcome: str = ""
    diagnostic: str = ""
    compile_ms: float = 0.0


def load_campaign_spec(config: CampaignConfig) -> ApiSpec:
    docs = [RawApiDocument.from_data(d) for d in config.documents]
    paths = []
    for pattern in config.api_globs:
        paths.extend(glob.glob(pattern))
    if config.api_globs and not paths:
        raise ConfigError(f"no files match {config.api_globs}")
    docs += [RawApiDocument.from_path(p) for p in sorted(paths)]
    return load_api(docs)


def _generate(config: CampaignConfig, spec: ApiSpec, graph) -> tuple[list[_Pending], int]:
    caps = EnumCaps(
        max_sequences_per_def=config.caps.max_sequences_per_def,
        incompatible_per_slot=config.caps.incompatible_per_slot,
    )
    limits = SynthLimits(
        max_program_depth=config.caps.program_depth,
        path_limit=config.caps.path_limit,
    )
    profile = PROFILES[config.dialect]
    pending: list[_Pending] = []
    masked = 0
    for d in sorted(spec.all_defs(), key=lambda d: d.id):
        for pass_i in range(config.caps.substitutions_per_def):
            try:
                sub = draw_substitution(
                    spec,
                    sig_type_vars(d),
                    config.caps.substitution_depth,
                    derive_rng(config.seed, "sub", d.id, pass_i),
                )
            except UnsatisfiableBounds:
                continue
            for mode in config.modes:
                if mode.startswith("well"):
                    seqs = enumerate_well_typed(
                        spec, graph, d.id, sub, caps,
                        derive_rng(config.seed, "well", d.id, pass_i),
                    )
                else:
                    seqs = enumerate_ill_typed(
                        spec, graph, d.id, sub, caps,
                        derive_rng(config.seed, "ill", d.id, pass_i),
                    )
                for j, seq in enumerate(seqs):
                    if (
                        config.max_programs is not None
                        and len(pending) >= config.max_programs
                    ):
                        return pending, masked
                    t0 = time.perf_counter()
                    prog = realize(
                        graph,
                        d.id,
                        seq,
                        rng=derive_rng(config.seed, "prog", d.id, pass_i, mode, j),
                        limits=limits,
                        seed=config.seed,
                        mode=mode,
                    )
                    if mode.endswith("erased"):
                        prog = erase_program(graph, prog)
                    verdict = check(spec, prog)
                    expected = ACCEPT if mode.startswith("well") else REJECT
                    if expected == ACCEPT and not verdict.well_typed:
                        raise InternalGateError(
                            f"well-typed program failed the reference checker: "
                            f"def {d.name} (id {d.id}), sequence "
                            f"{seq.slots_display()}, error {verdict.error}"
                        )
                    if expected == REJECT:
                        if verdict.well_typed:
                            if mode == "ill-erased":
                                # Erasure masked the injected fault; drop the
                                # program from the reject oracle set.
                                masked += 1
                                continue
                            raise InternalGateError(
                                f"ill-typed program passed the reference "
                                f"checker: def {d.name} (id {d.id}), sequence "
                                f"{seq.slots_display()}"
                            )
                        if (
                            mode == "ill"
                            and verdict.error.slot != seq.faulted_slot
                        ):
                            raise InternalGateError(
                                f"blame mismatch for def {d.name} (id {d.id}): "
                                f"faulted {seq.faulted_slot}, checker said "
                                f"{verdict.error.slot}"
                            )
                    src = emit(spec, prog, profile)
                    gen_ms = (time.perf_counter() - t0) * 1000.0
                    pending.append(
                        _Pending(
                            program=prog,
                            mode=mode,
                            def_id=d.id,
                            def_name=d.name,
                            expected=expected,
                            faulted_slot=seq.faulted_slot,
                            text=src.text,
                            filename=src.suggested_filename,
                            gen_ms=gen_ms,
                        )
                    )
    return pending, masked


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def _command(template: str, files: list[str], classpath: str) -> list[str]:
    parts: list[str] = []
    for tok in shlex.split(template):
        if tok == "{files}":
            parts.extend(files)
        else:
            parts.append(
                tok.format(files=" ".join(files), classpath=classpath)
            )
    return parts


def _run_compiler(
    config: CampaignConfig, files: list[str]
) -> tuple[str, str, float]:
    cmd = _command(config.compiler_cmd, files, config.classpath)
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            cmd,
            capture_output=True,
            text=True,
            timeout=config.timeout_s,
        )
    except subprocess.TimeoutExpired:
        return TIMEOUT, "compiler timeout", (time.perf_counter() - t0) * 1000.0
    except FileNotFoundError as exc:
        raise ConfigError(f"compiler binary not found: {cmd[0]}") from exc
    elapsed = (time.perf_counter() - t0) * 1000.0
    stderr = proc.stderr + proc.stdout
    if proc.returncode == 0:
        return ACCEPT, "", elapsed
    for pattern in config.crash_patterns:
        if re.search(pattern, stderr):
            return CRASH, stderr, elapsed
    return REJECT, stderr, elapsed


def _compile_batch(config: CampaignConfig, batch: list[_Pending]) -> None:
    files = [p.filename for p in batch]
    if all(p.expected == ACCEPT for p in batch) and len(batch) > 1:
        outcome, diag, ms = _run_compiler(config, files)
        if outcome == ACCEPT:
            for p in batch:
                p.outcome, p.diagnostic, p.compile_ms = ACCEPT, "", ms / len(batch)
            return
        # One failing program poisons the batch; isolate blame one by one.
    for p in batch:
        p.outcome, p.diagnostic, p.compile_ms = _run_compiler(
            config, [p.filename]
        )


# ---------------------------------------------------------------------------
# Campaign driver
# ---------------------------------------------------------------------------


def run_campaign(config: CampaignConfig) -> CampaignReport:
    config.validate()
    spec = load_campaign_spec(config)
    spec, skipped = skip_unusable(spec, depth=config.caps.substitution_depth)
    graph = build_graph(spec)
    campaign_id = config.campaign_id()

    out_root: Optional[Path] = None
    if config.out_dir is not None:
        out_root = Path(config.out_dir) / config.dialect / campaign_id
        out_root.mkdir(parents=True, exist_ok=True)
        if config.dump_graph:
            (out_root / "api-graph.dot").write_text(to_dot(graph))

    pending, masked = _generate(config, spec, graph)

    if out_root is not None:
        for p in pending:
            path = out_root / p.filename
            path.write_text(p.text)
            p.filename = str(path)

    if config.no_compile or config.compiler_cmd is None:
        # Internal oracle only: the gate above already enforced agreement.
        for p in pending:
            p.outcome = p.expected
    else:
        if out_root is None:
            raise ConfigError("compiling requires an output directory")
        batches = [
            pending[i : i + config.batch_size]
            for i in range(0, len(pending), config.batch_size)
        ]
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(lambda b: _compile_batch(config, b), batches))

    records = [
        VerdictRecord(
            v=REPORT_SCHEMA_VERSION,
            program_hash=Path(p.filename).stem,
            def_id=p.def_id,
            def_name=p.def_name,
            mode=p.mode,
            seed=config.seed,
            expected=p.expected,
            outcome=p.outcome,
            classification=classify(p.expected, p.outcome),
            faulted_slot=p.faulted_slot,
            file=Path(p.filename).name,
            diagnostic=p.diagnostic,
            time_ms=round(p.gen_ms + p.compile_ms, 3),
        )
        for p in pending
    ]

    report_path: Optional[str] = None
    if out_root is not None:
        report_path = str(out_root / "report.jsonl")
        with open(report_path, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write(r.as_json() + "\n")

    return CampaignReport(
        campaign_id=campaign_id,
        seed=config.seed,
        records=records,
        skipped_defs=skipped,
        masked_ill_dropped=masked,
        out_dir=str(out_root) if out_root else None,
        report_path=report_path,
    )


def synth_programs(config: CampaignConfig) -> tuple[ApiSpec, list[tuple[Program, str, str, str]]]:
    """Generation only: (program, mode, emitted text, filename) per item,
    gated through the checker but never compiled."""
    config = replace(config, no_compile=True, compiler_cmd=None)
    config.validate()
    spec = load_campaign_spec(config)
    spec, _ = skip_unusable(spec, depth=config.caps.substitution_depth)
    graph = build_graph(spec)
    pending, _ = _generate(config, spec, graph)
    return spec, [(p.program, p.mode, p.text, p.filename) for p in pending]
