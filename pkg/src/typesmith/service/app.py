"""FastAPI service wrapping the synthesis core.

Loaded specs (and their built graphs) are held in process memory keyed by
a content hash, so repeated synth/check/erase calls against one API pay
the graph construction cost once. Campaigns run synchronously and write
their artifacts server-side under the requested output directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict

from fastapi import FastAPI, HTTPException

from ..checker import check
from ..emit import IrParseError, parse_ir, print_ir
from ..enumeration import UnsatisfiableBounds
from ..erasure import erase_program
from ..graph import build_graph, graph_stats, to_dot
from ..harness import (
    CampaignCaps,
    CampaignConfig,
    ConfigError,
    InternalGateError,
    run_campaign,
    synth_programs,
)
from ..ingest import RawApiDocument, SpecError, load_api, parse_type_expr, skip_unusable
from ..inhabitants import find_api_paths, to_expr
from ..ir import Program, ResolutionError
from ..rng import derive_rng
from .models import (
    CampaignRequest,
    CampaignResponse,
    CheckRequest,
    CheckResponse,
    DotResponse,
    EraseRequest,
    EraseResponse,
    LoadSpecRequest,
    LoadSpecResponse,
    PathRecord,
    PathsRequest,
    PathsResponse,
    ProgramRecord,
    StatsResponse,
    SynthRequest,
    SynthResponse,
)

app = FastAPI(
    title="typesmith",
    description="API-driven synthesis of type-intensive client programs",
)

_REGISTRY: dict[str, dict] = {}


def _spec_id(documents: list[dict]) -> str:
    blob = json.dumps(documents, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _entry(spec_id: str) -> dict:
    entry = _REGISTRY.get(spec_id)
    if entry is None:
        raise HTTPException(404, f"unknown spec id {spec_id!r}")
    return entry


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "specs": len(_REGISTRY)}


@app.post("/specs", response_model=LoadSpecResponse)
def load_spec(req: LoadSpecRequest) -> LoadSpecResponse:
    spec_id = _spec_id(req.documents)
    if spec_id not in _REGISTRY:
        try:
            spec = load_api(RawApiDocument.from_data(d) for d in req.documents)
        except SpecError as exc:
            raise HTTPException(400, str(exc))
        skipped: list[int] = []
        if req.prune_unusable:
            spec, skipped = skip_unusable(spec, depth=req.substitution_depth)
        _REGISTRY[spec_id] = {
            "documents": req.documents,
            "spec": spec,
            "graph": build_graph(spec),
            "skipped": skipped,
        }
    entry = _REGISTRY[spec_id]
    spec = entry["spec"]
    return LoadSpecResponse(
        spec_id=spec_id,
        library=spec.name,
        classes=len(spec.classes),
        definitions=sum(1 for _ in spec.all_defs()),
        externals=len(spec.externals),
        skipped_def_ids=entry["skipped"],
        warnings=list(getattr(spec, "load_warnings", ())),
    )


@app.get("/specs/{spec_id}/stats", response_model=StatsResponse)
def stats(spec_id: str) -> StatsResponse:
    entry = _entry(spec_id)
    return StatsResponse(**graph_stats(entry["graph"]).as_dict())


@app.get("/specs/{spec_id}/graph.dot", response_model=DotResponse)
def graph_dot(spec_id: str) -> DotResponse:
    return DotResponse(dot=to_dot(_entry(spec_id)["graph"]))


@app.post("/specs/{spec_id}/synth", response_model=SynthResponse)
def synth(spec_id: str, req: SynthRequest) -> SynthResponse:
    entry = _entry(spec_id)
    config = CampaignConfig(
        documents=tuple(entry["documents"]),
        dialect=req.dialect,
        modes=tuple(req.modes),
        seed=req.seed,
        caps=CampaignCaps(**req.caps.model_dump()),
        no_compile=True,
        max_programs=req.max_programs,
    )
    try:
        spec, programs = synth_programs(config)
    except (ConfigError, SpecError) as exc:
        raise HTTPException(400, str(exc))
    except InternalGateError as exc:
        raise HTTPException(500, f"internal-gate-violation: {exc}")
    records = [
        ProgramRecord(
            ir=print_ir(spec, prog),
            text=text,
            filename=filename,
            mode=mode,
            def_id=prog.provenance.def_id,
            expected="accept" if mode.startswith("well") else "reject",
        )
        for prog, mode, text, filename in programs
    ]
    return SynthResponse(count=len(records), programs=records)


@app.post("/specs/{spec_id}/check", response_model=CheckResponse)
def check_program(spec_id: str, req: CheckRequest) -> CheckResponse:
    entry = _entry(spec_id)
    try:
        program = parse_ir(entry["spec"], req.program)
    except (IrParseError, ResolutionError) as exc:
        raise HTTPException(400, f"cannot parse program: {exc}")
    verdict = check(entry["spec"], program)
    if verdict.well_typed:
        return CheckResponse(well_typed=True)
    return CheckResponse(
        well_typed=False,
        stmt_index=verdict.error.stmt_index,
        slot=verdict.error.slot,
        reason=verdict.error.reason,
    )


@app.post("/specs/{spec_id}/erase", response_model=EraseResponse)
def erase(spec_id: str, req: EraseRequest) -> EraseResponse:
    entry = _entry(spec_id)
    try:
        program = parse_ir(entry["spec"], req.program)
    except (IrParseError, ResolutionError) as exc:
        raise HTTPException(400, f"cannot parse program: {exc}")
    erased = erase_program(entry["graph"], program)
    return EraseResponse(program=print_ir(entry["spec"], erased))


@app.post("/specs/{spec_id}/paths", response_model=PathsResponse)
def paths(spec_id: str, req: PathsRequest) -> PathsResponse:
    entry = _entry(spec_id)
    spec, graph = entry["spec"], entry["graph"]
    try:
        target = parse_type_expr(
            req.type_expr,
            (),
            lambda name, arity, offset: _strict_resolve(spec, name),
        )
    except SpecError as exc:
        raise HTTPException(400, str(exc))
    limit = None if req.exhaustive else req.limit
    k = None if req.exhaustive else 1
    found = find_api_paths(
        graph, target, derive_rng(req.seed), limit=limit, k_per_start=k
    )
    out = []
    for fp in found:
        labels = []
        for node in fp.nodes:
            if hasattr(node, "def_id"):
                labels.append(spec.def_by_id(node.def_id).name)
            else:
                labels.append(node.type.display())
        expr = to_expr(graph, fp, rng=derive_rng(req.seed, "expr"))
        out.append(
            PathRecord(
                nodes=labels,
                substitution=fp.resolved.display(),
                expr=print_ir(spec, Program((expr,))).strip(),
            )
        )
    return PathsResponse(paths=out)


def _strict_resolve(spec, name):
    ct = spec.class_by_name(name)
    if ct is None:
        raise ResolutionError(f"unresolved type name '{name}'")
    return ct


@app.post("/campaigns", response_model=CampaignResponse)
def campaign(req: CampaignRequest) -> CampaignResponse:
    documents = req.documents
    if documents is None and req.spec_id is not None:
        documents = _entry(req.spec_id)["documents"]
    if documents is None:
        raise HTTPException(400, "pass documents or a loaded spec_id")
    config = CampaignConfig(
        documents=tuple(documents),
        dialect=req.dialect,
        modes=tuple(req.modes),
        seed=req.seed,
        caps=CampaignCaps(**req.caps.model_dump()),
        compiler_cmd=req.compiler_cmd,
        classpath=req.classpath,
        batch_size=req.batch_size,
        out_dir=req.out_dir,
        workers=req.workers,
        no_compile=req.no_compile,
        timeout_s=req.timeout_s,
        dump_graph=req.dump_graph,
        max_programs=req.max_programs,
    )
    try:
        report = run_campaign(config)
    except (ConfigError, SpecError) as exc:
        raise HTTPException(400, str(exc))
    except InternalGateError as exc:
        raise HTTPException(500, f"internal-gate-violation: {exc}")
    return CampaignResponse(
        campaign_id=report.campaign_id,
        seed=report.seed,
        summary=report.summary(),
        out_dir=report.out_dir,
        report_path=report.report_path,
        exit_code=report.exit_code,
        records=[asdict(r) for r in report.records]
        if req.include_records
        else None,
    )
