"""Request/response models of the synthesis service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class LoadSpecRequest(BaseModel):
    documents: list[dict]
    prune_unusable: bool = True
    substitution_depth: int = 2


class LoadSpecResponse(BaseModel):
    spec_id: str
    library: str
    classes: int
    definitions: int
    externals: int
    skipped_def_ids: list[int] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)


class StatsResponse(BaseModel):
    nodes: int
    type_nodes: int
    def_nodes: int
    edges: int
    receiver_edges: int
    return_edges: int
    sourceless_defs: int
    methods: int
    polymorphic_methods: int
    fields: int
    constructors: int
    avg_signature_size: float


class CapsModel(BaseModel):
    max_sequences_per_def: int = 500
    incompatible_per_slot: int = 5
    path_limit: int = 1
    substitution_depth: int = 2
    program_depth: int = 2
    substitutions_per_def: int = 1


class SynthRequest(BaseModel):
    modes: list[str] = ["well"]
    seed: int = 0
    dialect: str = "ir"
    caps: CapsModel = CapsModel()
    max_programs: Optional[int] = None


class ProgramRecord(BaseModel):
    ir: str
    text: str
    filename: str
    mode: str
    def_id: int
    expected: str


class SynthResponse(BaseModel):
    count: int
    programs: list[ProgramRecord]


class CheckRequest(BaseModel):
    program: str


class CheckResponse(BaseModel):
    well_typed: bool
    stmt_index: Optional[int] = None
    slot: Optional[str] = None
    reason: Optional[str] = None


class EraseRequest(BaseModel):
    program: str


class EraseResponse(BaseModel):
    program: str


class PathsRequest(BaseModel):
    type_expr: str
    seed: int = 0
    limit: Optional[int] = 1
    exhaustive: bool = False


class PathRecord(BaseModel):
    nodes: list[str]
    substitution: str
    expr: str


class PathsResponse(BaseModel):
    paths: list[PathRecord]


class CampaignRequest(BaseModel):
    documents: Optional[list[dict]] = None
    spec_id: Optional[str] = None
    dialect: str = "ir"
    modes: list[str] = ["well"]
    seed: int = 0
    caps: CapsModel = CapsModel()
    compiler_cmd: Optional[str] = None
    classpath: str = ""
    batch_size: int = 45
    out_dir: Optional[str] = None
    workers: int = 1
    no_compile: bool = False
    timeout_s: float = 60.0
    dump_graph: bool = False
    max_programs: Optional[int] = None
    include_records: bool = False


class CampaignResponse(BaseModel):
    campaign_id: str
    seed: int
    summary: dict
    out_dir: Optional[str] = None
    report_path: Optional[str] = None
    exit_code: int
    records: Optional[list[dict]] = None


class DotResponse(BaseModel):
    dot: str
