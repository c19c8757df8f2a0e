"""Access to the bundled example programs and their expected verdicts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .ast import Signature
from .cost import instrument
from .errors import ReconstructionError
from .instantiate import instantiate_many, mangled_name
from .parser import parse_program
from .reconstruct import elaborate_signature
from .typeops import TypeOps, check_contractive

CORPUS_DIR = Path(__file__).parent / "corpus"


@dataclass
class RunSpec:
    file: str
    cost: str
    main: str
    bind: dict[str, int]
    steps: int


@dataclass
class CheckSpec:
    file: str
    cost: str
    root: str
    bind: dict[str, int]
    expect: str  # "ok" | "recon_error"


def manifest() -> dict:
    return json.loads((CORPUS_DIR / "manifest.json").read_text())


def source(filename: str) -> str:
    return (CORPUS_DIR / filename).read_text()


def parse(filename: str) -> Signature:
    return parse_program(source(filename))


def run_specs() -> list[RunSpec]:
    out = []
    for prog in manifest()["programs"]:
        for r in prog["runs"]:
            out.append(RunSpec(prog["file"], prog["cost"], r["main"],
                               dict(r["bind"]), r["steps"]))
    return out


def check_specs() -> list[CheckSpec]:
    out = []
    for prog in manifest()["programs"]:
        for r in prog["runs"]:
            out.append(CheckSpec(prog["file"], prog["cost"], r["main"],
                                 dict(r["bind"]), "ok"))
        for c in prog["checks"]:
            out.append(CheckSpec(prog["file"], prog["cost"], c["root"],
                                 dict(c["bind"]), c["expect"]))
    return out


def prepare(sig: Signature, roots: list[str], bind: dict[str, int], cost: str):
    """Instantiate, instrument, and elaborate; returns the explicit
    signature (reconstruction failures propagate as ReconstructionError)."""
    ground = instantiate_many(sig, roots, bind)
    check_contractive(ground)
    ticked = instrument(ground, cost)
    elab, errors = elaborate_signature(ticked)
    if errors:
        raise ReconstructionError("; ".join(str(e) for e in errors))
    return elab, ticked


def prepare_run(spec: RunSpec):
    """Everything needed to execute one bundled run: the explicit
    signature, its TypeOps, and the ground main name."""
    sig = parse(spec.file)
    elab, _ = prepare(sig, [spec.main], spec.bind, spec.cost)
    return elab, TypeOps(elab), mangled_name(sig, spec.main, spec.bind)
