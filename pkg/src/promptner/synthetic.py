"""Deterministic synthetic corpus generation for desk-scale experiments.

Each entity class owns a surface pattern (a literal pool, or a numeric range
with unit words); sentences are filled from context templates whose slots
name the classes they instantiate. Because spans are placed by construction,
the grammar doubles as its own test oracle.

The default spec contains two pairs of synonym classes living in different
datasets but sharing a surface pattern ("dose amount"/"dose" and
"temperature reading"/"temperature"), which is what the zero-shot transfer
demos and tests exercise.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, asdict
from pathlib import Path

from .corpus import Corpus, Document, EntitySpan
from .errors import DataError

# ---------------------------------------------------------------------------
# Spec types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfacePattern:
    """How a class's mentions look: fixed literals or ``<number> <unit>``."""

    literals: tuple[str, ...] = ()
    numeric_range: tuple[int, int] | None = None  # inclusive bounds
    units: tuple[str, ...] = ()

    def validate(self, owner: str) -> None:
        if self.literals:
            return
        if self.numeric_range is None or not self.units:
            raise DataError(f"class {owner!r}: pattern needs literals or numeric_range+units")
        lo, hi = self.numeric_range
        if lo > hi:
            raise DataError(f"class {owner!r}: empty numeric range ({lo}, {hi})")


@dataclass(frozen=True)
class ClassDef:
    name: str
    dataset: str
    pattern: SurfacePattern


@dataclass(frozen=True)
class Template:
    """Sentence skeleton. ``{class name}`` marks an entity slot, ``~`` a filler word."""

    dataset: str
    text: str


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple[ClassDef, ...]
    templates: tuple[Template, ...]
    sentence_count: int
    filler_words: tuple[str, ...]
    seed: int = 0


_CHUNK_RE = re.compile(r"\{([^{}]*)\}|~|\S+")


def _template_chunks(template: Template) -> list[tuple[str, str]]:
    """Parse template text into (kind, value) chunks: word / slot / filler."""
    chunks = []
    for m in _CHUNK_RE.finditer(template.text):
        if m.group(0) == "~":
            chunks.append(("filler", ""))
        elif m.group(1) is not None:
            chunks.append(("slot", m.group(1)))
        else:
            chunks.append(("word", m.group(0)))
    return chunks


def validate_spec(spec: SyntheticSpec) -> None:
    if spec.sentence_count < 1:
        raise DataError("sentence_count must be >= 1")
    if not spec.templates:
        raise DataError("spec has no templates")
    classes = {c.name: c for c in spec.classes}
    for c in spec.classes:
        c.pattern.validate(c.name)
    for template in spec.templates:
        slots = [v for kind, v in _template_chunks(template) if kind == "slot"]
        if any(kind == "filler" for kind, _ in _template_chunks(template)) and not spec.filler_words:
            raise DataError(f"template {template.text!r} uses '~' but spec has no filler words")
        for slot in slots:
            if slot not in classes:
                raise DataError(f"unsatisfiable template {template.text!r}: "
                                f"unknown class {slot!r}")
            if classes[slot].dataset != template.dataset:
                raise DataError(f"template {template.text!r}: class {slot!r} belongs to "
                                f"dataset {classes[slot].dataset!r}, not {template.dataset!r}")


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _sample_surface(pattern: SurfacePattern, rng: random.Random) -> str:
    if pattern.literals:
        return rng.choice(pattern.literals)
    lo, hi = pattern.numeric_range  # type: ignore[misc]
    return f"{rng.randint(lo, hi)} {rng.choice(pattern.units)}"


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Generate a document-level corpus (one sentence per document).

    Deterministic for a fixed spec (including its seed); every slot yields an
    EntitySpan at the exact fill position, and each document's inventory is
    every class of its dataset.
    """
    validate_spec(spec)
    classes = {c.name: c for c in spec.classes}
    inventories: dict[str, set[str]] = {}
    for template in spec.templates:
        bag = inventories.setdefault(template.dataset, set())
        bag.update(v for kind, v in _template_chunks(template) if kind == "slot")

    rng = random.Random(spec.seed)
    documents = []
    for i in range(spec.sentence_count):
        template = rng.choice(spec.templates)
        parts: list[str] = []
        spans: list[EntitySpan] = []
        pos = 0
        for kind, value in _template_chunks(template):
            if parts:
                pos += 1  # joining space
            if kind == "word":
                token = value
            elif kind == "filler":
                token = rng.choice(spec.filler_words)
            else:
                token = _sample_surface(classes[value].pattern, rng)
                spans.append(EntitySpan(pos, pos + len(token), value, template.dataset))
            parts.append(token)
            pos += len(token)
        text = " ".join(parts)
        documents.append(Document(
            doc_id=f"{template.dataset}-{i:05d}",
            dataset=template.dataset,
            text=text,
            annotations=tuple(sorted(spans)),
            class_inventory=frozenset(inventories[template.dataset]),
        ))
    return Corpus(tuple(documents))


# ---------------------------------------------------------------------------
# Bundled specs
# ---------------------------------------------------------------------------


def default_synthetic_spec(sentence_count: int = 800, seed: int = 0) -> SyntheticSpec:
    """Four two-class datasets with two cross-dataset synonym pairs.

    "dose amount" (pharma) and "dose" (clinic) share the ``<number> <unit>``
    pattern; so do "temperature reading" (lab) and "temperature" (ward). The
    label strings share vocabulary words, which is what lets a model trained
    with one of the pair transfer zero-shot to the other.
    """
    amount = SurfacePattern(numeric_range=(1, 400), units=("mg", "ml", "g"))
    degrees = SurfacePattern(numeric_range=(30, 45), units=("celsius", "fahrenheit"))
    classes = (
        ClassDef("dose amount", "pharma", amount),
        ClassDef("drug name", "pharma", SurfacePattern(literals=(
            "aspirin", "ibuprofen", "naloxone", "clonidine", "metformin",
            "insulin", "heparin", "warfarin"))),
        ClassDef("dose", "clinic", amount),
        ClassDef("illness", "clinic", SurfacePattern(literals=(
            "fever", "hypotension", "migraine", "asthma", "anemia",
            "sepsis", "arthritis", "eczema"))),
        ClassDef("temperature reading", "lab", degrees),
        ClassDef("assay name", "lab", SurfacePattern(literals=(
            "elisa", "immunoblot", "cytometry", "spectrometry",
            "microscopy", "sequencing"))),
        ClassDef("temperature", "ward", degrees),
        ClassDef("symptom", "ward", SurfacePattern(literals=(
            "cough", "rash", "nausea", "dizziness", "fatigue", "chills"))),
    )
    templates = (
        Template("pharma", "the patient ~ took {drug name} {dose amount} every morning ."),
        Template("pharma", "we gave {dose amount} of {drug name} after lunch ~ ."),
        Template("pharma", "{drug name} was reduced to {dose amount} by the doctor ."),
        Template("clinic", "the nurse ~ infused {dose} to treat {illness} ."),
        Template("clinic", "{illness} improved after {dose} was given ~ ."),
        Template("clinic", "records show {dose} administered for {illness} ."),
        Template("lab", "the {assay name} ran ~ while {temperature reading} was held ."),
        Template("lab", "technicians logged {temperature reading} during {assay name} ."),
        Template("ward", "the chart ~ noted {temperature} beside a lasting {symptom} ."),
        Template("ward", "{symptom} persisted although {temperature} stayed stable ~ ."),
    )
    fillers = ("promptly", "quietly", "again", "today", "overnight",
               "carefully", "briefly", "soon")
    return SyntheticSpec(classes, templates, sentence_count, fillers, seed)


def pilot_synthetic_spec(sentence_count: int = 60, seed: int = 0) -> SyntheticSpec:
    """A separable three-class single-dataset corpus for the binary/multi-class pilot."""
    classes = (
        ClassDef("organism", "pilot", SurfacePattern(literals=(
            "mouse", "rat", "rabbit", "zebrafish", "yeast", "macaque"))),
        ClassDef("compound", "pilot", SurfacePattern(literals=(
            "glucose", "ethanol", "caffeine", "nicotine", "cortisol", "dopamine"))),
        ClassDef("tissue", "pilot", SurfacePattern(literals=(
            "liver", "kidney", "cortex", "muscle", "retina", "plasma"))),
    )
    templates = (
        Template("pilot", "the {organism} absorbed {compound} in the {tissue} ."),
        Template("pilot", "{compound} levels rose in the {tissue} of each {organism} ."),
        Template("pilot", "samples of {tissue} from one {organism} showed {compound} traces ."),
    )
    return SyntheticSpec(classes, templates, sentence_count, (), seed)


# ---------------------------------------------------------------------------
# Spec (de)serialization, for the CLI's --spec flag
# ---------------------------------------------------------------------------


def spec_to_json(spec: SyntheticSpec) -> str:
    return json.dumps(asdict(spec), indent=2, sort_keys=True)


def spec_from_json(text: str) -> SyntheticSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid spec JSON: {exc.msg}") from exc
    try:
        classes = tuple(
            ClassDef(c["name"], c["dataset"], SurfacePattern(
                literals=tuple(c["pattern"].get("literals", ())),
                numeric_range=(tuple(c["pattern"]["numeric_range"])
                               if c["pattern"].get("numeric_range") else None),
                units=tuple(c["pattern"].get("units", ())),
            ))
            for c in raw["classes"]
        )
        templates = tuple(Template(t["dataset"], t["text"]) for t in raw["templates"])
        spec = SyntheticSpec(classes, templates, int(raw["sentence_count"]),
                             tuple(raw.get("filler_words", ())), int(raw.get("seed", 0)))
    except (KeyError, TypeError) as exc:
        raise DataError(f"invalid spec JSON: missing or malformed field ({exc})") from exc
    validate_spec(spec)
    return spec


def load_spec(path: str | Path) -> SyntheticSpec:
    return spec_from_json(Path(path).read_text(encoding="utf-8"))
