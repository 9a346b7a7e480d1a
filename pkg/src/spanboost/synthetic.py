"""Synthetic Spanish-like clinical corpora with occupation mentions.

Each generated document carries two annotation layers over the same text:

* ``task1``: what kind of job expression a span is (``PROFESION`` or
  ``SITUACION_LABORAL``), fully determined by the entity dictionaries;
* ``task2``: whose job it is (``PACIENTE`` or ``FAMILIAR``), determined by
  the sentence subject.

Documents are drawn from a handful of clinical topics with disjoint filler
vocabulary, which gives document clustering something to find. Raw text
generators for the embedding corpora ("base", "general", "domain") are
included as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus_io import Document, SpanAnnotation

PROFESSIONS = (
    "cocinero", "albañil", "profesora de primaria", "conductor de autobús", "enfermera",
    "agricultor", "camarera", "auxiliar de enfermería", "ingeniero informático", "peluquera",
    "carpintero", "abogada", "mecánico de coches", "panadero", "policía local", "pescador",
    "limpiadora", "electricista", "administrativa", "fontanero", "dependienta de comercio",
    "médico de familia", "soldador", "cuidadora de ancianos",
)
SITUATIONS = (
    "jubilado", "jubilada", "en paro", "desempleada", "de baja laboral", "pensionista",
    "en situación de desempleo", "con incapacidad permanente",
)
PATIENT_SUBJECTS = ("El paciente", "La paciente", "Paciente", "La enferma", "El enfermo")
FAMILY_SUBJECTS = ("Su madre", "Su padre", "Su hermano", "Su esposa", "Su hija", "Su marido")

PROF_TEMPLATES = (
    "{s} es {e} de profesión.",
    "{s}, {e} de profesión, refiere buena tolerancia al esfuerzo.",
    "Ocupación {g}: {e}.",
    "{s} es {e} desde hace {n} años.",
    "Trabajo {g}: {e} desde hace {n} años.",
)
SIT_TEMPLATES = (
    "{s} está {e} desde hace {n} meses.",
    "{s}, {e}, vive en domicilio propio.",
    "Situación laboral {g}: {e}.",
)

TOPICS = {
    "cardiologia": (
        "Presenta dolor torácico opresivo irradiado al brazo izquierdo.",
        "El electrocardiograma muestra ritmo sinusal sin alteraciones agudas.",
        "Se solicita ecocardiograma y control de troponinas.",
        "Antecedentes de hipertensión arterial y dislipemia en tratamiento.",
        "Refiere palpitaciones ocasionales y disnea de esfuerzo.",
    ),
    "traumatologia": (
        "Acude por caída casual con traumatismo en la muñeca derecha.",
        "La radiografía descarta fractura de radio distal.",
        "Se coloca férula de yeso y se pauta analgesia.",
        "Presenta dolor lumbar mecánico de varias semanas de evolución.",
        "Se recomienda reposo relativo y rehabilitación.",
    ),
    "psiquiatria": (
        "Refiere ánimo bajo, insomnio y pérdida de interés.",
        "Niega ideación autolítica en el momento actual.",
        "Se ajusta el tratamiento antidepresivo y se cita en consulta.",
        "Presenta ansiedad en relación con problemas familiares.",
        "Se deriva a la unidad de salud mental comunitaria.",
    ),
    "dermatologia": (
        "Consulta por lesiones eritematosas pruriginosas en ambos brazos.",
        "Se observa placa descamativa en codos y rodillas.",
        "Se pauta corticoide tópico durante dos semanas.",
        "Refiere empeoramiento de las lesiones con la exposición solar.",
        "Se realiza biopsia cutánea para estudio anatomopatológico.",
    ),
    "neumologia": (
        "Presenta tos productiva y fiebre de tres días de evolución.",
        "La auscultación revela crepitantes en la base derecha.",
        "La radiografía de tórax muestra una condensación lobar.",
        "Se inicia antibioterapia empírica y broncodilatadores.",
        "Antecedentes de tabaquismo activo desde la juventud.",
    ),
}

GENERAL_SENTENCES = (
    "El ayuntamiento aprobó ayer el nuevo presupuesto municipal.",
    "La selección ganó el partido en el último minuto.",
    "Los precios de la vivienda siguen subiendo en las grandes ciudades.",
    "El festival de cine reunió a miles de espectadores.",
    "La empresa busca {e} para su nueva sede.",
    "Mi vecino es {e} y vive en el barrio desde hace años.",
    "El sindicato de {e} convocó una huelga.",
    "La temporada turística empieza en primavera.",
)


@dataclass
class PairedDocument:
    task1: Document
    task2: Document

    @property
    def id(self):
        return self.task1.id

    @property
    def text(self):
        return self.task1.text


def _fill(template: str, subject: str, entity: str, rng) -> tuple[str, int]:
    """Fill a template; return the sentence and the entity's start offset."""
    low = subject[0].lower() + subject[1:]
    genitive = "del " + low[3:] if low.startswith("el ") else "de " + (low if low.split()[0] in ("la", "su") else "la " + low)
    before, _, after = template.partition("{e}")
    head = before.format(s=subject, g=genitive, n=int(rng.integers(2, 30)))
    tail = after.format(s=subject, g=genitive, n=int(rng.integers(2, 30)))
    return head + entity + tail, len(head)


def generate_document(doc_id: str, rng, topic: str | None = None, n_entities: int | None = None) -> PairedDocument:
    topics = sorted(TOPICS)
    if topic is None:
        topic = topics[int(rng.integers(len(topics)))]
    filler = TOPICS[topic]
    if n_entities is None:
        n_entities = int(rng.integers(1, 4))
    age = int(rng.integers(18, 90))
    sentences = [(f"Paciente de {age} años que acude a consulta.", None)]
    slots = []
    for _ in range(n_entities):
        is_patient = rng.random() < 0.6
        subject = (PATIENT_SUBJECTS if is_patient else FAMILY_SUBJECTS)[
            int(rng.integers(len(PATIENT_SUBJECTS if is_patient else FAMILY_SUBJECTS)))
        ]
        if rng.random() < 0.7:
            entity = PROFESSIONS[int(rng.integers(len(PROFESSIONS)))]
            template = PROF_TEMPLATES[int(rng.integers(len(PROF_TEMPLATES)))]
            kind = "PROFESION"
        else:
            entity = SITUATIONS[int(rng.integers(len(SITUATIONS)))]
            template = SIT_TEMPLATES[int(rng.integers(len(SIT_TEMPLATES)))]
            kind = "SITUACION_LABORAL"
        slots.append((template, subject, entity, kind, "PACIENTE" if is_patient else "FAMILIAR"))
    n_filler = int(rng.integers(2, 5))
    for _ in range(n_filler):
        sentences.append((filler[int(rng.integers(len(filler)))], None))
    for slot in slots:
        pos = int(rng.integers(1, len(sentences) + 1))
        sentences.insert(pos, (None, slot))

    text = ""
    ann1, ann2 = [], []
    for plain, slot in sentences:
        if text:
            text += "\n\n" if rng.random() < 0.15 else " "
        if slot is None:
            text += plain
            continue
        template, subject, entity, kind, holder = slot
        sentence, off = _fill(template, subject, entity, rng)
        start = len(text) + off
        ann1.append(SpanAnnotation(start, start + len(entity), kind))
        ann2.append(SpanAnnotation(start, start + len(entity), holder))
        text += sentence
    text += "\n"
    return PairedDocument(Document(doc_id, text, tuple(ann1)), Document(doc_id, text, tuple(ann2)))


def generate_corpus(n_docs: int, seed: int = 0, prefix: str = "doc") -> list[PairedDocument]:
    rng = np.random.default_rng(seed)
    width = max(3, len(str(n_docs - 1)))
    return [generate_document(f"{prefix}{i:0{width}d}", rng) for i in range(n_docs)]


def raw_corpus(kind: str, n_docs: int, seed: int = 0) -> list[str]:
    """Unannotated texts for embedding training.

    ``base``: mixed general and clinical sentences; ``general``: general
    news-like text that also mentions occupations; ``domain``: clinical
    notes in the style of the annotated corpus.
    """
    if kind not in ("base", "general", "domain"):
        raise ValueError(f"unknown raw corpus kind {kind!r}")
    rng = np.random.default_rng(seed)
    texts = []
    for i in range(n_docs):
        if kind == "domain":
            texts.append(generate_document(f"r{i}", rng).text)
            continue
        lines = []
        for _ in range(int(rng.integers(4, 9))):
            if kind == "base" and rng.random() < 0.3:
                topic = sorted(TOPICS)[int(rng.integers(len(TOPICS)))]
                lines.append(TOPICS[topic][int(rng.integers(5))])
                continue
            s = GENERAL_SENTENCES[int(rng.integers(len(GENERAL_SENTENCES)))]
            lines.append(s.replace("{e}", PROFESSIONS[int(rng.integers(len(PROFESSIONS)))]))
        texts.append(" ".join(lines) + "\n")
    return texts


def coarsen(doc: Document, label: str = "OCUPACION") -> Document:
    """Collapse every annotation label into ``label`` (a coarser auxiliary task)."""
    return doc.with_annotations(SpanAnnotation(a.start, a.end, label) for a in doc.annotations)
