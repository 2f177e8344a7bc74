"""True/false question scaffolding for the entropy study.

Eleven templates over event slots (0-based sentence indices i < j < k),
an object name, and a character name. Instantiation substitutes quoted
sentence texts into the event slots; the resulting scaffolds are starting
points for the manually written study questions, not finished prose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from ..errors import ValidationError
from ..story import StoryState


@dataclass(frozen=True)
class TfTemplate:
    template_id: int
    text: str
    requires: tuple[str, ...]


@dataclass(frozen=True)
class QuestionScaffold:
    template_id: int
    text: str
    slots: dict

    def __hash__(self):  # slots dict excluded; identity is (id, text)
        return hash((self.template_id, self.text))


def load_templates() -> list[TfTemplate]:
    raw = resources.files("retrogen").joinpath("data/tf_templates.json").read_text("utf-8")
    return [TfTemplate(t["id"], t["text"], tuple(t["requires"])) for t in json.loads(raw)]


def _check_order(assignments: dict) -> None:
    i = assignments.get("i")
    j = assignments.get("j")
    k = assignments.get("k")
    for lo, hi, names in ((i, j, "i < j"), (j, k, "j < k"), (i, k, "i < k")):
        if lo is not None and hi is not None and lo >= hi:
            raise ValidationError(f"slot ordering violated: need {names}")


def instantiate_tf_templates(story: StoryState, assignments: dict) -> list[QuestionScaffold]:
    """Substitute slots into every template the assignment can fill.

    ``assignments`` may hold: i, j, k (0-based sentence indices), object,
    character. Index slots must satisfy i < j < k and point at existing
    sentences; the fixed second-event slot (E2) requires a story of at
    least two sentences.
    """
    sentences = story.sentences
    _check_order(assignments)
    for name in ("i", "j", "k"):
        idx = assignments.get(name)
        if idx is not None and not 0 <= idx < len(sentences):
            raise ValidationError(f"slot {name}={idx} references a missing sentence")

    def quoted(idx: int) -> str:
        return f'"{sentences[idx].text}"'

    provided = {name for name in ("i", "j", "k") if assignments.get(name) is not None}
    if assignments.get("object"):
        provided.add("object")
    if assignments.get("character"):
        provided.add("character")
    if len(sentences) >= 2:
        provided.add("e2")

    scaffolds = []
    for template in load_templates():
        if not set(template.requires).issubset(provided):
            continue
        subs = {}
        if "i" in template.requires:
            subs["Ei"] = quoted(assignments["i"])
        if "j" in template.requires:
            subs["Ej"] = quoted(assignments["j"])
        if "k" in template.requires:
            subs["Ek"] = quoted(assignments["k"])
        if "e2" in template.requires:
            subs["E2"] = quoted(1)
        if "object" in template.requires:
            subs["O"] = assignments["object"]
        if "character" in template.requires:
            subs["C"] = assignments["character"]
        used = {
            name: assignments[name]
            for name in ("i", "j", "k", "object", "character")
            if name in template.requires
        }
        scaffolds.append(QuestionScaffold(
            template_id=template.template_id,
            text=template.text.format(**subs),
            slots=used,
        ))
    return scaffolds
