"""SPARQL template catalog: the 15 merged query skeletons and the merge map.

The catalog ships as a versioned JSON file (``data/templates.json``).  Each
template has a question type (ENTITY / COUNT / BOOLEAN), a pattern string with
``<r>``, ``<p>``, ``<r2>``, ``<p2>``, ``<class>`` placeholders and an ordered
slot list.  The merge map sends original dataset template ids to merged ids;
original ids absent from the map are dropped during preprocessing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

PLACEHOLDER_RE = re.compile(r"<(r2|p2|r|p|class)>")

QUESTION_TYPES = ("ENTITY", "COUNT", "BOOLEAN")
SLOT_KINDS = ("RESOURCE", "PREDICATE", "CLASS")


class CatalogError(Exception):
    pass


@dataclass(frozen=True)
class Slot:
    name: str
    kind: str  # RESOURCE | PREDICATE | CLASS
    required: bool


@dataclass(frozen=True)
class Template:
    id: int
    question_type: str
    pattern: str
    slots: tuple[Slot, ...]

    def slot(self, name: str) -> Slot:
        for s in self.slots:
            if s.name == name:
                return s
        raise CatalogError(f"template {self.id} has no slot {name!r}")

    @property
    def required_slots(self) -> tuple[Slot, ...]:
        return tuple(s for s in self.slots if s.required)

    @property
    def optional_class_slot(self) -> Slot | None:
        for s in self.slots:
            if s.kind == "CLASS" and not s.required:
                return s
        return None

    def validate(self) -> None:
        names = [s.name for s in self.slots]
        if len(set(names)) != len(names):
            raise CatalogError(f"template {self.id}: duplicate slot names")
        placeholders = set(PLACEHOLDER_RE.findall(self.pattern))
        if placeholders != set(names):
            raise CatalogError(
                f"template {self.id}: pattern placeholders {sorted(placeholders)} "
                f"!= declared slots {sorted(names)}"
            )
        if self.question_type == "BOOLEAN" and not self.pattern.startswith("ASK"):
            raise CatalogError(f"template {self.id}: BOOLEAN pattern must start with ASK")
        opt = self.optional_class_slot
        if opt is not None:
            m = re.search(r"OPTIONAL\s*{[^}]*<class>[^}]*}", self.pattern)
            if m is None:
                raise CatalogError(
                    f"template {self.id}: optional class slot must live in an OPTIONAL clause"
                )


class TemplateCatalog:
    def __init__(self, templates: list[Template], merge_map: dict[int, int], version: int = 1):
        self.version = version
        self.templates = list(templates)
        self.merge_map = dict(merge_map)
        self._by_id = {t.id: t for t in self.templates}
        self._validate()

    def _validate(self) -> None:
        if len(self._by_id) != len(self.templates):
            raise CatalogError("duplicate template ids")
        for t in self.templates:
            t.validate()
        bad = set(self.merge_map.values()) - set(self._by_id)
        if bad:
            raise CatalogError(f"merge_map targets unknown templates: {sorted(bad)}")

    @property
    def ids(self) -> list[int]:
        return sorted(self._by_id)

    @property
    def n_templates(self) -> int:
        return len(self.templates)

    def __len__(self) -> int:
        return len(self.templates)

    def __contains__(self, template_id: int) -> bool:
        return template_id in self._by_id

    def __getitem__(self, template_id: int) -> Template:
        try:
            return self._by_id[template_id]
        except KeyError:
            raise CatalogError(f"unknown template id {template_id}") from None

    def merged_id(self, original_id: int) -> int | None:
        """Merged template for an original dataset id, None if dropped."""
        return self.merge_map.get(original_id)

    def label_index(self, template_id: int) -> int:
        """Dense class index (position in sorted id order) for the classifier."""
        try:
            return self.ids.index(template_id)
        except ValueError:
            raise CatalogError(f"unknown template id {template_id}") from None

    @classmethod
    def from_dict(cls, doc: dict) -> "TemplateCatalog":
        templates = []
        for td in doc["templates"]:
            slots = tuple(Slot(name, kind, bool(req)) for name, kind, req in td["slots"])
            templates.append(Template(int(td["id"]), td["type"], td["pattern"], slots))
        merge_map = {int(k): int(v) for k, v in doc.get("merge_map", {}).items()}
        return cls(templates, merge_map, version=int(doc.get("version", 1)))

    @classmethod
    def from_file(cls, path) -> "TemplateCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> "TemplateCatalog":
        text = resources.files("templateqa.data").joinpath("templates.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))


def load_catalog(path=None) -> TemplateCatalog:
    if path is None:
        return TemplateCatalog.default()
    return TemplateCatalog.from_file(path)
