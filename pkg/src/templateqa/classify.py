"""Ranked template hypotheses and answer-type labels for parsed questions."""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import TemplateCatalog
from .conllu import ParsedQuestion
from .features import FeatureVariant, Vocabularies
from .treelstm import (
    TreeLstmParams,
    load_model,
    predict_example,
    token_row_index,
    vectorize_example,
)


@dataclass
class TemplateHypothesis:
    template_id: int
    probability: float
    rank: int  # 1-based


@dataclass
class ModelBundle:
    params: TreeLstmParams
    vocab: Vocabularies
    variant: FeatureVariant
    catalog: TemplateCatalog
    token_index: dict[str, int]

    @classmethod
    def load(cls, path, catalog: TemplateCatalog | None = None) -> "ModelBundle":
        params, vocab, variant, catalog_ids, tokens = load_model(path)
        catalog = catalog or TemplateCatalog.default()
        if catalog_ids != catalog.ids:
            raise ValueError(
                f"model was trained on templates {catalog_ids}, catalog has {catalog.ids}"
            )
        return cls(params, vocab, variant, catalog, token_row_index(tokens))


def classify(q: ParsedQuestion, bundle: ModelBundle) -> list[TemplateHypothesis]:
    """Full ranked hypothesis list; callers truncate to top-k."""
    example = vectorize_example(q, bundle.variant, bundle.vocab, bundle.token_index)
    prediction = predict_example(bundle.params, example, bundle.catalog.ids)
    prob_of = dict(zip(bundle.catalog.ids, prediction.probs))
    return [
        TemplateHypothesis(tid, float(prob_of[tid]), rank)
        for rank, tid in enumerate(prediction.ranked, start=1)
    ]


def answer_type(template_id: int, catalog: TemplateCatalog) -> str:
    """ENTITY, COUNT or BOOLEAN for a catalog template."""
    return catalog[template_id].question_type


def hypotheses_json(qid, hypotheses: list[TemplateHypothesis], k: int | None = None) -> dict:
    hyps = hypotheses if k is None else hypotheses[:k]
    return {
        "qid": qid,
        "hypotheses": [
            {"template": h.template_id, "prob": round(h.probability, 6)} for h in hyps
        ],
    }
