"""Few-shot retrosynthesis prompts drawn from a fixed template set."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import jinja2

from ..chem.smiles import write_smiles
from ..exceptions import ChemCensorError, PoolTooSmall
from ..reaction.reaction import parse_reaction

N_FEWSHOT = 5

TEMPLATES: tuple[str, ...] = (
    "Based on the given product, provide some plausible reactants that might have been utilized to prepare it: <smiles>{{source}}</smiles>.",
    "Can you identify some reactants that might result in the given product: <smiles>{{source}}</smiles>?",
    "Given the following product <smiles>{{source}}</smiles>, please provide possible reactants.",
    "Given the product provided <smiles>{{source}}</smiles>, propose some possible reactants that could have been employed in its formation.",
    "Given these product <smiles>{{source}}</smiles>, can you propose the corresponding reactants?",
    "Please suggest possible reactants for the given product: <smiles>{{source}}</smiles>",
    "Please suggest potential reactants for the given product: <smiles>{{source}}</smiles>",
    "Please suggest potential reactants used in the synthesis of the provided product: <smiles>{{source}}</smiles>",
    "Provide a list of potential reactants that may have produced the given product: <smiles>{{source}}</smiles>",
    "Provided the product below, propose some possible reactants that could have been used in the reaction: <smiles>{{source}}</smiles>",
    "What are the possible reactants that could have formed the following product <smiles>{{source}}</smiles>?",
    "What reactants could lead to the production of the following product <smiles>{{source}}</smiles>?",
    "Which reactants could have been used to generate the given product <smiles>{{source}}</smiles>?",
    "With the given product <smiles>{{source}}</smiles>, suggest some likely reactants that were used in its synthesis.",
    "With the provided product <smiles>{{source}}</smiles>, recommend some probable reactants that were likely used in its production.",
)

PREAMBLE = (
    "You are assisting with single-step retrosynthesis. For the product in the "
    "last question, propose one set of reactants. Follow the answer format of "
    "the examples: write the reactant SMILES separated by '.' and enclose them "
    "in <smiles></smiles> tags."
)

_ENV = jinja2.Environment(undefined=jinja2.StrictUndefined, autoescape=False, keep_trailing_newline=False)
_COMPILED = tuple(_ENV.from_string(t) for t in TEMPLATES)
_LAYOUT = _ENV.from_string(
    "{{ preamble }}\n"
    "{% for q, a in examples %}\n"
    "Example {{ loop.index }}:\n{{ q }}\nAnswer: <smiles>{{ a }}</smiles>\n"
    "{% endfor %}\n"
    "{{ query }}\nAnswer:"
)


@dataclass(frozen=True, slots=True)
class PromptSpec:
    """A rendered prompt.

    Attributes:
        template_id: 1-based index into :data:`TEMPLATES`.
        fewshot: ``(question, answer)`` pairs; answers are reactant SMILES.
        target_smiles: Product the model is asked about.
        rendered: Full prompt text.
    """

    template_id: int
    fewshot: tuple[tuple[str, str], ...]
    target_smiles: str
    rendered: str

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "fewshot": [list(p) for p in self.fewshot],
            "target_smiles": self.target_smiles,
            "rendered": self.rendered,
        }


def render_template(template_id: int, source: str) -> str:
    return _COMPILED[template_id - 1].render(source=source)


def build_prompt(target: str, fewshot_pool: Sequence[tuple[str, str]], seed: int = 0) -> PromptSpec:
    """Sample a template and five examples and render the prompt.

    The draw depends only on ``(target, seed)`` and the pool contents, so the
    same inputs always give the same prompt.

    Args:
        target: Product SMILES.
        fewshot_pool: ``(product, reactants)`` pairs to draw examples from.
        seed: Run seed.

    Raises:
        PoolTooSmall: Fewer than five pool entries.
    """
    if len(fewshot_pool) < N_FEWSHOT:
        raise PoolTooSmall(f"few-shot pool has {len(fewshot_pool)} entries, need {N_FEWSHOT}")
    rng = random.Random(f"{seed}:{target}")
    template_id = rng.randrange(len(TEMPLATES)) + 1
    picked = rng.sample(list(fewshot_pool), N_FEWSHOT)
    fewshot = tuple((render_template(template_id, p), r) for p, r in picked)
    rendered = _LAYOUT.render(
        preamble=PREAMBLE,
        examples=fewshot,
        query=render_template(template_id, target),
    )
    return PromptSpec(template_id, fewshot, target, rendered)


def fewshot_pool_from_reactions(lines: Iterable[str]) -> list[tuple[str, str]]:
    """``(product, reactants)`` pairs from corpus lines, map numbers removed.

    Lines that fail to parse are skipped; reagents are left out of answers.
    """
    pool = []
    for raw in lines:
        text = raw.split("\t", 1)[0].strip()
        if not text or text.startswith("#"):
            continue
        try:
            rxn = parse_reaction(text)
        except (ChemCensorError, ValueError):
            continue
        product = ".".join(write_smiles(m, include_maps=False) for m in rxn.products)
        reactants = ".".join(write_smiles(m, include_maps=False) for m in rxn.reactants)
        pool.append((product, reactants))
    return pool
