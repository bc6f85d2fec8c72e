"""Pull the proposed reactant set out of a free-text model completion."""

from __future__ import annotations

import re

from ..chem.smiles import parse_smiles
from ..exceptions import ChemCensorError

_SMILES_BLOCK = re.compile(r"<\s*smiles\s*>(.*?)<\s*/\s*smiles\s*>", re.IGNORECASE | re.DOTALL)
_ANY_TAG = re.compile(r"<\s*/?\s*[A-Za-z][\w-]*\s*>")
_WRAPPING = "`'\"*,;:"
_TRAILING = ".,;:!?"
# plain words such as "no" or "So" parse as SMILES; demand SMILES-like shape
_SMILES_SHAPE = re.compile(r"[()\[\]=#@+\-/\\0-9.%]|^(?:[BCNOPSFI]|Cl|Br){2,}$")


def _parses(text: str) -> bool:
    try:
        return parse_smiles(text).n_atoms > 0
    except (ChemCensorError, ValueError):
        return False


def _clean_token(token: str) -> str:
    token = token.strip(_WRAPPING).rstrip(_TRAILING)
    # a reaction written out in full: keep what sits left of the first '>'
    if ">" in token:
        token = token.split(">", 1)[0]
    return token


def extract_answer(completion: str | None) -> str | None:
    """The reactant-set SMILES proposed in ``completion``, or None.

    The content of the last ``<smiles>...</smiles>`` pair wins, with all
    whitespace removed. Without such a pair, other tags are dropped and the
    last whitespace-separated token that parses as SMILES is returned; a
    reaction SMILES token contributes its left-hand side. Only the tag scan
    trusts non-parsing content: a tagged but malformed answer is returned
    as is so it can be counted as invalid.
    """
    if not completion:
        return None
    blocks = _SMILES_BLOCK.findall(completion)
    if blocks:
        answer = "".join(blocks[-1].split())
        return answer or None
    text = _ANY_TAG.sub(" ", completion)
    for line in reversed(text.splitlines()):
        for token in reversed(line.split()):
            cand = _clean_token(token)
            if cand and _SMILES_SHAPE.search(cand) and _parses(cand):
                return cand
    return None
