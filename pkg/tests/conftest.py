"""Shared fixtures: the nested worked example and a hand-built vocabulary
whose pieces force multi-piece trigger alignment."""

from __future__ import annotations

import pytest

from bioevents.codec import LabelSchema
from bioevents.synth import nested_example
from bioevents.vocab import SubwordVocab, mask_token


@pytest.fixture(scope="session")
def ge11_schema() -> LabelSchema:
    return LabelSchema.ge11()


@pytest.fixture()
def nested_doc():
    """'BMP-6 rapidly induced phosphorylation of Smad1/5/8' with the
    phosphorylation event nested under a positive regulation."""
    return nested_example().parse()


@pytest.fixture()
def nested_vocab() -> SubwordVocab:
    """Splits 'phosphorylation' into 'phosphory' + '##lation' so alignment
    across subword boundaries is exercised."""
    return SubwordVocab(
        pieces=[
            mask_token("Protein"),
            "rapidly",
            "induced",
            "phosphory",
            "##lation",
            "of",
            ".",
        ]
    )
