import numpy as np
import pytest

from hyperaug.embeddings import EmbeddingSpace
from hyperaug.taxonomy import Taxonomy


@pytest.fixture
def toy_space():
    # orthonormal 3-word space plus a few related words
    tokens = ["dog", "animal", "entity", "small", "cat", "small_dog"]
    vectors = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.9, 0.1, 0.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
    ])
    return EmbeddingSpace(tokens, vectors, name="toy")


@pytest.fixture
def chain_taxonomy():
    return Taxonomy([("dog", "animal"), ("animal", "entity")])
