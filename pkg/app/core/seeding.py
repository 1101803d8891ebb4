import zlib
from typing import Union

import numpy as np

SeedPart = Union[int, str]


def _entropy(part: SeedPart) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFFFFFFFFFF


def derive_rng(master_seed: int, *parts: SeedPart) -> np.random.Generator:
    """Flux aléatoire indépendant dérivé de (graine maîtresse, parties...).

    Les chaînes sont hachées (crc32) pour que le flux ne dépende que de leur contenu.
    """
    entropy = [_entropy(master_seed)] + [_entropy(p) for p in parts]
    return np.random.default_rng(np.random.SeedSequence(entropy))

