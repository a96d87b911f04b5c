"""Token vocabulary with a reserved padding row and role-specific unknowns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError
from .grids import PAD_TOKEN, Role, split_lexicalized

UNK_TOKENS = {"S": "UNK-S", "O": "UNK-O", "X": "UNK-X"}

# always present so any grid cell can be encoded without the training corpus
_BASE_LEXICALIZED = (Role.ABSENT.char, UNK_TOKENS["S"], UNK_TOKENS["O"], UNK_TOKENS["X"])
_BASE_UNLEXICALIZED = (Role.SUBJECT.char, Role.OBJECT.char, Role.OTHER.char, Role.ABSENT.char)


@dataclass(frozen=True)
class Vocab:
    """Dense token -> index map; index 0 is the padding token (zero embedding)."""

    tokens: tuple[str, ...]
    mode: str

    def __post_init__(self):
        if not self.tokens or self.tokens[0] != PAD_TOKEN:
            raise ValidationError("vocabulary must reserve index 0 for the padding token")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValidationError("duplicate tokens in vocabulary")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def build(cls, token_grids: Iterable[np.ndarray], mode: str) -> "Vocab":
        """Vocabulary over the tokens of the given grids (sorted for stability)."""
        base = _BASE_LEXICALIZED if mode == "lexicalized" else _BASE_UNLEXICALIZED
        seen: set[str] = set()
        for tokens in token_grids:
            seen.update(str(t) for t in np.asarray(tokens, dtype=object).ravel())
        seen.discard(PAD_TOKEN)
        extra = sorted(seen.difference(base))
        return cls(tokens=(PAD_TOKEN, *base, *extra), mode=mode)

    def encode(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is not None:
            return idx
        if self.mode == "lexicalized":
            _, char = split_lexicalized(token)
            return self._index[UNK_TOKENS[char]]
        raise ValidationError(f"token {token!r} not in vocabulary")

    def encode_grid(self, tokens: np.ndarray) -> np.ndarray:
        """Encode an object array of tokens to int32 indices, mapping OOV to UNK."""
        flat = np.asarray(tokens, dtype=object).ravel()
        out = np.fromiter((self.encode(t) for t in flat), dtype=np.int32, count=flat.size)
        return out.reshape(np.asarray(tokens).shape)
