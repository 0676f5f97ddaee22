"""Subword tokenization: greedy WordPiece and byte-level pair merging.

Both tokenizers are pure functions of (text, model). Byte-level BPE is
lossless by construction: every byte of the input survives into the token
stream, so detokenize(tokenize(s)) == s for arbitrary UTF-8 input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError, ParseError

# Pre-tokenization splitting class: whitespace plus this punctuation set.
# Each punctuation character becomes a standalone word.
PUNCTUATION = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_{|}~`")

MERGES_HEADER = "#credsift merges v1"

_CHUNK_RE = re.compile(r"\s*\S+|\s+")


def _build_byte_symbol_table() -> tuple[dict[int, str], dict[str, int]]:
    """Bijection between the 256 byte values and printable code points.

    Bytes that are printable, non-space Latin-1 characters (33..126, 161..172,
    174..255) map to themselves; the remaining 68 byte values map, in ascending
    byte order, to code points 256, 257, ... so every symbol is printable and
    merges files stay human-readable. The full table ships in the README.
    """
    keep = list(range(33, 127)) + list(range(161, 173)) + list(range(174, 256))
    byte_to_sym = {}
    next_cp = 256
    for b in range(256):
        if b in keep:
            byte_to_sym[b] = chr(b)
        else:
            byte_to_sym[b] = chr(next_cp)
            next_cp += 1
    sym_to_byte = {s: b for b, s in byte_to_sym.items()}
    return byte_to_sym, sym_to_byte


BYTE_TO_SYMBOL, SYMBOL_TO_BYTE = _build_byte_symbol_table()


def byte_symbol_table_text() -> str:
    """The byte<->symbol table as 'byte<TAB>symbol' lines (documentation aid)."""
    return "\n".join(f"{b}\t{BYTE_TO_SYMBOL[b]}" for b in range(256))


@dataclass(frozen=True)
class WordPieceVocab:
    """A WordPiece vocabulary: token ids plus the unknown/continuation markers."""

    token_to_id: dict[str, int]
    unk_token: str = "[UNK]"
    continuation_prefix: str = "##"
    max_chars_per_word: int = 100

    def __post_init__(self):
        if self.unk_token not in self.token_to_id:
            raise DomainError(f"unk token {self.unk_token!r} missing from vocabulary")
        ids = list(self.token_to_id.values())
        if len(set(ids)) != len(ids):
            raise DomainError("vocabulary ids must be unique")
        if self.max_chars_per_word < 1:
            raise DomainError("max_chars_per_word must be positive")


@dataclass(frozen=True)
class BpeModel:
    """Ranked merge list over the 256-byte base alphabet."""

    merges: tuple[tuple[str, str], ...] = ()
    token_to_id: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        known = set(BYTE_TO_SYMBOL.values())
        for rank, (left, right) in enumerate(self.merges):
            if left not in known or right not in known:
                raise DomainError(
                    f"merge #{rank} ({left!r}, {right!r}) uses symbols not derivable "
                    "from the byte alphabet plus earlier merges"
                )
            known.add(left + right)
        if not self.token_to_id:
            ids = {BYTE_TO_SYMBOL[b]: b for b in range(256)}
            for rank, (left, right) in enumerate(self.merges):
                ids[left + right] = 256 + rank
            object.__setattr__(self, "token_to_id", ids)

    @property
    def ranks(self) -> dict[tuple[str, str], int]:
        return {pair: rank for rank, pair in enumerate(self.merges)}


def pre_split(text: str) -> list[str]:
    """Split text into words at whitespace; punctuation chars stand alone."""
    words = []
    current = []
    for ch in text:
        if ch.isspace():
            if current:
                words.append("".join(current))
                current = []
        elif ch in PUNCTUATION:
            if current:
                words.append("".join(current))
                current = []
            words.append(ch)
        else:
            current.append(ch)
    if current:
        words.append("".join(current))
    return words


def wordpiece_tokenize(text: str, vocab: WordPieceVocab) -> list[str]:
    """Greedy longest-prefix-first WordPiece decomposition of each word."""
    tokens = []
    for word in pre_split(text):
        if len(word) > vocab.max_chars_per_word:
            tokens.append(vocab.unk_token)
            continue
        pieces = []
        start = 0
        failed = False
        while start < len(word):
            end = len(word)
            piece = None
            while start < end:
                candidate = word[start:end]
                if start > 0:
                    candidate = vocab.continuation_prefix + candidate
                if candidate in vocab.token_to_id:
                    piece = candidate
                    break
                end -= 1
            if piece is None:
                failed = True
                break
            pieces.append(piece)
            start = end
        if failed:
            tokens.append(vocab.unk_token)
        else:
            tokens.extend(pieces)
    return tokens


def _merge_pair(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    """Merge every left-to-right occurrence of `pair` in one pass."""
    merged = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            merged.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return merged


def _apply_merges(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    while len(symbols) > 1:
        best = None
        best_rank = None
        for pair in zip(symbols, symbols[1:]):
            rank = ranks.get(pair)
            if rank is not None and (best_rank is None or rank < best_rank):
                best, best_rank = pair, rank
        if best is None:
            break
        symbols = _merge_pair(symbols, best)
    return symbols


def byte_bpe_tokenize(text: str, model: BpeModel) -> list[str]:
    """Byte-level BPE: chunk at whitespace, map bytes to symbols, apply merges.

    A whitespace run is attached to the following chunk, so space markers are
    ordinary symbols and concatenating detokenized output reproduces the input.
    """
    if not text:
        return []
    ranks = model.ranks
    tokens = []
    for chunk in _CHUNK_RE.findall(text):
        symbols = [BYTE_TO_SYMBOL[b] for b in chunk.encode("utf-8")]
        tokens.extend(_apply_merges(symbols, ranks))
    return tokens


def detokenize(tokens: list[str], scheme: str, *,
               vocab: WordPieceVocab | None = None,
               model: BpeModel | None = None) -> str:
    """Invert tokenization. Lossless for byte-bpe; WordPiece rejoins at '##'."""
    if scheme == "byte-bpe":
        data = bytearray()
        for token in tokens:
            if model is not None and token not in model.token_to_id:
                raise DomainError(f"token not in vocabulary: {token!r}")
            for sym in token:
                if sym not in SYMBOL_TO_BYTE:
                    raise DomainError(f"token not in vocabulary: {token!r}")
                data.append(SYMBOL_TO_BYTE[sym])
        return data.decode("utf-8")
    if scheme == "wordpiece":
        prefix = vocab.continuation_prefix if vocab else "##"
        parts = []
        for token in tokens:
            if vocab is not None and token not in vocab.token_to_id:
                raise DomainError(f"token not in vocabulary: {token!r}")
            if token.startswith(prefix) and parts:
                parts[-1] += token[len(prefix):]
            else:
                parts.append(token)
        return " ".join(parts)
    raise DomainError(f"unknown detokenize scheme: {scheme!r}")


def learn_merges(corpus: list[str], num_merges: int) -> BpeModel:
    """Corpus-driven merge learner for fixtures.

    Greedily merges the most frequent adjacent symbol pair, breaking ties by
    lexicographic pair order, and stops early once no pair occurs twice.
    Intended for tests and toy vocabularies, not production tokenizers.
    """
    sequences = []
    for text in corpus:
        for chunk in _CHUNK_RE.findall(text):
            sequences.append([BYTE_TO_SYMBOL[b] for b in chunk.encode("utf-8")])
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        counts: dict[tuple[str, str], int] = {}
        for seq in sequences:
            for pair in zip(seq, seq[1:]):
                counts[pair] = counts.get(pair, 0) + 1
        if not counts:
            break
        best = min(counts, key=lambda p: (-counts[p], p))
        if counts[best] < 2:
            break
        merges.append(best)
        sequences = [_merge_pair(seq, best) for seq in sequences]
    return BpeModel(tuple(merges))


def load_wordpiece_vocab(path: str | Path, **kwargs) -> WordPieceVocab:
    """Read a vocabulary file: one token per line, id = line index."""
    token_to_id = {}
    for idx, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        token_to_id[line] = idx
    return WordPieceVocab(token_to_id, **kwargs)


def save_wordpiece_vocab(vocab: WordPieceVocab, path: str | Path) -> None:
    ordered = sorted(vocab.token_to_id, key=vocab.token_to_id.get)
    Path(path).write_text("\n".join(ordered) + "\n", encoding="utf-8")


def load_merges(path: str | Path) -> BpeModel:
    """Read a merges file: header line, then one 'left right' pair per line.

    Rank = position among the pair lines (0-based).
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"{path}: merges file must start with a header line")
    merges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'left right'",
                             path=str(path), line_number=lineno)
        merges.append((parts[0], parts[1]))
    return BpeModel(tuple(merges))


def save_merges(model: BpeModel, path: str | Path) -> None:
    lines = [MERGES_HEADER] + [f"{left} {right}" for left, right in model.merges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
