"""Directory scanning: candidate extraction by rule and entropy, then classification.

Scans are deterministic: files are visited in lexicographic relative-path
order, lines ascending, so two scans of an unchanged tree emit byte-identical
findings. Secrets are masked in snippets by default so reports do not re-leak
the values they flag.
"""

from __future__ import annotations

import fnmatch
import json
import math
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from . import mlp
from .embedding import EmbeddingCache, ProviderSpec, embed_batch
from .errors import CredsiftError, DomainError
from .taxonomy import CredentialCategory, RuleSignature, default_rules

# Token extraction: values are separated from names by these delimiters.
_TOKEN_DELIMITERS = set(" \t\r\n\f\v'\"=:,")
MIN_TOKEN_LENGTH = 8
_ARMOR_END_MARKERS = ("END", "PRIVATE KEY")


@dataclass(frozen=True)
class ScanConfig:
    root: str | Path
    include_globs: tuple[str, ...] = ("*",)
    exclude_globs: tuple[str, ...] = ()
    max_file_bytes: int = 1_048_576
    binary_skip: bool = True
    entropy_floor_default: float = 3.5
    min_token_length: int = MIN_TOKEN_LENGTH
    mask: bool = True

    def __post_init__(self):
        if self.max_file_bytes <= 0:
            raise DomainError("max_file_bytes must be positive")


@dataclass(frozen=True)
class ScanFinding:
    source_path: str
    line_number: int
    snippet: str
    matched_rule: CredentialCategory
    entropy_bits: float
    predicted_category: CredentialCategory | None = None
    probability: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.entropy_bits <= 8.0:
            raise DomainError(f"entropy_bits out of [0,8]: {self.entropy_bits}")
        if (self.predicted_category is None) != (self.probability is None):
            raise DomainError("probability must be present iff predicted_category is")

    def to_json_dict(self) -> dict:
        return {
            "source_path": self.source_path,
            "line_number": self.line_number,
            "snippet": self.snippet,
            "matched_rule": self.matched_rule.label,
            "entropy_bits": self.entropy_bits,
            "predicted_category":
                None if self.predicted_category is None else self.predicted_category.label,
            "probability": self.probability,
        }


@dataclass
class ScanStats:
    files_scanned: int = 0
    files_skipped_binary: int = 0
    files_skipped_size: int = 0
    read_errors: int = 0
    candidates: int = 0
    embed_errors: int = 0

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Candidate:
    source_path: str
    line_number: int
    text: str
    matched_rule: CredentialCategory
    entropy_bits: float


@dataclass(frozen=True)
class ScanResult:
    findings: tuple[ScanFinding, ...]
    stats: ScanStats


def shannon_entropy(s: str) -> float:
    """Shannon entropy in bits/char over the UTF-8 byte frequencies of s."""
    data = s.encode("utf-8")
    if not data:
        return 0.0
    total = len(data)
    entropy = 0.0
    for count in Counter(data).values():
        p = count / total
        entropy -= p * math.log2(p)
    return entropy


def extract_value_tokens(line: str, min_length: int = MIN_TOKEN_LENGTH) -> list[str]:
    """Split a line on whitespace, quotes, and =:, and keep tokens >= min_length."""
    tokens = []
    current = []
    for ch in line:
        if ch in _TOKEN_DELIMITERS:
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return [t for t in tokens if len(t) >= min_length]


def candidate_entropy(line: str, min_length: int = MIN_TOKEN_LENGTH) -> float:
    """Max token entropy when value tokens exist, else entropy of the whole line."""
    tokens = extract_value_tokens(line, min_length)
    if tokens:
        return max(shannon_entropy(t) for t in tokens)
    return shannon_entropy(line)


def mask_snippet(line: str, *, entropy_floor: float,
                 min_length: int = MIN_TOKEN_LENGTH) -> str:
    """Replace all but the first/last 2 chars of each high-entropy token with '*'."""
    masked = line
    for token in extract_value_tokens(line, min_length):
        if shannon_entropy(token) >= entropy_floor:
            replacement = token[:2] + "*" * (len(token) - 4) + token[-2:]
            masked = masked.replace(token, replacement)
    return masked


def _is_binary(path: Path) -> bool:
    with path.open("rb") as handle:
        return b"\x00" in handle.read(8192)


def _included(rel: str, config: ScanConfig) -> bool:
    base = rel.rsplit("/", 1)[-1]
    if not any(fnmatch.fnmatch(rel, g) or fnmatch.fnmatch(base, g)
               for g in config.include_globs):
        return False
    return not any(fnmatch.fnmatch(rel, g) or fnmatch.fnmatch(base, g)
                   for g in config.exclude_globs)


def _iter_files(config: ScanConfig) -> list[Path]:
    root = Path(config.root)
    if not root.is_dir():
        raise OSError(f"scan root is not a readable directory: {root}")
    paths = []
    for dirpath, dirnames, filenames in os.walk(root, followlinks=False):
        dirnames.sort()
        for name in filenames:
            full = Path(dirpath) / name
            rel = full.relative_to(root).as_posix()
            if _included(rel, config):
                paths.append(full)
    return sorted(paths, key=lambda p: p.relative_to(root).as_posix())


def walk_candidates(config: ScanConfig, rules: list[RuleSignature] | None = None,
                    stats: ScanStats | None = None):
    """Yield Candidate lines in deterministic (path, line) order.

    A line is a candidate when a rule keyword/pattern matches, or when it
    contains a value token whose entropy reaches the configured floor (those
    fall into the Others signature). Inside private-key armor blocks the
    entropy path is suppressed so a key block reports once, at its header.
    """
    rules = default_rules() if rules is None else rules
    stats = stats if stats is not None else ScanStats()
    root = Path(config.root)
    entropy_rule = next(
        (r for r in rules if not r.keywords and not r.patterns
         and r.entropy_floor is not None),
        None,
    )
    for path in _iter_files(config):
        try:
            if path.stat().st_size > config.max_file_bytes:
                stats.files_skipped_size += 1
                continue
            if config.binary_skip and _is_binary(path):
                stats.files_skipped_binary += 1
                continue
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError:
            stats.read_errors += 1
            continue
        stats.files_scanned += 1
        rel = path.relative_to(root).as_posix()
        in_armor = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            matched = next((r for r in rules if r.matches(line)), None)
            if matched is not None and (matched.keywords or matched.patterns):
                if matched.category is CredentialCategory.PRIVATE_KEYS and "BEGIN" in line:
                    in_armor = True
                stats.candidates += 1
                yield Candidate(rel, lineno, line, matched.category,
                                candidate_entropy(line, config.min_token_length))
                continue
            if in_armor:
                if all(marker in line for marker in _ARMOR_END_MARKERS):
                    in_armor = False
                continue
            if entropy_rule is not None:
                floor = entropy_rule.entropy_floor or config.entropy_floor_default
                entropy = candidate_entropy(line, config.min_token_length)
                tokens = extract_value_tokens(line, config.min_token_length)
                if tokens and entropy >= floor:
                    stats.candidates += 1
                    yield Candidate(rel, lineno, line, entropy_rule.category, entropy)


def scan_and_classify(config: ScanConfig,
                      rules: list[RuleSignature] | None = None,
                      classifier: mlp.MlpParams | None = None,
                      provider: ProviderSpec | None = None,
                      cache: EmbeddingCache | None = None) -> ScanResult:
    """Run the full pipeline: walk, (optionally) embed and classify, mask, report.

    A failed embedding chunk is tallied and its findings keep null predictions;
    the scan itself still completes.
    """
    rules = default_rules() if rules is None else rules
    stats = ScanStats()
    candidates = list(walk_candidates(config, rules, stats))
    predictions: list[tuple[CredentialCategory, float] | None] = [None] * len(candidates)

    if classifier is not None and provider is not None and candidates:
        if classifier.architecture_dims[0] != provider.dimension:
            raise DomainError(
                f"classifier input dim {classifier.architecture_dims[0]} != "
                f"provider dimension {provider.dimension}")
        for start in range(0, len(candidates), provider.batch_size):
            chunk = candidates[start:start + provider.batch_size]
            try:
                vectors = embed_batch([c.text for c in chunk], provider, cache=cache)
            except CredsiftError:
                stats.embed_errors += len(chunk)
                continue
            for offset, vec in enumerate(vectors):
                category, probs = mlp.predict(vec, classifier)
                predictions[start + offset] = (category, float(probs[category.id]))

    findings = []
    for cand, pred in zip(candidates, predictions):
        snippet = cand.text
        if config.mask:
            snippet = mask_snippet(snippet, entropy_floor=config.entropy_floor_default,
                                   min_length=config.min_token_length)
        findings.append(ScanFinding(
            source_path=cand.source_path,
            line_number=cand.line_number,
            snippet=snippet,
            matched_rule=cand.matched_rule,
            entropy_bits=cand.entropy_bits,
            predicted_category=None if pred is None else pred[0],
            probability=None if pred is None else pred[1],
        ))
    return ScanResult(tuple(findings), stats)


def findings_to_jsonl(findings) -> str:
    """One ScanFinding JSON object per line."""
    return "\n".join(json.dumps(f.to_json_dict(), ensure_ascii=False) for f in findings)


def findings_to_text(findings) -> str:
    if not findings:
        return "no findings"
    lines = [f"{'Location':<40}{'Rule':<20}{'Entropy':>8}  {'Predicted':<20}Snippet"]
    for f in findings:
        loc = f"{f.source_path}:{f.line_number}"
        predicted = "-"
        if f.predicted_category is not None:
            predicted = f"{f.predicted_category.label} ({f.probability:.3f})"
        lines.append(f"{loc:<40}{f.matched_rule.label:<20}{f.entropy_bits:>8.3f}  "
                     f"{predicted:<20}{f.snippet}")
    return "\n".join(lines)
