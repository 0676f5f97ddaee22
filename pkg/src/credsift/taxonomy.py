"""Credential categories, detection rules, and the record types shared package-wide."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DomainError, ParseError


class CredentialCategory(Enum):
    """The eight credential categories; ids follow the standard legend order."""

    PASSWORDS = 0
    GENERIC_SECRETS = 1
    PRIVATE_KEYS = 2
    GENERIC_TOKENS = 3
    PREDEFINED_PATTERNS = 4
    AUTH_KEYS_TOKENS = 5
    SEEDS_SALTS_NONCES = 6
    OTHERS = 7

    @property
    def id(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    CredentialCategory.PASSWORDS: "Passwords",
    CredentialCategory.GENERIC_SECRETS: "GenericSecrets",
    CredentialCategory.PRIVATE_KEYS: "PrivateKeys",
    CredentialCategory.GENERIC_TOKENS: "GenericTokens",
    CredentialCategory.PREDEFINED_PATTERNS: "PredefinedPatterns",
    CredentialCategory.AUTH_KEYS_TOKENS: "AuthKeysTokens",
    CredentialCategory.SEEDS_SALTS_NONCES: "SeedsSaltsNonces",
    CredentialCategory.OTHERS: "Others",
}

# Extra spellings accepted by category_from_name, normalized to letters only.
_ALIASES = {
    "password": CredentialCategory.PASSWORDS,
    "genericsecret": CredentialCategory.GENERIC_SECRETS,
    "privatekey": CredentialCategory.PRIVATE_KEYS,
    "generictoken": CredentialCategory.GENERIC_TOKENS,
    "predefinedpattern": CredentialCategory.PREDEFINED_PATTERNS,
    "authkeysandtokens": CredentialCategory.AUTH_KEYS_TOKENS,
    "authenticationkeysandtokens": CredentialCategory.AUTH_KEYS_TOKENS,
    "seedssaltsandnonces": CredentialCategory.SEEDS_SALTS_NONCES,
    "saltsseedsandnonces": CredentialCategory.SEEDS_SALTS_NONCES,
    "seedsaltnonce": CredentialCategory.SEEDS_SALTS_NONCES,
    "other": CredentialCategory.OTHERS,
}


def category_from_id(id: int) -> CredentialCategory:
    """Look up a category by its stable integer id (0..7)."""
    if not isinstance(id, int) or isinstance(id, bool) or not 0 <= id <= 7:
        raise DomainError(f"category id out of range 0..7: {id!r}")
    return CredentialCategory(id)


def category_from_name(name: str) -> CredentialCategory:
    """Parse a category from its label, ignoring case and non-letter characters."""
    key = "".join(ch for ch in name.lower() if ch.isalpha())
    for cat, label in _LABELS.items():
        if key == label.lower():
            return cat
    if key in _ALIASES:
        return _ALIASES[key]
    raise DomainError(f"unknown credential category: {name!r}")


@dataclass(frozen=True)
class CredentialRecord:
    """One candidate or labeled credential line plus provenance."""

    text: str
    category: CredentialCategory
    is_true: bool = True
    source_path: str = ""
    line_number: int = 1
    language_tag: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise DomainError("credential text must be non-empty after trimming")
        if self.line_number < 1:
            raise DomainError(f"line_number must be >= 1, got {self.line_number}")


@dataclass(frozen=True)
class RuleSignature:
    """Lexical cues that map a source line to one credential category.

    keywords are matched case-insensitively against the lowercased line;
    patterns are literal substrings matched case-sensitively (they encode
    format prefixes such as key armor headers where case is meaningful).
    entropy_floor, when set, is the bits/char threshold associated with the
    rule; the keyword-free candidate path uses the Others signature's floor.
    """

    category: CredentialCategory
    keywords: tuple[str, ...] = ()
    patterns: tuple[str, ...] = ()
    entropy_floor: float | None = None

    def __post_init__(self):
        for kw in self.keywords:
            if not kw:
                raise DomainError("rule keywords must be non-empty")
            if kw != kw.lower():
                raise DomainError(f"rule keywords must be lowercase: {kw!r}")

    def matches(self, line: str) -> bool:
        lowered = line.lower()
        if any(kw in lowered for kw in self.keywords):
            return True
        return any(pat in line for pat in self.patterns)


# Literal armor headers; reported at the header line for multi-line blocks.
_PRIVATE_KEY_PATTERNS = (
    "BEGIN RSA PRIVATE KEY",
    "BEGIN DSA PRIVATE KEY",
    "BEGIN EC PRIVATE KEY",
    "BEGIN OPENSSH PRIVATE KEY",
    "BEGIN PGP PRIVATE KEY BLOCK",
    "BEGIN ENCRYPTED PRIVATE KEY",
    "BEGIN PRIVATE KEY",
)

DEFAULT_ENTROPY_FLOOR = 3.5


def default_rules() -> list[RuleSignature]:
    """Built-in rule set, ordered most-specific-first.

    Matching walks this list in order, so the precedence is:
    PrivateKeys > PredefinedPatterns > SeedsSaltsNonces > AuthKeysTokens >
    GenericTokens > GenericSecrets > Passwords > Others. Others carries no
    cues; it is the fallback category for keyword-free high-entropy hits.
    """
    return [
        RuleSignature(
            CredentialCategory.PRIVATE_KEYS,
            keywords=("private_key", "privatekey"),
            patterns=_PRIVATE_KEY_PATTERNS,
        ),
        RuleSignature(
            CredentialCategory.PREDEFINED_PATTERNS,
            patterns=("AKIA", "AIza", "eyJ"),
        ),
        RuleSignature(
            CredentialCategory.SEEDS_SALTS_NONCES,
            keywords=("seed", "salt", "nonce"),
        ),
        RuleSignature(
            CredentialCategory.AUTH_KEYS_TOKENS,
            keywords=("auth", "api_key", "apikey", "consumer_key"),
        ),
        RuleSignature(
            CredentialCategory.GENERIC_TOKENS,
            keywords=("token",),
        ),
        RuleSignature(
            CredentialCategory.GENERIC_SECRETS,
            keywords=("secret",),
        ),
        RuleSignature(
            CredentialCategory.PASSWORDS,
            keywords=("password", "passwd", "pwd"),
            entropy_floor=DEFAULT_ENTROPY_FLOOR,
        ),
        RuleSignature(
            CredentialCategory.OTHERS,
            entropy_floor=DEFAULT_ENTROPY_FLOOR,
        ),
    ]


def rules_to_json(rules: list[RuleSignature]) -> str:
    """Serialize a rule set to the documented JSON array form."""
    out = []
    for rule in rules:
        entry = {
            "category": rule.category.label,
            "keywords": list(rule.keywords),
            "patterns": list(rule.patterns),
        }
        if rule.entropy_floor is not None:
            entry["entropy_floor"] = rule.entropy_floor
        out.append(entry)
    return json.dumps(out, indent=2)


def rules_from_json(text: str) -> list[RuleSignature]:
    """Parse a rule set from its JSON array form."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid rules JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError("rules JSON must be an array of signature objects")
    rules = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "category" not in entry:
            raise ParseError(f"rule #{i} must be an object with a 'category' field")
        rules.append(
            RuleSignature(
                category=category_from_name(entry["category"]),
                keywords=tuple(entry.get("keywords", ())),
                patterns=tuple(entry.get("patterns", ())),
                entropy_floor=entry.get("entropy_floor"),
            )
        )
    return rules


def load_rules(path: str | Path) -> list[RuleSignature]:
    return rules_from_json(Path(path).read_text(encoding="utf-8"))
