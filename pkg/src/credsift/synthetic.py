"""Seeded synthetic credential corpus for tests and offline benchmarks.

Each category is rendered from a small set of line templates shaped like
real leaked-credential lines (assignment of a secret value to a telltale
variable name, armor headers, provider-prefixed keys, and so on). Values are
drawn from category-appropriate alphabets so the corpus is classifiable but
not degenerate.
"""

from __future__ import annotations

import string

from .dataset import LabeledDataset
from .rng import SplitMix64
from .taxonomy import CredentialCategory, CredentialRecord

_LOWER = string.ascii_lowercase
_UPPER = string.ascii_uppercase
_ALNUM = string.ascii_letters + string.digits
_UPPER_NUM = string.ascii_uppercase + string.digits
_PUNCT_MIX = _ALNUM + "!$%()*_-@/"
_B64URL = _ALNUM + "-_"


def _draw(rng: SplitMix64, alphabet: str, length: int) -> str:
    return "".join(alphabet[rng.below(len(alphabet))] for _ in range(length))


def _password(rng: SplitMix64) -> str:
    value = _draw(rng, _LOWER + _UPPER, 8 + rng.below(6))
    names = ("PfxPassword", "dbPassword", "adminPassword", "proxyPassword", "userPasswd")
    name = names[rng.below(len(names))]
    return f'{name}= "{value}"'

def _generic_secret(rng: SplitMix64) -> str:
    value = _draw(rng, _ALNUM + "*%$!(_-", 36 + rng.below(16))
    names = ("SECRET_KEY", "APP_SECRET", "client_secret", "SIGNING_SECRET")
    return f"{names[rng.below(len(names))]}= '{value}'"

def _private_key(rng: SplitMix64) -> str:
    kinds = ("RSA", "EC", "DSA", "OPENSSH")
    kind = kinds[rng.below(len(kinds))]
    forms = (
        f"PEMBytes: []byte(`-----BEGIN {kind} PRIVATE KEY-----",
        f"key_pem = \"-----BEGIN {kind} PRIVATE KEY-----\"",
        f"-----BEGIN {kind} PRIVATE KEY-----",
    )
    return forms[rng.below(len(forms))]

def _generic_token(rng: SplitMix64) -> str:
    value = _draw(rng, _LOWER + string.digits, 7 + rng.below(10))
    names = ("token_secret", "session_token", "csrf_token", "refresh_token")
    return f"{names[rng.below(len(names))]}: '{value}'"

def _predefined_pattern(rng: SplitMix64) -> str:
    pick = rng.below(3)
    if pick == 0:
        return f"accessKeyId: AKIA{_draw(rng, _UPPER_NUM, 16)}"
    if pick == 1:
        return f"apiKey: AIza{_draw(rng, _B64URL, 35)}"
    header = _draw(rng, _B64URL, 12)
    payload = _draw(rng, _B64URL, 24)
    return f"bearer: eyJ{header}.eyJ{payload}.{_draw(rng, _B64URL, 16)}"

def _auth_key_token(rng: SplitMix64) -> str:
    value = _draw(rng, _LOWER + string.digits, 16)
    forms = (
        f"oauth:{{consumer_key: '{value}'",
        f"authKey = \"{value}\"",
        f"AUTH_TOKEN: {value}",
        f"authorization_code: '{value}'",
    )
    return forms[rng.below(len(forms))]

def _seed_salt_nonce(rng: SplitMix64) -> str:
    value = _draw(rng, _ALNUM, 24 + rng.below(16))
    names = ("oauth_nonce", "password_salt", "rng_seed", "crypto_nonce", "hash_salt")
    return f"{names[rng.below(len(names))]}: '{value}'"

def _other(rng: SplitMix64) -> str:
    value = _draw(rng, _PUNCT_MIX, 10 + rng.below(8))
    forms = (f"user:{value}", f"dsn = {value}", f"cred -> {value}")
    return forms[rng.below(len(forms))]


_GENERATORS = {
    CredentialCategory.PASSWORDS: _password,
    CredentialCategory.GENERIC_SECRETS: _generic_secret,
    CredentialCategory.PRIVATE_KEYS: _private_key,
    CredentialCategory.GENERIC_TOKENS: _generic_token,
    CredentialCategory.PREDEFINED_PATTERNS: _predefined_pattern,
    CredentialCategory.AUTH_KEYS_TOKENS: _auth_key_token,
    CredentialCategory.SEEDS_SALTS_NONCES: _seed_salt_nonce,
    CredentialCategory.OTHERS: _other,
}

_LANGUAGE_TAGS = ("YAML", "Go", "Python", "JavaScript", "Text", "Config")


def generate_corpus(per_category: int = 400, seed: int = 1) -> LabeledDataset:
    """Generate `per_category` labeled lines for each of the 8 categories."""
    rng = SplitMix64(seed)
    records = []
    for category in CredentialCategory:
        generator = _GENERATORS[category]
        for i in range(per_category):
            records.append(CredentialRecord(
                text=generator(rng),
                category=category,
                is_true=True,
                source_path=f"synthetic/{category.label.lower()}.txt",
                line_number=i + 1,
                language_tag=_LANGUAGE_TAGS[rng.below(len(_LANGUAGE_TAGS))],
            ))
    return LabeledDataset(tuple(records), name=f"synthetic-{per_category}x8-s{seed}")
