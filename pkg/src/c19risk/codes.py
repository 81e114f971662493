"""ICD-10-CM diagnosis codes and their CCSR clinical-category catalog.

Normalized codes are plain uppercase strings with the dot removed (3-7
alphanumeric characters, first one alphabetic). CCSR category ids are
6-character strings: a 3-letter body-system prefix plus a 3-digit number,
e.g. RSP002.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Union

from .errors import EmptyCatalog, MalformedCatalogRow, MalformedCode

CODE_RE = re.compile(r"^[A-Z][A-Z0-9]{2,6}$")
CATEGORY_RE = re.compile(r"^[A-Z]{3}[0-9]{3}$")

BUNDLED_CATALOG_VERSION = "fixture-2021.1"

PathOrFile = Union[str, Path, io.TextIOBase]


def normalize_code(raw: str) -> str:
    """Normalize a raw ICD-10-CM code: strip whitespace, uppercase, drop the dot.

    Raises MalformedCode when the result is not a plausible ICD-10-CM code
    (3-7 alphanumerics starting with a letter). Numeric-first inputs, e.g.
    bare ICD-9 codes, are rejected rather than translated.
    """
    code = raw.strip().upper().replace(".", "")
    if not code:
        raise MalformedCode(raw, "empty after normalization")
    if not CODE_RE.match(code):
        if not code[0].isalpha():
            raise MalformedCode(raw, "first character must be alphabetic")
        raise MalformedCode(raw, "expected 3-7 alphanumeric characters")
    return code


def is_valid_category(category: str) -> bool:
    return bool(CATEGORY_RE.match(category))


def body_system(category: str) -> str:
    """3-letter body-system prefix of a CCSR category id."""
    return category[:3]


class CcsrCatalog:
    """Immutable ICD-10-CM -> CCSR category multi-map.

    Lookups are pure and never fail: unmapped codes yield an empty set.
    """

    def __init__(self, entries: Mapping[str, Iterable[str]], version: str):
        self._entries = {code: frozenset(cats) for code, cats in entries.items()}
        self.version = version
        for code, cats in self._entries.items():
            for cat in cats:
                if not is_valid_category(cat):
                    raise MalformedCatalogRow(0, f"bad category {cat!r} for code {code!r}")

    def categories_for(self, code: str) -> frozenset[str]:
        return self._entries.get(code, frozenset())

    def categories(self) -> list[str]:
        """All category ids present in the catalog, sorted."""
        out: set[str] = set()
        for cats in self._entries.values():
            out.update(cats)
        return sorted(out)

    def codes(self) -> list[str]:
        return sorted(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, code: str) -> bool:
        return code in self._entries

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CcsrCatalog)
            and self.version == other.version
            and self._entries == other._entries
        )


@dataclass(frozen=True)
class ProxyCodeSet:
    """Diagnosis codes counting as the severe-respiratory-infection outcome.

    Defaults: literal ARDS code J80 plus the four CCSR respiratory-infection
    categories (pneumonia, influenza, acute bronchitis, other upper
    respiratory infections).
    """

    literal_codes: frozenset[str] = frozenset({"J80"})
    categories: frozenset[str] = frozenset({"RSP002", "RSP003", "RSP005", "RSP006"})

    @classmethod
    def from_config(cls, cfg: Mapping) -> "ProxyCodeSet":
        literal = frozenset(normalize_code(c) for c in cfg.get("literal_codes", ["J80"]))
        cats = frozenset(cfg.get("categories", ["RSP002", "RSP003", "RSP005", "RSP006"]))
        for cat in cats:
            if not is_valid_category(cat):
                raise MalformedCatalogRow(0, f"bad proxy category {cat!r}")
        return cls(literal_codes=literal, categories=cats)


def load_catalog(source: PathOrFile, version: str = "unspecified") -> CcsrCatalog:
    """Load a catalog from CSV with header ``code,ccsr_category``.

    Codes may carry dots; they are normalized on load. Duplicate
    (code, category) rows collapse; a code may map to several categories.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read_catalog(fh, version)
    return _read_catalog(source, version)


def _read_catalog(fh, version: str) -> CcsrCatalog:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyCatalog("catalog file is empty")
    if [h.strip().lower() for h in header] != ["code", "ccsr_category"]:
        raise MalformedCatalogRow(1, f"expected header 'code,ccsr_category', got {header}")
    entries: dict[str, set[str]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise MalformedCatalogRow(lineno, f"expected 2 fields, got {len(row)}")
        raw_code, category = row[0], row[1].strip().upper()
        try:
            code = normalize_code(raw_code)
        except MalformedCode as exc:
            raise MalformedCatalogRow(lineno, str(exc))
        if not is_valid_category(category):
            raise MalformedCatalogRow(lineno, f"bad category id {category!r}")
        entries.setdefault(code, set()).add(category)
    if not entries:
        raise EmptyCatalog("catalog has no data rows")
    return CcsrCatalog(entries, version)


def load_bundled_catalog() -> CcsrCatalog:
    """Load the small catalog shipped with the package (tests, demos)."""
    ref = resources.files("c19risk.data").joinpath("ccsr_catalog.csv")
    with ref.open("r", encoding="utf-8") as fh:
        return load_catalog(fh, version=BUNDLED_CATALOG_VERSION)


def categories_for(catalog: CcsrCatalog, code: str) -> frozenset[str]:
    """Categories a normalized code maps to; empty when unmapped."""
    return catalog.categories_for(code)


def is_proxy_diagnosis(catalog: CcsrCatalog, proxy: ProxyCodeSet, code: str) -> bool:
    """True when the code is a literal proxy code or maps into a proxy category."""
    if code in proxy.literal_codes:
        return True
    return bool(catalog.categories_for(code) & proxy.categories)
