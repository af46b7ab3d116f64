"""Loader for the versioned prompt template files shipped with the package.

Templates are plain text with named ``{placeholders}``; rendering is plain
``str.format`` so rendered prompts are byte-stable for fixed inputs.
"""
from __future__ import annotations

from importlib import resources

TEMPLATE_VERSION = "1"

_CACHE: dict[str, str] = {}


def load_template(name: str) -> str:
    if name not in _CACHE:
        ref = resources.files("litreview") / "templates" / f"{name}.txt"
        _CACHE[name] = ref.read_text(encoding="utf-8")
    return _CACHE[name]


def render(name: str, **values: object) -> str:
    return load_template(name).format(**values)
