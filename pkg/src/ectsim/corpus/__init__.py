"""Bundled benchmark programs and their in-file expectations."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from ..dsl import Program, load_program

_HEADER = re.compile(r"^//\s*(expect-baseline|expect-fuzz|arg0):\s*(\S+)\s*$", re.M)


@dataclass(frozen=True)
class CorpusEntry:
    name: str  # file name without .csp
    file: str
    text: str
    expect_baseline: str
    expect_fuzz: str
    arg0: Optional[int] = None

    def program(self) -> Program:
        return load_program(self.text, self.file)


def parse_header(text: str) -> dict[str, str]:
    return {k: v for k, v in _HEADER.findall(text)}


def names() -> list[str]:
    root = resources.files(__name__)
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".csp"))


def entry(name: str) -> CorpusEntry:
    file = name if name.endswith(".csp") else name + ".csp"
    path = resources.files(__name__) / file
    if not path.is_file():
        raise FileNotFoundError(f"no corpus program {file}")
    text = path.read_text(encoding="utf-8")
    head = parse_header(text)
    if "expect-baseline" not in head or "expect-fuzz" not in head:
        raise ValueError(f"{file} lacks an expect-baseline/expect-fuzz header")
    arg0 = int(head["arg0"]) if "arg0" in head else None
    return CorpusEntry(file[:-4], file, text, head["expect-baseline"], head["expect-fuzz"], arg0)


def entries() -> list[CorpusEntry]:
    return [entry(n) for n in names()]
