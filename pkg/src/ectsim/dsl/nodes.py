"""AST for the mini-CSP language.

Every node carries a ``loc``. Locations are excluded from equality so two
parses of differently formatted but equivalent text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

KINDS = ("int", "chan", "mutex", "wg", "cond")
HANDLE_KINDS = ("chan", "mutex", "wg", "cond")


class Site(NamedTuple):
    """A source line; the granularity at which traces record locations."""

    file: str
    line: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"

    @classmethod
    def parse(cls, text: str) -> "Site":
        file, _, line = text.strip().rpartition(":")
        if not file or not line.isdigit():
            raise ValueError(f"bad site {text!r}, expected <file>:<line>")
        return cls(file, int(line))


@dataclass(frozen=True, order=True)
class SourceLoc:
    file: str
    line: int
    col: int

    def __post_init__(self):
        if self.line < 1 or self.col < 1:
            raise ValueError(f"invalid location {self.line}:{self.col}")

    @property
    def site(self) -> Site:
        return Site(self.file, self.line)

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Node:
    loc: SourceLoc = field(compare=False, repr=False, kw_only=True)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Unary(Node):
    op: str  # "-" or "!"
    operand: "Expr"


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, Var, Unary, Binary]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Assign(Node):
    name: str
    expr: Expr
    declare: bool = False


@dataclass(frozen=True)
class MakeChan(Node):
    name: str
    capacity: Optional[Expr] = None


@dataclass(frozen=True)
class MakeMutex(Node):
    name: str


@dataclass(frozen=True)
class MakeWg(Node):
    name: str


@dataclass(frozen=True)
class MakeCond(Node):
    name: str
    mutex: str


@dataclass(frozen=True)
class Go(Node):
    func: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Send(Node):
    chan: str
    value: Expr


@dataclass(frozen=True)
class Recv(Node):
    chan: str
    target: Optional[str] = None


@dataclass(frozen=True)
class Close(Node):
    chan: str


@dataclass(frozen=True)
class Lock(Node):
    mutex: str


@dataclass(frozen=True)
class Unlock(Node):
    mutex: str


@dataclass(frozen=True)
class WgAdd(Node):
    wg: str
    delta: Expr


@dataclass(frozen=True)
class WgDone(Node):
    wg: str


@dataclass(frozen=True)
class WgWait(Node):
    wg: str


@dataclass(frozen=True)
class CvWait(Node):
    cond: str


@dataclass(frozen=True)
class CvSignal(Node):
    cond: str


@dataclass(frozen=True)
class CvBroadcast(Node):
    cond: str


@dataclass(frozen=True)
class SelectCase(Node):
    direction: str  # "SEND" or "RECV"
    chan: str
    body: tuple["Stmt", ...]
    value: Optional[Expr] = None  # SEND only
    target: Optional[str] = None  # RECV only


@dataclass(frozen=True)
class Select(Node):
    cases: tuple[SelectCase, ...]
    default: Optional[tuple["Stmt", ...]] = None


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: Optional[tuple["Stmt", ...]] = None


@dataclass(frozen=True)
class ForRange(Node):
    var: str
    start: Expr
    stop: Expr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Loop(Node):
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Yield(Node):
    pass


@dataclass(frozen=True)
class Return(Node):
    pass


@dataclass(frozen=True)
class Skip(Node):
    pass


Stmt = Union[
    Assign, MakeChan, MakeMutex, MakeWg, MakeCond, Go, Send, Recv, Close,
    Lock, Unlock, WgAdd, WgDone, WgWait, CvWait, CvSignal, CvBroadcast,
    Select, If, ForRange, Loop, Yield, Return, Skip,
]
Block = tuple[Stmt, ...]


# -- top level ---------------------------------------------------------------


@dataclass(frozen=True)
class Param(Node):
    name: str
    kind: str


@dataclass(frozen=True)
class FuncDecl(Node):
    name: str
    params: tuple[Param, ...]
    body: Block
    end_loc: SourceLoc = field(compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Program:
    file: str = field(compare=False)
    functions: tuple[FuncDecl, ...]

    def func(self, name: str) -> Optional[FuncDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    @property
    def entry(self) -> FuncDecl:
        main = self.func("main")
        if main is None:
            raise LookupError("program has no main function")
        return main


def child_blocks(stmt: Stmt) -> list[Block]:
    """Nested statement blocks of ``stmt``, in source order."""
    match stmt:
        case Select(cases=cases, default=default):
            blocks = [c.body for c in cases]
            if default is not None:
                blocks.append(default)
            return blocks
        case If(then=then, orelse=orelse):
            return [then] if orelse is None else [then, orelse]
        case ForRange(body=body) | Loop(body=body):
            return [body]
    return []


def walk(block: Block):
    """Yield every statement in ``block``, depth first."""
    for stmt in block:
        yield stmt
        for sub in child_blocks(stmt):
            yield from walk(sub)
