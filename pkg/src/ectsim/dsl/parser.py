"""Lexer and recursive-descent parser for ``.csp`` programs."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .nodes import (
    KINDS, Assign, Binary, Block, Close, CvBroadcast, CvSignal, CvWait,
    Expr, ForRange, FuncDecl, Go, If, IntLit, Lock, Loop, MakeChan, MakeCond,
    MakeMutex, MakeWg, Param, Program, Recv, Return, Select, SelectCase, Send,
    Skip, SourceLoc, Stmt, Unary, Unlock, Var, WgAdd, WgDone, WgWait, Yield,
)

INT64_MAX = 2**63 - 1

KEYWORDS = frozenset("""
    func var make chan mutex wg cond int go send recv close lock unlock add
    done wait cwait signal broadcast select case default if else for in loop
    yield return skip
""".split())

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|==|!=|<=|>=|&&|\|\||[-+*/%<>!=(){},:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Diagnostic:
    loc: SourceLoc
    message: str

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


class DslError(Exception):
    """Raised by ``parse``/``validate``; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "kw", "op", "eof"
    text: str
    loc: SourceLoc


class _Abort(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def tokenize(text: str, file_name: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        loc = SourceLoc(file_name, line, pos - line_start + 1)
        if m is None:
            raise _Abort(Diagnostic(loc, f"unexpected character {text[pos]!r}"))
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "int":
            if int(lexeme) > INT64_MAX:
                raise _Abort(Diagnostic(loc, f"integer literal {lexeme} out of 64-bit range"))
            tokens.append(Token("int", lexeme, loc))
        elif kind == "ident":
            tokens.append(Token("kw" if lexeme in KEYWORDS else "ident", lexeme, loc))
        elif kind == "op":
            tokens.append(Token("op", lexeme, loc))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    eof_loc = tokens[-1].loc if tokens else SourceLoc(file_name, 1, 1)
    tokens.append(Token("eof", "", eof_loc))
    return tokens


# precedence climbing table: lowest first
_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)


class Parser:
    def __init__(self, text: str, file_name: str):
        self.file = file_name
        self.tokens = tokenize(text, file_name)
        self.pos = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _at(self, text: str) -> bool:
        return self.tok.kind in ("kw", "op") and self.tok.text == text

    def _advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise _Abort(Diagnostic(tok.loc, f"{message}, found {found}"))

    def _expect(self, text: str) -> Token:
        if not self._at(text):
            self._fail(f"expected {text!r}")
        return self._advance()

    def _ident(self) -> Token:
        if self.tok.kind != "ident":
            self._fail("expected identifier")
        return self._advance()

    # -- grammar

    def program(self) -> Program:
        funcs = []
        diags = []
        seen = {}
        if self.tok.kind == "eof":
            self._fail("expected 'func'")
        while self.tok.kind != "eof":
            f = self.funcdef()
            if f.name in seen:
                diags.append(Diagnostic(
                    f.loc, f"duplicate function {f.name} (first defined at line {seen[f.name].line})"))
            else:
                seen[f.name] = f.loc
            funcs.append(f)
        if diags:
            raise DslError(diags)
        return Program(self.file, tuple(funcs))

    def funcdef(self) -> FuncDecl:
        start = self._expect("func")
        name = self._ident().text
        self._expect("(")
        params = []
        if not self._at(")"):
            params.append(self.param())
            while self._at(","):
                self._advance()
                params.append(self.param())
        self._expect(")")
        body, end = self.block()
        return FuncDecl(name, tuple(params), body, loc=start.loc, end_loc=end.loc)

    def param(self) -> Param:
        name = self._ident()
        self._expect(":")
        if self.tok.text not in KINDS or self.tok.kind != "kw":
            self._fail("expected parameter kind (int, chan, mutex, wg, cond)")
        kind = self._advance().text
        return Param(name.text, kind, loc=name.loc)

    def block(self) -> tuple[Block, Token]:
        self._expect("{")
        stmts = []
        while not self._at("}"):
            if self.tok.kind == "eof":
                self._fail("expected '}'")
            stmts.append(self.stmt())
        end = self._advance()
        return tuple(stmts), end

    def stmt(self) -> Stmt:
        tok = self.tok
        loc = tok.loc
        if tok.kind == "ident":
            return self._assignment()
        if tok.kind != "kw":
            self._fail("expected statement")
        kw = tok.text
        if kw == "var":
            self._advance()
            name = self._ident().text
            self._expect("=")
            return Assign(name, self.expr(), declare=True, loc=loc)
        if kw == "go":
            self._advance()
            func = self._ident().text
            self._expect("(")
            args = []
            if not self._at(")"):
                args.append(self.expr())
                while self._at(","):
                    self._advance()
                    args.append(self.expr())
            self._expect(")")
            return Go(func, tuple(args), loc=loc)
        if kw == "send":
            self._advance()
            chan = self._ident().text
            return Send(chan, self.expr(), loc=loc)
        if kw == "recv":
            self._advance()
            return Recv(self._ident().text, loc=loc)
        simple = {
            "close": Close, "lock": Lock, "unlock": Unlock, "done": WgDone,
            "wait": WgWait, "cwait": CvWait, "signal": CvSignal,
            "broadcast": CvBroadcast,
        }
        if kw in simple:
            self._advance()
            return simple[kw](self._ident().text, loc=loc)
        if kw == "add":
            self._advance()
            wg = self._ident().text
            return WgAdd(wg, self.expr(), loc=loc)
        if kw == "select":
            return self._select()
        if kw == "if":
            self._advance()
            cond = self.expr()
            then, _ = self.block()
            orelse = None
            if self._at("else"):
                self._advance()
                orelse, _ = self.block()
            return If(cond, then, orelse, loc=loc)
        if kw == "for":
            self._advance()
            var = self._ident().text
            self._expect("in")
            start = self.expr()
            self._expect("..")
            stop = self.expr()
            body, _ = self.block()
            return ForRange(var, start, stop, body, loc=loc)
        if kw == "loop":
            self._advance()
            body, _ = self.block()
            return Loop(body, loc=loc)
        if kw in ("yield", "return", "skip"):
            self._advance()
            return {"yield": Yield, "return": Return, "skip": Skip}[kw](loc=loc)
        self._fail("expected statement")

    def _assignment(self) -> Stmt:
        name_tok = self._advance()
        name, loc = name_tok.text, name_tok.loc
        self._expect("=")
        if self._at("make"):
            self._advance()
            self._expect("(")
            self._expect("chan")
            cap = None
            if self._at(","):
                self._advance()
                cap = self.expr()
            self._expect(")")
            return MakeChan(name, cap, loc=loc)
        if self._at("mutex") or self._at("wg"):
            ctor = MakeMutex if self._advance().text == "mutex" else MakeWg
            self._expect("(")
            self._expect(")")
            return ctor(name, loc=loc)
        if self._at("cond"):
            self._advance()
            self._expect("(")
            mutex = self._ident().text
            self._expect(")")
            return MakeCond(name, mutex, loc=loc)
        if self._at("recv"):
            self._advance()
            return Recv(self._ident().text, name, loc=loc)
        return Assign(name, self.expr(), loc=loc)

    def _select(self) -> Select:
        loc = self._advance().loc
        self._expect("{")
        cases = []
        default = None
        while self._at("case"):
            cases.append(self._selcase())
        if not cases:
            self._fail("expected 'case'")
        if self._at("default"):
            self._advance()
            default, _ = self.block()
        self._expect("}")
        return Select(tuple(cases), default, loc=loc)

    def _selcase(self) -> SelectCase:
        loc = self._advance().loc
        if self._at("send"):
            self._advance()
            chan = self._ident().text
            value = self.expr()
            body, _ = self.block()
            return SelectCase("SEND", chan, body, value=value, loc=loc)
        target = None
        if self.tok.kind == "ident":
            target = self._advance().text
            self._expect("=")
        if not self._at("recv"):
            self._fail("expected 'send' or 'recv' in select case")
        self._advance()
        chan = self._ident().text
        body, _ = self.block()
        return SelectCase("RECV", chan, body, target=target, loc=loc)

    # -- expressions

    def expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self._unary()
        left = self.expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op_tok = self._advance()
            right = self.expr(level + 1)
            left = Binary(op_tok.text, left, right, loc=op_tok.loc)
        return left

    def _unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text in ("-", "!"):
            self._advance()
            return Unary(tok.text, self._unary(), loc=tok.loc)
        if tok.kind == "int":
            self._advance()
            return IntLit(int(tok.text), loc=tok.loc)
        if tok.kind == "ident":
            self._advance()
            return Var(tok.text, loc=tok.loc)
        if self._at("("):
            self._advance()
            inner = self.expr()
            self._expect(")")
            return inner
        self._fail("expected expression")


def parse(text: str, file_name: str = "<input>") -> Program:
    """Parse program text; raises ``DslError`` with diagnostics on failure."""
    parser = None
    try:
        parser = Parser(text, file_name)
        return parser.program()
    except _Abort as e:
        raise DslError([e.diag]) from None
    except RecursionError:
        loc = parser.tok.loc if parser else SourceLoc(file_name, 1, 1)
        raise DslError([Diagnostic(loc, "nesting too deep")]) from None
