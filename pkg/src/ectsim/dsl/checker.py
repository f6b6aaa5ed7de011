"""Static checks: name resolution, definite assignment, resource kinds."""

from __future__ import annotations

from .nodes import (
    Assign, Binary, Close, CvBroadcast, CvSignal, CvWait, Expr, ForRange,
    FuncDecl, Go, If, IntLit, Lock, Loop, MakeChan, MakeCond, MakeMutex,
    MakeWg, Program, Recv, Return, Select, Send, Skip, SourceLoc, Unary,
    Unlock, Var, WgAdd, WgDone, WgWait, Yield,
)
from .parser import Diagnostic, DslError, parse

ARG0 = "ARG0"
OUT = "OUT"

# statement type -> (attribute naming the resource, required kind, verb)
_RESOURCE_OPS = {
    Send: ("chan", "chan", "send"),
    Recv: ("chan", "chan", "recv"),
    Close: ("chan", "chan", "close"),
    Lock: ("mutex", "mutex", "lock"),
    Unlock: ("mutex", "mutex", "unlock"),
    WgAdd: ("wg", "wg", "add"),
    WgDone: ("wg", "wg", "done"),
    WgWait: ("wg", "wg", "wait"),
    CvWait: ("cond", "cond", "cwait"),
    CvSignal: ("cond", "cond", "signal"),
    CvBroadcast: ("cond", "cond", "broadcast"),
}


class _FuncChecker:
    def __init__(self, program: Program, func: FuncDecl, diags: list[Diagnostic]):
        self.program = program
        self.func = func
        self.diags = diags
        self.kinds: dict[str, str] = {p.name: p.kind for p in func.params}

    def error(self, loc: SourceLoc, message: str):
        self.diags.append(Diagnostic(loc, message))

    def run(self):
        seen = set()
        for p in self.func.params:
            if p.name in seen:
                self.error(p.loc, f"duplicate parameter {p.name}")
            seen.add(p.name)
        assigned = set(self.kinds)
        if self.func.name == "main":
            self.kinds[ARG0] = "int"
            assigned.add(ARG0)
        self.block(self.func.body, assigned)

    # -- kinds

    def bind(self, name: str, kind: str, loc: SourceLoc, assigned: set[str]):
        prev = self.kinds.get(name)
        if prev is None:
            self.kinds[name] = kind
        elif prev != kind:
            self.error(loc, f"variable {name} has kind {prev} but is assigned a {kind}")
        assigned.add(name)

    def use(self, name: str, loc: SourceLoc, assigned: set[str]) -> str | None:
        if name not in assigned:
            self.error(loc, f"variable {name} used before assignment")
            return None
        return self.kinds.get(name)

    def use_resource(self, name: str, kind: str, verb: str, loc: SourceLoc, assigned: set[str]):
        actual = self.use(name, loc, assigned)
        if actual is not None and actual != kind:
            self.error(loc, f"{verb} expects a {kind}, but {name} is a {actual}")

    def expr(self, e: Expr, assigned: set[str]) -> str | None:
        """Check ``e``; return its kind (None if unknown after an error)."""
        match e:
            case IntLit():
                return "int"
            case Var(name=name):
                return self.use(name, e.loc, assigned)
            case Unary(operand=operand):
                self.int_expr(operand, assigned)
                return "int"
            case Binary(op=op, left=left, right=right):
                self.int_expr(left, assigned)
                self.int_expr(right, assigned)
                if op in ("/", "%") and isinstance(right, IntLit) and right.value == 0:
                    self.error(e.loc, "division by zero")
                return "int"
        raise TypeError(e)

    def int_expr(self, e: Expr, assigned: set[str]):
        kind = self.expr(e, assigned)
        if kind is not None and kind != "int":
            self.error(e.loc, f"expected an int expression, got a {kind}")

    # -- statements

    def block(self, stmts, assigned: set[str]) -> set[str]:
        """Check ``stmts``; ``assigned`` is updated with definite assignments."""
        for s in stmts:
            self.stmt(s, assigned)
        return assigned

    def stmt(self, s, assigned: set[str]):
        loc = s.loc
        if type(s) in _RESOURCE_OPS:
            attr, kind, verb = _RESOURCE_OPS[type(s)]
            self.use_resource(getattr(s, attr), kind, verb, loc, assigned)
        match s:
            case Assign(name=name, expr=e):
                kind = self.expr(e, assigned)
                if kind is not None:
                    self.bind(name, kind, loc, assigned)
            case MakeChan(name=name, capacity=cap):
                if cap is not None:
                    self.int_expr(cap, assigned)
                self.bind(name, "chan", loc, assigned)
            case MakeMutex(name=name):
                self.bind(name, "mutex", loc, assigned)
            case MakeWg(name=name):
                self.bind(name, "wg", loc, assigned)
            case MakeCond(name=name, mutex=mutex):
                self.use_resource(mutex, "mutex", "cond", loc, assigned)
                self.bind(name, "cond", loc, assigned)
            case Go():
                self.go(s, assigned)
            case Send(value=value):
                self.int_expr(value, assigned)
            case Recv(target=target):
                if target is not None:
                    self.bind(target, "int", loc, assigned)
            case WgAdd(delta=delta):
                self.int_expr(delta, assigned)
            case Select(cases=cases, default=default):
                outs = []
                for case in cases:
                    self.use_resource(case.chan, "chan", case.direction.lower(), case.loc, assigned)
                    inner = set(assigned)
                    if case.direction == "SEND":
                        self.int_expr(case.value, assigned)
                    elif case.target is not None:
                        self.bind(case.target, "int", case.loc, inner)
                    outs.append(self.block(case.body, inner))
                if default is not None:
                    outs.append(self.block(default, set(assigned)))
                assigned |= set.intersection(*outs)
            case If(cond=cond, then=then, orelse=orelse):
                self.int_expr(cond, assigned)
                a = self.block(then, set(assigned))
                b = self.block(orelse, set(assigned)) if orelse is not None else assigned
                assigned |= a & b
            case ForRange(var=var, start=start, stop=stop, body=body):
                self.int_expr(start, assigned)
                self.int_expr(stop, assigned)
                inner = set(assigned)
                self.bind(var, "int", loc, inner)
                self.block(body, inner)
            case Loop(body=body):
                self.block(body, set(assigned))
            case (Yield() | Return() | Skip() | Close() | Lock() | Unlock() |
                  WgDone() | WgWait() | CvWait() | CvSignal() | CvBroadcast()):
                pass
            case _:
                raise TypeError(s)

    def go(self, s: Go, assigned: set[str]):
        callee = self.program.func(s.func)
        for a in s.args:
            self.expr(a, assigned)
        if callee is None:
            self.error(s.loc, f"unresolved function {s.func}")
            return
        if len(s.args) != len(callee.params):
            self.error(s.loc, f"{s.func} takes {len(callee.params)} argument(s), {len(s.args)} given")
            return
        for arg, param in zip(s.args, callee.params):
            if param.kind == "int":
                kind = self._kind_of(arg)
                if kind is not None and kind != "int":
                    self.error(arg.loc, f"argument {param.name} of {s.func} must be an int, got a {kind}")
            elif not isinstance(arg, Var):
                self.error(arg.loc, f"argument {param.name} of {s.func} must be a {param.kind} variable")
            else:
                kind = self.kinds.get(arg.name)
                if kind is not None and kind != param.kind:
                    self.error(arg.loc, f"argument {param.name} of {s.func} must be a {param.kind}, "
                                        f"but {arg.name} is a {kind}")

    def _kind_of(self, e: Expr) -> str | None:
        if isinstance(e, Var):
            return self.kinds.get(e.name)
        return "int"


def validate(program: Program) -> Program:
    """Check ``program``; return it unchanged or raise ``DslError``."""
    diags: list[Diagnostic] = []
    main = program.func("main")
    if main is None:
        loc = program.functions[0].loc if program.functions else SourceLoc(program.file, 1, 1)
        diags.append(Diagnostic(loc, "missing main function"))
    elif main.params:
        diags.append(Diagnostic(main.loc, "main must take no parameters"))
    for func in program.functions:
        _FuncChecker(program, func, diags).run()
    if diags:
        diags.sort(key=lambda d: (d.loc.line, d.loc.col))
        raise DslError(diags)
    return program


def load_program(text: str, file_name: str = "<input>") -> Program:
    """Parse and validate in one step."""
    return validate(parse(text, file_name))
