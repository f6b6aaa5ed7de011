"""Canonical pretty-printer. ``parse(pretty(p))`` is structurally equal to ``p``."""

from __future__ import annotations

from .nodes import (
    Assign, Binary, Close, CvBroadcast, CvSignal, CvWait, Expr, ForRange,
    Go, If, IntLit, Lock, Loop, MakeChan, MakeCond, MakeMutex, MakeWg,
    Program, Recv, Return, Select, Send, Skip, Unary, Unlock, Var, WgAdd,
    WgDone, WgWait, Yield,
)

INDENT = "    "

_KEYWORD_OPS = {
    Close: ("close", "chan"), Lock: ("lock", "mutex"),
    Unlock: ("unlock", "mutex"), WgDone: ("done", "wg"),
    WgWait: ("wait", "wg"), CvWait: ("cwait", "cond"),
    CvSignal: ("signal", "cond"), CvBroadcast: ("broadcast", "cond"),
}


def pretty_expr(e: Expr) -> str:
    match e:
        case IntLit(value=v):
            return str(v)
        case Var(name=name):
            return name
        case Unary(op=op, operand=operand):
            return op + _wrap(operand)
        case Binary(op=op, left=left, right=right):
            return f"{_wrap(left)} {op} {_wrap(right)}"
    raise TypeError(e)


def _wrap(e: Expr) -> str:
    text = pretty_expr(e)
    return f"({text})" if isinstance(e, (Binary, Unary)) else text


def _block(stmts, depth: int) -> list[str]:
    lines = []
    for s in stmts:
        lines.extend(_stmt(s, depth))
    return lines


def _open(head: str, body, depth: int) -> list[str]:
    pad = INDENT * depth
    return [f"{pad}{head} {{", *_block(body, depth + 1), f"{pad}}}"]


def _stmt(s, depth: int) -> list[str]:
    pad = INDENT * depth
    if type(s) in _KEYWORD_OPS:
        keyword, attr = _KEYWORD_OPS[type(s)]
        return [f"{pad}{keyword} {getattr(s, attr)}"]
    match s:
        case Assign(name=name, expr=e, declare=declare):
            return [f"{pad}{'var ' if declare else ''}{name} = {pretty_expr(e)}"]
        case MakeChan(name=name, capacity=cap):
            suffix = "" if cap is None else f", {pretty_expr(cap)}"
            return [f"{pad}{name} = make(chan{suffix})"]
        case MakeMutex(name=name):
            return [f"{pad}{name} = mutex()"]
        case MakeWg(name=name):
            return [f"{pad}{name} = wg()"]
        case MakeCond(name=name, mutex=mutex):
            return [f"{pad}{name} = cond({mutex})"]
        case Go(func=func, args=args):
            return [f"{pad}go {func}({', '.join(pretty_expr(a) for a in args)})"]
        case Send(chan=chan, value=value):
            return [f"{pad}send {chan} {pretty_expr(value)}"]
        case Recv(chan=chan, target=target):
            prefix = "" if target is None else f"{target} = "
            return [f"{pad}{prefix}recv {chan}"]
        case WgAdd(wg=wg, delta=delta):
            return [f"{pad}add {wg} {pretty_expr(delta)}"]
        case Select(cases=cases, default=default):
            lines = [f"{pad}select {{"]
            for c in cases:
                if c.direction == "SEND":
                    head = f"case send {c.chan} {pretty_expr(c.value)}"
                else:
                    head = f"case {c.target + ' = ' if c.target else ''}recv {c.chan}"
                lines.extend(_open(head, c.body, depth + 1))
            if default is not None:
                lines.extend(_open("default", default, depth + 1))
            lines.append(f"{pad}}}")
            return lines
        case If(cond=cond, then=then, orelse=orelse):
            lines = _open(f"if {pretty_expr(cond)}", then, depth)
            if orelse is not None:
                lines[-1] += " else {"
                lines.extend(_block(orelse, depth + 1))
                lines.append(f"{pad}}}")
            return lines
        case ForRange(var=var, start=start, stop=stop, body=body):
            return _open(f"for {var} in {_wrap(start)} .. {_wrap(stop)}", body, depth)
        case Loop(body=body):
            return _open("loop", body, depth)
        case Yield():
            return [f"{pad}yield"]
        case Return():
            return [f"{pad}return"]
        case Skip():
            return [f"{pad}skip"]
    raise TypeError(s)


def pretty(program: Program) -> str:
    chunks = []
    for f in program.functions:
        params = ", ".join(f"{p.name}: {p.kind}" for p in f.params)
        chunks.append("\n".join(_open(f"func {f.name}({params})", f.body, 0)))
    return "\n\n".join(chunks) + "\n"
