"""Deterministic interpreter that emits an execution concurrency trace.

Each goroutine is a Python generator. It runs atomically until it reaches a
scheduling point (yielding ``AT_POINT``/``AT_YIELD``) or blocks (yielding
``BLOCKED``); the machine then asks the scheduler who runs next. Waking a
blocked goroutine is done by the waker: it emits the sleeper's GO_UNBLOCK
and completion event on the spot, so the sleeper resumes after its operation.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..dsl.checker import ARG0, OUT
from ..dsl.nodes import (
    Assign, Binary, Close, CvBroadcast, CvSignal, CvWait, Expr, ForRange,
    FuncDecl, Go, If, IntLit, Lock, Loop, MakeChan, MakeCond, MakeMutex,
    MakeWg, Program, Recv, Return, Select, Send, Skip, SourceLoc, Unary,
    Unlock, Var, WgAdd, WgDone, WgWait, Yield,
)
from .events import (
    MAIN_G, PROCESS_G, BlockReason, Event, EventKind as K, Frame, ResKind,
    Resource,
)
from .scheduler import (
    AT_POINT, AT_YIELD, STOPPED, SchedulerConfig, make_scheduler,
)

BLOCKED = "blocked"

_INT_MIN = -(2**63)


def wrap64(x: int) -> int:
    return ((x - _INT_MIN) % 2**64) + _INT_MIN


class GStatus(enum.Enum):
    RUNNABLE = "RUNNABLE"
    RUNNING = "RUNNING"
    BLOCKED = "BLOCKED"
    DONE = "DONE"


class RunStatus(enum.Enum):
    COMPLETED = "COMPLETED"
    GLOBAL_DEADLOCK = "GLOBAL_DEADLOCK"
    FAULT = "FAULT"
    WATCHDOG_TIMEOUT = "WATCHDOG_TIMEOUT"


class Fault(Exception):
    """A misuse that aborts the whole run (Go would panic)."""

    def __init__(self, kind: str, loc: SourceLoc, g: int):
        super().__init__(f"{kind} at {loc} in g{g}")
        self.kind = kind
        self.loc = loc
        self.g = g


class _Return(Exception):
    pass


@dataclass(frozen=True)
class FaultInfo:
    kind: str
    loc: SourceLoc
    g: int


@dataclass(frozen=True)
class GoroutineSummary:
    """State of a goroutine when the run ended.

    ``killed`` marks goroutines that were still alive when main finished;
    ``status`` then records whether they were blocked or runnable at that moment.
    """

    gid: int
    parent: int
    func: str
    status: GStatus
    killed: bool = False
    block_reason: Optional[BlockReason] = None
    blocked_on: tuple[int, ...] = ()


@dataclass(frozen=True)
class RunOutcome:
    status: RunStatus
    goroutines: tuple[GoroutineSummary, ...]
    steps: int
    outputs: tuple[int, ...]
    fault: Optional[FaultInfo] = None

    def goroutine(self, gid: int) -> GoroutineSummary:
        return next(s for s in self.goroutines if s.gid == gid)


@dataclass
class Trace:
    """Result of one run: the ECT, its stack table and the outcome."""

    program: str
    config: SchedulerConfig
    arg0: Optional[int]
    events: list[Event]
    stacks: dict[int, tuple[Frame, ...]]
    resources: dict[int, Resource]
    outcome: RunOutcome


# -- runtime objects ---------------------------------------------------------


class _Res:
    kind: ResKind

    def __init__(self, rid: int, name: str):
        self.id = rid
        self.name = name


class Channel(_Res):
    kind = ResKind.CHAN

    def __init__(self, rid, name, capacity):
        super().__init__(rid, name)
        self.capacity = capacity
        self.buf: deque[int] = deque()
        self.closed = False
        self.sendq: deque[_Waiter] = deque()
        self.recvq: deque[_Waiter] = deque()


class Mutex(_Res):
    kind = ResKind.MUTEX

    def __init__(self, rid, name):
        super().__init__(rid, name)
        self.owner: Optional[Goroutine] = None
        self.waiters: deque[Goroutine] = deque()


class WaitGroup(_Res):
    kind = ResKind.WG

    def __init__(self, rid, name):
        super().__init__(rid, name)
        self.counter = 0
        self.waiters: list[Goroutine] = []


class Cond(_Res):
    kind = ResKind.COND

    def __init__(self, rid, name, mutex: Mutex):
        super().__init__(rid, name)
        self.mutex = mutex
        self.waiters: deque[Goroutine] = deque()


@dataclass(eq=False)
class _Waiter:
    g: "Goroutine"
    case: Optional[int]  # select case index; None for a plain send/recv
    value: int = 0


class Goroutine:
    def __init__(self, gid: int, parent: int, func: FuncDecl):
        self.gid = gid
        self.parent = parent
        self.func = func
        self.status = GStatus.RUNNABLE
        self.loc = func.loc
        self.next_site = None
        self.delay = 0
        self.started = False
        self.gen = None
        self.block_reason: Optional[BlockReason] = None
        self.blocked_on: tuple[int, ...] = ()
        self.registrations: list[tuple[deque, _Waiter]] = []
        self.wake_value = 0
        self.wake_case: Optional[int] = None

    def __repr__(self):
        return f"<g{self.gid} {self.func.name} {self.status.name}>"


# -- machine -----------------------------------------------------------------


class Machine:
    def __init__(self, program: Program, config: SchedulerConfig, arg0: Optional[int] = None):
        self.program = program
        self.config = config
        self.arg0 = arg0
        self.sched = make_scheduler(config)
        self.rng = self.sched.rng
        self.events: list[Event] = []
        self.stacks: dict[int, tuple[Frame, ...]] = {}
        self._stack_ids: dict[tuple[Frame, ...], int] = {}
        self.resources: dict[int, Resource] = {}
        self.goroutines: dict[int, Goroutine] = {}
        self.outputs: list[int] = []
        self.clock = 0
        self.steps = 0
        self.main_fn = program.entry
        self.main: Optional[Goroutine] = None

    # -- events

    def _emit(self, g: Optional[Goroutine], kind: K, res: Optional[_Res] = None,
              value: Optional[int] = None, aux: Optional[int] = None,
              args: tuple = ()) -> Event:
        self.clock += 1
        if g is None:
            frame = Frame("<process>", self.program.file, self.main_fn.loc.line)
        else:
            frame = Frame(g.func.name, g.loc.file, g.loc.line)
        stack = (frame,)
        sid = self._stack_ids.get(stack)
        if sid is None:
            sid = self._stack_ids[stack] = len(self._stack_ids)
            self.stacks[sid] = stack
        ev = Event(
            id=len(self.events), ts=self.clock,
            g=PROCESS_G if g is None else g.gid, kind=kind,
            res_kind=None if res is None else res.kind,
            res_id=None if res is None else res.id,
            value=value, aux=aux, stack_id=sid, args=tuple(args),
        )
        self.events.append(ev)
        return ev

    def _new_resource(self, cls, name: str, loc: SourceLoc, *extra):
        rid = len(self.resources) + 1
        res = cls(rid, name, *extra)
        self.resources[rid] = Resource(res.kind, name, loc.site)
        return res

    # -- goroutine lifecycle

    def _spawn(self, parent: Optional[Goroutine], func: FuncDecl, args: list) -> Goroutine:
        gid = len(self.goroutines) + 1
        g = Goroutine(gid, PROCESS_G if parent is None else parent.gid, func)
        g.gen = self._body(g, args)
        self.goroutines[gid] = g
        self._emit(parent, K.GO_CREATE, value=gid, args=(("func", func.name),))
        if parent is not None:
            self.sched.make_ready(g)
        return g

    def _start(self, g: Goroutine):
        g.started = True
        g.loc = g.func.loc
        self._emit(g, K.GO_START)

    def _block_on(self, g: Goroutine, reason: BlockReason, resources: list[_Res]):
        g.block_reason = reason
        g.blocked_on = tuple(r.id for r in resources)
        self._emit(g, K.GO_BLOCK, res=resources[0], aux=int(reason),
                   args=(("reason", reason.name),))

    def _wake(self, g: Goroutine, trigger: Event):
        for queue, waiter in g.registrations:
            queue.remove(waiter)
        g.registrations = []
        g.status = GStatus.RUNNABLE
        g.block_reason = None
        g.blocked_on = ()
        self._emit(g, K.GO_UNBLOCK, value=trigger.g, args=(("by_event", str(trigger.id)),))
        self.sched.make_ready(g)

    # -- main loop

    def run(self) -> Trace:
        self._emit(None, K.RUN_BEGIN)
        self.main = self._spawn(None, self.main_fn, [])
        fault = None
        try:
            status = self._loop()
        except Fault as f:
            status = RunStatus.FAULT
            fault = FaultInfo(f.kind, f.loc, f.g)
        end_args = [("status", status.value)]
        if fault is not None:
            end_args += [("fault", fault.kind), ("fault_g", str(fault.g)),
                         ("fault_loc", str(fault.loc))]
        self._emit(None, K.RUN_END, args=tuple(end_args))
        outcome = RunOutcome(
            status=status,
            goroutines=tuple(self._summary(g, status) for g in self.goroutines.values()),
            steps=self.steps,
            outputs=tuple(self.outputs),
            fault=fault,
        )
        return Trace(self.program.file, self.config, self.arg0, self.events,
                     self.stacks, self.resources, outcome)

    def _summary(self, g: Goroutine, status: RunStatus) -> GoroutineSummary:
        gstatus = GStatus.RUNNABLE if g.status is GStatus.RUNNING else g.status
        killed = status is RunStatus.COMPLETED and gstatus is not GStatus.DONE
        return GoroutineSummary(g.gid, g.parent, g.func.name, gstatus, killed,
                                g.block_reason, g.blocked_on)

    def _loop(self) -> RunStatus:
        cur = self.main
        cur.status = GStatus.RUNNING
        self._start(cur)
        while True:
            if self.steps >= self.config.max_steps:
                return RunStatus.WATCHDOG_TIMEOUT
            self.steps += 1
            self.clock += 1
            try:
                why = next(cur.gen)
            except StopIteration:
                cur.status = GStatus.DONE
                if cur is self.main:
                    return RunStatus.COMPLETED
                why = STOPPED
            if why == BLOCKED:
                cur.status = GStatus.BLOCKED
                why = STOPPED
            nxt = self.sched.pick_next(cur, why)
            if nxt is None:
                return RunStatus.GLOBAL_DEADLOCK
            if nxt is not cur:
                if cur.status is GStatus.RUNNING:
                    cur.status = GStatus.RUNNABLE
                self._emit(nxt, K.SCHED_SWITCH, value=cur.gid)
                if not nxt.started:
                    self._start(nxt)
                nxt.status = GStatus.RUNNING
                cur = nxt

    # -- interpretation

    def _body(self, g: Goroutine, args: list):
        func = g.func
        frame = {p.name: a for p, a in zip(func.params, args)}
        if g.gid == MAIN_G:
            frame[ARG0] = self.arg0 if self.arg0 is not None else 0
        try:
            yield from self._block(g, frame, func.body)
            g.loc = func.end_loc
        except _Return:
            pass
        g.next_site = None
        yield AT_POINT
        self._emit(g, K.GO_END)

    def _block(self, g, frame, stmts):
        for s in stmts:
            yield from self._stmt(g, frame, s)

    def _point(self, g: Goroutine, loc: Optional[SourceLoc], why: str = AT_POINT):
        if loc is not None:
            g.loc = loc
        g.next_site = None if loc is None or why != AT_POINT else loc.site
        yield why

    def _assign(self, g, frame, name: str, value):
        frame[name] = value
        if name == OUT and isinstance(value, int):
            self.outputs.append(value)

    def _stmt(self, g: Goroutine, frame: dict, s):
        g.loc = s.loc
        match s:
            case Assign(name=name, expr=e):
                frame[name] = self._eval(g, frame, e)
            case MakeChan(name=name, capacity=cap):
                yield from self._point(g, s.loc)
                size = 0 if cap is None else self._eval(g, frame, cap)
                if size < 0:
                    raise Fault("negative-channel-capacity", s.loc, g.gid)
                ch = self._new_resource(Channel, name, s.loc, size)
                self._emit(g, K.CH_MAKE, ch, value=size, args=(("name", name),))
                frame[name] = ch
            case MakeMutex(name=name):
                frame[name] = self._new_resource(Mutex, name, s.loc)
            case MakeWg(name=name):
                frame[name] = self._new_resource(WaitGroup, name, s.loc)
            case MakeCond(name=name, mutex=mutex):
                frame[name] = self._new_resource(Cond, name, s.loc, frame[mutex])
            case Go(func=fname, args=arg_exprs):
                yield from self._point(g, s.loc)
                values = [self._eval(g, frame, a) for a in arg_exprs]
                self._spawn(g, self.program.func(fname), values)
            case Send(chan=chan, value=e):
                yield from self._point(g, s.loc)
                yield from self._send(g, frame[chan], self._eval(g, frame, e))
            case Recv(chan=chan, target=target):
                yield from self._point(g, s.loc)
                v = yield from self._recv(g, frame[chan])
                if target is not None:
                    self._assign(g, frame, target, v)
            case Close(chan=chan):
                yield from self._point(g, s.loc)
                self._close(g, frame[chan])
            case Lock(mutex=mu):
                yield from self._point(g, s.loc)
                yield from self._lock(g, frame[mu])
            case Unlock(mutex=mu):
                yield from self._point(g, s.loc)
                self._unlock(g, frame[mu])
            case WgAdd(wg=wg, delta=e):
                yield from self._point(g, s.loc)
                self._wg_add(g, frame[wg], self._eval(g, frame, e))
            case WgDone(wg=wg):
                yield from self._point(g, s.loc)
                self._wg_add(g, frame[wg], -1)
            case WgWait(wg=wg):
                yield from self._point(g, s.loc)
                yield from self._wg_wait(g, frame[wg])
            case CvWait(cond=cv):
                yield from self._point(g, s.loc)
                yield from self._cv_wait(g, frame[cv])
            case CvSignal(cond=cv):
                yield from self._point(g, s.loc)
                self._cv_notify(g, frame[cv], broadcast=False)
            case CvBroadcast(cond=cv):
                yield from self._point(g, s.loc)
                self._cv_notify(g, frame[cv], broadcast=True)
            case Select():
                yield from self._point(g, s.loc)
                yield from self._select(g, frame, s)
            case If(cond=cond, then=then, orelse=orelse):
                if self._eval(g, frame, cond):
                    yield from self._block(g, frame, then)
                elif orelse is not None:
                    yield from self._block(g, frame, orelse)
            case ForRange(var=var, start=start, stop=stop, body=body):
                i = self._eval(g, frame, start)
                end = self._eval(g, frame, stop)
                while i < end:
                    frame[var] = i
                    yield from self._block(g, frame, body)
                    yield from self._point(g, None)
                    i += 1
            case Loop(body=body):
                while True:
                    yield from self._block(g, frame, body)
                    yield from self._point(g, None)
            case Yield():
                yield from self._point(g, s.loc, AT_YIELD)
            case Return():
                raise _Return()
            case Skip():
                pass
            case _:
                raise TypeError(s)

    def _eval(self, g: Goroutine, frame: dict, e: Expr):
        match e:
            case IntLit(value=v):
                return v
            case Var(name=name):
                return frame[name]
            case Unary(op="-", operand=x):
                return wrap64(-self._eval(g, frame, x))
            case Unary(op="!", operand=x):
                return int(not self._eval(g, frame, x))
            case Binary(op="&&", left=a, right=b):
                return int(bool(self._eval(g, frame, a)) and bool(self._eval(g, frame, b)))
            case Binary(op="||", left=a, right=b):
                return int(bool(self._eval(g, frame, a)) or bool(self._eval(g, frame, b)))
            case Binary(op=op, left=a, right=b):
                x = self._eval(g, frame, a)
                y = self._eval(g, frame, b)
                return self._arith(g, e, op, x, y)
        raise TypeError(e)

    def _arith(self, g, e, op, x, y) -> int:
        if op in ("/", "%"):
            if y == 0:
                raise Fault("division-by-zero", e.loc, g.gid)
            q = abs(x) // abs(y)
            if (x < 0) != (y < 0):
                q = -q
            return wrap64(q) if op == "/" else wrap64(x - y * q)
        result = {
            "+": lambda: x + y, "-": lambda: x - y, "*": lambda: x * y,
            "==": lambda: x == y, "!=": lambda: x != y, "<": lambda: x < y,
            "<=": lambda: x <= y, ">": lambda: x > y, ">=": lambda: x >= y,
        }[op]()
        return wrap64(int(result))

    # -- channels

    def _post_send(self, g, ch: Channel, v: int, case: Optional[int]) -> Event:
        if case is None:
            return self._emit(g, K.CH_SEND_POST, ch, value=v)
        return self._emit(g, K.SELECT_POST, ch, value=v, aux=case,
                          args=(("dir", "SEND"), ("closed", "0")))

    def _post_recv(self, g, ch: Channel, v: int, closed: bool, case: Optional[int]) -> Event:
        if case is None:
            return self._emit(g, K.CH_RECV_POST, ch, value=v, aux=int(closed))
        return self._emit(g, K.SELECT_POST, ch, value=v, aux=case,
                          args=(("dir", "RECV"), ("closed", str(int(closed)))))

    def _send_ready(self, ch: Channel) -> bool:
        return ch.closed or bool(ch.recvq) or len(ch.buf) < ch.capacity

    def _recv_ready(self, ch: Channel) -> bool:
        return bool(ch.buf) or bool(ch.sendq) or ch.closed

    def _complete_send(self, g, ch: Channel, v: int, case: Optional[int]):
        """Send on a channel known to be ready."""
        if ch.closed:
            raise Fault("send-on-closed", g.loc, g.gid)
        if ch.recvq:
            w = ch.recvq[0]
            ev = self._post_send(g, ch, v, case)
            self._wake(w.g, ev)
            w.g.wake_value, w.g.wake_case = v, w.case
            self._post_recv(w.g, ch, v, False, w.case)
        else:
            ch.buf.append(v)
            self._post_send(g, ch, v, case)

    def _complete_recv(self, g, ch: Channel, case: Optional[int]) -> int:
        """Receive from a channel known to be ready."""
        if ch.buf:
            v = ch.buf.popleft()
            ev = self._post_recv(g, ch, v, False, case)
            if ch.sendq:
                w = ch.sendq[0]
                ch.buf.append(w.value)
                self._wake(w.g, ev)
                w.g.wake_case = w.case
                self._post_send(w.g, ch, w.value, w.case)
            return v
        if ch.sendq:
            w = ch.sendq[0]
            self._wake(w.g, self.events[-1])
            w.g.wake_case = w.case
            self._post_send(w.g, ch, w.value, w.case)
            self._post_recv(g, ch, w.value, False, case)
            return w.value
        self._post_recv(g, ch, 0, True, case)
        return 0

    def _register(self, g, queue: deque, case: Optional[int], value: int = 0):
        w = _Waiter(g, case, value)
        queue.append(w)
        g.registrations.append((queue, w))

    def _send(self, g, ch: Channel, v: int):
        self._emit(g, K.CH_SEND_PRE, ch, value=v)
        if self._send_ready(ch):
            self._complete_send(g, ch, v, None)
            return
        self._register(g, ch.sendq, None, v)
        self._block_on(g, BlockReason.SEND, [ch])
        yield BLOCKED

    def _recv(self, g, ch: Channel):
        self._emit(g, K.CH_RECV_PRE, ch)
        if self._recv_ready(ch):
            return self._complete_recv(g, ch, None)
        self._register(g, ch.recvq, None)
        self._block_on(g, BlockReason.RECV, [ch])
        yield BLOCKED
        return g.wake_value

    def _close(self, g, ch: Channel):
        ev = self._emit(g, K.CH_CLOSE, ch)
        if ch.closed:
            raise Fault("close-of-closed", g.loc, g.gid)
        ch.closed = True
        if ch.sendq:
            victim = ch.sendq[0].g
            raise Fault("send-on-closed", victim.loc, victim.gid)
        for w in list(ch.recvq):
            self._wake(w.g, ev)
            w.g.wake_value, w.g.wake_case = 0, w.case
            self._post_recv(w.g, ch, 0, True, w.case)

    def _select(self, g, frame, s: Select):
        chans = [frame[c.chan] for c in s.cases]
        values = [self._eval(g, frame, c.value) if c.direction == "SEND" else 0
                  for c in s.cases]
        args = []
        for i, (c, ch) in enumerate(zip(s.cases, chans)):
            args += [(f"case{i}_dir", c.direction), (f"case{i}_res", str(ch.id))]
        args.append(("default", "1" if s.default is not None else "0"))
        self._emit(g, K.SELECT_PRE, args=tuple(args))

        ready = [i for i, (c, ch) in enumerate(zip(s.cases, chans))
                 if (self._send_ready(ch) if c.direction == "SEND" else self._recv_ready(ch))]
        value = 0
        if ready:
            idx = ready[0] if len(ready) == 1 else ready[self.rng.randrange(len(ready))]
            if s.cases[idx].direction == "SEND":
                self._complete_send(g, chans[idx], values[idx], idx)
            else:
                value = self._complete_recv(g, chans[idx], idx)
        elif s.default is not None:
            self._emit(g, K.SELECT_POST, aux=-1)
            yield from self._block(g, frame, s.default)
            return
        else:
            for i, (c, ch) in enumerate(zip(s.cases, chans)):
                if c.direction == "SEND":
                    self._register(g, ch.sendq, i, values[i])
                else:
                    self._register(g, ch.recvq, i)
            self._block_on(g, BlockReason.SELECT, chans)
            yield BLOCKED
            idx, value = g.wake_case, g.wake_value
        case = s.cases[idx]
        if case.direction == "RECV" and case.target is not None:
            self._assign(g, frame, case.target, value)
        yield from self._block(g, frame, case.body)

    # -- mutexes

    def _lock(self, g, mu: Mutex):
        self._emit(g, K.MU_LOCK_PRE, mu)
        if mu.owner is None:
            mu.owner = g
            self._emit(g, K.MU_LOCK_POST, mu)
            return
        mu.waiters.append(g)
        self._block_on(g, BlockReason.LOCK, [mu])
        yield BLOCKED

    def _unlock(self, g, mu: Mutex):
        ev = self._emit(g, K.MU_UNLOCK, mu)
        if mu.owner is not g:
            raise Fault("unlock-not-owner", g.loc, g.gid)
        if mu.waiters:
            nxt = mu.waiters.popleft()
            mu.owner = nxt
            self._wake(nxt, ev)
            self._emit(nxt, K.MU_LOCK_POST, mu)
        else:
            mu.owner = None

    # -- wait groups

    def _wg_add(self, g, wg: WaitGroup, delta: int):
        ev = self._emit(g, K.WG_ADD, wg, value=delta)
        wg.counter += delta
        if wg.counter < 0:
            raise Fault("negative-wg-counter", g.loc, g.gid)
        if wg.counter == 0:
            waiters, wg.waiters = wg.waiters, []
            for w in waiters:
                self._wake(w, ev)
                self._emit(w, K.WG_WAIT_POST, wg)

    def _wg_wait(self, g, wg: WaitGroup):
        self._emit(g, K.WG_WAIT_PRE, wg)
        if wg.counter == 0:
            self._emit(g, K.WG_WAIT_POST, wg)
            return
        wg.waiters.append(g)
        self._block_on(g, BlockReason.WGWAIT, [wg])
        yield BLOCKED

    # -- condition variables

    def _cv_wait(self, g, cv: Cond):
        mu = cv.mutex
        if mu.owner is not g:
            self._emit(g, K.CV_WAIT_PRE, cv, args=(("mutex", str(mu.id)),))
            raise Fault("cwait-without-lock", g.loc, g.gid)
        self._unlock(g, mu)
        self._emit(g, K.CV_WAIT_PRE, cv, args=(("mutex", str(mu.id)),))
        cv.waiters.append(g)
        self._block_on(g, BlockReason.CVWAIT, [cv])
        yield BLOCKED
        yield from self._lock(g, mu)

    def _cv_notify(self, g, cv: Cond, broadcast: bool):
        n = len(cv.waiters) if broadcast else min(1, len(cv.waiters))
        kind = K.CV_BROADCAST if broadcast else K.CV_SIGNAL
        ev = self._emit(g, kind, cv, value=n)
        for _ in range(n):
            w = cv.waiters.popleft()
            self._wake(w, ev)
            self._emit(w, K.CV_WAIT_POST, cv)


def run(program: Program, config: Optional[SchedulerConfig] = None,
        arg0: Optional[int] = None) -> Trace:
    """Interpret a validated program under ``config`` and return its trace."""
    return Machine(program, config or SchedulerConfig(), arg0).run()
