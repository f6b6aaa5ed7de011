"""Scheduling policies: FIFO run-to-block, uniform random, delay injection."""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Protocol

from ..dsl.nodes import Site

DEFAULT_MAX_STEPS = 1_000_000


class Policy(enum.Enum):
    FIFO = "FIFO"
    RANDOM = "RANDOM"
    DELAY_INJECT = "DELAY_INJECT"


@dataclass(frozen=True)
class SchedulerConfig:
    policy: Policy = Policy.FIFO
    seed: int = 0
    p: float = 0.25
    d: int = 5
    critical_points: frozenset[Site] = field(default_factory=frozenset)
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("yield probability p must be in [0, 1]")
        if self.d < 1:
            raise ValueError("delay bound d must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.policy is Policy.DELAY_INJECT and not self.critical_points:
            raise ValueError("DELAY_INJECT needs at least one critical point")
        object.__setattr__(self, "critical_points", frozenset(self.critical_points))


class Schedulable(Protocol):
    gid: int
    delay: int
    next_site: Optional[Site]


# why the running goroutine handed control to the scheduler
AT_POINT = "point"  # scheduling point; still runnable
AT_YIELD = "yield"  # explicit yield; still runnable
STOPPED = "stopped"  # blocked or finished


class Scheduler:
    """Keeps the ready set (runnable goroutines other than the running one)."""

    def __init__(self, config: SchedulerConfig, rng: random.Random):
        self.config = config
        self.rng = rng

    def make_ready(self, g: Schedulable):
        raise NotImplementedError

    def pick_next(self, cur: Schedulable, why: str) -> Optional[Schedulable]:
        """Choose who runs next; None when nothing is runnable."""
        raise NotImplementedError

    def runnable(self) -> list[Schedulable]:
        raise NotImplementedError


class FifoScheduler(Scheduler):
    """Run-to-block: only blocking, ending or ``yield`` hands over the CPU."""

    def __init__(self, config, rng):
        super().__init__(config, rng)
        self.queue: deque = deque()

    def make_ready(self, g):
        self.queue.append(g)

    def runnable(self):
        return list(self.queue)

    def pick_next(self, cur, why):
        if why == AT_POINT:
            return cur
        if why == AT_YIELD:
            self.queue.append(cur)
        return self.queue.popleft() if self.queue else None


class RandomScheduler(Scheduler):
    """Uniform choice over all runnables at every scheduling point."""

    def __init__(self, config, rng):
        super().__init__(config, rng)
        self.ready: dict[int, Schedulable] = {}

    def make_ready(self, g):
        self.ready[g.gid] = g

    def runnable(self):
        return [self.ready[k] for k in sorted(self.ready)]

    def candidates(self, cur, why) -> list:
        pool = dict(self.ready)
        if why != STOPPED:
            pool[cur.gid] = cur
        return [pool[k] for k in sorted(pool)]

    def choose(self, pool: list):
        if len(pool) == 1:
            return pool[0]
        return pool[self.rng.randrange(len(pool))]

    def pick_next(self, cur, why):
        pool = self.candidates(cur, why)
        if not pool:
            return None
        chosen = self.choose(pool)
        self._commit(pool, chosen)
        return chosen

    def _commit(self, pool, chosen):
        self.ready = {g.gid: g for g in pool if g is not chosen}


class DelayInjectScheduler(RandomScheduler):
    """Random scheduling plus probabilistic descheduling at critical points.

    A goroutine arriving at a scheduling point whose next operation sits on a
    critical line is, with probability ``p``, excluded from the next ``d``
    decisions. The exclusion lapses early when nothing else is runnable.
    """

    def pick_next(self, cur, why):
        pool = self.candidates(cur, why)
        if not pool:
            return None
        cfg = self.config
        if (why == AT_POINT and cur.next_site in cfg.critical_points
                and self.rng.random() < cfg.p):
            cur.delay = cfg.d
        eligible = [g for g in pool if g.delay == 0]
        if not eligible:
            for g in pool:
                g.delay = 0
            eligible = pool
        chosen = self.choose(eligible)
        for g in pool:
            if g.delay > 0:
                g.delay -= 1
        self._commit(pool, chosen)
        return chosen


def make_scheduler(config: SchedulerConfig) -> Scheduler:
    rng = random.Random(config.seed)
    cls = {
        Policy.FIFO: FifoScheduler,
        Policy.RANDOM: RandomScheduler,
        Policy.DELAY_INJECT: DelayInjectScheduler,
    }[config.policy]
    return cls(config, rng)
