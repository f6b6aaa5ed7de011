"""Random generator of small, valid .csp programs for property tests."""

from __future__ import annotations

import random


def random_program(seed: int, max_workers: int = 3, max_ops: int = 6) -> str:
    rng = random.Random(seed)
    chans = [f"c{i}" for i in range(rng.randint(1, 3))]
    caps = {c: rng.choice([0, 0, 1, 2]) for c in chans}
    mutexes = [f"m{i}" for i in range(rng.randint(0, 2))]
    use_cond = bool(mutexes) and rng.random() < 0.3
    use_wg = rng.random() < 0.3
    params = [f"{c}: chan" for c in chans] + [f"{m}: mutex" for m in mutexes]
    if use_cond:
        params.append("cv: cond")
    if use_wg:
        params.append("grp: wg")
    args = chans + mutexes + (["cv"] if use_cond else []) + (["grp"] if use_wg else [])

    def ops(depth: int, indent: str) -> list[str]:
        out = []
        for _ in range(rng.randint(1, max_ops)):
            c = rng.choice(chans)
            kind = rng.randrange(10 if depth < 2 else 7)
            if kind == 0:
                out.append(f"{indent}send {c} {rng.randint(1, 9)}")
            elif kind == 1:
                out.append(f"{indent}x = recv {c}")
            elif kind == 2 and mutexes:
                m = rng.choice(mutexes)
                out += [f"{indent}lock {m}", f"{indent}unlock {m}"]
            elif kind == 3:
                out.append(f"{indent}yield")
            elif kind == 4 and use_cond:
                if rng.random() < 0.5:
                    out += [f"{indent}lock m0", f"{indent}cwait cv", f"{indent}unlock m0"]
                else:
                    out.append(f"{indent}{rng.choice(['signal', 'broadcast'])} cv")
            elif kind == 5 and use_wg:
                out.append(f"{indent}{rng.choice(['add grp 1', 'done grp', 'wait grp'])}")
            elif kind == 6 and rng.random() < 0.15:
                out.append(f"{indent}close {c}")
            elif kind in (7, 8):
                out.append(f"{indent}select {{")
                for _ in range(rng.randint(1, 2)):
                    cc = rng.choice(chans)
                    head = f"send {cc} {rng.randint(1, 9)}" if rng.random() < 0.5 else f"recv {cc}"
                    out.append(f"{indent}    case {head} {{")
                    out += ops(depth + 1, indent + "        ")
                    out.append(f"{indent}    }}")
                if rng.random() < 0.4:
                    out += [f"{indent}    default {{", f"{indent}        skip", f"{indent}    }}"]
                out.append(f"{indent}}}")
            elif kind == 9:
                out.append(f"{indent}for i in 0 .. {rng.randint(1, 2)} {{")
                out += ops(depth + 1, indent + "    ")
                out.append(f"{indent}}}")
            else:
                out.append(f"{indent}skip")
        return out

    lines = []
    n_workers = rng.randint(1, max_workers)
    for w in range(n_workers):
        lines.append(f"func W{w}({', '.join(params)}) {{")
        lines += ops(0, "    ")
        lines.append("}")
        lines.append("")
    lines.append("func main() {")
    for c in chans:
        lines.append(f"    {c} = make(chan, {caps[c]})" if caps[c] else f"    {c} = make(chan)")
    for m in mutexes:
        lines.append(f"    {m} = mutex()")
    if use_cond:
        lines.append("    cv = cond(m0)")
    if use_wg:
        lines.append("    grp = wg()")
    for w in range(n_workers):
        lines.append(f"    go W{w}({', '.join(args)})")
    lines += ops(1, "    ")
    lines.append("}")
    return "\n".join(lines) + "\n"
