"""Weighted finite-state acceptors/transducers over the tropical (min, +) semiring.

Weights are floats interpreted as -log(probability): combining alternative
paths takes the minimum, extending a path adds. The additive identity is
+inf (impossible), the multiplicative identity is 0.0 (certain).

Machines are mutable while they are being built and must be treated as
immutable afterwards; every operation in this module is a pure function, so
shared machines are safe to use from multiple threads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import ConfigurationError, ResourceError, StructuralError

EPSILON = 0
EPSILON_LABEL = "<eps>"

#: Additive identity of the semiring: an impossible transition.
ZERO = math.inf
#: Multiplicative identity of the semiring: a certain (free) transition.
ONE = 0.0


def combine(a: float, b: float) -> float:
    """Semiring plus: keep the cheaper of two alternatives."""
    return a if a <= b else b


def extend(a: float, b: float) -> float:
    """Semiring times: accumulate cost along a path."""
    return a + b


class Arc(NamedTuple):
    src: int
    dst: int
    ilabel: int
    olabel: int
    weight: float


def symbol_table(labels: Iterable[str]) -> tuple[str, ...]:
    """An alphabet with symbol id 0 reserved for epsilon."""
    return (EPSILON_LABEL, *labels)


class Wfst:
    """A weighted transducer: dense integer states, adjacency-list arcs.

    An acceptor is represented as a transducer whose output label equals its
    input label on every arc (see :meth:`is_acceptor`). Symbol id 0 is
    epsilon in both alphabets.
    """

    __slots__ = ("isyms", "osyms", "starts", "accepts", "_adj")

    def __init__(self, isyms: Sequence[str], osyms: Sequence[str] | None = None):
        isyms = tuple(isyms)
        osyms = isyms if osyms is None else tuple(osyms)
        for syms in (isyms, osyms):
            if not syms or syms[EPSILON] != EPSILON_LABEL:
                raise ConfigurationError(
                    f"symbol id 0 must be {EPSILON_LABEL!r}, got {syms[:1]!r}"
                )
        self.isyms = isyms
        self.osyms = osyms
        self.starts: list[int] = []
        self.accepts: set[int] = set()
        self._adj: list[list[Arc]] = []

    @property
    def num_states(self) -> int:
        return len(self._adj)

    @property
    def num_arcs(self) -> int:
        return sum(len(arcs) for arcs in self._adj)

    def add_state(self, *, start: bool = False, accept: bool = False) -> int:
        state = len(self._adj)
        self._adj.append([])
        if start:
            self.starts.append(state)
        if accept:
            self.accepts.add(state)
        return state

    def set_start(self, state: int) -> None:
        self._check_state(state)
        if state not in self.starts:
            self.starts.append(state)

    def set_accept(self, state: int) -> None:
        self._check_state(state)
        self.accepts.add(state)

    def add_arc(self, src: int, dst: int, ilabel: int, olabel: int, weight: float) -> None:
        self._check_state(src)
        self._check_state(dst)
        if not 0 <= ilabel < len(self.isyms):
            raise ConfigurationError(f"input label {ilabel} outside alphabet of size {len(self.isyms)}")
        if not 0 <= olabel < len(self.osyms):
            raise ConfigurationError(f"output label {olabel} outside alphabet of size {len(self.osyms)}")
        self._adj[src].append(Arc(src, dst, ilabel, olabel, weight))

    def arcs(self, state: int) -> list[Arc]:
        """Arcs leaving `state`, in insertion order. Do not mutate."""
        return self._adj[state]

    def all_arcs(self) -> Iterable[Arc]:
        for arcs in self._adj:
            yield from arcs

    def is_acceptor(self) -> bool:
        return all(a.ilabel == a.olabel for a in self.all_arcs())

    def dump(self) -> str:
        """Byte-stable debug dump: one arc per line, then accept-state lines."""
        lines = []
        for arcs in self._adj:
            for a in arcs:
                lines.append(
                    f"{a.src}\t{a.dst}\t{self.isyms[a.ilabel]}\t{self.osyms[a.olabel]}\t{a.weight!r}"
                )
        lines.extend(str(s) for s in sorted(self.accepts))
        return "\n".join(lines) + "\n"

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self._adj):
            raise StructuralError(f"state {state} does not exist (machine has {len(self._adj)} states)")


@dataclass(frozen=True)
class Path:
    """An accepting path: its arcs, their weight fold, and both label strings."""

    arcs: tuple[Arc, ...]
    total_weight: float
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    @classmethod
    def from_arcs(cls, arcs: Sequence[Arc]) -> "Path":
        weight = ONE
        for a in arcs:
            weight = extend(weight, a.weight)
        inputs = tuple(a.ilabel for a in arcs if a.ilabel != EPSILON)
        outputs = tuple(a.olabel for a in arcs if a.olabel != EPSILON)
        return cls(tuple(arcs), weight, inputs, outputs)


def _require_start_and_accept(machine: Wfst, name: str) -> None:
    if not machine.starts:
        raise StructuralError(f"{name} machine has no start state")
    if not machine.accepts:
        raise StructuralError(f"{name} machine has no accept state")


# Composition uses the standard three-state epsilon-sequencing filter:
# state 0 after a real match (or a paired eps move), 1 after the right
# machine moved alone, 2 after the left machine moved alone. It admits
# exactly one interleaving per pair of component paths, so no input/output
# pairing is duplicated or lost.
def compose(left: Wfst, right: Wfst) -> Wfst:
    """Compose two transducers, matching left outputs against right inputs."""
    if left.osyms != right.isyms:
        raise ConfigurationError(
            "cannot compose: left output alphabet differs from right input alphabet"
        )
    _require_start_and_accept(left, "left")
    _require_start_and_accept(right, "right")

    right_by_ilabel: list[dict[int, list[Arc]]] = []
    right_eps: list[list[Arc]] = []
    for state in range(right.num_states):
        by_label: dict[int, list[Arc]] = {}
        eps: list[Arc] = []
        for b in right.arcs(state):
            if b.ilabel == EPSILON:
                eps.append(b)
            else:
                by_label.setdefault(b.ilabel, []).append(b)
        right_by_ilabel.append(by_label)
        right_eps.append(eps)

    out = Wfst(left.isyms, right.osyms)
    index: dict[tuple[int, int, int], int] = {}
    queue: deque[tuple[int, int, int]] = deque()

    def state_for(key: tuple[int, int, int]) -> int:
        sid = index.get(key)
        if sid is None:
            sid = out.add_state()
            index[key] = sid
            queue.append(key)
            if key[0] in left.accepts and key[1] in right.accepts:
                out.set_accept(sid)
        return sid

    for ls in left.starts:
        for rs in right.starts:
            out.set_start(state_for((ls, rs, 0)))

    while queue:
        key = queue.popleft()
        ql, qr, filt = key
        src = index[key]
        eps_arcs = right_eps[qr]
        by_label = right_by_ilabel[qr]
        for a in left.arcs(ql):
            if a.olabel != EPSILON:
                for b in by_label.get(a.olabel, ()):
                    out.add_arc(src, state_for((a.dst, b.dst, 0)),
                                a.ilabel, b.olabel, a.weight + b.weight)
            else:
                if filt != 1:
                    out.add_arc(src, state_for((a.dst, qr, 2)),
                                a.ilabel, EPSILON, a.weight)
                if filt == 0:
                    for b in eps_arcs:
                        out.add_arc(src, state_for((a.dst, b.dst, 0)),
                                    a.ilabel, b.olabel, a.weight + b.weight)
        if filt != 2:
            for b in eps_arcs:
                out.add_arc(src, state_for((ql, b.dst, 1)),
                            EPSILON, b.olabel, b.weight)
    return out


def _linear_chain(acceptor: Wfst) -> list[int]:
    """Validate that `acceptor` is a linear eps-free acceptor; return its states in order."""
    if len(acceptor.starts) != 1:
        raise StructuralError("emission acceptor must have exactly one start state")
    chain = [acceptor.starts[0]]
    seen = {chain[0]}
    while True:
        arcs = acceptor.arcs(chain[-1])
        if not arcs:
            break
        dsts = {a.dst for a in arcs}
        if len(dsts) != 1:
            raise StructuralError(f"emission acceptor state {chain[-1]} fans out to {sorted(dsts)}")
        (dst,) = dsts
        if dst in seen:
            raise StructuralError("emission acceptor contains a cycle")
        for a in arcs:
            if a.ilabel == EPSILON:
                raise StructuralError("emission acceptor must not contain epsilon arcs")
            if a.ilabel != a.olabel:
                raise StructuralError("emission acceptor must be an acceptor (in == out labels)")
        chain.append(dst)
        seen.add(dst)
    if len(seen) != acceptor.num_states:
        raise StructuralError("emission acceptor has states unreachable from its start")
    return chain


def intersect(machine: Wfst, emission_acceptor: Wfst) -> Wfst:
    """Restrict `machine` to input strings accepted by a linear acceptor.

    Produces the decoding lattice: one state layer per frame boundary, arc
    weights summed. Epsilon-input arcs of `machine` stay within a frame
    layer; the result is verified to be acyclic.
    """
    if machine.isyms != emission_acceptor.isyms:
        raise ConfigurationError(
            "cannot intersect: machine input alphabet differs from emission alphabet"
        )
    if not machine.starts:
        raise StructuralError("left machine has no start state")
    chain = _linear_chain(emission_acceptor)
    frame_of = {state: t for t, state in enumerate(chain)}
    num_frames = len(chain) - 1
    # Per frame: label -> [(weight, ...)]; duplicate labels allowed in general.
    frame_weights: list[dict[int, list[float]]] = []
    for state in chain[:-1]:
        table: dict[int, list[float]] = {}
        for a in emission_acceptor.arcs(state):
            table.setdefault(a.ilabel, []).append(a.weight)
        frame_weights.append(table)

    lattice = Wfst(machine.isyms, machine.osyms)
    index: dict[tuple[int, int], int] = {}
    keys: list[tuple[int, int]] = []
    queue: deque[tuple[int, int]] = deque()
    accept_frames = {frame_of[s] for s in emission_acceptor.accepts}

    def state_for(key: tuple[int, int]) -> int:
        sid = index.get(key)
        if sid is None:
            sid = lattice.add_state()
            index[key] = sid
            keys.append(key)
            queue.append(key)
            if key[0] in machine.accepts and key[1] in accept_frames:
                lattice.set_accept(sid)
        return sid

    for ms in machine.starts:
        lattice.set_start(state_for((ms, 0)))

    while queue:
        key = queue.popleft()
        q, t = key
        src = index[key]
        table = frame_weights[t] if t < num_frames else None
        for a in machine.arcs(q):
            if a.ilabel == EPSILON:
                lattice.add_arc(src, state_for((a.dst, t)), EPSILON, a.olabel, a.weight)
            elif table is not None:
                for w in table.get(a.ilabel, ()):
                    lattice.add_arc(src, state_for((a.dst, t + 1)),
                                    a.ilabel, a.olabel, a.weight + w)

    _check_epsilon_acyclic(lattice, keys)
    return lattice


def _check_epsilon_acyclic(lattice: Wfst, keys: list[tuple[int, int]]) -> None:
    """Kahn's algorithm over epsilon arcs; they never leave a frame layer."""
    indegree = [0] * lattice.num_states
    eps_out: list[list[int]] = [[] for _ in range(lattice.num_states)]
    involved = set()
    for a in lattice.all_arcs():
        if a.ilabel == EPSILON:
            eps_out[a.src].append(a.dst)
            indegree[a.dst] += 1
            involved.add(a.src)
            involved.add(a.dst)
    ready = deque(s for s in sorted(involved) if indegree[s] == 0)
    done = 0
    while ready:
        s = ready.popleft()
        done += 1
        for d in eps_out[s]:
            indegree[d] -= 1
            if indegree[d] == 0:
                ready.append(d)
    if done != len(involved):
        offenders = [keys[s] for s in sorted(involved) if indegree[s] > 0]
        raise StructuralError(
            f"epsilon cycle within a frame layer involving (state, frame) pairs {offenders[:8]}"
        )


def _topological_order(machine: Wfst) -> list[int]:
    indegree = [0] * machine.num_states
    for a in machine.all_arcs():
        indegree[a.dst] += 1
    ready = deque(s for s in range(machine.num_states) if indegree[s] == 0)
    order = []
    while ready:
        s = ready.popleft()
        order.append(s)
        for a in machine.arcs(s):
            indegree[a.dst] -= 1
            if indegree[a.dst] == 0:
                ready.append(a.dst)
    if len(order) != machine.num_states:
        stuck = [s for s in range(machine.num_states) if indegree[s] > 0]
        raise StructuralError(f"machine is cyclic; states on cycles include {stuck[:8]}")
    return order


def shortest_path(lattice: Wfst) -> Optional[Path]:
    """Minimum-weight accepting path of an acyclic machine, or None if there is none.

    Single-pass dynamic programming in topological order, correct for
    arbitrary real weights (noisy emissions produce negative arcs). Exact
    weight ties are broken toward the path whose sequence of arc ids
    (construction order) is lexicographically smallest, so results are
    reproducible.
    """
    order = _topological_order(lattice)

    arc_ids: dict[int, list[tuple[int, Arc]]] = {}
    next_id = 0
    for state in range(lattice.num_states):
        numbered = []
        for a in lattice.arcs(state):
            numbered.append((next_id, a))
            next_id += 1
        arc_ids[state] = numbered

    INF = math.inf
    dist = [INF] * lattice.num_states
    parent: list[tuple[int, int, Arc] | None] = [None] * lattice.num_states  # (prev, arc_id, arc)
    reached = [False] * lattice.num_states
    for s in lattice.starts:
        dist[s] = ONE
        reached[s] = True

    def id_sequence(state: int) -> list[int]:
        seq = []
        while parent[state] is not None:
            prev, aid, _ = parent[state]  # type: ignore[misc]
            seq.append(aid)
            state = prev
        seq.reverse()
        return seq

    for u in order:
        if not reached[u]:
            continue
        du = dist[u]
        for aid, a in arc_ids[u]:
            cand = du + a.weight
            v = a.dst
            if not reached[v] or cand < dist[v]:
                dist[v] = cand
                parent[v] = (u, aid, a)
                reached[v] = True
            elif cand == dist[v]:
                # Exact tie: compare full arc-id sequences.
                if id_sequence(u) + [aid] < id_sequence(v):
                    dist[v] = cand
                    parent[v] = (u, aid, a)

    best_state = None
    best_key: tuple[float, list[int]] | None = None
    for s in sorted(lattice.accepts):
        if not reached[s] or dist[s] == INF:
            continue  # weight +inf means probability zero: not a usable path
        key = (dist[s], id_sequence(s))
        if best_key is None or key < best_key:
            best_key = key
            best_state = s
    if best_state is None:
        return None

    arcs = []
    state = best_state
    while parent[state] is not None:
        prev, _, arc = parent[state]  # type: ignore[misc]
        arcs.append(arc)
        state = prev
    arcs.reverse()
    return Path.from_arcs(arcs)


def enumerate_paths(machine: Wfst, max_input_len: int, *, max_paths: int = 200_000) -> list[Path]:
    """Every accepting path with at most `max_input_len` consumed input symbols.

    Epsilon runs between consumptions are capped at the state count, which
    bounds the search on cyclic machines. Paths come out in lexicographic
    order of their arc choices (depth-first, arcs in insertion order); the
    brute-force test oracles rely on that determinism.
    """
    results: list[Path] = []
    num_states = machine.num_states
    trail: list[Arc] = []

    def walk(state: int, consumed: int, eps_run: int) -> None:
        if state in machine.accepts:
            if len(results) >= max_paths:
                raise ResourceError(f"more than {max_paths} paths; raise max_paths if intended")
            results.append(Path.from_arcs(trail))
        for a in machine.arcs(state):
            if a.ilabel == EPSILON:
                if eps_run >= num_states:
                    continue
                trail.append(a)
                walk(a.dst, consumed, eps_run + 1)
                trail.pop()
            else:
                if consumed >= max_input_len:
                    continue
                trail.append(a)
                walk(a.dst, consumed + 1, 0)
                trail.pop()

    for s in machine.starts:
        walk(s, 0, 0)
    return results
