"""Backward perfect sampler without spontaneous symbols.

When no letter can be produced context-free, the backward route couples
one trajectory per admissible length-n̂ past inside fixed time windows of
length n₀.  Phase 1 runs the coupled trajectories through a fresh window
with per-past uniform streams; a position becomes known when every
trajectory agrees on the same letter.  Phase 2 then revisits newer
windows whose left n̂-context has become fully known and re-reads that
context's own uniform stream against the freshly added mass, exactly as
the single-stream sampler does, so earlier decisions are never
contradicted.

n̂ is the smallest order whose Markov lower-bound chain (transition mass
alpha(g|w)/beta(w) on admissible windows) has a unique closed aperiodic
class, and n₀ the smallest horizon at which every admissible past can
have produced every window of the closed class — the window length that
makes phase-1 agreement possible at all.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .backward import MaxRoundsExceeded, SimulationTableau, StoppingRecord
from .kernels import (
    STAR,
    TOL,
    KernelContractViolation,
    KernelSpec,
    _scan,
    _scan_increment,
)
from .streams import StreamKey, uniform_at


class AssumptionViolated(Exception):
    """The finite-alphabet / unique-closed-class route does not apply."""


class BetaNZero(Exception):
    """Some admissible window carries zero envelope mass at this order."""

    def __init__(self, n, witness):
        super().__init__(f"beta_{n} = 0 (witness window {witness!r})")
        self.order = n
        self.witness = witness


class NotFoundWithin(Exception):
    """Exact-length reachability did not saturate within the budget."""


@dataclass
class NotFound:
    """Returned by find_nhat when no usable order exists up to n_max."""

    n_max: int
    reports: dict  # order -> reason string


@dataclass
class MarkovAnalysis:
    order: int
    beta_n: float
    states: tuple  # admissible star-free windows of length `order`
    matrix: dict  # window -> {letter: alpha(g,w)/beta(w)}
    scc_decomposition: tuple
    closed_classes: tuple
    period: int | None  # period of the closed class when it is unique
    nhat_found: bool


def _shift(w: tuple, g) -> tuple:
    """New window after emitting g: g becomes newest, oldest falls off."""
    return (g,) + w[: len(w) - 1]


def _tarjan_scc(nodes, succ):
    """Iterative Tarjan; components in reverse topological order."""
    index = {}
    low = {}
    onstack = set()
    stack = []
    comps = []
    counter = [0]
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        onstack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in onstack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    onstack.discard(u)
                    comp.append(u)
                    if u == v:
                        break
                comps.append(tuple(comp))
    return tuple(comps)


def _class_period(comp, succ) -> int:
    """gcd of cycle lengths inside one strongly connected component."""
    members = set(comp)
    root = comp[0]
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in succ[u]:
                if v in members and v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in comp:
        for v in succ[u]:
            if v in members:
                g = math.gcd(g, depth[u] + 1 - depth[v])
    return abs(g) if g else 1


def build_markov_analysis(kernel: KernelSpec, n: int) -> MarkovAnalysis:
    """Order-n lower-bound chain on admissible windows, with its structure.

    States are the star-free length-n windows passing admissible_window;
    transition mass alpha(g,w)/beta(w); edges wherever alpha(g,w) > 0.
    Raises BetaNZero when some admissible window has no envelope mass at
    this order (the chain is then undefined).
    """
    if n < 1:
        raise ValueError("order n >= 1 required")
    if kernel.alphabet is None:
        raise AssumptionViolated(f"{kernel.name}: finite alphabet required")
    states = tuple(
        w for w in product(kernel.alphabet, repeat=n) if kernel.admissible_window(w)
    )
    if not states:
        raise AssumptionViolated(f"{kernel.name}: no admissible windows at order {n}")

    betas = {w: kernel.beta(w) for w in states}
    beta_n = min(betas.values())
    if beta_n <= 0.0:
        witness = min(states, key=lambda w: betas[w])
        raise BetaNZero(n, witness)

    state_set = set(states)
    matrix = {}
    succ = {}
    for w in states:
        row = {}
        out = []
        for g in kernel.alphabet:
            a = kernel.alpha(g, w)
            row[g] = a / betas[w]
            if a > 0.0:
                w2 = _shift(w, g)
                if w2 not in state_set:
                    raise KernelContractViolation(
                        f"{kernel.name}: positive mass from {w!r} to {g!r} lands "
                        f"on inadmissible window {w2!r}"
                    )
                out.append(w2)
        matrix[w] = row
        succ[w] = out

    comps = _tarjan_scc(states, succ)
    closed = tuple(
        comp
        for comp in comps
        if all(v in set(comp) for u in comp for v in succ[u])
    )
    period = _class_period(closed[0], succ) if len(closed) == 1 else None
    return MarkovAnalysis(
        order=n,
        beta_n=beta_n,
        states=states,
        matrix=matrix,
        scc_decomposition=comps,
        closed_classes=closed,
        period=period,
        nhat_found=len(closed) == 1 and period == 1,
    )


def find_nhat(kernel: KernelSpec, n_max: int):
    """Smallest usable order, or NotFound(n_max, per-order reasons)."""
    reports = {}
    for n in range(1, n_max + 1):
        try:
            analysis = build_markov_analysis(kernel, n)
        except BetaNZero as e:
            reports[n] = str(e)
            continue
        if analysis.nhat_found:
            return n, analysis
        reports[n] = (
            f"{len(analysis.closed_classes)} closed classes"
            if len(analysis.closed_classes) != 1
            else f"closed class has period {analysis.period}"
        )
    return NotFound(n_max, reports)


def compute_n0(analysis: MarkovAnalysis, m_max: int = 64) -> int:
    """Smallest m >= n̂ with exact-m walks from every window to every target.

    Boolean reachability on the positive-support shift graph: after m
    emissions the window state is the last n̂ letters, so requiring the
    closed class to be reachable in exactly m steps from every admissible
    start is the positivity the windowed coupling needs.  The support
    graph understates alpha against longer histories, so the result can
    be conservative (never too small).  Minimality holds by construction:
    m is the first order >= n̂ at which the check passes.
    """
    if not analysis.nhat_found:
        raise AssumptionViolated("compute_n0 needs a unique aperiodic closed class")
    succ = {
        w: {_shift(w, g) for g, p in analysis.matrix[w].items() if p > 0.0}
        for w in analysis.states
    }
    targets = set(analysis.closed_classes[0])
    reach = {w: {w} for w in analysis.states}
    for m in range(1, m_max + 1):
        reach = {
            w: set().union(*(succ[v] for v in rs)) if rs else set()
            for w, rs in reach.items()
        }
        if m >= analysis.order and all(
            targets <= rs for rs in reach.values()
        ):
            return m
    raise NotFoundWithin(
        f"no exact-length horizon up to {m_max} reaches the closed class "
        "from every admissible window"
    )


@dataclass
class CoalescencePlan:
    nhat: int
    n0: int
    analysis: MarkovAnalysis
    index: dict  # window in C -> past_id for the uniform streams


@lru_cache(maxsize=32)
def prepare_coalescence(
    kernel: KernelSpec, nhat_max: int = 8, n0_max: int = 64
) -> CoalescencePlan:
    """Resolve (n̂, n₀) once per kernel; raises AssumptionViolated if absent."""
    found = find_nhat(kernel, nhat_max)
    if isinstance(found, NotFound):
        raise AssumptionViolated(
            f"{kernel.name}: no usable order <= {found.n_max}: {found.reports}"
        )
    nhat, analysis = found
    n0 = compute_n0(analysis, n0_max)
    return CoalescencePlan(
        nhat=nhat,
        n0=n0,
        analysis=analysis,
        index={w: i for i, w in enumerate(analysis.states)},
    )


def run_algorithm2(
    kernel: KernelSpec,
    k: int,
    key: StreamKey,
    max_rounds: int = 10**4,
    plan: CoalescencePlan | None = None,
    nhat_max: int = 8,
    n0_max: int = 64,
    uniforms=None,
    trace=None,
):
    """Sample X_{-k}, ..., X_0 exactly via windowed coupled trajectories.

    Returns (symbols oldest-first, StoppingRecord) where the record's T
    map holds the window index T̃[t] whose round resolved each target:
    the output depends only on uniforms at times >= l(T̃min), nothing
    older.  ``uniforms`` may override the keyed streams (callable
    (time, past_id) -> u); ``trace`` receives (round, merged snapshot)
    after every round.

    Phase 2 is event-driven: a window is swept only while its left
    n̂-context is fully known and it still has unresolved positions,
    which is behaviourally identical to sweeping every window each round
    (the skipped ones are no-ops) but keeps long runs (k in the tens of
    thousands) close to linear.
    """
    if k < 0:
        raise ValueError("k >= 0 required")
    if plan is None:
        plan = prepare_coalescence(kernel, nhat_max, n0_max)
    if uniforms is None:
        uniforms = lambda t, pid: uniform_at(key.at(t, pid))
    nhat, n0 = plan.nhat, plan.n0
    C = plan.analysis.states
    idx = plan.index
    pids = tuple(idx[a] for a in C)

    def l(z):  # oldest time of window z (z = 0 is the newest window)
        return -(z + 1) * n0 + 1

    def r(z):
        return -z * n0

    temp: dict = {}
    thr: dict = {}
    ucache: dict = {}
    ttil: dict = {}
    traj: dict = {}  # (z, pid) -> {time: (symbol, scan total)}
    first_done: dict = {}  # z -> round when the left context completed
    tables: dict = {}  # short context -> cumulative alpha thresholds
    unresolved: dict = {}  # window z -> count of STAR positions
    b_ready: dict = {}  # window z -> its completed left context
    active: set = set()  # b known and unresolved positions remain
    stale: set = set()  # active windows whose context gained a letter
    heap: list = []  # phase-2 queue, oldest window first (stores -z)
    inq: set = set()
    cur_sweep = None  # window being swept; its own writes need no re-queue
    journal: dict = {}  # within-round write log: time -> start-of-round value
    targets_left = k + 1
    ucount = 0

    def _u(t, pid):
        kk = (t, pid)
        u = ucache.get(kk)
        if u is None:
            nonlocal ucount
            u = ucache[kk] = uniforms(t, pid)
            ucount += 1
        return u

    def _tscan(u, ctx):
        # bit-identical to _scan: same letter order, same accumulation,
        # same bounds check -- just cached per context
        tab = tables.get(ctx)
        if tab is None:
            lets = []
            cum = []
            acc = 0.0
            for g in kernel.letters_for(ctx):
                a_ = kernel.alpha(g, ctx)
                if a_ < -TOL or a_ > 1.0 + TOL:
                    raise KernelContractViolation(
                        f"{kernel.name}: alpha({g!r}|{ctx!r}) = {a_} outside [0,1]"
                    )
                acc += a_
                lets.append(g)
                cum.append(acc)
            tab = tables[ctx] = (lets, cum)
        lets, cum = tab
        i = bisect_right(cum, u)
        if i < len(cum):
            return lets[i], cum[i]
        return STAR, (cum[-1] if cum else 0.0)

    def _resolved(t):
        """Bookkeeping after temp[t] turned into a letter."""
        nonlocal targets_left
        if -k <= t <= 0:
            targets_left -= 1
        zt = (-t) // n0
        unresolved[zt] -= 1
        if unresolved[zt] == 0:
            active.discard(zt)
            stale.discard(zt)
            for pid in pids:
                traj.pop((zt, pid), None)
        # t may be the last missing piece of some window's left context
        for m in range(-t - nhat + 1, -t + 1):
            if m > 0 and m % n0 == 0:
                z = m // n0 - 1
                if z >= 0 and z not in b_ready:
                    b = tuple(
                        temp.get(j, STAR) for j in range(l(z) - 1, l(z) - nhat - 1, -1)
                    )
                    if any(x is STAR for x in b):
                        continue
                    if b not in idx:
                        raise KernelContractViolation(
                            f"{kernel.name}: completed context {b!r} is not an "
                            "admissible window"
                        )
                    b_ready[z] = b
                    if unresolved.get(z, 0) > 0:
                        active.add(z)
                        stale.add(z)
                        if z not in inq:
                            heapq.heappush(heap, -z)
                            inq.add(z)

    def _set_letter(t, sym, tt):
        if t in temp:
            journal.setdefault(t, temp[t])
        temp[t] = sym
        ttil[t] = tt
        _resolved(t)
        # a letter at time t refreshes every window holding a newer
        # position; a sweep skipped in between would have had all-zero
        # increments (no context change, trailing stars add nothing), so
        # gating re-sweeps on this mark is output-identical
        for z2 in tuple(active):
            if (-z2) * n0 > t and z2 != cur_sweep and z2 not in stale:
                stale.add(z2)
                if z2 not in inq:
                    heapq.heappush(heap, -z2)
                    inq.add(z2)

    def _prevval(j):
        v = journal.get(j)
        return v if v is not None else temp.get(j, STAR)

    n = 0
    while True:
        if n > max_rounds:
            raise MaxRoundsExceeded(
                f"no coalescence within {max_rounds} windows",
                SimulationTableau(dict(temp), n - 1, -k, 0),
            )
        journal.clear()
        del heap[:]
        inq.clear()
        lo, hi = l(n), r(n)

        # phase 1: coupled trajectories through the fresh window z = n
        for a in C:
            pid = idx[a]
            tvals = {}
            for t in range(lo, hi + 1):
                ctx = tuple(tvals[j][0] for j in range(t - 1, lo - 1, -1)) + a
                tvals[t] = _tscan(_u(t, pid), ctx)
            traj[(n, pid)] = tvals
        unresolved[n] = n0
        for t in range(lo, hi + 1):
            syms = {traj[(n, pid)][t][0] for pid in pids}
            if len(syms) == 1 and STAR not in syms:
                temp[t] = STAR  # placeholder so _set_letter journals sanely
                _set_letter(t, syms.pop(), -n)
            else:
                temp[t] = STAR

        # phase 2: sweep eligible windows oldest-first; resolving a window's
        # positions can complete the next-newer window's left context or
        # refresh its merged view, and either event queues it into the same
        # within-round cascade.  Clean windows (no context change since
        # their last sweep) are skipped: their increments would all be zero.
        for z in stale:
            if z in active and z not in inq:
                heapq.heappush(heap, -z)
                inq.add(z)
        while heap:
            z = -heapq.heappop(heap)
            inq.discard(z)
            if z not in active:
                continue
            cur_sweep = z
            b = b_ready[z]
            pid = idx[b]
            first = z not in first_done
            if first:
                first_done[z] = n
            tz = traj.get((z, pid))
            for t in range(l(z), r(z) + 1):
                if temp[t] is not STAR:
                    continue
                u = _u(t, pid)
                if first:
                    sym0, acc0 = tz[t]
                    if sym0 is not STAR:
                        # trajectory b already drew this letter with the same
                        # uniform; the merge only failed because another past
                        # disagreed, so the letter stands once b is the truth
                        _set_letter(t, sym0, -n)
                        continue
                    base = acc0
                    w_old = (
                        tuple(tz[j][0] for j in range(t - 1, l(z) - 1, -1)) + b
                    )
                else:
                    base = thr[t]
                    w_old = tuple(_prevval(j) for j in range(t - 1, l(n - 1) - 1, -1))
                assert u >= base
                w_new = tuple(temp[j] for j in range(t - 1, lo - 1, -1))
                sym, acc = _scan_increment(kernel, u, w_new, w_old, base)
                if sym is STAR:
                    thr[t] = acc
                else:
                    _set_letter(t, sym, -n)
            stale.discard(z)
            cur_sweep = None

        if trace is not None:
            trace(n, dict(temp))
        if targets_left == 0:
            record = StoppingRecord(
                T={t: ttil[t] for t in range(-k, 1)},
                rounds_used=n,
                uniforms_consumed=ucount,
            )
            return [temp[t] for t in range(-k, 1)], record
        n += 1
