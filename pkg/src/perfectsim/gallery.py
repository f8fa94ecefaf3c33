"""Ready-made kernels: the families the samplers and diagnostics are run on.

Every constructor returns a :class:`~perfectsim.kernels.KernelSpec` whose
``alpha`` is the exact adversarial infimum over unknown (star) positions
and over the unseen infinite past, computed so that refining a window can
never decrease any alpha — not just mathematically but in exact float
arithmetic (all sums fold in ascending lag order; minima only ever shrink
their candidate sets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .kernels import STAR, KernelSpec, Window, canon, known_positions


# ---------------------------------------------------------------------------
# weight families theta_0, theta_1, ... (nonnegative, summing to 1)


@dataclass(frozen=True)
class ThetaWeights:
    """Memory-weight family with exact tail sums s(n) = sum_{j>=n} theta_j."""

    theta: Callable[[int], float]
    s: Callable[[int], float]
    support: Optional[int]  # largest j with theta_j > 0; None = infinite
    label: str


def theta_geometric(q: float) -> ThetaWeights:
    """theta_j = (1-q) q^j; s(n) = q^n."""
    if not 0.0 < q < 1.0:
        raise ValueError("need 0 < q < 1")
    return ThetaWeights(
        theta=lambda j: (1.0 - q) * q**j,
        s=lambda n: q**n,
        support=None,
        label=f"geometric:{q}",
    )


def theta_polynomial(eps: float) -> ThetaWeights:
    """s(n) = (1-eps)/n for n >= 1; theta_j = (1-eps)/(j(j+1)) for j >= 1."""
    if not 0.0 < eps < 1.0:
        raise ValueError("need 0 < eps < 1")

    def s(n):
        return 1.0 if n <= 0 else (1.0 - eps) / n

    def theta(j):
        if j == 0:
            return eps
        return (1.0 - eps) / (j * (j + 1))

    return ThetaWeights(theta=theta, s=s, support=None, label=f"polynomial:{eps}")


def theta_list(values) -> ThetaWeights:
    """Finite raw weights theta_0..theta_m; must sum to 1."""
    vals = tuple(float(v) for v in values)
    if not vals or any(v < 0 for v in vals):
        raise ValueError("weights must be a nonempty nonnegative list")
    if abs(math.fsum(vals) - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {math.fsum(vals)}, not 1")
    # store exact suffix sums once so s(n) is reproducible
    sfx = [0.0] * (len(vals) + 1)
    for j in range(len(vals) - 1, -1, -1):
        sfx[j] = vals[j] + sfx[j + 1]

    return ThetaWeights(
        theta=lambda j: vals[j] if 0 <= j < len(vals) else 0.0,
        s=lambda n: sfx[n] if 0 <= n < len(sfx) else (sfx[0] if n < 0 else 0.0),
        support=len(vals) - 1,
        label="list:" + ",".join(repr(v) for v in vals),
    )


def parse_theta(label: str) -> ThetaWeights:
    """Parse 'geometric:0.5' | 'polynomial:0.2' | 'list:0.5,0.25,0.25'."""
    kind, _, rest = label.partition(":")
    if kind == "geometric":
        return theta_geometric(float(rest))
    if kind == "polynomial":
        return theta_polynomial(float(rest))
    if kind == "list":
        return theta_list(float(x) for x in rest.split(","))
    raise ValueError(f"unknown weight family {label!r}")


# ---------------------------------------------------------------------------
# binary autoregressive kernel


def make_autoregressive(theta: ThetaWeights, delta: float) -> KernelSpec:
    """Binary chain that replays its own past.

    p(1 | x) = theta_0 (1-delta) + sum_j theta_j 1{x_{-j} = 1}, and
    symmetrically for 0 with weight delta.  The adversarial infimum just
    drops every unknown position, so alpha(g, w) is the base mass plus the
    matching known lags — an ascending-order partial sum, monotone under
    refinement bit-for-bit.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta in [0,1] required")
    t0 = theta.theta(0)
    base = {0: t0 * delta, 1: t0 * (1.0 - delta)}

    def alpha(g, w: Window) -> float:
        if g not in (0, 1):
            return 0.0
        acc = base[g]
        for j, x in known_positions(canon(w)):
            if x == g:
                acc += theta.theta(j + 1)
        return acc

    def beta_known(n):  # fully-known n-window, any values
        return math.fsum(theta.theta(j) for j in range(n + 1))

    def rho(n):
        out = 1.0
        for j in range(1, n + 1):
            out *= 1.0 - theta.s(j)
        return out

    def additive_weight(g, lag, letter):
        return theta.theta(lag) if letter == g else 0.0

    return KernelSpec(
        name="autoregressive",
        parameters={"theta": theta.label, "delta": delta},
        alphabet=(0, 1),
        alpha=alpha,
        closed_forms={
            "s": theta.s,
            "theta": theta.theta,
            "star_affine": True,
            "beta_known_prefix": beta_known,
            "rho": rho,
            "additive_weight": additive_weight,
            "stationary_mean": 1.0 - delta,
        },
    )


# ---------------------------------------------------------------------------
# imitation kernel: copy a uniformly chosen recent letter, lookback = last letter


def _c_support(c_seq) -> tuple:
    c = tuple(float(v) for v in c_seq)
    if not c or c[0] <= 0.0 or any(v < 0 for v in c):
        raise ValueError("need c_1 > 0 and all c_g >= 0")
    if math.fsum(c) >= 1.0:
        raise ValueError("sum of c must be < 1")
    return c


def make_imitation(c_seq, truncation: Optional[int] = None) -> KernelSpec:
    """Letters >= 1; the last letter sets how far back the chain imitates.

    p(g | x) = c_g + (1-c) * #{1 <= k <= x_{-1} : x_{-k} = g} / x_{-1}
    (the window back to lag x_{-1}, which includes x_{-1} itself).  With
    x_{-1} unknown the lookback is unbounded, the copy frequency can be
    pushed to 0, and alpha collapses to the spontaneous mass c_g; with
    ``truncation`` K the alphabet becomes {1..K} and the infimum is a
    genuine minimum over the K possible lookbacks.
    """
    c = _c_support(c_seq)
    ctot = math.fsum(c)
    rest = 1.0 - ctot

    def base(g):
        return c[g - 1] if 1 <= g <= len(c) else 0.0

    if truncation is not None:
        if truncation < max(2, len(c)):
            raise ValueError("truncation must be >= max(2, len(c))")
        letters = tuple(range(1, truncation + 1))
    else:
        letters = None

    def _freq(g, w, m):
        # copy frequency toward g when x_{-1} is (hypothesized) m:
        # lag 1 is x_{-1}=m itself, lags 2..m read the window, stars and
        # positions beyond the window count 0 (adversary avoids g).
        k = 1 if m == g else 0
        for j in range(1, min(m, len(w))):
            if w[j] == g:
                k += 1
        return k / m

    def alpha(g, w: Window) -> float:
        w = canon(w)
        if letters is not None and not (1 <= g <= truncation):
            return 0.0
        if g < 1:
            return 0.0
        if w and w[0] is not STAR:
            return base(g) + rest * _freq(g, w, w[0])
        if letters is None:
            return base(g)  # unbounded lookback: inf frequency = 0
        return base(g) + rest * min(_freq(g, w, m) for m in letters)

    def positive(w: Window) -> tuple:
        w = canon(w)
        out = set(range(1, len(c) + 1))
        out.update(x for x in w if x is not STAR)
        return tuple(sorted(out))

    sfx = [0.0] * (len(c) + 1)
    for j in range(len(c) - 1, -1, -1):
        sfx[j] = c[j] + sfx[j + 1]

    return KernelSpec(
        name="imitation",
        parameters={"c": c, "truncation": truncation},
        alphabet=letters,
        alpha=alpha,
        positive_letters=None if letters is not None else positive,
        closed_forms={"c": c, "s_c": lambda m: sfx[m - 1] if m <= len(c) else 0.0},
    )


def make_imitation_general(
    c_seq, f_family: Callable[[int], tuple], truncation: Optional[int] = None
) -> KernelSpec:
    """Imitation with letter-dependent lookback profiles f_m.

    p(g | x) = c_g + (1-c) sum_k f_{x_{-1}}(k) 1{x_{-k} = g}, where f_m is
    a finite-support probability profile.  The unknown-x_{-1} infimum is
    c_g, which is exact only when the profiles have vanishing lookback
    (f_m(k) -> 0 as m grows, for each fixed k) — true for the uniform
    family f_m = (1/m, ..., 1/m); constructors must only pass such
    families.
    """
    c = _c_support(c_seq)
    rest = 1.0 - math.fsum(c)

    def base(g):
        return c[g - 1] if 1 <= g <= len(c) else 0.0

    if truncation is not None:
        if truncation < max(2, len(c)):
            raise ValueError("truncation must be >= max(2, len(c))")
        letters = tuple(range(1, truncation + 1))
    else:
        letters = None

    def _match(g, w, m):
        f = f_family(m)
        acc = 0.0
        for k in range(1, len(f) + 1):
            if k == 1:
                hit = m == g
            else:
                hit = k - 1 < len(w) and w[k - 1] == g
            if hit:
                acc += f[k - 1]
        return acc

    def alpha(g, w: Window) -> float:
        w = canon(w)
        if letters is not None and not (1 <= g <= truncation):
            return 0.0
        if g < 1:
            return 0.0
        if w and w[0] is not STAR:
            return base(g) + rest * _match(g, w, w[0])
        if letters is None:
            return base(g)
        return base(g) + rest * min(_match(g, w, m) for m in letters)

    def positive(w: Window) -> tuple:
        w = canon(w)
        out = set(range(1, len(c) + 1))
        out.update(x for x in w if x is not STAR)
        return tuple(sorted(out))

    return KernelSpec(
        name="imitation-general",
        parameters={"c": c, "truncation": truncation},
        alphabet=letters,
        alpha=alpha,
        positive_letters=None if letters is not None else positive,
    )


def uniform_lookback(m: int) -> tuple:
    return (1.0 / m,) * m


# ---------------------------------------------------------------------------
# ladder kernel: spontaneous mass + a jump whose law depends on a record time


def make_ladder(c_seq, q_family=None, truncation: Optional[int] = None) -> KernelSpec:
    """Kernel driven by the first ladder epoch of the past.

    Y(x) = inf{m >= 1 : x_{-1}+...+x_{-m} <= m(m+1)/2} and
    p(g | x) = c_g + (1-c) q_{Y(x)}(g), with q_m a probability law on the
    letters (default uniform on {1..m}).  For a starred window the set of
    Y values consistent with the known letters is bracketed by a
    certainly-true / possibly-true prefix scan; alpha takes the minimum of
    q_Y(g) over that candidate set, or the family's tail infimum (0 for
    the uniform family) when no prefix is certainly a ladder epoch.
    """
    c = _c_support(c_seq)
    rest = 1.0 - math.fsum(c)
    if q_family is None:
        q_family = lambda m, g: (1.0 / m) if 1 <= g <= m else 0.0

    def base(g):
        return c[g - 1] if 1 <= g <= len(c) else 0.0

    if truncation is not None:
        if truncation < max(2, len(c)):
            raise ValueError("truncation must be >= max(2, len(c))")
        letters = tuple(range(1, truncation + 1))
        maxletter = truncation
    else:
        letters = None
        maxletter = None

    def _candidates(w: Window):
        """Possibly-Y prefix lengths up to the first certain one.

        Returns (cands, capped): capped=False means arbitrarily large Y
        values stay consistent (the scan never hit a certain epoch).
        """
        if maxletter is None:
            horizon = len(w)
        else:
            # with letters <= K the epoch condition m(m+1)/2 >= (sum <= mK)
            # is eventually certain, so the scan provably stops
            horizon = 2 * maxletter + len(w) + 2
        cands = []
        lo = 0  # minimal possible prefix sum (stars count 1)
        hi = 0.0  # maximal (stars count K; inf if unbounded alphabet)
        for m in range(1, horizon + 1):
            if m <= len(w) and w[m - 1] is not STAR:
                lo += w[m - 1]
                hi += w[m - 1]
            else:
                lo += 1
                hi = math.inf if maxletter is None else hi + maxletter
            tm = m * (m + 1) // 2
            if lo <= tm:
                cands.append(m)
            if hi <= tm:
                return cands, True
        return cands, False

    def alpha(g, w: Window) -> float:
        w = canon(w)
        if letters is not None and not (1 <= g <= truncation):
            return 0.0
        if g < 1:
            return 0.0
        cands, capped = _candidates(w)
        if not capped:
            return base(g)  # tail infimum of the uniform family is 0
        return base(g) + rest * min(q_family(m, g) for m in cands)

    def positive(w: Window) -> tuple:
        w = canon(w)
        out = set(range(1, len(c) + 1))
        cands, capped = _candidates(w)
        if capped:
            out.update(range(1, max(cands) + 1))
        return tuple(sorted(out))

    return KernelSpec(
        name="ladder",
        parameters={"c": c, "truncation": truncation},
        alphabet=letters,
        alpha=alpha,
        positive_letters=None if letters is not None else positive,
    )


# ---------------------------------------------------------------------------
# nearest-neighbour walks: the 4-cycle and general finite graphs


def _walk_alpha(closed_nbhd: dict, theta: ThetaWeights, g, w: Window) -> float:
    """Adversarial alpha for a nearest-neighbour walk kernel.

    For last letter v the one-step law is
    p(g|x) = 1{g in E(v)} (theta_0/|E(v)| + sum_j theta_j 1{x_{-j} in S}),
    with stay set S = (V \\ E(v)) ∪ {v} when g = v and S = {g} otherwise
    (E = closed neighbourhood).  Stars walk the graph adversarially: a
    min-cost path DP over window positions, then the cheapest escape from
    the stay set for the unseen tail.  All candidate path costs fold
    base + theta in ascending lag order, so minima refine monotonically.
    """
    w = canon(w)
    if not w:
        return 0.0
    verts = sorted(closed_nbhd)
    n = len(w)
    first = w[0]
    branches = [first] if first is not STAR else verts
    best = None
    for v in branches:
        if g not in closed_nbhd[v]:
            # only an actual admissible history can push the mass to 0
            if _path_feasible(closed_nbhd, v, w):
                best = 0.0
                break
            continue
        if g == v:
            stay = (set(verts) - closed_nbhd[v]) | {v}
        else:
            stay = {g}
        base = theta.theta(0) / len(closed_nbhd[v])

        # DP over window positions: cost[u] = cheapest fold ending at vertex u
        cost = {v: base + theta.theta(1) if v in stay else base}
        for j in range(1, n):
            nxt = {}
            allowed = verts if w[j] is STAR else [w[j]]
            for u, cu in cost.items():
                for u2 in allowed:
                    if u2 not in closed_nbhd[u]:
                        continue
                    c2 = cu + theta.theta(j + 1) if u2 in stay else cu
                    if u2 not in nxt or c2 < nxt[u2]:
                        nxt[u2] = c2
            cost = nxt
            if not cost:
                break
        if not cost:
            continue  # known letters cannot lie on a path for this branch

        # escape tail: keep paying theta while stuck inside the stay set
        outside = set(verts) - stay
        val = None
        if not outside:
            for u, cu in cost.items():
                cv = cu + theta.s(n + 1)
                if val is None or cv < val:
                    val = cv
        else:
            dist = _bfs_dist(closed_nbhd, outside)
            for u, cu in cost.items():
                cv = cu
                for j in range(n + 1, n + dist[u]):
                    cv += theta.theta(j)
                if val is None or cv < val:
                    val = cv
        if best is None or val < best:
            best = val
    return 0.0 if best is None else best


def _path_feasible(closed_nbhd: dict, v, w: Window) -> bool:
    """Can the window's known letters lie on one walk starting at x_{-1}=v?"""
    if w and w[0] is not STAR and w[0] != v:
        return False
    reach = {v}
    for j in range(1, len(w)):
        if w[j] is STAR:
            nxt = set()
            for u in reach:
                nxt |= closed_nbhd[u]
            reach = nxt
        else:
            reach = {w[j]} if any(w[j] in closed_nbhd[u] for u in reach) else set()
        if not reach:
            return False
    return True


def _bfs_dist(closed_nbhd: dict, targets: set) -> dict:
    dist = {u: 0 for u in targets}
    frontier = list(targets)
    while frontier:
        nxt = []
        for u in frontier:
            for v in closed_nbhd[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def make_cyclic4(theta: ThetaWeights) -> KernelSpec:
    """Nearest-neighbour walk on Z/4 that relives its past positions.

    From last letter v the walk stays or moves to v±1 (mod 4), never to
    the antipode; each remembered lag j adds theta_j to the move it
    favours.  Fully-known windows use the direct formula; starred windows
    fall back to the path DP with the mod-4 neighbourhoods.
    """
    verts = (0, 1, 2, 3)
    nbhd = {v: {(v - 1) % 4, v, (v + 1) % 4} for v in verts}

    def alpha(g, w: Window) -> float:
        w = canon(w)
        if g not in verts or not w:
            return 0.0
        if all(x is not STAR for x in w):
            v = w[0]
            if any(w[i + 1] not in nbhd[w[i]] for i in range(len(w) - 1)):
                return 0.0  # no admissible history matches: empty infimum
            if g not in nbhd[v]:
                return 0.0
            if g == v:
                stay = {v, (v + 2) % 4}
            else:
                stay = {g}
            acc = theta.theta(0) / 3.0
            for j in range(len(w)):
                if w[j] in stay:
                    acc += theta.theta(j + 1)
            # escape tail: antipode of the stay pair is one step away when
            # staying (distance 1 -> free); copying a neighbour likewise
            u = w[-1]
            n = len(w)
            d = 0 if u not in stay else (1 if (nbhd[u] - stay) else 2)
            for j in range(n + 1, n + d):
                acc += theta.theta(j)
            return acc
        return _walk_alpha(nbhd, theta, g, w)

    def admissible(w: Window) -> bool:
        w = canon(w)
        return all(
            w[i + 1] in nbhd[w[i]] for i in range(len(w) - 1)
        )

    def rho_tilde_claimed(n):
        out = 1.0
        for j in range(1, n + 2):
            out *= 1.0 - theta.s(j)
        return out

    def beta_known(n):
        return math.fsum(theta.theta(j) for j in range(n + 1))

    return KernelSpec(
        name="cyclic4",
        parameters={"theta": theta.label},
        alphabet=verts,
        alpha=alpha,
        admissible_window=admissible,
        closed_forms={
            "s": theta.s,
            "theta": theta.theta,
            "beta_known_prefix": beta_known,
            "rho_tilde_claimed": rho_tilde_claimed,
        },
    )


def make_graph_walk(adjacency: dict, theta: ThetaWeights) -> KernelSpec:
    """Nearest-neighbour walk on an arbitrary finite connected graph.

    Same law as :func:`make_cyclic4` with the 4-cycle replaced by
    ``adjacency`` (symmetric, loop-free; the closed neighbourhood
    E(v) = {v} ∪ adj(v) drives both the support and the theta_0 split).
    """
    verts = tuple(sorted(adjacency))
    if not verts:
        raise ValueError("graph must be nonempty")
    closed = {}
    for v in verts:
        for u in adjacency[v]:
            if v not in adjacency[u]:
                raise ValueError(f"adjacency not symmetric at ({u}, {v})")
        closed[v] = set(adjacency[v]) | {v}
    # connectivity
    seen = {verts[0]}
    stack = [verts[0]]
    while stack:
        for u in closed[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) != len(verts):
        raise ValueError("graph must be connected")

    def alpha(g, w: Window) -> float:
        if g not in closed:
            return 0.0
        return _walk_alpha(closed, theta, g, w)

    def admissible(w: Window) -> bool:
        w = canon(w)
        return all(w[i + 1] in closed[w[i]] for i in range(len(w) - 1))

    return KernelSpec(
        name="graph-walk",
        parameters={"vertices": verts, "theta": theta.label},
        alphabet=verts,
        alpha=alpha,
        admissible_window=admissible,
        closed_forms={"s": theta.s, "theta": theta.theta},
    )


# ---------------------------------------------------------------------------
# run-length kernels (negative controls for the coalescence route)


def make_flipflop(r: Callable[[int], float]) -> KernelSpec:
    """Binary kernel that holds its value with run-length-increasing odds.

    With tau the current run length of x_{-1}, p(x_{-1}|x) = r_tau and
    p(flip|x) = 1 - r_tau, where r_n increases to 1.  Histories are the
    sequences with at least one flip, so every finite window is
    admissible, but all-0 and all-1 windows head separate closed classes:
    the coalescence route must reject this kernel.
    """

    def _tau_range(w: Window, v) -> Optional[tuple]:
        """(tau_min, tau_max) consistent with x_{-1}=v; tau_max=None if unbounded."""
        w = canon(w)
        if w and w[0] is not STAR and w[0] != v:
            return None
        taus = []
        run_extends = True  # positions 1..j so far can all be v
        for j in range(1, len(w) + 2):
            if not run_extends:
                break
            if j <= len(w):
                can_v = w[j - 1] is STAR or w[j - 1] == v
            else:
                can_v = True
            if j == 1:
                if not can_v:
                    return None
                run_extends = True
            else:
                run_extends = run_extends and can_v
            if not run_extends:
                break
            # tau = j needs position j+1 to differ (or be free)
            if j + 1 <= len(w):
                breakable = w[j] is STAR or w[j] != v
            else:
                breakable = True
            if breakable:
                taus.append(j)
            if j == len(w) + 1:
                return (taus[0], None) if taus else None
        return (taus[0], taus[-1]) if taus else None

    def alpha(g, w: Window) -> float:
        if g not in (0, 1):
            return 0.0
        w = canon(w)
        best = None
        rng_hold = _tau_range(w, g)
        if rng_hold is not None:
            val = r(rng_hold[0])  # r increases: min at smallest tau
            best = val if best is None else min(best, val)
        rng_flip = _tau_range(w, 1 - g)
        if rng_flip is not None:
            val = 0.0 if rng_flip[1] is None else 1.0 - r(rng_flip[1])
            best = val if best is None else min(best, val)
        return 0.0 if best is None else best

    return KernelSpec(
        name="flipflop",
        parameters={"r": getattr(r, "label", "callable")},
        alphabet=(0, 1),
        alpha=alpha,
        closed_forms={"r": r},
    )


def flipflop_r(a: float = 0.5, t: float = 0.5):
    """r_n = 1 - a t^n, increasing to 1; defined for every n >= 1."""
    if not (0.0 < a <= 1.0 and 0.0 < t < 1.0):
        raise ValueError("need 0 < a <= 1 and 0 < t < 1")

    def r(n: int) -> float:
        return 1.0 - a * t**n

    r.label = f"one-minus:{a},{t}"
    return r


def make_three_letter_alternating(
    r: Optional[Callable[[int], float]] = None, restrict_histories: bool = True
) -> KernelSpec:
    """Three letters; holding odds grow with the run, or never hold at all.

    Unrestricted: p(x_{-1}|x) = r_tau for runs tau >= 2, the two other
    letters share the rest; a fresh run (x_{-1} != x_{-2}) never holds and
    moves to either other letter with probability 1/2 (the tau=1 case is
    the r_1 = 0 convention).  Constant windows then head three separate
    closed classes — a negative control.  With ``restrict_histories`` the
    admissible histories are the strictly alternating ones, runs collapse
    to tau = 1, alpha(g|b) = 1/2 for g != b, and the coalescence route
    works with memory 1.
    """
    letters = (0, 1, 2)
    if r is None:
        r = lambda n: 1.0 - 2.0**-n

    def _r(n):
        return 0.0 if n == 1 else r(n)

    if restrict_histories:

        def alpha(g, w: Window) -> float:
            w = canon(w)
            if g not in letters:
                return 0.0
            for i in range(len(w) - 1):
                if w[i] is not STAR and w[i] == w[i + 1]:
                    return 0.0  # inadmissible window: empty infimum
            if not w:
                return 0.0
            if w[0] is not STAR:
                return 0.5 if g != w[0] else 0.0
            # x_{-1} unknown: it can be g unless pinned by x_{-2}
            if len(w) > 1 and w[1] is not STAR and w[1] == g:
                return 0.5
            return 0.0

        def admissible(w: Window) -> bool:
            w = canon(w)
            return all(w[i] != w[i + 1] for i in range(len(w) - 1))

        return KernelSpec(
            name="three-letter-alternating",
            parameters={"restrict_histories": True},
            alphabet=letters,
            alpha=alpha,
            admissible_window=admissible,
        )

    def _tau_set(w: Window, v):
        """Consistent run lengths for x_{-1}=v; (finite_list, unbounded?)."""
        w = canon(w)
        if w and w[0] is not STAR and w[0] != v:
            return [], False
        taus = []
        for j in range(1, len(w) + 1):
            can_run = all(w[i] is STAR or w[i] == v for i in range(min(j, len(w))))
            if not can_run:
                break
            if j + 1 <= len(w):
                breakable = w[j] is STAR or w[j] != v
            else:
                breakable = True
            if breakable:
                taus.append(j)
        all_v = all(x is STAR or x == v for x in w)
        return taus, all_v

    def alpha(g, w: Window) -> float:
        if g not in letters:
            return 0.0
        w = canon(w)
        best = None
        taus, _ = _tau_set(w, g)  # larger taus only increase r: finite list suffices
        for t in taus:
            val = _r(t)
            best = val if best is None else min(best, val)
        for v in letters:
            if v == g:
                continue
            taus, unbounded = _tau_set(w, v)
            if unbounded:
                best = 0.0 if best is None else min(best, 0.0)
                continue
            for t in taus:
                val = 0.5 if t == 1 else (1.0 - r(t)) / 2.0
                best = val if best is None else min(best, val)
        return 0.0 if best is None else best

    return KernelSpec(
        name="three-letter-alternating",
        parameters={"restrict_histories": False},
        alphabet=letters,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# registry for the command line


def _parse_graph(label: str) -> dict:
    kind, _, rest = label.partition(":")
    if kind == "cycle":
        n = int(rest)
        if n < 3:
            raise ValueError("cycle needs >= 3 vertices")
        return {v: {(v - 1) % n, (v + 1) % n} for v in range(n)}
    if kind == "complete":
        n = int(rest)
        return {v: set(range(n)) - {v} for v in range(n)}
    if kind == "path":
        n = int(rest)
        return {v: {u for u in (v - 1, v + 1) if 0 <= u < n} for v in range(n)}
    if kind == "single":
        return {0: set()}
    raise ValueError(f"unknown graph {label!r}")


def _parse_floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


def build_kernel(name: str, params: dict) -> KernelSpec:
    """Build a gallery kernel from CLI-style string parameters."""
    p = dict(params)
    if name == "autoregressive":
        return make_autoregressive(
            parse_theta(p.pop("theta", "geometric:0.5")),
            float(p.pop("delta", 0.3)),
        )
    if name == "imitation":
        trunc = p.pop("truncation", None)
        return make_imitation(
            _parse_floats(p.pop("c", "0.3,0.2")),
            None if trunc in (None, "none") else int(trunc),
        )
    if name == "imitation-general":
        trunc = p.pop("truncation", None)
        fam = p.pop("f", "uniform")
        if fam != "uniform":
            raise ValueError("only the uniform lookback family is predefined")
        return make_imitation_general(
            _parse_floats(p.pop("c", "0.3,0.2")),
            uniform_lookback,
            None if trunc in (None, "none") else int(trunc),
        )
    if name == "ladder":
        trunc = p.pop("truncation", None)
        return make_ladder(
            _parse_floats(p.pop("c", "0.3,0.2")),
            None,
            None if trunc in (None, "none") else int(trunc),
        )
    if name == "cyclic4":
        return make_cyclic4(parse_theta(p.pop("theta", "geometric:0.5")))
    if name == "graph-walk":
        return make_graph_walk(
            _parse_graph(p.pop("graph", "cycle:4")),
            parse_theta(p.pop("theta", "geometric:0.5")),
        )
    if name == "flipflop":
        a, t = _parse_floats(p.pop("r", "0.5,0.5"))
        return make_flipflop(flipflop_r(a, t))
    if name == "three-letter-alternating":
        restrict = p.pop("restrict", "true").lower() != "false"
        return make_three_letter_alternating(restrict_histories=restrict)
    raise ValueError(f"unknown kernel {name!r}")


GALLERY = (
    "autoregressive",
    "imitation",
    "imitation-general",
    "ladder",
    "cyclic4",
    "graph-walk",
    "flipflop",
    "three-letter-alternating",
)
