"""Direct-sweep reference for the coupled backward sampler.

This is the obvious-by-construction form: every round snapshots the whole
tableau, rebuilds every window's left context from scratch, and sweeps all
windows newest-first.  It is quadratic-ish in the number of rounds and
exists only as a test oracle: the production sampler must stay
bit-identical to it (symbols, stopping map, round and uniform counts, and
every intermediate tableau snapshot).
"""

from perfectsim.backward import MaxRoundsExceeded, SimulationTableau, StoppingRecord
from perfectsim.coalescence import prepare_coalescence
from perfectsim.kernels import STAR, KernelContractViolation, _scan, _scan_increment
from perfectsim.streams import uniform_at


def run_algorithm2_ref(
    kernel,
    k,
    key,
    max_rounds=10**4,
    plan=None,
    nhat_max=8,
    n0_max=64,
    uniforms=None,
    trace=None,
):
    if k < 0:
        raise ValueError("k >= 0 required")
    if plan is None:
        plan = prepare_coalescence(kernel, nhat_max, n0_max)
    if uniforms is None:
        uniforms = lambda t, pid: uniform_at(key.at(t, pid))
    nhat, n0 = plan.nhat, plan.n0
    C = plan.analysis.states
    idx = plan.index

    def l(z):
        return -(z + 1) * n0 + 1

    def r(z):
        return -z * n0

    temp = {}
    thr = {}
    ucache = {}
    ttil = {}
    traj = {}
    first_done = {}

    def _u(t, pid):
        kk = (t, pid)
        if kk not in ucache:
            ucache[kk] = uniforms(t, pid)
        return ucache[kk]

    n = 0
    while True:
        if n > max_rounds:
            raise MaxRoundsExceeded(
                f"no coalescence within {max_rounds} windows",
                SimulationTableau(dict(temp), n - 1, -k, 0),
            )
        prev = dict(temp)

        for a in C:
            pid = idx[a]
            tvals = {}
            for t in range(l(n), r(n) + 1):
                ctx = tuple(tvals[j][0] for j in range(t - 1, l(n) - 1, -1)) + a
                tvals[t] = _scan(kernel, _u(t, pid), ctx)
            traj[(n, pid)] = tvals
        for t in range(l(n), r(n) + 1):
            syms = {traj[(n, idx[a])][t][0] for a in C}
            if len(syms) == 1 and STAR not in syms:
                temp[t] = syms.pop()
                ttil[t] = -n
            else:
                temp[t] = STAR

        for z in range(n - 1, -1, -1):
            b = tuple(temp[j] for j in range(l(z) - 1, l(z) - nhat - 1, -1))
            if any(x is STAR for x in b):
                continue
            if b not in idx:
                raise KernelContractViolation(
                    f"{kernel.name}: completed context {b!r} is not an "
                    "admissible window"
                )
            pid = idx[b]
            first = z not in first_done
            if first:
                first_done[z] = n
            for t in range(l(z), r(z) + 1):
                if temp[t] is not STAR:
                    continue
                u = _u(t, pid)
                if first:
                    sym0, acc0 = traj[(z, pid)][t]
                    if sym0 is not STAR:
                        temp[t] = sym0
                        ttil[t] = -n
                        continue
                    base = acc0
                    w_old = (
                        tuple(
                            traj[(z, pid)][j][0] for j in range(t - 1, l(z) - 1, -1)
                        )
                        + b
                    )
                else:
                    base = thr[t]
                    w_old = tuple(prev[j] for j in range(t - 1, l(n - 1) - 1, -1))
                assert u >= base
                w_new = tuple(temp[j] for j in range(t - 1, l(n) - 1, -1))
                sym, acc = _scan_increment(kernel, u, w_new, w_old, base)
                if sym is STAR:
                    thr[t] = acc
                else:
                    temp[t] = sym
                    ttil[t] = -n

        if trace is not None:
            trace(n, dict(temp))
        if all(temp.get(t, STAR) is not STAR for t in range(-k, 1)):
            record = StoppingRecord(
                T={t: ttil[t] for t in range(-k, 1)},
                rounds_used=n,
                uniforms_consumed=len(ucache),
            )
            return [temp[t] for t in range(-k, 1)], record
        n += 1
