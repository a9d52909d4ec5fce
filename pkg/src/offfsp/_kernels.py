"""Compiled inner loops for tabular learning and weighted resampling."""

import numba
import numpy as np


@numba.njit(cache=True)
def build_alias(p):
    """Vose alias table for the distribution ``p`` (must sum to 1)."""
    n = len(p)
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    scaled = p * n
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    for k in range(nl):
        prob[large[k]] = 1.0
        alias[large[k]] = large[k]
    fallback = 0
    for i in range(n):
        if p[i] > 0:
            fallback = i
            break
    for k in range(ns):
        # leftovers are numerically ~1; zero-mass ones must never be drawn
        s = small[k]
        if p[s] > 0:
            prob[s] = 1.0
            alias[s] = s
        else:
            prob[s] = 0.0
            alias[s] = fallback
    return prob, alias


@numba.njit(cache=True)
def sample_alias(prob, alias, uniforms):
    n = len(prob)
    out = np.empty(len(uniforms), dtype=np.int64)
    for k in range(len(uniforms)):
        x = uniforms[k] * n
        i = int(x)
        if i >= n:
            i = n - 1
        out[k] = i if x - i < prob[i] else alias[i]
    return out


@numba.njit(cache=True)
def batch_update(q, q_target, draws, mult, sa, state, reward, next_state, offset, n_actions, boot_mask, gamma, lr, alpha, work):
    """One minibatch step on a tabular Q.

    Tuple ``draws[k]`` enters the batch ``mult[k]`` times. An entry hit by
    ``c`` tuples moves as ``c`` sequential TD updates toward the batch-mean
    target would, Q += (1 - (1 - lr)^c) * (mean target - Q), which is stable
    for any lr <= 1. If ``alpha > 0`` the conservative penalty's gradient,
    summed over the batch and taken at the pre-step table, is added.
    Bootstrapping maximizes over actions allowed by ``boot_mask`` (all legal
    ones if none is). ``work`` comes from :func:`make_work` and is left zeroed.
    """
    target_sum, count_sa, penalty, mark_sa, touched_sa, count_s, touched_s = work
    nt = 0
    ns_t = 0
    for k in range(len(draws)):
        c = mult[k]
        if c == 0:
            continue
        j = draws[k]
        ns = next_state[j]
        boot = 0.0
        if ns >= 0:
            o = offset[ns]
            m = n_actions[ns]
            best = -np.inf
            for a in range(m):
                if boot_mask[o + a] and q_target[o + a] > best:
                    best = q_target[o + a]
            if best == -np.inf:
                for a in range(m):
                    if q_target[o + a] > best:
                        best = q_target[o + a]
            boot = best
        i = sa[j]
        if mark_sa[i] == 0:
            mark_sa[i] = 1
            touched_sa[nt] = i
            nt += 1
        target_sum[i] += c * (reward[j] + gamma * boot)
        count_sa[i] += c
        if alpha > 0.0:
            penalty[i] += c * alpha
            s = state[j]
            if count_s[s] == 0:
                touched_s[ns_t] = s
                ns_t += 1
            count_s[s] += c
    for t in range(ns_t):
        s = touched_s[t]
        o = offset[s]
        m = n_actions[s]
        mx = q[o]
        for a in range(1, m):
            if q[o + a] > mx:
                mx = q[o + a]
        z = 0.0
        for a in range(m):
            z += np.exp(q[o + a] - mx)
        c = alpha * count_s[s] / z
        for a in range(m):
            i = o + a
            penalty[i] -= c * np.exp(q[i] - mx)
            if mark_sa[i] == 0:
                mark_sa[i] = 1
                touched_sa[nt] = i
                nt += 1
        count_s[s] = 0
    for t in range(nt):
        i = touched_sa[t]
        c = count_sa[i]
        step = 0.0
        if c > 0:
            step = (1.0 - (1.0 - lr) ** c) * (target_sum[i] / c - q[i])
        q[i] += step + lr * penalty[i]
        target_sum[i] = 0.0
        count_sa[i] = 0
        penalty[i] = 0.0
        mark_sa[i] = 0


def make_work(n_sa, n_states):
    return (
        np.zeros(n_sa),
        np.zeros(n_sa, dtype=np.int64),
        np.zeros(n_sa),
        np.zeros(n_sa, dtype=np.int64),
        np.zeros(n_sa, dtype=np.int64),
        np.zeros(n_states, dtype=np.int64),
        np.zeros(n_states, dtype=np.int64),
    )


@numba.njit(cache=True)
def train(
    q, q_target, probs, alias_prob, alias_idx, seed, batch_size, steps, step0, target_every,
    sa, state, reward, next_state, offset, n_actions, boot_mask, gamma, lr, alpha, work,
):
    """``steps`` resample-and-update cycles over tuples drawn with probabilities ``probs``.

    Small tuple sets draw the batch's multiplicities directly (a multinomial
    via conditional binomials); large ones draw tuples one at a time from the
    alias table. The target table refreshes every ``target_every`` global
    steps.
    """
    np.random.seed(seed)
    n = len(probs)
    direct = n <= batch_size
    if direct:
        draws = np.arange(n)
        mult = np.zeros(n, dtype=np.int64)
    else:
        draws = np.empty(batch_size, dtype=np.int64)
        mult = np.ones(batch_size, dtype=np.int64)
    for s in range(steps):
        if (step0 + s) % target_every == 0:
            q_target[:] = q
        if direct:
            left = batch_size
            mass = 1.0
            for g in range(n):
                if left == 0 or mass <= 0.0:
                    mult[g] = 0
                    continue
                p = probs[g] / mass
                c = left if (p >= 1.0 or g == n - 1) else np.random.binomial(left, p)
                mult[g] = c
                left -= c
                mass -= probs[g]
        else:
            for k in range(batch_size):
                x = np.random.random() * n
                i = int(x)
                if i >= n:
                    i = n - 1
                draws[k] = i if x - i < alias_prob[i] else alias_idx[i]
        batch_update(q, q_target, draws, mult, sa, state, reward, next_state, offset, n_actions, boot_mask, gamma, lr, alpha, work)
