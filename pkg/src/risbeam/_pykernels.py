"""Pure numpy implementation of the inner loops.

Mirrors ``_ckernels.pyx`` operation for operation, including the order of
every floating-point reduction, so both backends produce identical bits.
Reductions over classes are plain left-to-right loops for that reason
(``ndarray.sum`` uses pairwise summation).
"""

import numpy as np

BACKEND = "python"


def posterior_update_into(prior, X, labels, action, y, eps_floor, out, skip=-1):
    Nc = prior.shape[0]
    d = X[:, action] - y
    w = 1.0 / (d * d + eps_floor)
    counts = np.bincount(labels, minlength=Nc)
    if skip >= 0:
        # adding +0.0 leaves the running sums bit-identical to skipping the row
        w[skip] = 0.0
        counts[labels[skip]] -= 1
    lik = np.bincount(labels, weights=w, minlength=Nc)
    lik[counts == 0] = eps_floor
    p = prior * lik
    total = 0.0
    for v in p.tolist():
        total += v
    np.divide(p, total, out=out)


def _argmax(row, used=None):
    best = -1
    bv = 0.0
    for i in range(len(row)):
        if used is not None and used[i]:
            continue
        if best < 0 or row[i] > bv:
            bv = row[i]
            best = i
    return best, bv


def project(b, protos, terminal_mask, terminal_of_class, tau):
    c, top = _argmax(b.tolist())
    if top > tau:
        return int(terminal_of_class[c])
    acc = np.zeros(protos.shape[0])
    for k in range(protos.shape[1]):
        diff = b[k] - protos[:, k]
        acc += diff * diff
    acc[terminal_mask.astype(bool)] = np.inf
    return int(np.argmin(acc))


def _nth_free(used, j):
    for a in range(len(used)):
        if not used[a]:
            if j == 0:
                return a
            j -= 1
    return -1


def train_epoch(
    Q, X, labels, protos, terminal_mask, terminal_of_class, init_index,
    tau, eps_floor, alpha, epsilon, order, r_draws, u_draws, max_L,
    lengths_out, reached_out, leave_one_out=True, no_repeat=True,
):
    Nc = protos.shape[1]
    Np = Q.shape[1]
    uniform = protos[init_index]
    b = np.empty(Nc)
    nxt = np.empty(Nc)
    used = [False] * Np
    for e in range(order.shape[0]):
        k = int(order[e])
        b[:] = uniform
        s = init_index
        length = 0
        reached = 0
        n_used = 0
        for a in range(Np):
            used[a] = False
        for step in range(max_L):
            if no_repeat and n_used == Np:
                for a in range(Np):
                    used[a] = False
                n_used = 0
            mask = used if no_repeat else None
            if r_draws[e, step] > epsilon:
                a, _ = _argmax(Q[s].tolist(), mask)
            else:
                n_free = Np - n_used if no_repeat else Np
                j = min(int(u_draws[e, step] * n_free), n_free - 1)
                a = _nth_free(used, j) if no_repeat else j
            if no_repeat:
                used[a] = True
                n_used += 1
            posterior_update_into(b, X, labels, a, X[k, a], eps_floor, nxt, k if leave_one_out else -1)
            b, nxt = nxt, b
            s_next = project(b, protos, terminal_mask, terminal_of_class, tau)
            # bootstrap from the action that would actually be taken next
            nmask = mask if no_repeat and n_used < Np else None
            _, best_next = _argmax(Q[s_next].tolist(), nmask)
            Q[s, a] = (1.0 - alpha) * Q[s, a] + alpha * (-1.0 + best_next)
            length += 1
            s = s_next
            if terminal_mask[s]:
                reached = 1
                break
        lengths_out[e] = length
        reached_out[e] = reached
