"""Independent reference computations used by the test-suite.

Everything here works with explicit 4x4 matrices and density matrices,
never with the package's functional operators.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

PAIRS = [(0, 0), (0, 1), (1, 0), (1, 1)]


def ket(m, n):
    v = np.zeros(4)
    v[2 * m + n] = 1.0
    return v


def phi_vec(x, y):
    """Tensor product (|0> + (-1)^y|1>)(|0> + (-1)^x|1>)/2, built with np.kron."""
    first = np.array([1.0, (-1.0) ** y]) / np.sqrt(2)
    second = np.array([1.0, (-1.0) ** x]) / np.sqrt(2)
    return np.kron(first, second)


def U(m, n):
    k = ket(m, n)
    return np.eye(4) - 2 * np.outer(k, k)


def V(x, y):
    p = phi_vec(x, y)
    return 2 * np.outer(p, p) - np.eye(4)


def overlap_equal(a, b, tol=1e-12):
    return abs(np.vdot(a, b)) >= 1 - tol


def product(mats):
    out = np.eye(4)
    for m in mats:
        out = m @ out  # mats listed in application order
    return out


def xor_bits(strings):
    out = [0] * len(strings[0])
    for s in strings:
        for k, b in enumerate(s):
            out[k] ^= int(b)
    return out


# ---------------------------------------------------------------- ring oracle


def route_nodes(N, M, start):
    order = list(range(1, M + 1)) + [0]
    k = order.index(start)
    return order[k:] + order[:k]  # start first, excludes the return


def node_ops(session, node, initiator, t):
    """Elementary (m, n) reversals applied by ``node`` to state ``t``."""
    N = session.config.N
    ident = {0: [(0, 0)], 1: [(1, 0), (0, 1)]}
    if node == 0:
        return ident[int(session.tp_encoding_tag[t])]
    if node > N:
        return []
    p = session.parties[node]
    sel = int(p.encoding_tag[t]) ^ int(p.B[2 * t])
    if node == initiator:
        return ident[sel]
    return [(int(p.S[2 * t]), int(p.S[2 * t + 1]))] + ident[sel]


def eve_channel(rho, basis):
    vecs = [phi_vec(*w) for w in PAIRS] if basis == "X" else [ket(*w) for w in PAIRS]
    out = np.zeros((4, 4))
    for v in vecs:
        p = float(v @ rho @ v)
        out += p * np.outer(v, v)
    return out


def intercept_error_probability(session, initiator, t, edge, policy):
    """Exact probability that block t of K_initiator is wrong after one attack on ``edge``.

    Returns ``(state_set, probability)``; ``state_set`` is the set of the
    in-flight state Eve sees ('even' = Hadamard product state).
    """
    cfg = session.config
    nodes = route_nodes(cfg.N, cfg.M, initiator)
    a, b = edge
    cut = nodes.index(a) + 1
    before, after = nodes[:cut], nodes[cut:]
    if b == initiator:
        assert after == []
    p = session.parties[initiator]
    l = (int(p.L[2 * t]), int(p.L[2 * t + 1]))
    psi = phi_vec(*l)
    for node in before:
        psi = product([U(*o) for o in node_ops(session, node, initiator, t)]) @ psi
    kind = "even" if max(abs(phi_vec(*w) @ psi) for w in PAIRS) > 1 - 1e-9 else "odd"
    rho = np.outer(psi, psi)
    if policy == "always_x":
        rho = eve_channel(rho, "X")
    elif policy == "always_z":
        rho = eve_channel(rho, "Z")
    else:
        rho = 0.5 * eve_channel(rho, "X") + 0.5 * eve_channel(rho, "Z")
    rest = product([U(*o) for node in after for o in node_ops(session, node, initiator, t)])
    rho = rest @ rho @ rest.T
    C = xor_bits([[int(q.B[2 * t])] for q in session.parties.values()])[0]
    true_key = xor_bits([list(q.S) for q in session.parties.values()])
    k = (true_key[2 * t], true_key[2 * t + 1])
    s = (int(p.S[2 * t]), int(p.S[2 * t + 1]))
    if C == 0:
        w = (k[0] ^ s[0] ^ l[0], k[1] ^ s[1] ^ l[1])
        v = phi_vec(*w)
    else:
        w = (k[0] ^ s[0] ^ 1, k[1] ^ s[1] ^ 1)
        rho = V(*l) @ rho @ V(*l).T
        v = ket(*w)
    return kind, 1.0 - float(v @ rho @ v)


# ---------------------------------------------------------------- combinatorics


def single_flip_detection_probability(n_states, N, k_per_user, flipped_block):
    """P(detect) when one h_0 bit is flipped and ``k_per_user*N`` bits are sampled.

    Every user's block at the flipped position is uniform and independent;
    a sampled bit reveals nothing iff all N users agree on it
    (probability 2^(1-N)). The number of sampled bits inside the block is
    hypergeometric over the 2n key positions.
    """
    total = 2 * n_states
    draws = k_per_user * N
    agree = 2.0 ** (1 - N)
    p_miss = 0.0
    for j in range(0, 3):
        if j > draws:
            continue
        pj = comb(2, j) * comb(total - 2, draws - j) / comb(total, draws)
        p_miss += pj * agree**j
    return 1 - p_miss


def gram_rank(vectors, tol=1e-9):
    """Rank from the eigenvalues of the Gram matrix (independent of SVD)."""
    g = vectors.conj() @ vectors.T
    ev = np.linalg.eigvalsh((g + g.conj().T) / 2)
    return int(np.sum(ev > tol * max(1.0, ev.max())))


def all_bit_tuples(r):
    return list(itertools.product(PAIRS, repeat=r))
