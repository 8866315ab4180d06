"""Independent reference constructions used only by the tests."""

import math

import numpy as np


def brute_force_hamiltonian(m_cut, w1, w2, l1, l2, b1, b2):
    """Dense H built state by state from the ladder rules, no matrix products."""
    d = m_cut + 1
    h = np.zeros((d * d, d * d), dtype=complex)

    def k(n1, n2):
        return n1 * d + n2

    def add(n1o, n2o, n1, n2, amp):
        if 0 <= n1o <= m_cut and 0 <= n2o <= m_cut:
            h[k(n1o, n2o), k(n1, n2)] += amp

    for n1 in range(d):
        for n2 in range(d):
            add(n1, n2, n1, n2, w1 * (n1 + 0.5) + w2 * (n2 + 0.5)
                + b1 * n1 * (n1 - 1) + b2 * n2 * (n2 - 1))
            # -i l1 a2^dag a1
            add(n1 - 1, n2 + 1, n1, n2, -1j * l1 * math.sqrt(n1 * (n2 + 1)))
            # +i l1 a1^dag a2
            add(n1 + 1, n2 - 1, n1, n2, 1j * l1 * math.sqrt((n1 + 1) * n2))
            # -i l2 a1 a2
            add(n1 - 1, n2 - 1, n1, n2, -1j * l2 * math.sqrt(n1 * n2))
            # +i l2 a1^dag a2^dag
            add(n1 + 1, n2 + 1, n1, n2, 1j * l2 * math.sqrt((n1 + 1) * (n2 + 1)))
    return h


def real_form_hamiltonian(m_cut, w1, w2, l1, l2, b1, b2):
    """H after a1 -> i a1: l1 (a2^dag a1 + a1^dag a2) + l2 (a1 a2 + a1^dag a2^dag)."""
    d = m_cut + 1
    h = np.zeros((d * d, d * d))
    for n1 in range(d):
        for n2 in range(d):
            i = n1 * d + n2
            h[i, i] = w1 * (n1 + 0.5) + w2 * (n2 + 0.5) + b1 * n1 * (n1 - 1) + b2 * n2 * (n2 - 1)
            if n1 > 0 and n2 < m_cut:
                j = (n1 - 1) * d + n2 + 1
                h[j, i] += l1 * math.sqrt(n1 * (n2 + 1))
                h[i, j] += l1 * math.sqrt(n1 * (n2 + 1))
            if n1 > 0 and n2 > 0:
                j = (n1 - 1) * d + n2 - 1
                h[j, i] += l2 * math.sqrt(n1 * n2)
                h[i, j] += l2 * math.sqrt(n1 * n2)
    return h


def poisson_amplitudes(alpha, d):
    return np.array([math.exp(-abs(alpha) ** 2 / 2) * alpha**n / math.sqrt(math.factorial(n))
                     for n in range(d)], dtype=complex)


def centered_difference(f, t, h):
    return (f(t + h) - f(t - h)) / (2.0 * h)
