"""Brute-force reference computations, written independently of the package internals.

They use plain Python loops and unshifted exponentials, so they are only
meant for small, well-scaled instances.
"""
import math

import numpy as np


def transition_probs_direct(x, coefs):
    """``coefs`` is a list of K-1 vectors for target states 2..K."""
    expo = [math.exp(sum(a * b for a, b in zip(c, x))) for c in coefs]
    denom = 1.0 + sum(expo)
    return [1.0 / denom] + [e / denom for e in expo]


def path_prob_direct(y, x, alpha_g, a=1, b=None):
    """Product of observed transition probabilities of one path, times a+1..b (1-based)."""
    T = len(y)
    b = T if b is None else b
    prod = 1.0
    for t in range(a, b):  # 0-based destination index t
        u = int(y[t - 1])
        probs = transition_probs_direct(x[t], [alpha_g[u - 1][v] for v in range(len(alpha_g[0]))])
        prod *= probs[int(y[t]) - 1]
    return prod


def mixture_enumeration(data, theta, a=1, b=None):
    """Per-individual mixture likelihoods and Bayes posteriors by explicit sums."""
    n, L = data.n, theta.L
    lik = np.zeros(n)
    post = np.zeros((n, L))
    for i in range(n):
        terms = [theta.pi[g] * path_prob_direct(data.y[i], data.x[i], theta.alpha[g], a, b)
                 for g in range(L)]
        total = sum(terms)
        lik[i] = total
        post[i] = [t / total for t in terms]
    return lik, post


def multinomial_objective_direct(coef, X, y, w):
    total = 0.0
    for xr, yr, wr in zip(X, y, w):
        probs = transition_probs_direct(xr, coef)
        total += wr * math.log(probs[int(yr) - 1])
    return total
