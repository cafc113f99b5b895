"""Pure-Python scoring kernels.

Reference implementation for the compiled ``_kernels`` module. Both must
perform the same floating-point operations in the same order so that the
two backends agree bit for bit.
"""


def violation_terms(values, tau):
    out = []
    for v in values:
        if v > tau:
            out.append(1.0 - tau / v)
        else:
            out.append(0.0)
    return out


def violation_score(values, tau):
    n = len(values)
    acc = 0.0
    for v in values:
        if v > tau:
            acc += 1.0 - tau / v
    return acc / n


def weighted_total(scores, weights):
    acc = 0.0
    for i in range(len(scores)):
        acc += weights[i] * scores[i]
    return acc


def window_sum(values, lo, hi):
    acc = 0.0
    for i in range(lo, hi):
        acc += values[i]
    return acc


def count_above(values, tau):
    n = 0
    for v in values:
        if v > tau:
            n += 1
    return n
