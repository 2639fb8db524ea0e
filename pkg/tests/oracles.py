"""Reference implementations used only by the tests.

Each oracle is written from the formula directly, with plain Python loops or
high-precision arithmetic, and shares no code with the package.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath


# --- window memory ----------------------------------------------------------------

class ReferenceWindow:
    """Window of improved entries kept as (seq, op, value) with explicit sequence
    numbers; ``entries`` is returned newest first."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.items = []  # insertion order, oldest first
        self.seq = 0

    def insert(self, op, value, improved=True):
        if not improved:
            return
        if len(self.items) == self.capacity:
            same = [it for it in self.items if it[1] == op]
            if same:
                victim = min(same, key=lambda it: it[0])
            else:
                worst = min(it[2] for it in self.items)
                victim = min((it for it in self.items if it[2] == worst), key=lambda it: it[0])
            self.items.remove(victim)
        self.items.append((self.seq, op, value))
        self.seq += 1

    @property
    def entries(self):
        return [(op, value) for _, op, value in reversed(self.items)]


# --- diversity / quality --------------------------------------------------------------

def dominance_counts(coords):
    """(dominates, dominated_by) counts by exhaustive pair enumeration."""
    def dom(a, b):
        return a[0] >= b[0] and a[1] >= b[1] and (a[0] > b[0] or a[1] > b[1])
    n = len(coords)
    wins = [sum(dom(coords[a], coords[b]) for b in range(n) if b != a) for a in range(n)]
    losses = [sum(dom(coords[b], coords[a]) for b in range(n) if b != a) for a in range(n)]
    return wins, losses


def compass_projection(coords, theta_deg):
    """High-precision projections before the minimum shift."""
    mpmath.mp.dps = 50
    theta = mpmath.radians(theta_deg)
    out = []
    for div, qual in coords:
        div, qual = mpmath.mpf(div), mpmath.mpf(qual)
        if div == 0:
            # One-sided limit of atan(qual / div) as div -> 0+.
            alpha = mpmath.sign(qual) * mpmath.pi / 2 - theta
        else:
            alpha = mpmath.atan(qual / div) - theta
        out.append(mpmath.sqrt(div ** 2 + qual ** 2) * mpmath.cos(alpha))
    return out


# --- rank rewards ------------------------------------------------------------------------

def rank_weights(values, capacity, decay):
    """Per-entry weight D^r (W - r); tied values share the average over their ranks."""
    order = sorted(range(len(values)), key=lambda i: -values[i])
    weights = [None] * len(values)
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and values[order[end + 1]] == values[order[pos]]:
            end += 1
        ranks = range(pos + 1, end + 2)
        w = sum(Fraction(decay) ** r * (capacity - r) for r in ranks) / len(ranks)
        for i in order[pos:end + 1]:
            weights[i] = w
        pos = end + 1
    return weights, order


def sum_of_rank(values, ops, capacity, decay, op):
    weights, _ = rank_weights(values, capacity, decay)
    total = sum(weights)
    own = sum(w for w, o in zip(weights, ops) if o == op)
    return own / total if total else Fraction(0)


def auc(values, ops, capacity, decay, op):
    """Area under the rank curve from its vertex list (shoelace on a closed polygon)."""
    weights, order = rank_weights(values, capacity, decay)
    pts = [(Fraction(0), Fraction(0))]
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and values[order[end + 1]] == values[order[pos]]:
            end += 1
        group = order[pos:end + 1]
        dx = sum(weights[i] for i in group if ops[i] != op)
        dy = sum(weights[i] for i in group if ops[i] == op)
        x, y = pts[-1]
        pts.append((x + dx, y + dy))
        pos = end + 1
    width, height = pts[-1]
    if height == 0:
        return Fraction(0)
    if width == 0:
        return Fraction(1)
    # Close the polygon along the x axis and apply the shoelace formula.
    poly = pts + [(width, Fraction(0))]
    area = Fraction(0)
    for (x1, y1), (x2, y2) in zip(poly, poly[1:] + poly[:1]):
        area += x1 * y2 - x2 * y1
    return abs(area) / 2 / (width * height)


# --- quality ---------------------------------------------------------------------------

def ucb(reward, c, n_op, n_total):
    mpmath.mp.dps = 50
    return reward + c * mpmath.sqrt(mpmath.log(n_total) / n_op)


def bellman_neumann(target, prob, gamma, terms=400):
    """q = sum_k (gamma P)^k q' with every row of P equal to ``prob``."""
    mpmath.mp.dps = 40
    k = len(target)
    P = mpmath.matrix([[prob[j] for j in range(k)] for _ in range(k)])
    term = mpmath.matrix([[v] for v in target])
    acc = term.copy()
    for _ in range(terms):
        term = gamma * (P * term)
        acc += term
    return [acc[i] for i in range(k)]


# --- post-processing ----------------------------------------------------------------------

def ecdf_pairs(hit_table, budgets):
    """hit_table: list (per run) of lists (per target) of evals or None."""
    total = sum(len(row) for row in hit_table)
    out = []
    for b in budgets:
        solved = sum(1 for row in hit_table for h in row if h is not None and h <= b)
        out.append(Fraction(solved, total))
    return out


def art_reference(trials):
    """trials: list of (success: bool, evals). Failures count their budget."""
    succ = [e for ok, e in trials if ok]
    if not succ:
        return math.inf
    return Fraction(sum(e for _, e in trials), len(succ))
