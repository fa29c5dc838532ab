"""Simple and square-root-biased random walks.

Return probabilities come from three independent routes:

* distribution push on an explicit ball (:func:`exact_return`),
* push over orbit classes of the root stabiliser (:func:`lumped_return`), which
  reaches return times far beyond any ball that fits in memory,
* first-passage generating functions for the tree families
  (:func:`tree_return_series`), used as an oracle for the other two.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable

import numpy as np
from scipy import sparse

from .families import Family, OrientedTree, UnimodularTree
from .rng import stream
from .truncation import FrontierError, Truncation
from .weights import LogWeight

KINDS = ("srw", "sqrtw")


def step_prob(kind: str, ratio: Fraction, degree: int, sqrt_degree: float) -> float:
    if kind == "srw":
        return 1.0 / degree
    if kind == "sqrtw":
        return math.sqrt(ratio) / sqrt_degree
    raise ValueError(f"walk kind must be one of {KINDS}, got {kind!r}")


@dataclass
class Kernel:
    """Transition rows for interior vertices of a truncation.

    ``monomial[v][i]`` is the exact numerator of entry ``i`` (the square root of
    the neighbour ratio for the biased walk, one for the simple walk); every
    entry equals ``monomial / denominator``.
    """

    t: Truncation
    kind: str
    denominator: float
    targets: dict[int, list[int]]
    probs: dict[int, list[float]]
    monomial: dict[int, list[LogWeight]]
    ratios: dict[int, list[Fraction]]

    def row(self, v: int) -> list[tuple[int, float]]:
        if v not in self.targets:
            raise FrontierError(f"vertex {v} is on the frontier; its row is not defined")
        return list(zip(self.targets[v], self.probs[v]))

    @property
    def matrix(self) -> sparse.csr_matrix:
        """Row-stochastic matrix on the ball; frontier rows are zero (absorbing loss)."""
        rows, cols, vals = [], [], []
        for v, ts in self.targets.items():
            rows.extend([v] * len(ts))
            cols.extend(ts)
            vals.extend(self.probs[v])
        n = self.t.n
        return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _kernel(t: Truncation, kind: str) -> Kernel:
    fam = t.family
    d = fam.degree
    den = float(d) if kind == "srw" else fam.sqrt_degree()
    targets, probs, mono, ratios = {}, {}, {}, {}
    for v in t.interior.tolist():
        row = t.rows[v]
        targets[v] = [j for j, _, _ in row]
        probs[v] = [step_prob(kind, q, d, den) for _, _, q in row]
        ratios[v] = [q for _, _, q in row]
        if kind == "srw":
            mono[v] = [LogWeight() for _ in row]
        else:
            mono[v] = [LogWeight.from_ratio(q).sqrt() for _, _, q in row]
    return Kernel(t, kind, den, targets, probs, mono, ratios)


def srw_kernel(t: Truncation) -> Kernel:
    return _kernel(t, "srw")


def sqrt_biased_kernel(t: Truncation) -> Kernel:
    return _kernel(t, "sqrtw")


def kernel(t: Truncation, kind: str) -> Kernel:
    return _kernel(t, kind)


def row_sum_errors(k: Kernel) -> np.ndarray:
    return np.array([abs(math.fsum(p) - 1.0) for p in k.probs.values()])


def reversibility_errors(k: Kernel) -> np.ndarray:
    """Relative defect of ``w(x) p(x,y) = w(y) p(y,x)`` over interior edges."""
    lw = k.t.log_weights
    out = []
    for x, ts in k.targets.items():
        for y, pxy in zip(ts, k.probs[x]):
            if y not in k.targets:
                continue
            pyx = sum(p for z, p in zip(k.targets[y], k.probs[y]) if z == x)
            lhs = pxy
            rhs = math.exp(lw[y] - lw[x]) * pyx
            out.append(abs(lhs - rhs) / max(lhs, rhs))
    return np.array(out)


def log_weight_step_dist(k: Kernel, v: int) -> dict[Fraction, float]:
    """Distribution of the weight ratio of one step from ``v``.

    Keys are exact ratios; ``ratio`` and ``1/ratio`` are the increments
    ``+log ratio`` and ``-log ratio`` of the log-weight process.
    """
    if v not in k.targets:
        raise FrontierError(f"vertex {v} is on the frontier")
    out: dict[Fraction, float] = defaultdict(float)
    for q, p in zip(k.ratios[v], k.probs[v]):
        out[q] += p
    return dict(out)


def step_asymmetry(dist: dict[Fraction, float]) -> float:
    return max((abs(p - dist.get(1 / q, 0.0)) for q, p in dist.items()), default=0.0)


# -- return probabilities -----------------------------------------------------------


@dataclass
class ReturnTable:
    """``p[k] = p_k(o, o)`` for ``k = 0..N``."""

    kind: str
    p: np.ndarray

    @property
    def nmax(self) -> int:
        return (len(self.p) - 1) // 2

    def rho_hat(self, n: int) -> float:
        """``p_{2n}(o,o) ** (1/(2n))``: a lower bound on the spectral radius."""
        if n < 1:
            raise ValueError("rho_hat needs n >= 1")
        return float(self.p[2 * n]) ** (1.0 / (2 * n))

    def rho_hats(self) -> np.ndarray:
        return np.array([self.rho_hat(n) for n in range(1, self.nmax + 1)])

    def to_csv(self) -> str:
        lines = ["n,p_2n,rho_hat,kind"]
        for n in range(1, self.nmax + 1):
            lines.append(f"{n},{self.p[2 * n]:.17g},{self.rho_hat(n):.17g},{self.kind}")
        return "\n".join(lines) + "\n"


def exact_return(t: Truncation, k: Kernel, n: int) -> ReturnTable:
    """Push the walk's distribution ``n`` steps on the ball.

    Exact whenever ``2 * radius > n``: a walk that touches the frontier cannot
    be back at the root by time ``n``.
    """
    if 2 * t.radius <= n:
        raise ValueError(f"radius {t.radius} too small for return times up to {n}")
    pt = k.matrix.T.tocsr()
    x = np.zeros(t.n)
    x[0] = 1.0
    out = [1.0]
    for _ in range(n):
        x = pt @ x
        out.append(x[0])
    return ReturnTable(k.kind, np.array(out))


def _class_chain(family: Family, kind: str, depth: int):
    """Orbit classes within ``depth`` of the root and their lumped transitions."""
    d = family.degree
    den = float(d) if kind == "srw" else family.sqrt_degree()
    root = family.root()
    keys: dict[Hashable, int] = {family.orbit_key(root): 0}
    reps = [root]
    level = [0]
    rows, cols, vals = [], [], []
    head = 0
    while head < len(reps):
        rec = reps[head]
        if level[head] < depth:
            acc: dict[int, float] = defaultdict(float)
            for u, _, q in family.neighbors(rec):
                key = family.orbit_key(u)
                j = keys.get(key)
                if j is None:
                    j = keys[key] = len(reps)
                    reps.append(u)
                    level.append(level[head] + 1)
                acc[j] += step_prob(kind, q, d, den)
            for j, p in acc.items():
                rows.append(head)
                cols.append(j)
                vals.append(p)
        head += 1
    m = len(reps)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsr(), np.array(level)


def lumped_return(family: Family, kind: str, n: int) -> ReturnTable:
    """Return probabilities up to time ``n`` via orbit-class lumping."""
    depth = n // 2 + 1
    P, _ = _class_chain(family, kind, depth)
    pt = P.T.tocsr()
    x = np.zeros(P.shape[0])
    x[0] = 1.0
    out = [1.0]
    for _ in range(n):
        x = pt @ x
        out.append(x[0])
    return ReturnTable(kind, np.array(out))


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)[: len(a)]


def _series_inv_one_minus(h: np.ndarray) -> np.ndarray:
    """Coefficients of ``1 / (1 - h)`` for ``h`` with zero constant term."""
    g = np.zeros_like(h)
    g[0] = 1.0
    for k in range(1, len(h)):
        g[k] = np.dot(h[1:k + 1], g[k - 1::-1][:k])
    return g


def tree_return_series(family: Family, kind: str, n: int) -> ReturnTable:
    """Return probabilities on tree families from first-passage generating functions."""
    N = n + 1
    z = np.zeros(N)
    z[1] = 1.0
    if isinstance(family, UnimodularTree):
        a = 1.0 / family.d
        f = np.zeros(N)
        for _ in range(N):
            f = a * z + (family.d - 1) * a * _series_mul(z, _series_mul(f, f))
        h = family.d * a * _series_mul(z, f)
    elif isinstance(family, OrientedTree):
        r, s = family.r, family.s
        den = float(r + s) if kind == "srw" else family.sqrt_degree()
        up, dn = Fraction(s, r), Fraction(r, s)
        a = step_prob(kind, up, r + s, den)
        b = step_prob(kind, dn, r + s, den)
        fu = np.zeros(N)
        fd = np.zeros(N)
        for _ in range(N):
            fu_new = a * z + _series_mul(z, _series_mul((r - 1) * a * fd + s * b * fu, fu))
            fd_new = b * z + _series_mul(z, _series_mul(r * a * fd + (s - 1) * b * fu, fd))
            fu, fd = fu_new, fd_new
        h = _series_mul(z, r * a * fd + s * b * fu)
    else:
        raise TypeError(f"{family} is not a tree family")
    return ReturnTable(kind, _series_inv_one_minus(h))


def return_probabilities(family: Family, kind: str, n: int) -> ReturnTable:
    """Generating functions on trees, where lumping gains nothing; lumping elsewhere."""
    if isinstance(family, (UnimodularTree, OrientedTree)):
        return tree_return_series(family, kind, n)
    return lumped_return(family, kind, n)


def rho_estimate(table: ReturnTable) -> float:
    """Finite-time lower bound ``rho_hat_N`` at the largest available N."""
    return table.rho_hat(table.nmax)


def is_nondecreasing(xs: np.ndarray, slack: float = 1e-9) -> bool:
    return bool(np.all(np.diff(xs) >= -slack))


def monotone_domination_check(family: Family, n_max: int, tol: float = 0.02) -> dict:
    """Side-by-side return probabilities of both walks and the rho-hat comparison."""
    srw = return_probabilities(family, "srw", 2 * n_max)
    sqw = return_probabilities(family, "sqrtw", 2 * n_max)
    r, rw = srw.rho_hat(n_max), sqw.rho_hat(n_max)
    return {
        "family": str(family),
        "n_max": n_max,
        "p2n_srw": srw.p[2::2].tolist(),
        "p2n_sqrtw": sqw.p[2::2].tolist(),
        "rho_hat_srw": srw.rho_hats().tolist(),
        "rho_hat_sqrtw": sqw.rho_hats().tolist(),
        "passed": rw >= r - tol,
    }


def kesten_consistency(table: ReturnTable, phi_hat: float, tol: float = 0.05) -> dict:
    """Check that some rho_hat_n reaches ``1 - phi_hat - tol``.

    The spectral bound gives ``rho >= 1 - Phi_E >= 1 - phi_hat``; since
    ``rho_hat_n`` increases to ``rho`` this must eventually hold.
    """
    hats = table.rho_hats()
    need = 1.0 - phi_hat - tol
    return {"phi_hat": phi_hat, "needed": need, "best": float(hats.max()) if len(hats) else 0.0,
            "passed": bool(need <= 0 or (len(hats) and hats.max() >= need))}


# -- Monte Carlo ---------------------------------------------------------------------


def simulate_returns(k: Kernel, steps: int, walkers: int, seed: int) -> int:
    """Number of walkers at the root after exactly ``steps`` steps."""
    t = k.t
    if t.radius <= steps:
        raise ValueError("walkers could leave the ball")
    d = t.degree
    nbr = np.zeros((t.n, d), dtype=np.int64)
    cum = np.ones((t.n, d))
    for v, ts in k.targets.items():
        nbr[v] = ts
        c = np.cumsum(k.probs[v])
        cum[v] = c / c[-1]
    rng = stream(seed, f"walk:{k.kind}")
    pos = np.zeros(walkers, dtype=np.int64)
    for _ in range(steps):
        u = rng.random(walkers)
        choice = (cum[pos] <= u[:, None]).sum(axis=1)
        pos = nbr[pos, np.minimum(choice, d - 1)]
    return int(np.count_nonzero(pos == 0))
