"""Rejection sampler for non-intersecting Brownian bridges.

Each proposal is n independent Brownian bridges with variance T/n per unit
time, observed on a time grid.  The top n1 run from a1 to b1, the others
from a2 to b2 (labels are assigned by order, the joint law is symmetric
under relabelling).  Two acceptance rules are available.

``mode="grid"``
    accept when the paths are strictly ordered at every interior grid time.
    This is the grid-level approximation of the ensemble; it is biased
    towards paths that are too close, the more so the coarser the grid.

``mode="exact"`` (default)
    sample the law of the continuous-time non-intersecting ensemble at the
    grid times.  Between interior grid times a step is kept with the
    Karlin-McGregor probability det[p(x_i, y_j)] / prod p(x_i, y_i) that the
    bridges do not meet.  Paths sharing a start point have a first slice with
    density (Vandermonde) x (Gaussian), which is drawn exactly as scaled GOE
    eigenvalues.  Shared end points weight the last slice by a Vandermonde
    factor, handled by rejection against a fixed bound.  Interactions
    between the two groups during the first and last steps are dropped;
    they are of order exp(-(a1 - a2)^2 n / t_1).  Because the law does not
    depend on the grid, a coarse grid containing the times of interest is
    the efficient choice.

Bridges are advanced one grid step at a time and a proposal is dropped as
soon as it is rejected.

Randomness comes from numpy's counter-based Philox generator.  Samples are
produced in blocks of ``block`` accepted samples; block ``j`` draws from the
stream keyed by ``(seed, j)`` and keeps the first ``block`` accepted
proposals in draw order.  A fixed seed therefore reproduces the sample stream
bit for bit, and blocks can be generated independently.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PathEnsembleSample",
    "EnsembleSamples",
    "Histogram",
    "SamplerTimeout",
    "time_grid",
    "sample_ensemble",
    "acceptance_rate",
    "empirical_intensity",
    "empirical_pair_density",
    "samples_csv",
    "histogram_csv",
]

MAX_PATHS = 12
# bound on a scaled end-point gap; exceeding it has probability below 1e-25
_END_CAP = 12.0
_MASK64 = (1 << 64) - 1


class SamplerTimeout(RuntimeError):
    """Acceptance rate fell below the floor over a trial block."""

    def __init__(self, message, rate):
        super().__init__(message)
        self.rate = rate


@dataclass(frozen=True)
class PathEnsembleSample:
    """One accepted configuration; ``paths[i]`` is the i-th lowest path."""

    time_grid: np.ndarray
    paths: np.ndarray
    accepted: bool
    seed: int
    sample_id: int


class EnsembleSamples(list):
    """List of samples carrying the proposal statistics of the run."""

    def __init__(self, items, proposals, accepted_total, seed):
        super().__init__(items)
        self.proposals = proposals
        self.accepted_total = accepted_total
        self.seed = seed

    @property
    def acceptance_rate(self):
        return self.accepted_total / self.proposals if self.proposals else 0.0


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray
    counts: np.ndarray
    samples: int

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def density(self):
        return self.mass / self.widths

    @property
    def density_se(self):
        """Poisson standard error of the density per bin."""
        return np.sqrt(self.counts) / self.samples / self.widths


def time_grid(m=100):
    """Uniform grid with m+1 points on [0, 1]."""
    return np.linspace(0.0, 1.0, m + 1)


def _mode(mode):
    if mode not in ("exact", "grid"):
        raise ValueError("mode must be 'exact' or 'grid'")
    return mode == "exact"


def _setup(cfg, grid):
    n = int(cfg.n)
    if n > MAX_PATHS:
        raise ValueError(f"sampler supports n <= {MAX_PATHS}, got {n}")
    grid = np.asarray(time_grid() if grid is None else grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("time grid must start at 0 and end at 1")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    a1, a2, b1, b2 = (float(v) for v in (cfg.a1, cfg.a2, cfg.b1, cfg.b2))
    if a1 <= a2 or b1 <= b2:
        raise ValueError("group 1 must lie strictly above group 2 (a1 > a2, b1 > b2)")
    n1, n2 = int(cfg.n1), int(cfg.n2)
    # ascending order: group 2 occupies the lowest n2 slots
    start = np.array([a2] * n2 + [a1] * n1)
    end = np.array([b2] * n2 + [b1] * n1)
    var = float(cfg.T) / n
    groups = ((0, n2), (n2, n)) if n2 else ((0, n),)
    groups = tuple((lo, hi) for lo, hi in groups if hi > lo)
    return n, grid, start, end, var, groups


def _goe_eigenvalues(rng, size, g):
    """Ordered eigenvalues with density proportional to |Vandermonde| exp(-sum y^2/2)."""
    if g == 1:
        return rng.standard_normal((size, 1))
    A = rng.standard_normal((size, g, g))
    H = (A + A.transpose(0, 2, 1)) / 2
    i = np.arange(g)
    H[:, i, i] = A[:, i, i]
    return np.linalg.eigvalsh(H)


def _vandermonde(y):
    out = np.ones(y.shape[0])
    g = y.shape[1]
    for i in range(g):
        for j in range(i + 1, g):
            out *= y[:, j] - y[:, i]
    return out


def _km_ratio(X, Y, v):
    """Probability that bridges X -> Y over a step of variance v do not meet.

    This is det[p(X_i, Y_j)] / prod p(X_i, Y_i) (Karlin-McGregor) for
    strictly ordered X and Y.
    """
    d = X[:, :, None] - Y[:, None, :]
    diag = np.diagonal(d, axis1=1, axis2=2)
    E = np.exp(-(d * d - (diag * diag)[:, :, None]) / (2 * v))
    r = np.linalg.det(E)
    return np.where(np.isfinite(r), np.clip(r, 0.0, 1.0), 0.0)


def _batch(rng, size, grid, start, end, var, groups, exact):
    """Run ``size`` proposals; return the accepted paths in draw order."""
    m = len(grid) - 1
    n = len(start)
    if m < 2:
        raise ValueError("time grid needs at least one interior time")
    X = np.broadcast_to(start, (size, n)).copy()
    idx = np.arange(size)
    steps = []
    for k in range(m - 1):
        dt = grid[k + 1] - grid[k]
        rem = 1.0 - grid[k]
        sd = np.sqrt(var * dt * (1.0 - grid[k + 1]) / rem)
        if exact and k == 0:
            # coinciding starts: the first slice has density Vandermonde x Gaussian
            cols = [start[lo] + (end[lo] - start[lo]) * dt + sd * _goe_eigenvalues(rng, size, hi - lo)
                    for lo, hi in groups]
            X = np.concatenate(cols, axis=1)
            ok = np.all(X[:, 1:] > X[:, :-1], axis=1)
        else:
            Xn = X + (end - X) * (dt / rem) + sd * rng.standard_normal(X.shape)
            ok = np.all(Xn[:, 1:] > Xn[:, :-1], axis=1)
            if exact:
                ok &= rng.random(len(X)) < _km_ratio(X, Xn, var * dt)
            X = Xn
        if exact and k == m - 2:
            # coinciding end points weight the last slice by a Vandermonde factor
            h = np.sqrt(var * (grid[m] - grid[m - 1]))
            w, cap = np.ones(len(X)), 1.0
            for lo, hi in groups:
                g = hi - lo
                if g > 1:
                    w *= np.abs(_vandermonde((X[:, lo:hi] - end[lo]) / h))
                    cap *= _END_CAP ** (g * (g - 1) // 2)
            ok &= rng.random(len(X)) * cap < w
        X, idx = X[ok], idx[ok]
        steps.append((idx, X))
        if not len(idx):
            return np.empty((0, n, m + 1))
    out = np.empty((len(idx), n, m + 1))
    out[:, :, 0] = start
    out[:, :, -1] = end
    # survivors of step k are a sorted subset of those of every earlier step
    for k, (ik, Xk) in enumerate(steps):
        out[:, :, k + 1] = Xk[np.searchsorted(ik, idx)]
    return out


def _run_block(key, need, setup, exact, batch, min_rate, trial):
    rng = np.random.Generator(np.random.Philox(key=key))
    found, proposals, accepted = [], 0, 0
    while accepted < need:
        acc = _batch(rng, batch, *setup, exact)
        proposals += batch
        accepted += len(acc)
        found.append(acc)
        if proposals >= trial and accepted / proposals < min_rate:
            raise SamplerTimeout(
                f"acceptance rate {accepted / proposals:.3g} below {min_rate:g} "
                f"after {proposals} proposals", accepted / proposals)
    return np.concatenate(found)[:need], proposals, accepted


def sample_ensemble(cfg, grid=None, count=1, seed=0, mode="exact", block=256, batch=1 << 14,
                    min_rate=1e-6, trial=1 << 20):
    """Draw ``count`` accepted configurations of ``cfg`` observed on ``grid``.

    ``mode="exact"`` conditions on non-intersection in continuous time;
    ``mode="grid"`` only on strict ordering at the grid times.  Raises
    :class:`SamplerTimeout` when fewer than ``min_rate`` of at least ``trial``
    proposals in a block are accepted.
    """
    exact = _mode(mode)
    setup = _setup(cfg, grid)[1:]
    grid = setup[0]
    seed = int(seed) & _MASK64
    items, proposals, accepted_total = [], 0, 0
    for j in range(-(-count // block)):
        need = min(block, count - j * block)
        paths, p, a = _run_block([seed, j], need, setup, exact, batch, min_rate, trial)
        proposals += p
        accepted_total += a
        for i, P in enumerate(paths):
            items.append(PathEnsembleSample(grid, P, True, seed, j * block + i))
    return EnsembleSamples(items, proposals, accepted_total, seed)


def acceptance_rate(cfg, grid=None, proposals=100_000, seed=0, mode="exact", batch=1 << 14):
    """Fraction of ``proposals`` that are accepted (no timeout)."""
    exact = _mode(mode)
    setup = _setup(cfg, grid)[1:]
    rng = np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, 0]))
    done = acc = 0
    while done < proposals:
        size = min(batch, proposals - done)
        acc += len(_batch(rng, size, *setup, exact))
        done += size
    return acc / proposals


def _time_index(samples, t):
    if not samples:
        raise ValueError("need at least one accepted sample")
    grid = samples[0].time_grid
    hits = np.flatnonzero(np.abs(grid - float(t)) <= 1e-12)
    if not len(hits):
        raise ValueError(f"t={t} is not a grid time")
    return int(hits[0])


def empirical_intensity(samples, t, bins=40, range=None):
    """Histogram of all particle positions at grid time t, total mass n."""
    k = _time_index(samples, t)
    pos = np.concatenate([s.paths[:, k] for s in samples])
    counts, edges = np.histogram(pos, bins=bins, range=range)
    # particles outside an explicit range are dropped, so mass <= n then
    return Histogram(edges, counts / len(samples), counts, len(samples))


def empirical_pair_density(samples, t, edges):
    """Two-point density rho_2(x, y) at grid time t on a product of bins."""
    k = _time_index(samples, t)
    edges = np.asarray(edges, dtype=float)
    counts = np.zeros((len(edges) - 1, len(edges) - 1))
    for s in samples:
        x = s.paths[:, k]
        i, j = np.meshgrid(x, x, indexing="ij")
        off = ~np.eye(len(x), dtype=bool)
        h, _, _ = np.histogram2d(i[off], j[off], bins=[edges, edges])
        counts += h
    w = np.diff(edges)
    area = np.outer(w, w)
    return counts / len(samples) / area, np.sqrt(counts) / len(samples) / area


def samples_csv(samples):
    buf = io.StringIO()
    buf.write("sample_id,path_id,t,x\n")
    for s in samples:
        for p, row in enumerate(s.paths):
            for t, x in zip(s.time_grid, row):
                buf.write(f"{s.sample_id},{p},{t!r},{x!r}\n")
    return buf.getvalue()


def histogram_csv(hist):
    buf = io.StringIO()
    buf.write("bin_left,bin_right,mass\n")
    for lo, hi, m in zip(hist.edges[:-1], hist.edges[1:], hist.mass):
        buf.write(f"{float(lo)!r},{float(hi)!r},{float(m)!r}\n")
    return buf.getvalue()
