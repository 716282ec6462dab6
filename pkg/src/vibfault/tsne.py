"""Exact t-SNE embedding and silhouette scoring for feature separability.

This is the O(N^2) algorithm: per-point bandwidths from a bisection on
Shannon entropy, symmetrized joint probabilities, Student-t low-dimensional
affinities, and plain gradient descent with momentum and early exaggeration.
A seeded stratified subsample caps the point count so the quadratic cost
stays tractable.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, OneClassOnly

P_FLOOR = 1e-12
ENTROPY_TOL = 1e-5      # in log2-perplexity
MAX_SEARCH_ITERS = 64


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch: int = 250
    max_points: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 250:
            raise ValueError("iterations must be at least 250")
        if self.perplexity <= 1:
            raise ValueError("perplexity must exceed 1")
        if self.max_points < 10:
            raise ValueError("max_points must be at least 10")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def validate_for(self, n_points):
        if self.perplexity >= (n_points - 1) / 3:
            raise ValueError(
                f"perplexity {self.perplexity} too large for {n_points} points "
                f"(needs perplexity < {(n_points - 1) / 3:.2f})")


def perplexity_search(sq_distances_row, target_perplexity):
    """Bisection on the precision beta so 2^H(p) hits the target perplexity.

    Args:
        sq_distances_row: squared distances to the other points (self
            excluded), at least 2 finite entries.
        target_perplexity: effective neighbor count to match.

    Returns:
        (p_row, beta, converged). p_row sums to 1. When 64 bisection steps
        do not reach the tolerance, the boundary beta is returned and a
        warning is issued.
    """
    d = np.asarray(sq_distances_row, dtype=np.float64)
    if d.size < 2:
        raise ValueError("need at least 2 neighbors")
    target_h = np.log2(target_perplexity)
    d_shift = d - d.min()   # exp stays in range for any beta

    beta = 1.0
    beta_min, beta_max = 0.0, np.inf
    p = None
    for _ in range(MAX_SEARCH_ITERS):
        p = np.exp(-beta * d_shift)
        total = p.sum()
        p /= total
        nz = p > 0
        h = -np.sum(p[nz] * np.log2(p[nz]))
        diff = h - target_h
        if abs(diff) <= ENTROPY_TOL:
            return p, beta, True
        if diff > 0:        # entropy too high: sharpen
            beta_min = beta
            beta = beta * 2.0 if not np.isfinite(beta_max) else (beta + beta_max) / 2.0
        else:
            beta_max = beta
            beta = (beta + beta_min) / 2.0
    warnings.warn(
        f"perplexity search did not converge (entropy {h:.4f} bits, "
        f"target {target_h:.4f}); using boundary beta", stacklevel=2)
    return p, beta, False


def _squared_distances(x):
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def joint_probabilities(x, perplexity):
    """Symmetrized affinity matrix P: p_ij = (p_j|i + p_i|j) / 2N.

    Off-diagonal entries are floored at 1e-12; the diagonal is zero and the
    total sums to 1 (up to the flooring).
    """
    n = x.shape[0]
    sqd = _squared_distances(x)
    if sqd.max() == 0.0:
        raise DegenerateInput("all points identical")
    mask = ~np.eye(n, dtype=bool)
    cond = np.zeros((n, n))
    for i in range(n):
        row, _, _ = perplexity_search(sqd[i][mask[i]], perplexity)
        cond[i][mask[i]] = row
    p = (cond + cond.T) / (2.0 * n)
    p[mask] = np.maximum(p[mask], P_FLOOR)
    return p


def tsne(x, cfg):
    """Embed (N, D) features into 2-D.

    Returns (y, kl_trace) where kl_trace[i] is the un-exaggerated KL
    divergence at iteration i. The embedding is re-centered every iteration
    and is bit-reproducible from (x, cfg).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 10 or x.shape[1] < 1:
        raise ValueError(f"need at least 10 points with 1 feature, got {x.shape}")
    n = x.shape[0]
    cfg.validate_for(n)

    p = joint_probabilities(x, cfg.perplexity)
    rng = np.random.default_rng(cfg.seed)
    y = rng.standard_normal((n, 2)) * 1e-2
    update = np.zeros_like(y)
    gains = np.ones_like(y)     # per-coordinate gain adaptation damps
    kl_trace = np.empty(cfg.iterations)  # late-stage oscillation
    mask = ~np.eye(n, dtype=bool)
    log_p = np.zeros((n, n))
    log_p[mask] = np.log(p[mask])

    for it in range(cfg.iterations):
        exag = cfg.early_exaggeration if it < cfg.exaggeration_iters else 1.0
        momentum = cfg.momentum_early if it < cfg.momentum_switch else cfg.momentum_late

        num = 1.0 / (1.0 + _squared_distances(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), P_FLOOR)

        kl_trace[it] = float(np.sum(p[mask] * (log_p[mask] - np.log(q[mask]))))

        pq = (exag * p - q) * num
        grad = 4.0 * (np.diag(pq.sum(axis=1)) - pq) @ y
        gains = np.where(np.sign(grad) != np.sign(update),
                         gains + 0.2, gains * 0.8)
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - cfg.learning_rate * gains * grad
        y += update
        y -= y.mean(axis=0)

    return y, kl_trace


def silhouette(points, labels):
    """Mean silhouette with Euclidean distance: s_i = (b_i - a_i) / max(a_i, b_i).

    Points in singleton classes are skipped (with a warning) as subjects but
    still serve as neighbor targets. Raises OneClassOnly when fewer than two
    classes have two or more points.
    """
    pts = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if pts.shape[0] != labels.shape[0]:
        raise ValueError("one label per point required")
    classes, counts = np.unique(labels, return_counts=True)
    multi = classes[counts >= 2]
    if multi.size < 2:
        raise OneClassOnly(
            f"need >= 2 classes with >= 2 points, found {multi.size}")
    if (counts < 2).any():
        skipped = classes[counts < 2].tolist()
        warnings.warn(f"singleton classes skipped as subjects: {skipped}",
                      stacklevel=2)

    d = np.sqrt(_squared_distances(pts))
    scores = []
    for i in range(pts.shape[0]):
        same = labels == labels[i]
        if same.sum() < 2:
            continue
        a = d[i][same].sum() / (same.sum() - 1)     # exclude self
        b = min(d[i][labels == c].mean() for c in classes if c != labels[i])
        denom = max(a, b)
        scores.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(scores))


def stratified_subsample(labels, max_points, seed):
    """Seeded, label-stratified subsample; returns sorted row indices.

    Per-class counts follow the largest-remainder rule, so each class lands
    within one point of its exact proportional share.
    """
    labels = np.asarray(labels)
    n = labels.size
    if n <= max_points:
        return np.arange(n)
    classes, counts = np.unique(labels, return_counts=True)
    shares = max_points * counts / n
    take = np.floor(shares).astype(int)
    remainder = max_points - take.sum()
    order = np.argsort(-(shares - take), kind="stable")
    take[order[:remainder]] += 1
    rng = np.random.default_rng(seed)
    picked = [rng.choice(np.nonzero(labels == c)[0], size=k, replace=False)
              for c, k in zip(classes, take)]
    return np.sort(np.concatenate(picked))


def embed_features(features, labels, cfg):
    """Subsample (stratified, seeded) when needed, then run t-SNE.

    Returns (indices, y, kl_trace); indices refer to rows of `features`.
    """
    idx = stratified_subsample(labels, cfg.max_points, cfg.seed)
    y, kl_trace = tsne(np.asarray(features)[idx], cfg)
    return idx, y, kl_trace


# --- artifact I/O ---------------------------------------------------------

def write_embedding_csv(path, indices, labels, class_names, y):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("segment_index,class_name,x,y\n")
        for i, row in zip(indices, y):
            fh.write(f"{int(i)},{class_names[labels[i]]},"
                     f"{row[0]:.6f},{row[1]:.6f}\n")


def read_embedding_csv(path):
    indices, names, coords = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "segment_index,class_name,x,y":
            raise ValueError(f"unexpected embedding header: {header!r}")
        for line in fh:
            idx, name, xs, ys = line.strip().split(",")
            indices.append(int(idx))
            names.append(name)
            coords.append((float(xs), float(ys)))
    return np.array(indices), names, np.array(coords)


def write_kl_csv(path, kl_trace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,kl\n")
        for i, v in enumerate(kl_trace):
            fh.write(f"{i},{v:.8f}\n")


def read_kl_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "iteration,kl":
            raise ValueError(f"unexpected KL-trace header: {header!r}")
        return np.array([float(line.split(",")[1]) for line in fh if line.strip()])
