"""Independent reference implementations, written from definitions with plain loops."""
import math


def anova_icc(groups):
    """One-way ICC(1) for a balanced design from raw sums of squares."""
    m = len(groups)
    k = len(groups[0])
    assert all(len(g) == k for g in groups)
    total = 0.0
    for g in groups:
        for v in g:
            total += v
    grand = total / (m * k)
    ssb = 0.0
    ssw = 0.0
    for g in groups:
        mu = sum(g) / k
        ssb += k * (mu - grand) ** 2
        for v in g:
            ssw += (v - mu) ** 2
    msb = ssb / (m - 1)
    msw = ssw / (m * (k - 1))
    return (msb - msw) / (msb + (k - 1) * msw)


def ranks(values):
    """Average ranks (1-based) with ties sharing the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    out = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            out[order[t]] = avg
        i = j + 1
    return out


def pearson(a, b):
    n = len(a)
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    sab = math.fsum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = math.fsum((x - ma) ** 2 for x in a)
    sbb = math.fsum((y - mb) ** 2 for y in b)
    return sab / math.sqrt(saa * sbb)


def spearman(a, b):
    return pearson(ranks(a), ranks(b))


def r2(y, p):
    mu = math.fsum(y) / len(y)
    ss_res = math.fsum((u - v) ** 2 for u, v in zip(y, p))
    ss_tot = math.fsum((u - mu) ** 2 for u in y)
    return 1.0 - ss_res / ss_tot


def rmse(y, p):
    return math.sqrt(math.fsum((u - v) ** 2 for u, v in zip(y, p)) / len(y))


def poisson_grid_mle(y, x, center, half_width, steps=41, rounds=40, shrink=0.5):
    """Zooming 2-D grid search for the Poisson log-likelihood maximum of ``(b0, b1)``.

    Each round evaluates the full likelihood on a ``steps x steps`` grid and
    re-centres a box ``shrink`` times smaller on the best point.
    """
    import numpy as np
    from scipy.special import gammaln

    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    const = gammaln(y + 1).sum()
    c0, c1 = center
    h = half_width
    for _ in range(rounds):
        a = np.linspace(c0 - h, c0 + h, steps)
        b = np.linspace(c1 - h, c1 + h, steps)
        eta = a[:, None, None] + b[None, :, None] * x
        ll = (y * eta - np.exp(eta)).sum(axis=2) - const
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        c0, c1 = a[i], b[j]
        h *= shrink
    return c0, c1


def ridge_grid(X, y, alpha, lo=-3.0, hi=3.0, step=1e-3):
    """Brute-force minimizer of ``||y - X W - b||^2 + alpha ||W||^2`` for 2 weights.

    The intercept is profiled out at each grid point as ``mean(y - X W)``.
    """
    import numpy as np

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    grid = np.arange(round((hi - lo) / step) + 1) * step + lo
    best = (np.inf, None, None)
    for w0 in np.array_split(grid, 60):
        W0, W1 = np.meshgrid(w0, grid, indexing="ij")
        resid = y[:, None, None] - X[:, 0, None, None] * W0 - X[:, 1, None, None] * W1
        resid = resid - resid.mean(axis=0)
        loss = (resid**2).sum(axis=0) + alpha * (W0**2 + W1**2)
        i = np.unravel_index(np.argmin(loss), loss.shape)
        if loss[i] < best[0]:
            best = (loss[i], W0[i], W1[i])
    return np.array([best[1], best[2]])
