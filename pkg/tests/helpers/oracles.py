"""Independent brute-force oracles shared by unit and acceptance tests."""


def brute_force_first_split(X, y, min_samples_leaf=1):
    """Exhaustive search over all (feature, midpoint threshold) pairs for the
    split minimizing total SSE; ties to lower feature then lower threshold.
    Plain-Python, coded independently of the production split search."""
    n, d = X.shape
    best = None  # (sse, feature, threshold)
    for f in range(d):
        values = sorted(set(X[:, f]))
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2
            left = [y[i] for i in range(n) if X[i, f] <= threshold]
            right = [y[i] for i in range(n) if X[i, f] > threshold]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            mean_l = sum(left) / len(left)
            mean_r = sum(right) / len(right)
            sse = (sum((v - mean_l) ** 2 for v in left)
                   + sum((v - mean_r) ** 2 for v in right))
            key = (round(sse, 9), f, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return best[1], best[2]
