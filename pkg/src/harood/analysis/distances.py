"""Distribution distances between domains, computed on normalized raw windows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import wasserstein_distance as _scipy_w1

from ..data.normalize import normalize
from ..data.types import NormalizationSpec
from ..errors import AnalysisError
from ..scenarios.specs import ScenarioBundle

DEFAULT_BANDWIDTHS = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        raise AnalysisError("empty sample set")
    if a.ndim == 1:
        a = a[:, None]
    return a.reshape(a.shape[0], -1)


def mmd_distance(a, b, bandwidths=DEFAULT_BANDWIDTHS) -> float:
    """Biased squared MMD with a Gaussian kernel averaged over bandwidths
    (k(x, y) = mean_g exp(-g ||x - y||^2)), clipped at zero."""
    a, b = _as_matrix(a), _as_matrix(b)

    def mean_kernel(x, y):
        x2 = (x ** 2).sum(axis=1)[:, None]
        y2 = (y ** 2).sum(axis=1)[None, :]
        d2 = np.maximum(x2 + y2 - 2.0 * (x @ y.T), 0.0)
        k = np.zeros_like(d2)
        for g in bandwidths:
            k += np.exp(-g * d2)
        return k.mean() / len(bandwidths)

    value = mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b)
    return float(max(value, 0.0))


def wasserstein1_distance(a, b, normalized: bool = True) -> float:
    """Coordinate-wise 1-D Wasserstein-1.

    Equal-size sets pair sorted samples; unequal sizes integrate the
    quantile functions. `normalized` averages over coordinates, otherwise
    the per-coordinate costs are summed.
    """
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise AnalysisError("sample sets must share dimensionality")
    if len(a) == len(b):
        costs = np.abs(np.sort(a, axis=0) - np.sort(b, axis=0)).mean(axis=0)
    else:
        costs = np.array([
            _scipy_w1(a[:, j], b[:, j]) for j in range(a.shape[1])
        ])
    return float(costs.mean() if normalized else costs.sum())


def emd_distance(a, b, bins: int = 100, normalized: bool = True) -> float:
    """Coordinate-wise histogram earth mover's distance.

    Histograms share one bin grid over the combined range; the cost is the
    summed absolute cumulative difference times the bin width.
    """
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise AnalysisError("sample sets must share dimensionality")
    if bins < 1:
        raise AnalysisError("bins must be >= 1")
    costs = np.empty(a.shape[1])
    for j in range(a.shape[1]):
        lo = min(a[:, j].min(), b[:, j].min())
        hi = max(a[:, j].max(), b[:, j].max())
        if hi == lo:
            costs[j] = 0.0
            continue
        edges = np.linspace(lo, hi, bins + 1)
        pa, _ = np.histogram(a[:, j], bins=edges)
        pb, _ = np.histogram(b[:, j], bins=edges)
        pa = pa / pa.sum()
        pb = pb / pb.sum()
        width = edges[1] - edges[0]
        costs[j] = np.abs(np.cumsum(pa - pb)).sum() * width
    return float(costs.mean() if normalized else costs.sum())


@dataclass
class DistanceReport:
    scenario: str
    normalization: str
    per_pair: dict[str, dict[str, float]] = field(default_factory=dict)
    averages: dict[str, float] = field(default_factory=dict)
    sample_sizes: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "normalization": self.normalization,
            "per_pair": self.per_pair,
            "averages": self.averages,
            "sample_sizes": {str(k): v for k, v in self.sample_sizes.items()},
        }


def pairwise_domain_distances(bundle: ScenarioBundle,
                              normalization: NormalizationSpec | None = None,
                              sample_cap: int = 1000, seed: int = 0,
                              bins: int = 100,
                              bandwidths=DEFAULT_BANDWIDTHS,
                              normalized: bool = True) -> DistanceReport:
    """All three metrics for every unordered domain pair, then averaged.

    Up to sample_cap windows per domain are drawn (seeded) and flattened.
    """
    if bundle.domain_count < 2:
        raise AnalysisError("need at least 2 domains for pairwise distances")
    rng = np.random.default_rng(seed)
    norm = normalization or NormalizationSpec(mode="none")
    samples: list[np.ndarray] = []
    sizes: dict[int, int] = {}
    for dom in bundle.domains:
        windows = dom.windows
        if len(windows) > sample_cap:
            idx = rng.choice(len(windows), size=sample_cap, replace=False)
            windows = [windows[i] for i in np.sort(idx)]
        windows = normalize(windows, norm)
        mat = np.stack([w.values.ravel() for w in windows])
        samples.append(mat)
        sizes[dom.domain_id] = len(mat)
    report = DistanceReport(
        scenario=bundle.spec.scenario,
        normalization=norm.mode,
        sample_sizes=sizes,
    )
    sums = {"mmd": 0.0, "w1": 0.0, "emd": 0.0}
    pair_count = 0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            vals = {
                "mmd": mmd_distance(samples[i], samples[j], bandwidths),
                "w1": wasserstein1_distance(samples[i], samples[j], normalized),
                "emd": emd_distance(samples[i], samples[j], bins, normalized),
            }
            report.per_pair[f"{i}-{j}"] = vals
            for k, v in vals.items():
                sums[k] += v
            pair_count += 1
    report.averages = {k: v / pair_count for k, v in sums.items()}
    return report
