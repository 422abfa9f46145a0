"""Independent reference implementations used to cross-check the package.

Everything here deliberately avoids the code paths under test: the DFT is an
explicit matrix product, the bispectrum a per-pair triple loop, the moments
fsum accumulations, and DBSCAN a pure-Python textbook expansion.
"""

from __future__ import annotations

import math

import numpy as np


def naive_dft(x: np.ndarray) -> np.ndarray:
    """O(n^2) DFT from the defining sum, bins 0..n//2 inclusive."""
    n = len(x)
    bins = n // 2 + 1
    k = np.arange(bins)[:, None]
    t = np.arange(n)[None, :]
    return (np.exp(-2j * np.pi * k * t / n) * x[None, :]).sum(axis=1)


def naive_bispectrum(signal: np.ndarray, taper: np.ndarray) -> np.ndarray:
    """Single-segment bispectrum via an explicit per-pair triple product."""
    spectrum = naive_dft(np.asarray(signal, dtype=np.float64) * taper)
    half = len(signal) // 2
    bins = half + 1
    grid = np.zeros((bins, bins), dtype=np.complex128)
    for j in range(bins):
        for k in range(bins):
            if j + k <= half:
                grid[j, k] = spectrum[j] * spectrum[k] * np.conj(spectrum[j + k])
    return grid


def naive_moments(values) -> tuple[float, float, float, float]:
    """Population mean/var/skew/excess-kurtosis via fsum accumulation."""
    xs = [float(v) for v in values]
    n = len(xs)
    mean = math.fsum(xs) / n
    m2 = math.fsum((x - mean) ** 2 for x in xs) / n
    if m2 < 1e-12:
        return mean, m2, 0.0, 0.0
    m3 = math.fsum((x - mean) ** 3 for x in xs) / n
    m4 = math.fsum((x - mean) ** 4 for x in xs) / n
    return mean, m2, m3 / m2**1.5, m4 / m2**2 - 3.0


NOISE = -1
_UNDEFINED = -2


def naive_dbscan(points, eps: float, min_pts: int) -> list[int]:
    """Textbook DBSCAN with the documented determinism rules: points visited
    in input order, border points claimed by the first cluster to reach them,
    cluster ids in discovery order."""
    pts = [list(map(float, p)) for p in points]
    n = len(pts)

    def neighbors(i: int) -> list[int]:
        out = []
        for j in range(n):
            d2 = math.fsum((a - b) ** 2 for a, b in zip(pts[i], pts[j]))
            if d2 <= eps * eps:
                out.append(j)
        return out

    labels = [_UNDEFINED] * n
    cluster = 0
    for i in range(n):
        if labels[i] != _UNDEFINED:
            continue
        seeds = neighbors(i)
        if len(seeds) < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = [j for j in seeds if j != i]
        pos = 0
        while pos < len(queue):
            q = queue[pos]
            pos += 1
            if labels[q] == NOISE:
                labels[q] = cluster
            if labels[q] != _UNDEFINED:
                continue
            labels[q] = cluster
            q_neighbors = neighbors(q)
            if len(q_neighbors) >= min_pts:
                queue.extend(q_neighbors)
        cluster += 1
    return labels


def naive_kth_distances(points, k: int) -> list[float]:
    pts = [list(map(float, p)) for p in points]
    out = []
    for i, a in enumerate(pts):
        dists = sorted(
            math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))
            for j, b in enumerate(pts) if j != i
        )
        out.append(dists[k - 1])
    return sorted(out)


def fft_peak_hz(samples: np.ndarray, rate_hz: int) -> float:
    """Location of the strongest spectral peak, used to audit the resampler."""
    spectrum = np.abs(np.fft.rfft(samples))
    return float(np.fft.rfftfreq(len(samples), 1.0 / rate_hz)[int(np.argmax(spectrum))])


# Hand-written German cardinal anchors (checked against a grammar reference).
GERMAN_CARDINALS = {
    0: "null",
    1: "eins",
    2: "zwei",
    3: "drei",
    7: "sieben",
    10: "zehn",
    11: "elf",
    12: "zwölf",
    13: "dreizehn",
    16: "sechzehn",
    17: "siebzehn",
    20: "zwanzig",
    21: "einundzwanzig",
    30: "dreißig",
    35: "fünfunddreißig",
    42: "zweiundvierzig",
    60: "sechzig",
    70: "siebzig",
    99: "neunundneunzig",
    100: "einhundert",
    101: "einhunderteins",
    111: "einhundertelf",
    121: "einhunderteinundzwanzig",
    200: "zweihundert",
    365: "dreihundertfünfundsechzig",
    999: "neunhundertneunundneunzig",
    1000: "eintausend",
    1001: "eintausendeins",
    1100: "eintausendeinhundert",
    2022: "zweitausendzweiundzwanzig",
    9999: "neuntausendneunhundertneunundneunzig",
    10000: "zehntausend",
    21000: "einundzwanzigtausend",
    100000: "einhunderttausend",
    101000: "einhunderteintausend",
    234567: "zweihundertvierunddreißigtausendfünfhundertsiebenundsechzig",
    999999: "neunhundertneunundneunzigtausendneunhundertneunundneunzig",
}
