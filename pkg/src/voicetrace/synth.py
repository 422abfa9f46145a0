"""Seeded synthetic signals with known bispectral structure.

A coupled triad carries quadratic phase coupling (the third cosine's phase is
the sum of the first two, per segment), which produces a persistent bispectral
peak under segment averaging. An uncoupled triad has an independent random
third phase, so its triple products average away. These signals serve as the
ground-truth corpus for exercising the detection pipeline end to end.

All randomness comes from the counter-based Philox generator keyed by the
spec's seed, so corpora are bit-reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BinOutOfRange


@dataclass(frozen=True)
class TriadSpec:
    f1_bin: int
    f2_bin: int
    coupled: bool
    amplitude: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.f1_bin < 1 or self.f2_bin < 1:
            raise BinOutOfRange(f"bins must be >= 1, got ({self.f1_bin}, {self.f2_bin})")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def gen_triad(spec: TriadSpec, length: int, segment_len: int) -> np.ndarray:
    """Generate a triad signal of ``length`` samples built from phase blocks
    of ``segment_len`` samples.

    Per block, draws ``phi1, phi2`` (and ``phi3`` only when uncoupled) in that
    order, then adds Gaussian noise over the whole signal.
    """
    if spec.f1_bin + spec.f2_bin > segment_len // 2:
        raise BinOutOfRange(
            f"f1+f2 = {spec.f1_bin + spec.f2_bin} exceeds Nyquist bin {segment_len // 2}")
    if length < segment_len:
        raise ValueError(f"length {length} is shorter than one segment ({segment_len})")

    rng = _rng(spec.seed)
    n_blocks = -(-length // segment_len)
    t = np.arange(segment_len) / segment_len
    out = np.empty(n_blocks * segment_len)
    for b in range(n_blocks):
        phi1, phi2 = rng.uniform(0.0, 2.0 * np.pi, size=2)
        phi3 = phi1 + phi2 if spec.coupled else rng.uniform(0.0, 2.0 * np.pi)
        block = (
            np.cos(2.0 * np.pi * spec.f1_bin * t + phi1)
            + np.cos(2.0 * np.pi * spec.f2_bin * t + phi2)
            + np.cos(2.0 * np.pi * (spec.f1_bin + spec.f2_bin) * t + phi3)
        )
        out[b * segment_len : (b + 1) * segment_len] = spec.amplitude * block
    if spec.noise_sigma > 0:
        out += rng.normal(0.0, spec.noise_sigma, size=len(out))
    return out[:length]


def gen_noise(length: int, sigma: float, seed: int) -> np.ndarray:
    """Seeded Gaussian white noise; sigma 0 gives exact zeros."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.zeros(length)
    return _rng(seed).normal(0.0, sigma, size=length)


def surrogate_corpus(n_reference: int, n_real_queries: int, n_fake_queries: int,
                     f1_bin: int = 5, f2_bin: int = 9,
                     amplitude: float = 0.25, noise_sigma: float = 0.02,
                     segment_len: int = 64, n_segments: int = 64,
                     base_seed: int = 0,
                     ) -> tuple[list[tuple[str, np.ndarray]],
                                list[tuple[str, np.ndarray]],
                                dict[str, str]]:
    """Build the reference/query signal sets used in the surrogate experiment.

    Reference and real queries are uncoupled triads, fake queries are coupled;
    seeds are derived from base_seed so the corpus is reproducible. Returns
    (reference, queries, ground_truth) with stable sample ids.
    """
    length = segment_len * n_segments

    def make(name: str, index: int, coupled: bool, seed: int):
        spec = TriadSpec(f1_bin, f2_bin, coupled, amplitude, noise_sigma, seed)
        return (f"{name}_{index:04d}", gen_triad(spec, length, segment_len))

    reference = [make("ref", i, False, base_seed + 1000 + i) for i in range(n_reference)]
    real_q = [make("real", i, False, base_seed + 2000 + i) for i in range(n_real_queries)]
    fake_q = [make("fake", i, True, base_seed + 3000 + i) for i in range(n_fake_queries)]
    queries = real_q + fake_q
    ground_truth = {sid: "real" for sid, _ in real_q}
    ground_truth.update({sid: "fake" for sid, _ in fake_q})
    return reference, queries, ground_truth
