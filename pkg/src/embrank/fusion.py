"""Min-max normalization and CombSUM fusion of score channels."""

from __future__ import annotations

from dataclasses import dataclass

from .candidates import CandidateList

# Pipelines named after the unsupervised rankers; each maps to the score
# channels CombSUM combines (single-channel entries skip fusion).
NAMED_PIPELINES: dict[str, tuple[str, ...]] = {
    "lm": ("lm",),
    "lm+rwmd": ("lm", "rwmd"),
    "lm+mmp0.7": ("lm", "mmp"),
    "lm+srwmd": ("lm", "srwmd"),
    "rm": ("rm",),
    "rm+srwmd": ("rm", "srwmd"),
}


@dataclass(frozen=True)
class FusionSpec:
    channels: tuple[str, ...]
    normalization: str = "min_max"
    combiner: str = "comb_sum"

    def __post_init__(self):
        if len(self.channels) < 2:
            raise ValueError("fusion needs at least 2 channels")
        if self.normalization != "min_max":
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.combiner != "comb_sum":
            raise ValueError(f"unknown combiner {self.combiner!r}")


def min_max_normalize(candidates: CandidateList, channel: str) -> CandidateList:
    """Map the channel onto [0, 1] per query into "<channel>.norm".

    A constant channel (including a single candidate) maps to 0.5 and is
    flagged in metadata.
    """
    result = candidates.copy()
    values = result.channel_values(channel)
    if not values:
        return result
    low, high = min(values), max(values)
    name = channel + ".norm"
    if high == low:
        for entry in result.entries:
            entry.channels[name] = 0.5
        result.metadata[f"degenerate_norm.{channel}"] = "constant channel -> 0.5"
    else:
        scale = high - low
        for entry in result.entries:
            entry.channels[name] = (entry.channels[channel] - low) / scale
    return result


def comb_sum(candidates: CandidateList, spec: FusionSpec) -> CandidateList:
    """Unweighted sum of the normalized channels, re-sorted deterministically."""
    result = candidates.copy()
    # summing in sorted-name order keeps the result exactly invariant to
    # how the caller listed the channels
    norm_names = sorted(c + ".norm" for c in spec.channels)
    for name in norm_names:
        result.channel_values(name)  # raise on any missing channel
    for entry in result.entries:
        entry.channels["fused"] = sum(entry.channels[name] for name in norm_names)
    result.resort("fused")
    result.metadata["fused_channels"] = "+".join(sorted(spec.channels))
    return result


def fuse(candidates: CandidateList, channels: tuple[str, ...]) -> CandidateList:
    """Normalize each channel then CombSUM them."""
    out = candidates
    for channel in channels:
        out = min_max_normalize(out, channel)
    return comb_sum(out, FusionSpec(channels=channels))
