"""Per-query ranked candidate lists with named score channels."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Candidate:
    doc_id: str
    channels: dict[str, float] = field(default_factory=dict)


@dataclass
class CandidateList:
    """Entries stay sorted by the active channel, ties broken by doc id.

    metadata records provenance: active channel, scorer parameters,
    degenerate-score flags.
    """

    query_id: str
    entries: list[Candidate] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def active_channel(self) -> str:
        return self.metadata.get("active_channel", "")

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]

    def channel_values(self, channel: str) -> list[float]:
        try:
            return [e.channels[channel] for e in self.entries]
        except KeyError:
            raise KeyError(
                f"channel {channel!r} missing on candidates for query {self.query_id!r}"
            ) from None

    def resort(self, channel: str) -> None:
        """Sort descending by channel, ties by ascending doc id; set it active."""
        self.channel_values(channel)  # validate presence on every entry
        self.entries.sort(key=lambda e: (-e.channels[channel], e.doc_id))
        self.metadata["active_channel"] = channel

    def copy(self) -> "CandidateList":
        return CandidateList(
            self.query_id,
            [Candidate(e.doc_id, dict(e.channels)) for e in self.entries],
            dict(self.metadata),
        )
