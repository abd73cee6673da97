"""Bootstrapped socialbot network reconstruction and KDE-based bot detection."""

from boostnet.graph import (
    AccountRecord,
    CommunityAssignment,
    DirectedEdge,
    NetworkSnapshot,
    ScoreTriple,
    build_network,
    degree_filter,
    detect_communities,
    intersect_snapshots,
    network_stats,
    percentage_of,
)

__version__ = "0.1.0"

__all__ = [
    "AccountRecord",
    "CommunityAssignment",
    "DirectedEdge",
    "NetworkSnapshot",
    "ScoreTriple",
    "build_network",
    "degree_filter",
    "detect_communities",
    "intersect_snapshots",
    "network_stats",
    "percentage_of",
]
