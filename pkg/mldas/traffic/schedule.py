"""
Attack kinds and the ground-truth attack schedule used for labeling.
"""

import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence

import pandas as pd

from ..errors import ConfigError, SchemaError
from ..flows.model import ICMP, TCP, UDP

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ("kind", "attacker", "victim", "start", "end", "spoofed", "phase")


class AttackKind(str, Enum):
    """Flood variants, in the order each attack phase runs them"""
    ICMP_FLOOD = "IcmpFlood"
    UDP_FLOOD = "UdpFlood"
    TCP_SYN_FLOOD = "TcpSynFlood"
    LAND_FLOOD = "LandFlood"

    @property
    def ip_proto(self) -> int:
        return {
            AttackKind.ICMP_FLOOD: ICMP,
            AttackKind.UDP_FLOOD: UDP,
            AttackKind.TCP_SYN_FLOOD: TCP,
            AttackKind.LAND_FLOOD: TCP,
        }[self]


@dataclass(frozen=True)
class AttackEntry:
    """
    One flood against one victim. start/end are seconds on the scenario
    clock; end is the last moment a record of the flood may carry.
    """
    kind: AttackKind
    attacker: str
    victim: str
    start: float
    end: float
    spoofed: bool = True
    phase: int = 0

    def __post_init__(self):
        if not self.start < self.end:
            raise ConfigError(f"Attack entry must have start < end, got {self.start} >= {self.end}")

    @property
    def start_ns(self) -> int:
        return int(round(self.start * 1e9))

    @property
    def end_ns(self) -> int:
        return int(round(self.end * 1e9))

    @property
    def session(self) -> str:
        return f"{self.kind.value}@{self.start:.6f}"


class AttackSchedule:
    """Attack entries kept sorted by start time"""

    def __init__(self, entries: Sequence[AttackEntry] = (), subnet: str = "10.0.0.0/24"):
        self.entries: List[AttackEntry] = sorted(entries, key=lambda e: (e.start, e.end))
        self.subnet = subnet

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[AttackEntry]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> AttackEntry:
        return self.entries[index]

    def __eq__(self, other) -> bool:
        return isinstance(other, AttackSchedule) and self.entries == other.entries

    @property
    def phases(self) -> List[int]:
        return sorted({entry.phase for entry in self.entries})

    def active_at(self, timestamp_ns: int) -> List[int]:
        """Indices of entries whose window holds the timestamp"""
        return [
            index for index, entry in enumerate(self.entries)
            if entry.start_ns <= timestamp_ns <= entry.end_ns
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "kind": entry.kind.value,
                    "attacker": entry.attacker,
                    "victim": entry.victim,
                    "start": entry.start,
                    "end": entry.end,
                    "spoofed": int(entry.spoofed),
                    "phase": entry.phase,
                }
                for entry in self.entries
            ],
            columns=list(SCHEDULE_COLUMNS),
        )

    def write_csv(self, path: str) -> str:
        """Sidecar CSV for auditing the labels"""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n", encoding="utf-8", float_format="%.17g")
        logger.info(f"Wrote attack schedule ({len(self)} entries) to {path}")
        return path

    @classmethod
    def read_csv(cls, path: str, subnet: str = "10.0.0.0/24") -> "AttackSchedule":
        if not os.path.exists(path):
            raise ConfigError(f"Schedule not found: {path}")
        frame = pd.read_csv(path, dtype={"attacker": str, "victim": str}, encoding="utf-8")
        if tuple(frame.columns) != SCHEDULE_COLUMNS:
            raise SchemaError(f"Unknown schedule header: {','.join(frame.columns)}")
        entries = [
            AttackEntry(
                kind=AttackKind(row["kind"]),
                attacker=row["attacker"],
                victim=row["victim"],
                start=float(row["start"]),
                end=float(row["end"]),
                spoofed=bool(int(row["spoofed"])),
                phase=int(row["phase"]),
            )
            for row in frame.to_dict(orient="records")
        ]
        return cls(entries, subnet)

    def entries_of_phase(self, phase: int) -> List[AttackEntry]:
        return [entry for entry in self.entries if entry.phase == phase]

    def first_of(self, kind: AttackKind) -> Optional[AttackEntry]:
        return next((entry for entry in self.entries if entry.kind is kind), None)
