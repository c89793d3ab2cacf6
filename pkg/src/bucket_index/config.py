"""Index tunables."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path


class HintKind(str, Enum):
    MOD = "mod"
    CLMUL = "clmul"
    ENDPOINT = "endpoint"


@dataclass(frozen=True)
class IndexConfig:
    dbucket_capacity: int = 256
    sbucket_capacity: int = 16
    fill_ratio: float = 0.6
    corridor_error: float = 32
    merge_threshold: float = 3
    neighbor_window: int = 1
    hint_kind: HintKind = HintKind.CLMUL
    early_stop_on_empty: bool = True

    def __post_init__(self):
        if not isinstance(self.hint_kind, HintKind):
            object.__setattr__(self, "hint_kind", HintKind(self.hint_kind))
        if self.dbucket_capacity < 2:
            raise ValueError("dbucket_capacity must be >= 2")
        if self.sbucket_capacity < 2:
            raise ValueError("sbucket_capacity must be >= 2")
        if not 0 < self.fill_ratio <= 1:
            raise ValueError("fill_ratio must be in (0, 1]")
        if self.corridor_error < 1:
            raise ValueError("corridor_error must be >= 1")
        if self.merge_threshold < 1:
            raise ValueError("merge_threshold must be >= 1")
        if self.neighbor_window < 1:
            raise ValueError("neighbor_window must be >= 1")

    @property
    def dbucket_fill(self) -> int:
        """Pairs placed into a freshly created D-Bucket."""
        return max(1, int(self.dbucket_capacity * self.fill_ratio))

    @property
    def sbucket_fill(self) -> float:
        return self.sbucket_capacity * self.fill_ratio

    def with_(self, **changes) -> "IndexConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hint_kind"] = self.hint_kind.value
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "IndexConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "IndexConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
