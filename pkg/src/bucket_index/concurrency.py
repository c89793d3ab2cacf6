"""Grace-period reclamation for the single-writer / many-reader protocol.

Publication rules used by the writer:
  * slot contents are written before the slot's valid flag;
  * a bucket pivot is lowered only after the new entry is valid;
  * structural changes build replacement nodes aside, publish their routing
    entries in the ancestor, and clear the old entry's valid flag last;
  * unlinked nodes are retired here and reclaimed once every reader that
    could still see them has left.

Epoch scheme: three limbo lists. The global epoch advances only when every
active reader has announced the current epoch; advancing from e to e+1
reclaims nodes retired in epoch e-2. Readers hold node references only inside
a pinned section, so an advance that finds no reader pinned at all reclaims
every limbo list at once.
"""
from __future__ import annotations

import threading


class ReaderSlot:
    __slots__ = ("epoch", "reader_id")

    def __init__(self, reader_id: int):
        self.reader_id = reader_id
        self.epoch = None  # None while outside a read-side section


class EpochManager:
    def __init__(self):
        self.epoch = 0
        self._slots: list[ReaderSlot] = []
        self._limbo = [[], [], []]
        self._register_lock = threading.Lock()
        self.retired = 0
        self.reclaimed = 0

    def register(self) -> ReaderSlot:
        with self._register_lock:
            slot = ReaderSlot(len(self._slots))
            self._slots = self._slots + [slot]
        return slot

    def reader_enter(self, slot: ReaderSlot):
        slot.epoch = self.epoch

    def reader_exit(self, slot: ReaderSlot):
        slot.epoch = None

    def retire(self, node):
        if hasattr(node, "smo_epoch"):
            node.smo_epoch = self.epoch
        self._limbo[self.epoch % 3].append(node)
        self.retired += 1

    def try_advance(self) -> bool:
        e = self.epoch
        idle = True
        for slot in self._slots:
            pinned = slot.epoch
            if pinned is not None:
                if pinned != e:
                    return False
                idle = False
        if idle:
            bucket = self._limbo[0] + self._limbo[1] + self._limbo[2]
            self._limbo = [[], [], []]
        else:
            bucket = self._limbo[(e + 1) % 3]  # retired during epoch e - 2
            self._limbo[(e + 1) % 3] = []
        self.epoch = e + 1
        for node in bucket:
            node.reclaim()
        self.reclaimed += len(bucket)
        return True

    @property
    def pending(self) -> int:
        return sum(len(b) for b in self._limbo)

    def active_readers(self) -> int:
        return sum(1 for s in self._slots if s.epoch is not None)
