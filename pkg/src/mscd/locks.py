"""Readers/writer lock that gives writers priority over new readers.

Any number of readers may hold the lock together.  A writer excludes
everyone.  While a writer is waiting, newly arriving readers block, so a
stream of readers cannot starve an update (the classic second
readers/writers arrangement).
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

__all__ = ["WriterPriorityRWLock"]


class WriterPriorityRWLock:
    __slots__ = ("_cond", "_active_readers", "_waiting_writers", "_writer_active")

    def __init__(self):
        self._cond = threading.Condition(threading.Lock())
        self._active_readers = 0
        self._waiting_writers = 0
        self._writer_active = False

    def acquire_read(self) -> None:
        with self._cond:
            while self._writer_active or self._waiting_writers:
                self._cond.wait()
            self._active_readers += 1

    def release_read(self) -> None:
        with self._cond:
            if self._active_readers <= 0:
                raise RuntimeError("release_read without a matching acquire")
            self._active_readers -= 1
            if self._active_readers == 0:
                self._cond.notify_all()

    def acquire_write(self) -> None:
        with self._cond:
            self._waiting_writers += 1
            try:
                while self._writer_active or self._active_readers:
                    self._cond.wait()
            finally:
                self._waiting_writers -= 1
            self._writer_active = True

    def release_write(self) -> None:
        with self._cond:
            if not self._writer_active:
                raise RuntimeError("release_write without a matching acquire")
            self._writer_active = False
            self._cond.notify_all()

    @contextmanager
    def reading(self):
        self.acquire_read()
        try:
            yield
        finally:
            self.release_read()

    @contextmanager
    def writing(self):
        self.acquire_write()
        try:
            yield
        finally:
            self.release_write()
