from __future__ import annotations

import enum


class Verdict(enum.Enum):
    FORWARD = "forward"
    MARK = "mark"
    DROP = "drop"


class Aqm:
    """Pluggable queue manager.  The default is plain drop-tail.

    The managed link calls ``on_enqueue`` for every arriving packet,
    ``on_dequeue`` for every packet leaving the waiting room, ``sample`` after
    every backlog change (only if ``wants_samples``) and ``on_empty`` when the
    waiting room drains.
    """

    name = "droptail"
    wants_samples = False

    def attach(self, sim, link) -> None:
        self.sim = sim
        self.link = link

    def on_enqueue(self, pkt, backlog: int, now: int) -> Verdict:
        return Verdict.FORWARD

    def on_dequeue(self, pkt, sojourn: int, now: int) -> Verdict:
        return Verdict.FORWARD

    def sample(self, backlog: int) -> None:
        pass

    def on_empty(self, now: int) -> None:
        pass

    def probabilities(self) -> tuple[float, ...] | None:
        """Current per-category drop probabilities, if the scheme has them."""
        return None


DropTail = Aqm
