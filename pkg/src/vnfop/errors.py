class Infeasible(Exception):
    """No assignment satisfies the capacity, type and routing constraints.

    ``constraint`` names the constraint family that failed (``"Eq.2"`` ...)
    when it can be pinned down.
    """

    def __init__(self, reason: str, constraint: str = "", traffic: str | None = None, stage: int | None = None):
        super().__init__(reason)
        self.reason = reason
        self.constraint = constraint
        self.traffic = traffic
        self.stage = stage


class LimitExceeded(Exception):
    """The exact search outgrew its node, route or time limits."""
