class ForcedRng:
    """Stand-in acceptance stream returning a fixed uniform draw."""

    def __init__(self, u: float):
        self.u = u
        self.calls = 0

    def random(self) -> float:
        self.calls += 1
        return self.u


REJECT = 0.999999
ACCEPT = 0.0
