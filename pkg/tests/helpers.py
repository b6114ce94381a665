"""Shared test doubles."""
from proxguide.problems import FixtureOracle


class CountingOracle(FixtureOracle):
    """Fixture oracle that counts selection evaluations."""

    def __init__(self, kind="convex-quadratic", d=2, radius=10.0):
        super().__init__(kind, d, radius)
        self.calls = 0

    def subgradient(self, x, batch, i):
        self.calls += 1
        return super().subgradient(x, batch, i)


# acceptance outcomes, printed in the terminal summary by conftest
ACCEPTANCE = []


def record(criterion, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return passed
