from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used across the package.

    act:  activity and membership of bounds (absolute)
    cone: sign-cone membership (absolute, per coordinate)
    res:  Lagrangian residual norm
    seq:  convergence surrogate for finite sequences
    rank: relative pivot threshold for rank tests
    lp:   infeasibility threshold of the phase-1 simplex
    """

    act: float = 1e-9
    cone: float = 1e-8
    res: float = 1e-7
    seq: float = 1e-4
    rank: float = 1e-10
    lp: float = 1e-9

    def with_(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


DEFAULT = Tolerances()
