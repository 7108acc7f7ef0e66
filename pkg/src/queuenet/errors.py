"""Exception types shared across submodels."""


class UndefinedWaitError(ZeroDivisionError):
    """Little's-law wait requested for a stream with zero arrival rate."""


def littles_wait(L: float, lam: float) -> float:
    if lam <= 0:
        raise UndefinedWaitError(f"arrival rate {lam} gives no Little's-law wait")
    return L / lam
