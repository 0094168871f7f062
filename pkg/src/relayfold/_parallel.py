"""Order-preserving map over independent tasks, optionally in worker processes."""

from __future__ import annotations

import pickle
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def pmap(fn: Callable[[T], R], items: Iterable[T], jobs: Optional[int] = 1) -> List[R]:
    """``[fn(i) for i in items]``; with ``jobs > 1`` the calls run in a process pool.

    Results come back in input order, so output does not depend on scheduling.
    Work that cannot be pickled (fields built from lambdas) runs serially.
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    try:
        pickle.dumps((fn, items))
    except (pickle.PicklingError, AttributeError, TypeError):
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))
