"""Worker-count policy and a deterministic thread map.

``MODALMIX_THREADS`` caps the worker count; 0 or unset means automatic
(the CPU count).  Work is always split into deterministic chunks whose
results are reassembled in submission order, so the thread pool never
changes numerical output.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(requested: int | None = None) -> int:
    """Resolve the effective worker count.

    ``requested`` wins when given; otherwise the ``MODALMIX_THREADS``
    environment variable applies, with 0/unset meaning the CPU count.
    """
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get("MODALMIX_THREADS", "0")
    try:
        cap = int(env)
    except ValueError:
        cap = 0
    if cap > 0:
        return cap
    return os.cpu_count() or 1


def thread_map(fn, jobs, workers: int):
    """Apply ``fn`` to each job, in a pool of ``workers`` threads when more
    than one is requested.  Results come back in job order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
