import asyncio
import logging
import time

from .tasks import default_task


logger = logging.getLogger(__name__)


###############################################################################
#  EXECUTORS
###############################################################################
#
# Executes the task once for every sweep point.
#
# sliding_window_executor keeps `workers` points in flight and starts a new
# one as soon as one has completed. Results arrive in completion order;
# callers sort them by index.
#
# single_run executes one point and returns its result.
#

async def sliding_window_executor(points, task_args, workers=1,
                                  task_func=default_task, request_cb=None):
    tasks = set()
    results = []
    pending = list(points)
    pending.reverse()
    workers = max(1, workers)
    start = time.monotonic()
    try:
        # Start initial number of tasks
        while pending and len(tasks) < workers:
            p = pending.pop()
            tasks.add(asyncio.create_task(task_func(p['index'], p, **task_args)))
        while tasks:
            done, tasks = await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
            for d in done:
                result = await d
                if request_cb:
                    request_cb(result)
                results.append(result)
                index, rstatus, _row, rtime = result
                logger.info('point %d: %s (%.2fs)', index, rstatus, rtime)
            # Start tasks in available slots (if any)
            while pending and len(tasks) < workers:
                p = pending.pop()
                tasks.add(asyncio.create_task(task_func(p['index'], p, **task_args)))
    finally:
        elapsed = time.monotonic()-start
        for t in tasks:
            t.cancel()
    return elapsed, results


async def single_run(point, task_args, task_func=default_task):
    return await task_func(point['index'], point, **task_args)
