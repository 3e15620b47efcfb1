import asyncio
import logging
import time
import traceback


logger = logging.getLogger(__name__)


###############################################################################
#  TASKS
###############################################################################
#
##### Default Task
#
# Runs one sweep point in an executor and classifies the outcome.
#
# point (dict) has the keys of the swept parameters plus 'index'.
#
# task_args (dict) keys:
# - config: the ExperimentConfig the sweep was started from
# - point_func: callable(index, point, config) -> row (dict), must be
#   picklable when pool is a ProcessPoolExecutor
# - pool: concurrent.futures executor (optional, None means the event loop's
#   default executor)
#
# Returns (index, status, row, elapsed) where status is 'ok' when the run
# reached CompletedHorizon/ConvergedEarly, 'nok' for any other terminal
# status, and 'exception' when point_func raised. The row always carries
# the error text, so a failing point never aborts the sweep.
#

OK_STATUSES = ('CompletedHorizon', 'ConvergedEarly')


async def default_task(index, point, config=None, point_func=None, pool=None):
    loop = asyncio.get_running_loop()
    st = time.monotonic()
    try:
        row = await loop.run_in_executor(pool, point_func, index, point, config)
        status = 'ok' if row.get('status') in OK_STATUSES and not row.get('error') else 'nok'
    except Exception as e:
        logger.warning('sweep point %d failed: %s', index, e)
        logger.debug(traceback.format_exc())
        row = dict(point, index=index, status=None, error=f'{type(e).__name__}: {e}')
        status = 'exception'
    elapsed = time.monotonic()-st
    row['outcome'] = status
    return (index, status, row, elapsed)
