import asyncio

import pytest

from singular_chemotaxis.executors import single_run, sliding_window_executor
from singular_chemotaxis.tasks import default_task


def points(n):
    return [{'mu': float(i + 1), 'index': i} for i in range(n)]


async def test_sliding_window_respects_workers():
    """Never more than `workers` points in flight, every point run once"""
    running = 0
    peak = 0
    seen = []

    async def task(index, point, delay=0.01):
        nonlocal running, peak
        running += 1
        peak = max(peak, running)
        # later points finish first
        await asyncio.sleep(delay * (10 - index))
        running -= 1
        seen.append(index)
        return (index, 'ok', {'index': index}, 0.0)

    callbacks = []
    elapsed, results = await sliding_window_executor(
        points(8), {'delay': 0.002}, workers=3, task_func=task, request_cb=callbacks.append)
    assert peak == 3
    assert sorted(seen) == list(range(8))
    assert len(results) == len(callbacks) == 8
    assert elapsed >= 0


async def test_sliding_window_single_worker_keeps_order():
    async def task(index, point):
        return (index, 'ok', dict(point), 0.0)

    _elapsed, results = await sliding_window_executor(points(4), {}, workers=0, task_func=task)
    assert [r[0] for r in results] == [0, 1, 2, 3]


async def test_single_run():
    async def task(index, point, scale):
        return (index, 'ok', {'mu': scale * point['mu']}, 0.0)

    result = await single_run({'mu': 2.0, 'index': 5}, {'scale': 3.0}, task_func=task)
    assert result == (5, 'ok', {'mu': 6.0}, 0.0)


def converged(index, point, config):
    return {'index': index, 'status': 'ConvergedEarly', 'error': None}


def floor_hit(index, point, config):
    return {'index': index, 'status': 'VFloorHit', 'error': None}


def in_row_error(index, point, config):
    return {'index': index, 'status': None, 'error': 'DomainError: mu must be > 0'}


def raises(index, point, config):
    raise RuntimeError('worker died')


@pytest.mark.parametrize('point_func, expected', [
    (converged, 'ok'),
    (floor_hit, 'nok'),
    (in_row_error, 'nok'),
    (raises, 'exception'),
])
async def test_default_task_outcomes(point_func, expected):
    index, status, row, elapsed = await default_task(
        2, {'mu': 1.0, 'index': 2}, config=None, point_func=point_func)
    assert index == 2
    assert status == expected
    assert row['outcome'] == expected
    assert elapsed >= 0


async def test_default_task_exception_row():
    _index, _status, row, _elapsed = await default_task(
        0, {'mu': 1.0, 'index': 0}, point_func=raises)
    assert row['mu'] == 1.0
    assert row['error'] == 'RuntimeError: worker died'
