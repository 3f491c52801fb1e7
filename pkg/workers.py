"""Пул потоков для независимых выборок."""
import concurrent.futures
import logging
import os

logger = logging.getLogger(__name__)

# Размер блока не зависит от числа потоков, поэтому свёртки видят одни и те же блоки
CHUNK_SIZE = 512

_threads = os.cpu_count() or 1


def set_threads(count):
    global _threads
    if count is None:
        count = os.cpu_count() or 1
    if count < 1:
        raise ValueError(f"Число потоков должно быть >= 1: {count}")
    _threads = int(count)
    logger.info(f"Размер пула потоков: {_threads}")


def get_threads():
    return _threads


def chunked(array, size=CHUNK_SIZE):
    return [array[start:start + size] for start in range(0, len(array), size)]


def parallel_map(fn, items):
    """fn по элементам, результаты в исходном порядке."""
    items = list(items)
    if _threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=_threads) as executor:
        return list(executor.map(fn, items))
