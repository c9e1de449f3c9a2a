"""
Test the atomic primitives under contention.
"""
from concurrent.futures import ThreadPoolExecutor

from atomics import AtomicFlag, AtomicInt, SessionClock


def test_flag_is_won_once():
    for _ in range(50):
        flag = AtomicFlag()
        with ThreadPoolExecutor(max_workers=8) as pool:
            outcomes = list(pool.map(lambda _: flag.test_and_set(), range(32)))
        assert outcomes.count(False) == 1, "exactly one caller must see the flag clear"
        assert flag.is_set()


def test_counter_under_contention():
    counter = AtomicInt()

    def bump(_):
        for _ in range(1000):
            counter.increment_and_get()

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(bump, range(8)))
    assert counter.get() == 8000
    assert str(counter) == "AtomicInt[value=8000]"


def test_clock_sequence_and_time_agree():
    clock = SessionClock()
    with ThreadPoolExecutor(max_workers=4) as pool:
        stamps = list(pool.map(lambda _: clock.stamp(), range(400)))
    stamps.sort()
    assert [seq for seq, _ in stamps] == list(range(1, 401))
    times = [ts for _, ts in stamps]
    assert times == sorted(times)
