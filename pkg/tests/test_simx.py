import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftnet.simx import BUY, SELL, BookState, ConfigError, Order, SimConfig, interleave, match, run_sim
from ftnet.simx.market import EPOCH_MS

import oracles

SMALL = SimConfig(agents=300, ticks_per_day=200, days=3, max_activity=200, seed=4)


def fills(records):
    return [(r.buyer, r.seller, r.price, r.volume) for r in records]


def test_partial_fill_rests_remainder():
    book = BookState(n_levels=256)
    book, recs = match(book, Order(1, SELL, 100, 2))
    assert recs == [] and book.best_ask == 100
    book, recs = match(book, Order(2, BUY, 101, 3))
    # fills at the resting price; the leftover unit becomes the best bid
    assert fills(recs) == [("2", "1", 100, 2)]
    assert book.best_ask is None and book.best_bid == 101
    assert book.resting(BUY, 101) == [(2, 1)]


def test_price_then_time_priority():
    book = BookState(n_levels=256)
    for agent, price in [(1, 105), (2, 103), (3, 103), (4, 104)]:
        book.submit(Order(agent, SELL, price, 1))
    recs, _ = book.submit(Order(9, BUY, 110, 4))
    assert [r.seller for r in recs] == ["2", "3", "4", "1"]
    assert [r.price for r in recs] == [103, 103, 104, 105]


def test_own_orders_are_skipped():
    book = BookState(n_levels=256)
    book.submit(Order(1, SELL, 100, 1))
    book.submit(Order(2, SELL, 101, 1))
    recs, slot = book.submit(Order(1, BUY, 102, 1))
    assert fills(recs) == [("1", "2", 101, 1)]
    assert book.best_ask == 100 and slot == -1


def test_ioc_does_not_rest():
    book = BookState(n_levels=256)
    recs, slot = book.submit(Order(1, BUY, 50, 2, rest=False))
    assert recs == [] and slot == -1 and book.best_bid is None


def test_cancel():
    book = BookState(n_levels=256)
    _, slot = book.submit(Order(1, BUY, 40, 3))
    book.submit(Order(2, BUY, 39, 1))
    book.cancel(slot)
    assert book.best_bid == 39
    recs, _ = book.submit(Order(3, SELL, 30, 5))
    assert fills(recs) == [("2", "3", 39, 1)]


def test_order_validation():
    with pytest.raises(ValueError):
        Order(1, BUY, 10, 0)
    with pytest.raises(ValueError):
        Order(1, 2, 10, 1)
    with pytest.raises(ValueError):
        BookState(n_levels=64).submit(Order(1, BUY, 64, 1))


orders = st.lists(
    st.tuples(st.integers(0, 5), st.sampled_from([BUY, SELL]), st.integers(10, 20),
              st.integers(1, 4), st.booleans()),
    max_size=80,
)


@settings(max_examples=150, deadline=None)
@given(orders)
def test_matches_naive_replay(seq):
    book = BookState(n_levels=64, capacity=4)
    got = []
    for agent, side, price, vol, rest in seq:
        recs, _ = book.submit(Order(agent, side, price, vol, rest=rest))
        got.extend((int(b), int(s), p, v) for b, s, p, v in fills(recs))
    assert got == oracles.naive_book_replay(seq)


@pytest.fixture(scope="module")
def small_run():
    return run_sim(SMALL)


def test_stream_invariants(small_run):
    t = small_run
    assert len(t) > 200
    assert np.all(t.buyer != t.seller)
    assert np.all(np.diff(t.timestamp) >= 0)
    assert np.all(t.volume >= 1)
    assert np.all((t.price >= 0) & (t.price < SMALL.n_levels))
    assert t.timestamp[0] >= EPOCH_MS
    assert set(t.commodity) == {"cu"}
    assert len(t.names) == SMALL.agents


def test_run_is_deterministic(small_run):
    again = run_sim(SMALL)
    for f in ("timestamp", "buyer", "seller", "volume", "price"):
        assert np.array_equal(getattr(again, f), getattr(small_run, f))
    other = run_sim(SimConfig(**{**SMALL.to_dict(), "seed": 5}))
    assert len(other) != len(small_run) or not np.array_equal(other.buyer, small_run.buyer)


def test_two_agents_can_trade():
    cfg = SimConfig(agents=2, frac_speculator=0.0, frac_investor=0.0, frac_day_trader=1.0,
                    day_trader_rate=0.05, ticks_per_day=400, days=1, seed=1)
    t = run_sim(cfg)
    assert len(t) >= 1
    assert set(t.name_of(t.buyer)) | set(t.name_of(t.seller)) <= set(t.names)


@pytest.mark.parametrize("kw", [
    {"agents": 0}, {"agents": 1}, {"frac_speculator": 0.5},
    {"zipf_exponent": 1.0}, {"days": 0}, {"n_levels": 10},
])
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        run_sim(SimConfig(**kw))


def test_config_text_round_trip():
    cfg = SimConfig(agents=55, seed=9, commodity="ru")
    assert SimConfig.parse(cfg.to_text()) == cfg
    assert SimConfig.parse("# comment\nagents = 12  # trailing\n\n").agents == 12
    for bad in ("agents 12", "nope = 1", "agents = many"):
        with pytest.raises(ConfigError):
            SimConfig.parse(bad)


def test_interleave(small_run):
    other = run_sim(SimConfig(**{**SMALL.to_dict(), "seed": 6, "commodity": "ru"}))
    merged = interleave([small_run, other], overlap=0.3, seed=1)
    assert len(merged) == len(small_run) + len(other)
    assert np.all(np.diff(merged.timestamp) >= 0)
    assert set(merged.commodity) == {"cu", "ru"}
    names = merged.name_of
    cu = merged.commodity == "cu"
    ru_agents = set(names(merged.buyer[~cu])) | set(names(merged.seller[~cu]))
    shared = {a for a in ru_agents if a.endswith(".0")}
    assert shared and len(shared) < len(ru_agents)
    disjoint = interleave([small_run, other])
    cu = disjoint.commodity == "cu"
    assert not set(disjoint.name_of(disjoint.buyer[~cu])) & set(disjoint.name_of(disjoint.buyer[cu]))
    with pytest.raises(ValueError):
        interleave([small_run], overlap=1.5)
