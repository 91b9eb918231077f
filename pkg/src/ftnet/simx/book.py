"""Price/time-priority limit order book on flat arrays.

Price levels are integer ticks in ``[0, n_levels)``. Each level keeps a
singly linked FIFO of order slots; cancelled orders are only flagged and
are unlinked lazily the next time their level is walked. The same njit
helpers back the :class:`BookState` API and the simulation loop.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._accel import njit
from ..ingest import TradeRecord

BUY = 0
SELL = 1

# state vector slots
BEST_BID = 0
BEST_ASK = 1
N_SLOTS = 2


@njit
def _unlink(heads, tails, o_next, side, lvl, cur, prev):
    nxt = o_next[cur]
    if prev == -1:
        heads[side, lvl] = nxt
    else:
        o_next[prev] = nxt
    if tails[side, lvl] == cur:
        tails[side, lvl] = prev


@njit
def _clean_head(heads, tails, o_next, o_alive, side, lvl):
    h = heads[side, lvl]
    while h != -1 and not o_alive[h]:
        h = o_next[h]
    heads[side, lvl] = h
    if h == -1:
        tails[side, lvl] = -1
    return h


@njit
def refresh_best(state, heads, tails, o_next, o_alive):
    n_levels = heads.shape[1]
    b = state[BEST_BID]
    while b >= 0 and _clean_head(heads, tails, o_next, o_alive, BUY, b) == -1:
        b -= 1
    state[BEST_BID] = b
    a = state[BEST_ASK]
    while a < n_levels and _clean_head(heads, tails, o_next, o_alive, SELL, a) == -1:
        a += 1
    state[BEST_ASK] = a


@njit
def match_order(state, heads, tails, o_agent, o_side, o_price, o_rem, o_next, o_alive,
                agent, side, price, volume, out_buyer, out_seller, out_price, out_vol, n_out,
                rest=True):
    """Cross an incoming order, then rest any remainder unless ``rest`` is off.

    Fills are appended to the ``out_*`` arrays from position ``n_out``;
    the caller guarantees room for ``volume`` more fills. Resting orders
    owned by ``agent`` are skipped, not filled. Returns ``(n_out, slot)``
    where ``slot`` is the resting order's slot or -1.
    """
    n_levels = heads.shape[1]
    rem = volume
    opp = 1 - side
    if side == BUY:
        lvl = state[BEST_ASK]
        stop = min(price, n_levels - 1)
        step = 1
    else:
        lvl = state[BEST_BID]
        stop = max(price, 0)
        step = -1
    while rem > 0 and 0 <= lvl < n_levels and (lvl - stop) * step <= 0:
        prev = -1
        cur = heads[opp, lvl]
        while cur != -1 and rem > 0:
            nxt = o_next[cur]
            if not o_alive[cur]:
                _unlink(heads, tails, o_next, opp, lvl, cur, prev)
            elif o_agent[cur] == agent:
                prev = cur
            else:
                q = min(rem, o_rem[cur])
                if side == BUY:
                    out_buyer[n_out] = agent
                    out_seller[n_out] = o_agent[cur]
                else:
                    out_buyer[n_out] = o_agent[cur]
                    out_seller[n_out] = agent
                out_price[n_out] = lvl
                out_vol[n_out] = q
                n_out += 1
                rem -= q
                o_rem[cur] -= q
                if o_rem[cur] == 0:
                    o_alive[cur] = False
                    _unlink(heads, tails, o_next, opp, lvl, cur, prev)
                else:
                    prev = cur
            cur = nxt
        lvl += step
    refresh_best(state, heads, tails, o_next, o_alive)
    slot = -1
    if rem > 0 and rest:
        slot = state[N_SLOTS]
        state[N_SLOTS] = slot + 1
        o_agent[slot] = agent
        o_side[slot] = side
        o_price[slot] = price
        o_rem[slot] = rem
        o_next[slot] = -1
        o_alive[slot] = True
        t = tails[side, price]
        if t == -1:
            heads[side, price] = slot
        else:
            o_next[t] = slot
        tails[side, price] = slot
        if side == BUY and price > state[BEST_BID]:
            state[BEST_BID] = price
        if side == SELL and price < state[BEST_ASK]:
            state[BEST_ASK] = price
    return n_out, slot


@njit
def cancel_order(state, heads, tails, o_next, o_alive, o_rem, slot):
    if slot >= 0 and o_alive[slot]:
        o_alive[slot] = False
        o_rem[slot] = 0
        refresh_best(state, heads, tails, o_next, o_alive)


@njit
def clear_book(state, heads, tails):
    heads[:] = -1
    tails[:] = -1
    state[BEST_BID] = -1
    state[BEST_ASK] = heads.shape[1]
    state[N_SLOTS] = 0


@dataclass
class Order:
    agent: int
    side: int
    price: int
    volume: int
    tick: int = 0
    seq: int = 0
    rest: bool = True

    def __post_init__(self):
        if self.volume < 1:
            raise ValueError("order volume must be >= 1")
        if self.side not in (BUY, SELL):
            raise ValueError("side must be BUY (0) or SELL (1)")


class BookState:
    """Resting bids and asks for one commodity.

    ``names`` optionally maps agent codes to participant IDs for the trade
    records produced by :func:`match`.
    """

    def __init__(self, n_levels: int = 4096, capacity: int = 1024, names=None,
                 commodity: str = "cu"):
        self.n_levels = n_levels
        self.names = names
        self.commodity = commodity
        self.state = np.array([-1, n_levels, 0], dtype=np.int64)
        self.heads = np.full((2, n_levels), -1, dtype=np.int64)
        self.tails = np.full((2, n_levels), -1, dtype=np.int64)
        self._alloc(capacity)
        self.n_trades = 0

    def _alloc(self, capacity):
        old = getattr(self, "o_agent", None)
        arrays = {
            "o_agent": np.int64, "o_side": np.int64, "o_price": np.int64,
            "o_rem": np.int64, "o_next": np.int64, "o_alive": np.bool_,
        }
        for name, dtype in arrays.items():
            fresh = np.zeros(capacity, dtype=dtype)
            if old is not None:
                prev = getattr(self, name)
                fresh[:len(prev)] = prev
            setattr(self, name, fresh)

    @property
    def best_bid(self):
        refresh_best(self.state, self.heads, self.tails, self.o_next, self.o_alive)
        b = int(self.state[BEST_BID])
        return None if b < 0 else b

    @property
    def best_ask(self):
        refresh_best(self.state, self.heads, self.tails, self.o_next, self.o_alive)
        a = int(self.state[BEST_ASK])
        return None if a >= self.n_levels else a

    def resting(self, side: int, price: int) -> list:
        """(agent, remaining) pairs at one level in time priority."""
        out = []
        cur = self.heads[side, price]
        while cur != -1:
            if self.o_alive[cur]:
                out.append((int(self.o_agent[cur]), int(self.o_rem[cur])))
            cur = self.o_next[cur]
        return out

    def depth(self, side: int) -> dict:
        levels = {}
        for p in range(self.n_levels):
            q = sum(r for _, r in self.resting(side, p))
            if q:
                levels[p] = q
        return levels

    def cancel(self, slot: int) -> None:
        cancel_order(self.state, self.heads, self.tails, self.o_next, self.o_alive, self.o_rem, slot)

    def _name(self, code):
        return str(code) if self.names is None else self.names[code]

    def submit(self, order: Order):
        """Match ``order``; returns ``(records, resting_slot)``."""
        if not 0 <= order.price < self.n_levels:
            raise ValueError(f"price {order.price} outside [0, {self.n_levels})")
        if self.state[N_SLOTS] >= len(self.o_agent):
            self._alloc(2 * len(self.o_agent))
        v = order.volume
        buyer = np.empty(v, np.int64)
        seller = np.empty(v, np.int64)
        price = np.empty(v, np.int64)
        vol = np.empty(v, np.int64)
        n, slot = match_order(self.state, self.heads, self.tails, self.o_agent, self.o_side,
                              self.o_price, self.o_rem, self.o_next, self.o_alive,
                              order.agent, order.side, order.price, v,
                              buyer, seller, price, vol, 0, order.rest)
        records = []
        for i in range(n):
            records.append(TradeRecord(self.n_trades, int(order.tick), self.commodity,
                                       self._name(buyer[i]), self._name(seller[i]),
                                       int(vol[i]), int(price[i])))
            self.n_trades += 1
        return records, int(slot)


def match(book: BookState, incoming: Order):
    """Cross ``incoming`` against ``book`` (mutated in place)."""
    records, _ = book.submit(incoming)
    return book, records
