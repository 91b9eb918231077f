"""Agent population and trading loop for a single-commodity market.

Three kinds of agent share one book:

* speculators open a one-lot position with a marketable order and close it
  a short, random time later, ``activity`` times over;
* investors mostly post passive orders in one fixed direction;
* day traders enter on day one, trade heavily on both sides and flatten
  their position before each close.

All randomness is drawn up front with numpy (event times, per-event
uniforms, the mid-price path) so the sequential kernel itself is
deterministic arithmetic and gives the same stream under either backend.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .._accel import njit
from ..evolve import DAY_MS
from ..ingest import RecordTable
from .book import BUY, SELL, clear_book, match_order

SPECULATOR, INVESTOR, DAY_TRADER = 0, 1, 2
KIND_NAMES = ("speculator", "investor", "day_trader")

# event kinds, also the within-tick processing order
EV_TRADE = 0
EV_INVEST = 1
EV_OPEN = 2
EV_CLOSE = 3
EV_FLATTEN = 4

EPOCH_MS = 1_214_902_800_000  # 2008-07-01 09:00 UTC
SESSION_MS = 6 * 3_600_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    agents: int = 10_000
    frac_speculator: float = 0.7
    frac_investor: float = 0.1
    frac_day_trader: float = 0.2
    ticks_per_day: int = 2_000
    days: int = 5
    zipf_exponent: float = 2.5
    max_activity: int = 2_000
    seed: int = 0
    commodity: str = "cu"
    early_entry: float = 0.9
    day_trader_rate: float = 0.004
    investor_rate: float = 0.0005
    close_delay: float = 40.0
    aggressive: float = 0.35
    investor_passive: float = 0.8
    spread: int = 3
    max_volume: int = 3
    reversion: float = 0.15
    n_levels: int = 1_024
    mid_step: float = 0.3

    def __post_init__(self):
        if self.agents < 0:
            raise ConfigError("agents must be non-negative")
        if self.ticks_per_day < 1 or self.days < 1:
            raise ConfigError("ticks_per_day and days must be >= 1")
        fr = (self.frac_speculator, self.frac_investor, self.frac_day_trader)
        if min(fr) < 0 or not np.isclose(sum(fr), 1.0):
            raise ConfigError("population fractions must be non-negative and sum to 1")
        if self.zipf_exponent <= 1:
            raise ConfigError("zipf_exponent must exceed 1")
        if self.n_levels < 64:
            raise ConfigError("n_levels must be >= 64")

    @classmethod
    def parse(cls, text: str) -> "SimConfig":
        """Read ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (p.strip() for p in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            conv = {"int": int, "float": float, "str": str}[types[key]]
            try:
                kw[key] = conv(val)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())

    @property
    def n_ticks(self) -> int:
        return self.ticks_per_day * self.days


@dataclass(frozen=True)
class Agent:
    id: str
    kind: str
    activity_rate: float
    open_position: int = 0
    close_urgency: float = 0.0


@dataclass
class Population:
    kind: np.ndarray
    activity: np.ndarray
    entry: np.ndarray
    direction: np.ndarray
    config: SimConfig

    def __len__(self):
        return len(self.kind)

    def names(self) -> np.ndarray:
        return np.array([f"T{i:06d}" for i in range(len(self))], dtype=object)

    def agent(self, i: int) -> Agent:
        c = self.config
        k = int(self.kind[i])
        rate = {SPECULATOR: 2 * self.activity[i] / max(c.n_ticks - self.entry[i], 1),
                INVESTOR: c.investor_rate * self.activity[i],
                DAY_TRADER: c.day_trader_rate * self.activity[i]}[k]
        urgency = {SPECULATOR: 1.0 / c.close_delay, INVESTOR: 0.0, DAY_TRADER: 1.0}[k]
        return Agent(f"T{i:06d}", KIND_NAMES[k], float(rate), 0, urgency)


def _counts(c: SimConfig) -> tuple[int, int, int]:
    n_inv = int(round(c.agents * c.frac_investor))
    n_dt = int(round(c.agents * c.frac_day_trader))
    return c.agents - n_inv - n_dt, n_inv, n_dt


def make_population(c: SimConfig, rng: np.random.Generator) -> Population:
    n_spec, n_inv, n_dt = _counts(c)
    kind = np.repeat(np.array([SPECULATOR, INVESTOR, DAY_TRADER]), [n_spec, n_inv, n_dt])
    n = len(kind)
    # continuous Pareto with density exponent zipf_exponent; speculators use its floor
    activity = np.minimum((1.0 - rng.random(n)) ** (-1.0 / (c.zipf_exponent - 1.0)),
                          c.max_activity)
    early = rng.random(n) < c.early_entry
    entry = np.where(early,
                     rng.integers(0, c.ticks_per_day, size=n),
                     rng.integers(0, c.n_ticks, size=n))
    entry[kind == DAY_TRADER] = rng.integers(0, c.ticks_per_day, size=n_dt)
    direction = rng.integers(0, 2, size=n)
    return Population(kind, activity, entry.astype(np.int64), direction.astype(np.int64), c)


def _uniform_after(rng, start, horizon):
    return start + np.floor(rng.random(len(start)) * (horizon - start)).astype(np.int64)


def make_events(pop: Population, rng: np.random.Generator):
    """Event arrays ``(tick, kind, agent)`` in processing order."""
    c = pop.config
    T = c.n_ticks
    ticks, kinds, agents = [], [], []

    def add(agent_idx, t, kind):
        ticks.append(t)
        kinds.append(np.full(len(t), kind, dtype=np.int64))
        agents.append(agent_idx)

    live = T - pop.entry
    for kind, rate, ev in ((DAY_TRADER, c.day_trader_rate, EV_TRADE),
                           (INVESTOR, c.investor_rate, EV_INVEST)):
        idx = np.flatnonzero(pop.kind == kind)
        n_ev = rng.poisson(rate * pop.activity[idx] * live[idx])
        who = np.repeat(idx, n_ev)
        add(who, _uniform_after(rng, pop.entry[who], T), ev)

    spec = np.flatnonzero(pop.kind == SPECULATOR)
    trips = np.floor(pop.activity[spec]).astype(np.int64)
    who = np.repeat(spec, trips)
    t_open = _uniform_after(rng, pop.entry[who], T)
    # the first round trip opens on entry
    first = np.cumsum(trips) - trips
    t_open[first] = pop.entry[spec]
    t_close = t_open + 1 + rng.geometric(1.0 / c.close_delay, size=len(who))
    add(who, t_open, EV_OPEN)
    shut = t_close < T
    add(who[shut], t_close[shut], EV_CLOSE)

    dt = np.flatnonzero(pop.kind == DAY_TRADER)
    day_end = np.arange(1, c.days + 1) * c.ticks_per_day - 1
    add(np.tile(dt, c.days), np.repeat(day_end, len(dt)), EV_FLATTEN)

    tick = np.concatenate(ticks)
    kind = np.concatenate(kinds)
    agent = np.concatenate(agents)
    order = np.lexsort((rng.random(len(tick)), kind, tick))
    return tick[order], kind[order], agent[order]


def mid_path(c: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Reflected +-1 random walk of the mid price, one value per tick."""
    margin = 4 * (c.spread + c.max_volume) + 16
    lo, hi = margin, c.n_levels - 1 - margin
    steps = rng.choice(np.array([-1, 0, 1]), size=c.n_ticks,
                       p=[c.mid_step / 2, 1 - c.mid_step, c.mid_step / 2])
    mid = np.empty(c.n_ticks, dtype=np.int64)
    m = (lo + hi) // 2
    for i, s in enumerate(steps):
        m += s
        if m < lo or m > hi:
            m -= 2 * s
        mid[i] = m
    return mid


@njit
def _simulate(ev_tick, ev_kind, ev_agent, u, mid, direction, n_agents, ticks_per_day,
              n_levels, slot_capacity, spread, max_volume, aggressive, investor_passive,
              reversion):
    far = 2 * spread + 8
    state = np.array([-1, n_levels, 0], dtype=np.int64)
    heads = np.full((2, n_levels), -1, dtype=np.int64)
    tails = np.full((2, n_levels), -1, dtype=np.int64)
    o_agent = np.zeros(slot_capacity, dtype=np.int64)
    o_side = np.zeros(slot_capacity, dtype=np.int64)
    o_price = np.zeros(slot_capacity, dtype=np.int64)
    o_rem = np.zeros(slot_capacity, dtype=np.int64)
    o_next = np.zeros(slot_capacity, dtype=np.int64)
    o_alive = np.zeros(slot_capacity, dtype=np.bool_)
    pos = np.zeros(n_agents, dtype=np.int64)

    cap = max(1024, 2 * len(ev_tick))
    buyer = np.empty(cap, dtype=np.int64)
    seller = np.empty(cap, dtype=np.int64)
    price = np.empty(cap, dtype=np.int64)
    vol = np.empty(cap, dtype=np.int64)
    tick = np.empty(cap, dtype=np.int64)
    n_out = 0
    day = 0

    for e in range(len(ev_tick)):
        t = ev_tick[e]
        d = t // ticks_per_day
        if d != day:
            clear_book(state, heads, tails)
            day = d
        a = ev_agent[e]
        k = ev_kind[e]
        m = mid[t]
        rest = True
        if k == EV_TRADE:
            p_sell = min(max(0.5 + reversion * pos[a], 0.05), 0.95)
            side = SELL if u[e, 0] < p_sell else BUY
            volume = 1 + int(u[e, 3] * max_volume)
            if u[e, 1] < aggressive:
                px = m + far if side == BUY else m - far
                rest = False
            else:
                off = 1 + int(u[e, 2] * spread)
                px = m - off if side == BUY else m + off
        elif k == EV_INVEST:
            side = direction[a]
            volume = 1 + int(u[e, 3] * max_volume)
            if u[e, 1] < investor_passive:
                off = 1 + int(u[e, 2] * spread)
                px = m - off if side == BUY else m + off
            else:
                px = m + far if side == BUY else m - far
                rest = False
        elif k == EV_OPEN:
            side = BUY if u[e, 0] < 0.5 else SELL
            volume = 1
            px = m + far if side == BUY else m - far
            rest = False
        else:
            # closing a speculative position or flattening before the close
            if pos[a] == 0:
                continue
            side = SELL if pos[a] > 0 else BUY
            volume = abs(pos[a])
            px = m + far if side == BUY else m - far
            rest = False

        if n_out + volume > cap:
            cap = 2 * cap + volume
            buyer = _grow(buyer, cap)
            seller = _grow(seller, cap)
            price = _grow(price, cap)
            vol = _grow(vol, cap)
            tick = _grow(tick, cap)
        start = n_out
        n_out, slot = match_order(state, heads, tails, o_agent, o_side, o_price, o_rem,
                                  o_next, o_alive, a, side, px, volume,
                                  buyer, seller, price, vol, n_out, rest)
        for i in range(start, n_out):
            tick[i] = t
            pos[buyer[i]] += vol[i]
            pos[seller[i]] -= vol[i]
    return buyer[:n_out], seller[:n_out], price[:n_out], vol[:n_out], tick[:n_out]


@njit
def _grow(a, cap):
    out = np.empty(cap, dtype=a.dtype)
    out[:len(a)] = a
    return out


def run_sim(config: SimConfig | None = None) -> RecordTable:
    """Trade stream for one commodity; identical for identical configs."""
    c = config or SimConfig()
    if c.agents == 0:
        raise ConfigError("population has no agents")
    if c.agents < 2:
        raise ConfigError("need at least two agents to trade")
    rng = np.random.default_rng(np.random.SeedSequence([c.seed, 0x51A]))
    pop = make_population(c, rng)
    ev_tick, ev_kind, ev_agent = make_events(pop, rng)
    u = rng.random((len(ev_tick), 4))
    mid = mid_path(c, rng)
    per_day = np.bincount(ev_tick // c.ticks_per_day, minlength=c.days)
    buyer, seller, price, vol, tick = _simulate(
        ev_tick, ev_kind, ev_agent, u, mid, pop.direction, len(pop), c.ticks_per_day,
        c.n_levels, int(per_day.max()) + 1, c.spread, c.max_volume, c.aggressive,
        c.investor_passive, c.reversion)
    tick_ms = SESSION_MS // c.ticks_per_day
    day, within = np.divmod(tick, c.ticks_per_day)
    ts = EPOCH_MS + day * DAY_MS + within * tick_ms
    n = len(buyer)
    return RecordTable(
        timestamp=ts.astype(np.int64), buyer=buyer, seller=seller, names=pop.names(),
        commodity=np.full(n, c.commodity, dtype=object), volume=vol, price=price,
    )


def interleave(tables: list[RecordTable], overlap: float = 0.0, seed: int = 0) -> RecordTable:
    """Merge single-commodity runs into one multi-commodity stream.

    Agent names are made disjoint per run (``<name>.<run>``) except for a
    random ``overlap`` fraction of each later run's agents, which are
    renamed onto agents of run 0 so the same participant trades several
    commodities. Records are merged by timestamp, ties keeping run order.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1E]))
    names, buyers, sellers, offset = [], [], [], 0
    for r, tab in enumerate(tables):
        own = np.array([f"{s}.{r}" for s in tab.name_of(np.arange(len(tab.names)))],
                       dtype=object)
        remap = np.arange(len(own)) + offset
        if r > 0 and overlap > 0:
            share = np.flatnonzero(rng.random(len(own)) < overlap)
            share = share[share < len(names[0])]
            remap[share] = share
        names.append(own)
        buyers.append(remap[tab.buyer])
        sellers.append(remap[tab.seller])
        offset += len(own)
    ts = np.concatenate([t.timestamp for t in tables])
    order = np.argsort(ts, kind="stable")

    def cat(attr):
        return np.concatenate([getattr(t, attr) for t in tables])[order]

    return RecordTable(ts[order], np.concatenate(buyers)[order], np.concatenate(sellers)[order],
                       np.concatenate(names), cat("commodity"), cat("volume"), cat("price"))
