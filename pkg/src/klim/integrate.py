"""Monte Carlo path generation for the kinetic SDE and its homogenized forms.

All simulators share one core loop (:func:`run_paths`).  Path ``i`` is driven
by its own PCG64 stream seeded from ``SeedSequence(master_seed,
spawn_key=(stream, i))``, so a bundle depends only on the inputs and the
seed, never on the number of worker threads or the chunking.

Binary dump layout (all little-endian)::

    b"KLIM"                 4 bytes magic
    version                 uint32 (currently 1)
    n_paths, n_times        uint64, uint64
    threshold               float64
    t                       n_times float64
    v, x                    n_paths * n_times float64 each, row-major
    exploded                n_paths float64 (0.0 / 1.0)
    explosion_index         n_paths float64 (-1.0 when the path survived)
"""

from __future__ import annotations

import csv
import io
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import ExplosionError, PreconditionError
from .model import CRITICAL, DriftSpec, ModelSpec, classify_regime, eval_drift

DEFAULT_THRESHOLD = 1e6
CHUNK_PATHS = 2048
NOISE_BLOCK = 512

STREAM_PATHS = 0
STREAM_SAMPLES = 1
STREAM_INIT = 2

MAGIC = b"KLIM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQd")


def default_threads() -> int:
    env = os.environ.get("KLIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RngPolicy:
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise PreconditionError("master_seed must fit in 64 unsigned bits")

    def generator(self, index: int, stream: int = STREAM_PATHS) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(stream, int(index)))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_steps: int
    spacing: str = "uniform"
    custom_nodes: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n_steps, (int, np.integer)) or self.n_steps < 1:
            raise PreconditionError("n_steps must be a positive integer")
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise PreconditionError("grid endpoints must be finite")
        if self.t_start < 0 or self.t_end <= self.t_start:
            raise PreconditionError("grid needs 0 <= t_start < t_end")
        if self.spacing == "logarithmic" and self.t_start <= 0:
            raise PreconditionError("logarithmic grid needs t_start > 0")
        if self.spacing not in ("uniform", "logarithmic", "custom"):
            raise PreconditionError(f"unknown spacing {self.spacing!r}")

    @classmethod
    def uniform(cls, t_start, t_end, n_steps):
        return cls(float(t_start), float(t_end), int(n_steps), "uniform")

    @classmethod
    def logarithmic(cls, t_start, t_end, n_steps):
        return cls(float(t_start), float(t_end), int(n_steps), "logarithmic")

    @classmethod
    def with_step(cls, t_start, t_end, dt):
        """Uniform grid whose step is ``dt`` (``t_end - t_start`` must be a multiple)."""
        n = int(round((t_end - t_start) / dt))
        return cls.uniform(t_start, t_end, n)

    @classmethod
    def from_nodes(cls, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2 or np.any(np.diff(nodes) <= 0):
            raise PreconditionError("nodes must be strictly increasing with at least 2 entries")
        return cls(float(nodes[0]), float(nodes[-1]), len(nodes) - 1, "custom", tuple(nodes))

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.spacing == "custom":
            out = np.array(self.custom_nodes, dtype=float)
        elif self.spacing == "uniform":
            out = self.t_start + (self.t_end - self.t_start) * np.arange(self.n_steps + 1) / self.n_steps
        else:
            out = np.geomspace(self.t_start, self.t_end, self.n_steps + 1)
        out[0], out[-1] = self.t_start, self.t_end
        return out

    def index_of(self, t, rtol: float = 1e-9) -> np.ndarray:
        """Node indices of ``t``; raises if any time is not a node."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        nodes = self.nodes
        idx = np.clip(np.searchsorted(nodes, t), 1, len(nodes) - 1)
        left = np.where(np.abs(nodes[idx - 1] - t) <= np.abs(nodes[idx] - t), idx - 1, idx)
        if np.any(np.abs(nodes[left] - t) > rtol * np.maximum(1.0, np.abs(t))):
            bad = t[np.abs(nodes[left] - t) > rtol * np.maximum(1.0, np.abs(t))][0]
            raise PreconditionError(f"time {bad} is not a grid node")
        return left


@dataclass
class PathBundle:
    """Ensemble of ``(V, X)`` paths recorded at times ``t``.

    Entries after a path's explosion are NaN; ``explosion_index`` is the grid
    index of the first threshold crossing (-1 if none).
    """

    t: np.ndarray
    v: np.ndarray
    x: np.ndarray
    exploded: np.ndarray
    explosion_index: np.ndarray
    grid: TimeGrid | None = None
    threshold: float = DEFAULT_THRESHOLD

    @property
    def n_paths(self) -> int:
        return self.v.shape[0]

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def valid(self) -> np.ndarray:
        return ~self.exploded

    @property
    def explosion_fraction(self) -> float:
        return float(self.exploded.mean())

    def column(self, t: float, rtol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[i] - t) > rtol * max(1.0, abs(t)):
            raise PreconditionError(f"time {t} was not recorded")
        return i

    def values_at(self, t: float, component: str = "v", valid_only: bool = True) -> np.ndarray:
        col = getattr(self, component)[:, self.column(t)]
        return col[self.valid] if valid_only else col

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "t", "v", "x", "exploded"])
        ts = [repr(float(t)) for t in self.t]
        for i in range(self.n_paths):
            e = int(self.exploded[i])
            vi, xi = self.v[i], self.x[i]
            for j, t in enumerate(ts):
                w.writerow([i, t, repr(float(vi[j])), repr(float(xi[j])), e])
        return fh.getvalue() if own else None

    @classmethod
    def from_csv(cls, text: str) -> "PathBundle":
        rows = list(csv.DictReader(io.StringIO(text)))
        n = max(int(r["path_id"]) for r in rows) + 1
        t = np.array(sorted({float(r["t"]) for r in rows}))
        v = np.full((n, len(t)), np.nan)
        x = np.full((n, len(t)), np.nan)
        ex = np.zeros(n, dtype=bool)
        col = {tt: j for j, tt in enumerate(t)}
        for r in rows:
            i, j = int(r["path_id"]), col[float(r["t"])]
            v[i, j], x[i, j] = float(r["v"]), float(r["x"])
            ex[i] = r["exploded"] == "1"
        eidx = np.full(n, -1, dtype=np.int64)
        return cls(t, v, x, ex, eidx)

    def to_bytes(self) -> bytes:
        n, m = self.v.shape
        parts = [
            _HEADER.pack(MAGIC, VERSION, n, m, float(self.threshold)),
            np.asarray(self.t, dtype="<f8").tobytes(),
            np.ascontiguousarray(self.v, dtype="<f8").tobytes(),
            np.ascontiguousarray(self.x, dtype="<f8").tobytes(),
            self.exploded.astype("<f8").tobytes(),
            self.explosion_index.astype("<f8").tobytes(),
        ]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PathBundle":
        magic, version, n, m, thr = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise ValueError("not a KLIM dump")
        if version != VERSION:
            raise ValueError(f"unsupported KLIM version {version}")
        off = _HEADER.size

        def take(count):
            nonlocal off
            arr = np.frombuffer(data, dtype="<f8", count=count, offset=off)
            off += 8 * count
            return arr.astype(float)

        t = take(m)
        v = take(n * m).reshape(n, m)
        x = take(n * m).reshape(n, m)
        ex = take(n) != 0
        eidx = take(n).astype(np.int64)
        return cls(t, v, x, ex, eidx, threshold=thr)


def _fast_force(drift: DriftSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ``F`` specialised for the common symmetric families."""
    if drift.is_zero():
        return lambda v: np.zeros_like(v)
    if drift.symmetric():
        c, g = drift.f_plus, drift.gamma
        if g == 1.0:
            return lambda v: c * v
        if g == 0.0:
            return lambda v: c * np.sign(v)
        return lambda v: c * np.sign(v) * np.abs(v) ** g
    return lambda v: eval_drift(drift, v)


def _record_indices(grid: TimeGrid, record) -> np.ndarray:
    if record is None:
        return np.arange(grid.n_steps + 1)
    idx = np.unique(np.concatenate([[0], grid.index_of(record)]))
    return idx


def _run_chunk(drift_fn, nodes, rec_pos, v_init, x0, gens, tamed, threshold):
    n = len(gens)
    n_steps = len(nodes) - 1
    v = np.array(v_init, dtype=float, copy=True)
    x = np.full(n, float(x0))
    alive = np.ones(n, dtype=bool)
    eidx = np.full(n, -1, dtype=np.int64)
    out_v = np.empty((n, int((rec_pos >= 0).sum())))
    out_x = np.empty_like(out_v)
    dts = np.diff(nodes)
    sqdts = np.sqrt(dts)
    if rec_pos[0] >= 0:
        out_v[:, rec_pos[0]] = v
        out_x[:, rec_pos[0]] = x
    k = 0
    while k < n_steps:
        blk = min(NOISE_BLOCK, n_steps - k)
        noise = np.empty((blk, n))
        for j, g in enumerate(gens):
            noise[:, j] = g.standard_normal(blk)
        for b in range(blk):
            dt = dts[k]
            with np.errstate(over="ignore", invalid="ignore"):
                incr = drift_fn(nodes[k], v) * dt
            if tamed:
                incr = incr / (1.0 + np.abs(incr))
            v_new = v + incr + sqdts[k] * noise[b]
            x_new = x + 0.5 * dt * (v + v_new)
            with np.errstate(invalid="ignore"):
                crossed = alive & ~(np.abs(v_new) <= threshold)
            k += 1
            pos = rec_pos[k]
            if crossed.any():
                eidx[crossed] = k
                if pos >= 0:
                    out_v[:, pos] = v_new
                    out_x[:, pos] = x_new
                    out_v[~alive, pos] = np.nan
                    out_x[~alive, pos] = np.nan
                alive &= ~crossed
                v_new = np.where(alive, v_new, 0.0)
                x_new = np.where(alive, x_new, 0.0)
            elif pos >= 0:
                out_v[:, pos] = v_new
                out_x[:, pos] = x_new
                if not alive.all():
                    out_v[~alive, pos] = np.nan
                    out_x[~alive, pos] = np.nan
            v, x = v_new, x_new
    return out_v, out_x, ~alive, eidx


def run_paths(
    drift_fn: Callable[[float, np.ndarray], np.ndarray],
    grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    v_init,
    x0: float = 0.0,
    scheme: str = "euler",
    threshold: float = DEFAULT_THRESHOLD,
    record=None,
    threads: int | None = None,
    stream: int = STREAM_PATHS,
    allow_all_exploded: bool = False,
) -> PathBundle:
    """Euler or tamed-Euler integration of ``dV = b(t, V) dt + dW`` with
    trapezoidal ``X``.

    ``drift_fn(t, v)`` returns ``b`` for a vector of velocities.  The tamed
    scheme replaces the increment ``dt*b`` by ``dt*b / (1 + dt*|b|)``.
    """
    if scheme not in ("euler", "tamed_euler"):
        raise PreconditionError(f"unknown scheme {scheme!r}")
    if not isinstance(n_paths, (int, np.integer)) or n_paths < 1:
        raise PreconditionError("n_paths must be a positive integer")
    if not threshold > 0:
        raise PreconditionError("explosion threshold must be > 0")
    nodes = grid.nodes
    rec_idx = _record_indices(grid, record)
    rec_pos = np.full(len(nodes), -1, dtype=np.int64)
    rec_pos[rec_idx] = np.arange(len(rec_idx))
    v_init = np.broadcast_to(np.asarray(v_init, dtype=float), (n_paths,))
    tamed = scheme == "tamed_euler"

    chunks = [(s, min(s + CHUNK_PATHS, n_paths)) for s in range(0, n_paths, CHUNK_PATHS)]

    def work(bounds):
        lo, hi = bounds
        gens = [rng.generator(i, stream) for i in range(lo, hi)]
        return _run_chunk(drift_fn, nodes, rec_pos, v_init[lo:hi], x0, gens, tamed, threshold)

    threads = threads or default_threads()
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    bundle = PathBundle(
        t=nodes[rec_idx].copy(),
        v=np.concatenate([r[0] for r in results]),
        x=np.concatenate([r[1] for r in results]),
        exploded=np.concatenate([r[2] for r in results]),
        explosion_index=np.concatenate([r[3] for r in results]),
        grid=grid,
        threshold=threshold,
    )
    if bundle.exploded.all() and not allow_all_exploded:
        raise ExplosionError(1.0, bundle)
    return bundle


def default_scheme(drift: DriftSpec) -> str:
    return "tamed_euler" if drift.gamma > 1 else "euler"


def simulate_ske(
    spec: ModelSpec,
    grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    scheme: str | None = None,
    **kw,
) -> PathBundle:
    """Paths of ``dV = dB - t**-beta F(V) dt``, ``dX = V dt`` from ``(t0, v0, x0)``."""
    if not math.isclose(grid.t_start, spec.t0, rel_tol=1e-12):
        raise PreconditionError(f"grid starts at {grid.t_start}, model at t0={spec.t0}")
    force = _fast_force(spec.drift)
    beta = spec.beta
    if beta == 0:
        def b(t, v):
            return -force(v)
    else:
        def b(t, v):
            return -(t ** -beta) * force(v)
    return run_paths(b, grid, n_paths, rng, spec.v0, spec.x0,
                     scheme or default_scheme(spec.drift), **kw)


def simulate_exponential_homogenized(
    spec: ModelSpec,
    s_grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    h0,
    scheme: str | None = None,
    **kw,
) -> PathBundle:
    """Paths of ``dH = dW - H/2 ds - F(H) ds``; ``h0`` is a scalar or one value per path."""
    if classify_regime(spec).tag != CRITICAL:
        raise PreconditionError(f"exponential homogenization needs q = 1/2, got q={spec.q}")
    force = _fast_force(spec.drift)

    def b(s, h):
        return -0.5 * h - force(h)

    return run_paths(b, s_grid, n_paths, rng, h0, 0.0,
                     scheme or default_scheme(spec.drift), **kw)


def simulate_power_homogenized(
    drift: DriftSpec,
    s_grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    h0,
    scheme: str | None = None,
    **kw,
) -> PathBundle:
    """Paths of ``dH = dW - F(H) ds`` for ``F = rho sgn(v)|v|**gamma``, ``rho > 0``, ``gamma >= 1``."""
    if not (drift.homogeneous and drift.symmetric() and drift.f_plus > 0 and drift.gamma >= 1):
        raise PreconditionError("power homogenization needs F = rho sgn(v)|v|^gamma with rho > 0, gamma >= 1")
    force = _fast_force(drift)

    def b(s, h):
        return -force(h)

    return run_paths(b, s_grid, n_paths, rng, h0, 0.0,
                     scheme or default_scheme(drift), **kw)


def simulate_ou_exact(
    theta: float,
    sigma: float,
    grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    h0,
    record=None,
    stream: int = STREAM_PATHS,
) -> PathBundle:
    """Exact Gaussian transitions of ``dH = sigma dW - theta H ds``.

    The position row is the trapezoidal integral of the sampled nodes.
    """
    if not (theta > 0 and sigma > 0):
        raise PreconditionError("theta and sigma must be > 0")
    nodes = grid.nodes
    rec_idx = _record_indices(grid, record)
    dts = np.diff(nodes)
    decay = np.exp(-theta * dts)
    sd = sigma * np.sqrt(-np.expm1(-2 * theta * dts) / (2 * theta))
    h = np.array(np.broadcast_to(np.asarray(h0, dtype=float), (n_paths,)))
    noise = np.stack([rng.generator(i, stream).standard_normal(len(dts)) for i in range(n_paths)])
    v = np.empty((n_paths, len(nodes)))
    v[:, 0] = h
    for k in range(len(dts)):
        v[:, k + 1] = decay[k] * v[:, k] + sd[k] * noise[:, k]
    x = np.zeros_like(v)
    x[:, 1:] = np.cumsum(0.5 * dts * (v[:, 1:] + v[:, :-1]), axis=1)
    return PathBundle(nodes[rec_idx].copy(), v[:, rec_idx], x[:, rec_idx],
                      np.zeros(n_paths, dtype=bool), np.full(n_paths, -1, dtype=np.int64),
                      grid=grid, threshold=math.inf)


def wilson_interval(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    from statsmodels.stats.proportion import proportion_confint

    if n == 0:
        return 0.0, 1.0
    lo, hi = proportion_confint(k, n, alpha=alpha, method="wilson")
    return float(lo), float(hi)
