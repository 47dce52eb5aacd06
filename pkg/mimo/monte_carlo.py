# mimo/monte_carlo.py
"""
Physical-layer and slot-level simulator used as ground truth for the analysis.

Channels are i.i.d. Rayleigh (CN(0, I_M) per user), redrawn every slot. The base
station applies maximal ratio combining with perfect CSI and a user decodes iff
rho < log2(1 + SINR). Every slot generates a fresh status packet; nothing is
retransmitted.

Random streams: a Philox generator keyed by SeedSequence(master_seed,
spawn_key=(stream_id, *key)). Work is cut into fixed-size chunks, each with its own key,
so results do not depend on how many threads run them.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from mimo.analytic_pep import Method, PepResult
from mimo.asymptotic import AoiEstimate, AoiSource
from mimo.errors import InsufficientSamplesError
from mimo.system_model import SystemConfig, validate
from utils import worker_count

logger = logging.getLogger(__name__)

# Complex channel entries allowed per chunk; sets the chunk size for a given (N, M).
CHUNK_ENTRIES = 1 << 20
MAX_CHUNK = 8192
CI_SIGMAS = 3.0
# Below this many failures (or successes) the normal CI is replaced by Clopper-Pearson.
MIN_NORMAL_EVENTS = 50
_CP_LEVEL = 0.9973

_PEP_STREAM = 0
_AOI_STREAM = 1


# =========================
# Models
# =========================

@dataclass(frozen=True)
class RngSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2 ** 64):
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be ≥ 0")

    def generator(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *key))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ChannelRealization:
    vectors: np.ndarray  # (N, M) complex

    @property
    def n_users(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class SlotOutcome:
    active_mask: np.ndarray
    decoded_mask: np.ndarray
    sinr: np.ndarray  # nan where the user is idle

    def __post_init__(self):
        if np.any(self.decoded_mask & ~self.active_mask):
            raise ValueError("a decoded user must be active")


@dataclass(frozen=True)
class AoiMode:
    """`physical` simulates the uplink every slot; `geometric` draws each update with probability gamma."""

    kind: str
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("physical", "geometric"):
            raise ValueError(f"unknown AoI mode '{self.kind}'")
        if self.kind == "geometric":
            if self.gamma is None or not (0.0 <= self.gamma <= 1.0):
                raise ValueError("geometric mode needs gamma in [0,1]")

    @classmethod
    def physical(cls) -> "AoiMode":
        return cls("physical")

    @classmethod
    def geometric(cls, gamma: float) -> "AoiMode":
        return cls("geometric", gamma)


# =========================
# Channels and SINR
# =========================

def _draw_channels(gen: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    # unit variance per complex entry: 1/2 on each of the real and imaginary parts
    real = gen.standard_normal(shape)
    imag = gen.standard_normal(shape)
    return (real + 1j * imag) / math.sqrt(2.0)


def sample_channels(rng: RngSpec, N: int, M: int) -> ChannelRealization:
    if N < 1 or M < 1:
        raise ValueError("need N ≥ 1 and M ≥ 1")
    return ChannelRealization(vectors=_draw_channels(rng.generator(), (N, M)))


def _mrc_sinr(gram: np.ndarray, active: np.ndarray, tx_power: float, noise_var: float) -> np.ndarray:
    """
    SINR_i = ||h_i||^4 P / (||h_i||^2 sigma^2 + sum_{j != i, active} |h_i^H h_j|^2 P)
    from Gram matrices of shape (..., N, N) and activity masks (..., N).
    """
    norms = np.real(np.diagonal(gram, axis1=-2, axis2=-1))
    n = gram.shape[-1]
    cross = np.abs(gram) ** 2 * (1.0 - np.eye(n))
    interference = tx_power * np.einsum("...ij,...j->...i", cross, active.astype(float))
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = norms ** 2 * tx_power / (norms * noise_var + interference)
    return np.where(active, sinr, np.nan)


def slot_sinr(channels: ChannelRealization, active: np.ndarray, tx_power: float, noise_var: float) -> np.ndarray:
    """MRC SINR per user; nan for idle users, inf for a lone user without noise."""
    active = np.asarray(active, dtype=bool)
    if active.shape != (channels.n_users,):
        raise ValueError("active mask must have one entry per user")
    h = channels.vectors
    gram = h.conj() @ h.T
    return _mrc_sinr(gram, active, tx_power, noise_var)


def _decoded(sinr: np.ndarray, rho: float) -> np.ndarray:
    # strict: a tie at rho == log2(1 + sinr) is a failure
    with np.errstate(invalid="ignore"):
        return np.log2(1.0 + sinr) > rho


def decode_slot(channels: ChannelRealization, active: np.ndarray, config: SystemConfig) -> SlotOutcome:
    active = np.asarray(active, dtype=bool)
    sinr = slot_sinr(channels, active, config.tx_power, config.noise_var)
    decoded = active & _decoded(sinr, config.spectral_eff)
    return SlotOutcome(active_mask=active, decoded_mask=decoded, sinr=sinr)


# =========================
# Chunked execution
# =========================

def _chunk_size(N: int, M: int) -> int:
    return max(1, min(MAX_CHUNK, CHUNK_ENTRIES // (N * M)))


def _chunks(total: int, size: int) -> List[Tuple[int, int]]:
    return [(start, min(size, total - start)) for start in range(0, total, size)]


def _run_chunks(fn: Callable[[int, int], object], chunks: List[Tuple[int, int]]) -> list:
    """Apply fn(index, length) to every chunk; results come back in chunk order."""
    workers = min(worker_count(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda item: fn(item[0], item[1][1]), enumerate(chunks)))
    return [fn(i, length) for i, (_, length) in enumerate(chunks)]


# =========================
# Packet error probability
# =========================

def _pep_chunk(config: SystemConfig, rng: RngSpec, index: int, n: int) -> Tuple[int, int]:
    """(conditioning trials, failures) for user 0 over n independent slots."""
    gen = rng.generator(_PEP_STREAM, index)
    N, M = config.n_users, config.n_antennas
    active = gen.random((n, N)) < config.attempt_prob
    h = _draw_channels(gen, (n, N, M))

    h0 = h[:, 0, :]
    norm0 = np.sum(np.abs(h0) ** 2, axis=1)
    g = np.einsum("tm,tjm->tj", h0.conj(), h[:, 1:, :])
    interference = config.tx_power * np.sum(np.abs(g) ** 2 * active[:, 1:], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = norm0 ** 2 * config.tx_power / (norm0 * config.noise_var + interference)

    cond = active[:, 0]
    failed = cond & ~_decoded(sinr, config.spectral_eff)
    return int(np.count_nonzero(cond)), int(np.count_nonzero(failed))


def _ci_halfwidth(failures: int, n: int) -> float:
    p_hat = failures / n
    if min(failures, n - failures) >= MIN_NORMAL_EVENTS:
        return CI_SIGMAS * math.sqrt(p_hat * (1.0 - p_hat) / n)

    tail = (1.0 - _CP_LEVEL) / 2.0
    lo = float(stats.beta.ppf(tail, failures, n - failures + 1)) if failures > 0 else 0.0
    hi = float(stats.beta.isf(tail, failures + 1, n - failures)) if failures < n else 1.0
    logger.warning(f"{failures} failures in {n} trials; using a Clopper-Pearson interval")
    return max(p_hat - lo, hi - p_hat)


def empirical_pep(config: SystemConfig, trials: int, rng: RngSpec) -> PepResult:
    """
    Fraction of slots in which user 0, given that it transmits, fails the rate test.

    Slots where user 0 is idle are drawn but left out of the denominator.
    ci_halfwidth is 3 standard errors, or the half-width of a 99.73% Clopper-Pearson
    interval when fewer than 50 failures (or successes) were seen.
    """
    validate(config)
    if trials < 1:
        raise ValueError("trials must be ≥ 1")

    chunks = _chunks(trials, _chunk_size(config.n_users, config.n_antennas))
    counts = _run_chunks(lambda i, n: _pep_chunk(config, rng, i, n), chunks)
    n_cond = sum(c for c, _ in counts)
    failures = sum(f for _, f in counts)

    if n_cond == 0:
        raise InsufficientSamplesError(
            f"insufficient samples: user 0 never transmitted in {trials} trials (tau={config.attempt_prob:g})"
        )
    p_hat = failures / n_cond
    halfwidth = _ci_halfwidth(failures, n_cond)
    logger.info(f"empirical p_e={p_hat:.6g} ± {halfwidth:.2e} from {n_cond} of {trials} trials")
    return PepResult(p_e=p_hat, method=Method.MONTE_CARLO, ci_halfwidth=halfwidth)


# =========================
# Age of information
# =========================

def age_area(success_slots: Sequence[int], horizon: int) -> int:
    """
    Area under the age staircase over slots 1..horizon, with age 0 before slot 1, age 1
    in a slot with an update and +1 per slot otherwise.

    Sum of the base rectangle (one unit per slot) and triangular pieces: the leading
    piece up to the first update, one per inter-update time Z, and the trailing piece
    after the last update.
    """
    if horizon < 1:
        raise ValueError("horizon must be ≥ 1")
    slots = np.asarray(success_slots, dtype=np.int64)
    if slots.size == 0:
        return horizon + horizon * (horizon - 1) // 2
    if slots[0] < 1 or slots[-1] > horizon or np.any(np.diff(slots) <= 0):
        raise ValueError("success slots must be strictly increasing within 1..horizon")

    first = int(slots[0])
    last_run = horizon - int(slots[-1]) + 1
    z = np.diff(slots)
    middle = int(np.sum(z * (z - 1) // 2))
    return horizon + (first - 1) * (first - 2) // 2 + middle + last_run * (last_run - 1) // 2


def direct_age_area(success_mask: Sequence[bool]) -> int:
    """Slot-by-slot accumulation of the same age process."""
    age = 0
    total = 0
    for success in success_mask:
        age = 1 if success else age + 1
        total += age
    return total


def interarrival_times(success_mask: np.ndarray) -> np.ndarray:
    """Slots between consecutive updates."""
    return np.diff(np.flatnonzero(np.asarray(success_mask, dtype=bool)))


def renewal_aoi(z: np.ndarray) -> float:
    """Renewal-reward average age E[Z^2]/(2 E[Z]) + 1/2 from inter-update times."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("need at least one inter-update time")
    return float(np.mean(z ** 2) / (2.0 * np.mean(z)) + 0.5)


def _physical_chunk(config: SystemConfig, rng: RngSpec, index: int, n: int) -> np.ndarray:
    gen = rng.generator(_AOI_STREAM, index)
    N, M = config.n_users, config.n_antennas
    active = gen.random((n, N)) < config.attempt_prob
    h = _draw_channels(gen, (n, N, M))
    gram = np.einsum("snm,skm->snk", h.conj(), h)
    sinr = _mrc_sinr(gram, active, config.tx_power, config.noise_var)
    return active & _decoded(sinr, config.spectral_eff)


def _geometric_chunk(n_users: int, gamma: float, rng: RngSpec, index: int, n: int) -> np.ndarray:
    gen = rng.generator(_AOI_STREAM, index)
    return gen.random((n, n_users)) < gamma


def success_trace(config: SystemConfig, horizon_slots: int, rng: RngSpec, mode: AoiMode) -> np.ndarray:
    """(horizon, N) boolean matrix of successful updates."""
    validate(config)
    if horizon_slots < 1:
        raise ValueError("horizon_slots must be ≥ 1")
    N = config.n_users
    if mode.kind == "physical":
        chunks = _chunks(horizon_slots, _chunk_size(N, config.n_antennas))
        parts = _run_chunks(lambda i, n: _physical_chunk(config, rng, i, n), chunks)
    else:
        chunks = _chunks(horizon_slots, _chunk_size(N, 1))
        parts = _run_chunks(lambda i, n: _geometric_chunk(N, mode.gamma, rng, i, n), chunks)
    return np.concatenate(parts, axis=0)


def simulate_aoi(config: SystemConfig, horizon_slots: int, rng: RngSpec, mode: AoiMode) -> AoiEstimate:
    """Time-average age of every user over the horizon; delta is their mean."""
    trace = success_trace(config, horizon_slots, rng, mode)
    per_user = tuple(
        age_area(np.flatnonzero(trace[:, i]) + 1, horizon_slots) / horizon_slots
        for i in range(trace.shape[1])
    )
    delta = math.fsum(per_user) / len(per_user)
    logger.info(f"simulated AoI {delta:.6g} over {horizon_slots} slots ({mode.kind} mode)")
    return AoiEstimate(delta=delta, source=AoiSource.SIMULATED, per_user=per_user)


def empirical_network_aoi(per_user: Union[AoiEstimate, Sequence[float]]) -> float:
    """Network-wide average: arithmetic mean of the per-user ages."""
    if isinstance(per_user, AoiEstimate):
        if per_user.per_user is None:
            return per_user.delta
        values = per_user.per_user
    else:
        values = tuple(per_user)
    if not values:
        raise ValueError("need at least one per-user AoI")
    return math.fsum(values) / len(values)
