"""Synthetic stand-in for the photonic steering experiment.

Generates Werner-family two-qubit states, samples tomography counts for the
certification stage, and emits time-tagged detection streams for the
randomness-generation stage.  Losses on the untrusted side are modelled as
independent Bernoulli survival with probability ``eta_alice``; lost photons
simply produce no time tag, which is how null outcomes enter the raw data.

Timestamps are integer picoseconds throughout so that coincidence windowing
is exact.  All sampling is driven by ``numpy.random.Generator`` seeded from
``ExperimentConfig.rng_seed``; fixed seed means byte-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .assemblage import (
    BOB_BASES,
    SETTINGS,
    MeasurementSet,
    TomographyCounts,
    born_probabilities,
    bob_projectors,
    default_measurements,
    ideal_assemblage,
)
from .extractor import BitString
from .linalg import assert_density_matrix, singlet_state, tensor

PARTY_ALICE = 0
PARTY_BOB = 1

#: Record layout shared by the in-memory streams and the on-disk format:
#: one byte party, one byte channel, eight bytes little-endian picoseconds.
TAG_DTYPE = np.dtype([("party", "u1"), ("channel", "u1"), ("time_ps", "<u8")])

GROUND_TRUTH_DTYPE = np.dtype(
    [
        ("time_ps", "<u8"),
        ("alice_outcome", "i1"),
        ("bob_outcome", "i1"),
        ("alice_index", "<i8"),
        ("bob_index", "<i8"),
    ]
)

PAIR_DTYPE = np.dtype(
    [
        ("alice_index", "<i8"),
        ("bob_index", "<i8"),
        ("alice_channel", "u1"),
        ("bob_channel", "u1"),
        ("bob_time_ps", "<u8"),
    ]
)

# Independent RNG lanes so that adding tomography trials does not disturb
# the stream sample and vice versa.
_TOMOGRAPHY_LANE = 1
_STREAM_LANE = 2

_PS_PER_SECOND = 1e12


@dataclass
class ExperimentConfig:
    """Knobs of the simulated run.

    ``visibility`` is the Werner mixing weight, ``eta_alice`` the heralding
    efficiency of the untrusted side, ``eta_bob`` the trusted side's detector
    efficiency.  ``trials_certification`` is the number of tomography trials
    recorded per (setting, basis) configuration.  ``duration_rng`` is the
    wall-clock length of the randomness-generation stream in seconds and
    ``pair_rate`` the expected pair-emission rate in pairs per second.
    """

    visibility: float = 0.99
    eta_alice: float = 0.8
    eta_bob: float = 1.0
    pair_rate: float = 1e5
    trials_certification: int = 100_000
    duration_rng: float = 1.0
    coincidence_window: float = 3e-9
    rng_seed: int = 0
    # Extras beyond the basic experiment: the fixed measurement choices of
    # the randomness-generation stage, Gaussian timing jitter, and an
    # uncorrelated background ("dark") tag rate per party.
    rng_setting: str = "Z"
    bob_rng_basis: str = "Z"
    timing_jitter: float = 2e-10
    dark_rate: float = 0.0

    def validate(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if not 0.0 <= self.eta_alice <= 1.0:
            raise ValueError(f"eta_alice must lie in [0, 1], got {self.eta_alice}")
        if not 0.0 < self.eta_bob <= 1.0:
            raise ValueError(f"eta_bob must lie in (0, 1], got {self.eta_bob}")
        if self.pair_rate <= 0:
            raise ValueError("pair_rate must be positive")
        if self.trials_certification < 0:
            raise ValueError("trials_certification must be non-negative")
        if self.duration_rng <= 0:
            raise ValueError("duration_rng must be positive")
        if self.coincidence_window <= 0:
            raise ValueError("coincidence_window must be positive")
        if self.rng_setting not in SETTINGS:
            raise ValueError(f"rng_setting must be one of {SETTINGS}")
        if self.bob_rng_basis not in BOB_BASES:
            raise ValueError(f"bob_rng_basis must be one of {BOB_BASES}")
        if self.timing_jitter < 0:
            raise ValueError("timing_jitter must be non-negative")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be non-negative")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**data).validate()


@dataclass
class StreamResult:
    """Output of ``simulate_streams``.

    ``alice_tags`` and ``bob_tags`` are ``TAG_DTYPE`` arrays sorted by
    timestamp.  ``ground_truth`` records, per emitted pair, the sampled
    outcomes and the indices of the corresponding tags in the sorted streams
    (-1 where the photon went undetected).  The ground truth exists for
    validating the coincidence search and never feeds the protocol.
    """

    alice_tags: np.ndarray
    bob_tags: np.ndarray
    ground_truth: np.ndarray


def werner_state(visibility: float) -> np.ndarray:
    """Werner-family state: ``V |psi-><psi-| + (1-V)/4 * identity``."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    rho = visibility * singlet_state() + (1.0 - visibility) * np.eye(4) / 4.0
    assert_density_matrix(rho, name="werner state")
    return rho


def simulate_tomography(
    config: ExperimentConfig, measurements: MeasurementSet | None = None
) -> TomographyCounts:
    """Sample certification-stage counts.

    For each of the six (setting, Bob basis) configurations an independent
    multinomial of ``trials_certification`` trials is drawn from the Born
    probabilities of the lossy ideal assemblage.  Bob's detector efficiency
    drops out here because trials are conditioned on a Bob detection.
    """
    config.validate()
    if measurements is None:
        measurements = default_measurements()
    rho = werner_state(config.visibility)
    assem = ideal_assemblage(rho, measurements, eta=config.eta_alice)
    probs = born_probabilities(assem)
    rng = np.random.default_rng([config.rng_seed, _TOMOGRAPHY_LANE])

    entries = {}
    for x in assem.settings:
        for b in BOB_BASES:
            cells = [(x, a, b, beta) for a in (0, 1, None) for beta in (0, 1)]
            p = np.array([probs[c] for c in cells])
            p = np.clip(p, 0.0, None)
            p = p / p.sum()
            draws = rng.multinomial(config.trials_certification, p)
            for cell, count in zip(cells, draws):
                entries[cell] = int(count)
    return TomographyCounts.from_entries(entries, settings=assem.settings)


def _joint_channel_probabilities(config: ExperimentConfig, measurements: MeasurementSet) -> np.ndarray:
    """Born probabilities p[a, beta] for the fixed RNG-stage settings."""
    rho = werner_state(config.visibility)
    effects = measurements.effects[config.rng_setting]
    projs = bob_projectors()
    p = np.empty((2, 2))
    for a in (0, 1):
        for beta in (0, 1):
            op = tensor(effects[a], projs[(config.bob_rng_basis, beta)])
            p[a, beta] = float(np.real(np.trace(op @ rho)))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _sorted_party_stream(
    party: int,
    pair_times: np.ndarray,
    channels: np.ndarray,
    detected: np.ndarray,
    jitter: np.ndarray,
    dark_times: np.ndarray,
    dark_channels: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble one party's tag array sorted by time.

    Returns the sorted ``TAG_DTYPE`` array and, for each emitted pair, the
    index of its tag in that array (-1 where undetected).
    """
    pair_ids = np.flatnonzero(detected)
    times = pair_times[pair_ids].astype(np.int64) + jitter[pair_ids]
    times = np.maximum(times, 0).astype(np.uint64)
    chans = channels[pair_ids].astype(np.uint8)

    all_times = np.concatenate([times, dark_times.astype(np.uint64)])
    all_chans = np.concatenate([chans, dark_channels.astype(np.uint8)])
    # Pair id for each pre-sort tag; dark tags carry -1.
    origin = np.concatenate([pair_ids, np.full(len(dark_times), -1, dtype=np.int64)])

    order = np.argsort(all_times, kind="stable")
    tags = np.zeros(len(order), dtype=TAG_DTYPE)
    tags["party"] = party
    tags["channel"] = all_chans[order]
    tags["time_ps"] = all_times[order]

    index_of_pair = np.full(len(pair_times), -1, dtype=np.int64)
    origin_sorted = origin[order]
    real = origin_sorted >= 0
    index_of_pair[origin_sorted[real]] = np.flatnonzero(real)
    return tags, index_of_pair


def simulate_streams(
    config: ExperimentConfig, measurements: MeasurementSet | None = None
) -> StreamResult:
    """Generate the randomness-stage time-tag streams.

    Pair emissions form a Poisson process at ``pair_rate`` over
    ``duration_rng`` seconds.  Each pair's joint outcome is sampled from the
    Born probabilities at the fixed RNG setting; each photon then survives to
    detection independently with its party's efficiency.  Small Gaussian
    timing jitter is applied per detector so the coincidence window does real
    work.  Optional dark tags are uncorrelated and uniform in time.
    """
    config.validate()
    if measurements is None:
        measurements = default_measurements()
    rng = np.random.default_rng([config.rng_seed, _STREAM_LANE])

    duration_ps = config.duration_rng * _PS_PER_SECOND
    n_pairs = int(rng.poisson(config.pair_rate * config.duration_rng))
    pair_times = np.sort(rng.random(n_pairs)) * duration_ps
    pair_times = pair_times.astype(np.int64)

    p_joint = _joint_channel_probabilities(config, measurements).ravel()
    joint = rng.choice(4, size=n_pairs, p=p_joint)
    alice_out = (joint >> 1).astype(np.int8)
    bob_out = (joint & 1).astype(np.int8)

    alice_det = rng.random(n_pairs) < config.eta_alice
    bob_det = rng.random(n_pairs) < config.eta_bob

    jitter_ps = config.timing_jitter * _PS_PER_SECOND
    alice_jitter = np.round(rng.normal(0.0, jitter_ps, size=n_pairs)).astype(np.int64)
    bob_jitter = np.round(rng.normal(0.0, jitter_ps, size=n_pairs)).astype(np.int64)

    def dark_draw():
        n_dark = int(rng.poisson(config.dark_rate * config.duration_rng))
        times = (rng.random(n_dark) * duration_ps).astype(np.int64)
        chans = rng.integers(0, 2, size=n_dark)
        return times, chans

    dark_a_times, dark_a_chans = dark_draw()
    dark_b_times, dark_b_chans = dark_draw()

    alice_tags, alice_idx = _sorted_party_stream(
        PARTY_ALICE, pair_times, alice_out, alice_det, alice_jitter, dark_a_times, dark_a_chans
    )
    bob_tags, bob_idx = _sorted_party_stream(
        PARTY_BOB, pair_times, bob_out, bob_det, bob_jitter, dark_b_times, dark_b_chans
    )

    truth = np.zeros(n_pairs, dtype=GROUND_TRUTH_DTYPE)
    truth["time_ps"] = np.maximum(pair_times, 0).astype(np.uint64)
    truth["alice_outcome"] = alice_out
    truth["bob_outcome"] = bob_out
    truth["alice_index"] = alice_idx
    truth["bob_index"] = bob_idx
    return StreamResult(alice_tags=alice_tags, bob_tags=bob_tags, ground_truth=truth)


def coincidences(
    alice_tags: np.ndarray, bob_tags: np.ndarray, window: float = 3e-9
) -> np.ndarray:
    """Pair up detections within the coincidence window.

    Two-pointer sweep over the time-sorted streams: each Bob tag is matched
    with the earliest not-yet-used Alice tag within ``window`` seconds; each
    tag is used at most once.  Returns a ``PAIR_DTYPE`` array ordered by Bob
    timestamp.  Raises on unsorted input.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    for name, tags in (("alice", alice_tags), ("bob", bob_tags)):
        times = tags["time_ps"].astype(np.int64)
        if len(times) > 1 and np.any(np.diff(times) < 0):
            raise ValueError(f"{name} stream is not sorted by timestamp")

    window_ps = int(round(window * _PS_PER_SECOND))
    # Plain-int lists: the sweep is a tight Python loop and numpy scalar
    # indexing would dominate its cost on multi-million-tag streams.
    a_times = alice_tags["time_ps"].astype(np.int64).tolist()
    b_times = bob_tags["time_ps"].astype(np.int64).tolist()

    matched_a = []
    matched_b = []
    i = 0
    n_a = len(a_times)
    for j, tb in enumerate(b_times):
        lo = tb - window_ps
        hi = tb + window_ps
        while i < n_a and a_times[i] < lo:
            i += 1
        if i < n_a and a_times[i] <= hi:
            matched_a.append(i)
            matched_b.append(j)
            i += 1

    out = np.zeros(len(matched_a), dtype=PAIR_DTYPE)
    ai = np.array(matched_a, dtype=np.int64)
    bj = np.array(matched_b, dtype=np.int64)
    out["alice_index"] = ai
    out["bob_index"] = bj
    out["alice_channel"] = alice_tags["channel"][ai]
    out["bob_channel"] = bob_tags["channel"][bj]
    out["bob_time_ps"] = bob_tags["time_ps"][bj]
    return out


def raw_bits(pairs: np.ndarray) -> BitString:
    """Raw-bit string from coincidences: Alice's channel, in Bob-time order."""
    return BitString(np.asarray(pairs["alice_channel"], dtype=np.uint8))


# ---------------------------------------------------------------------------
# Time-tag files: versioned text header followed by packed binary records.

_TAGS_FORMAT = "timetags-v1"


def save_timetags(tags: np.ndarray, path, header: dict | None = None):
    """Write a tag stream: text header, ``end-header`` line, raw records."""
    lines = [f"format {_TAGS_FORMAT}"]
    for key, value in (header or {}).items():
        key = str(key)
        if any(ch.isspace() for ch in key):
            raise ValueError(f"header key may not contain whitespace: {key!r}")
        lines.append(f"{key} {value}")
    lines.append(f"records {len(tags)}")
    lines.append("end-header")
    blob = ("\n".join(lines) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(np.ascontiguousarray(tags, dtype=TAG_DTYPE).tobytes())


def load_timetags(path) -> tuple[np.ndarray, dict]:
    """Read a tag stream; returns (records, header dict)."""
    with open(path, "rb") as fh:
        data = fh.read()
    header: dict[str, str] = {}
    offset = 0
    first = True
    records = None
    while True:
        end = data.find(b"\n", offset)
        if end < 0:
            raise ValueError(f"{path}: missing end-header line")
        line = data[offset:end].decode("ascii")
        offset = end + 1
        if first:
            if line != f"format {_TAGS_FORMAT}":
                raise ValueError(f"{path}: not a {_TAGS_FORMAT} file (got {line!r})")
            first = False
            continue
        if line == "end-header":
            break
        key, _, value = line.partition(" ")
        if key == "records":
            records = int(value)
        else:
            header[key] = value
    if records is None:
        raise ValueError(f"{path}: header lacks a records count")
    body = data[offset:]
    if len(body) != records * TAG_DTYPE.itemsize:
        raise ValueError(
            f"{path}: expected {records} records "
            f"({records * TAG_DTYPE.itemsize} bytes), found {len(body)} bytes"
        )
    tags = np.frombuffer(body, dtype=TAG_DTYPE).copy()
    return tags, header
