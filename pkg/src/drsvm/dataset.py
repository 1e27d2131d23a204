"""Slot spectra: synthetic generation, CSV I/O, frequency windows and splits.

Each slot carries 23 non-negative amplitudes (1-MHz bins, 2.411-2.433 GHz)
and a busy (1) / idle (0) label. Frequency bins are 1-based in every
user-facing argument; bin 12 is the band centre.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

N_BINS = 23
CENTER_BIN = 12
CSV_HEADER = ["slot", "label"] + [f"f{j:02d}" for j in range(1, N_BINS + 1)]

# raised-cosine occupancy mask: support bins 4..20, peak at bin 12
MASK_FIRST, MASK_LAST = 4, 20

__all__ = [
    "N_BINS",
    "CSV_HEADER",
    "SlotSpectrum",
    "SpectraMatrix",
    "WindowSpec",
    "SplitSpec",
    "occupancy_mask",
    "synth_generate",
    "load_csv",
    "save_csv",
    "window",
    "split",
]


@dataclass(frozen=True)
class SlotSpectrum:
    slot_index: int
    amplitudes: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class SpectraMatrix:
    """Ordered collection of slots stored column-wise.

    Attributes
    ----------
    slot_index : ndarray of int, shape (M,)
        Strictly increasing slot numbers.
    amplitudes : ndarray of float, shape (M, 23)
    labels : ndarray of int, shape (M,)
        1 = busy, 0 = idle.
    """

    slot_index: np.ndarray
    amplitudes: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        slots = np.asarray(self.slot_index, dtype=np.int64).reshape(-1)
        amps = np.asarray(self.amplitudes, dtype=float).reshape(-1, N_BINS)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if not (len(slots) == len(amps) == len(labels)):
            raise ValueError("slot_index, amplitudes and labels lengths differ")
        if not np.all(np.isfinite(amps)) or np.any(amps < 0):
            raise ValueError("amplitudes must be finite and non-negative")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 (idle) or 1 (busy)")
        if np.any(slots < 0) or np.any(np.diff(slots) <= 0):
            raise ValueError("slot indices must be non-negative and strictly increasing")
        object.__setattr__(self, "slot_index", slots)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[SlotSpectrum]:
        for s, a, l in zip(self.slot_index, self.amplitudes, self.labels):
            yield SlotSpectrum(int(s), a, int(l))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectraMatrix):
            return NotImplemented
        return (
            np.array_equal(self.slot_index, other.slot_index)
            and np.array_equal(self.amplitudes, other.amplitudes)
            and np.array_equal(self.labels, other.labels)
        )

    @classmethod
    def empty(cls) -> "SpectraMatrix":
        return cls(np.zeros(0, np.int64), np.zeros((0, N_BINS)), np.zeros(0, np.int64))

    @classmethod
    def from_slots(cls, slots) -> "SpectraMatrix":
        slots = list(slots)
        if not slots:
            return cls.empty()
        return cls(
            np.array([s.slot_index for s in slots]),
            np.array([s.amplitudes for s in slots], dtype=float),
            np.array([s.label for s in slots]),
        )

    def busy_fraction(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0


def occupancy_mask() -> np.ndarray:
    """Unit-peak raised-cosine bump over bins 4..20, zero elsewhere."""
    bins = np.arange(1, N_BINS + 1)
    half = (MASK_LAST - MASK_FIRST) / 2 + 1
    mask = 0.5 * (1.0 + np.cos(np.pi * (bins - CENTER_BIN) / half))
    mask[(bins < MASK_FIRST) | (bins > MASK_LAST)] = 0.0
    return mask


def synth_generate(
    num_slots: int,
    snr_db: float = 25.0,
    duty_cycle: float = 0.5,
    seed: int = 0,
    noise_sigma: float = 0.5,
    first_slot: int = 0,
) -> SpectraMatrix:
    """Generate Wi-Fi-like slot spectra with controllable SNR.

    Idle slots hold folded Gaussian noise ``|N(0, noise_sigma^2)|`` in every
    bin. Busy slots add a fixed raised-cosine occupancy mask whose scale makes
    the mean in-mask signal power ``10**(snr_db/10)`` times the noise power.

    Parameters
    ----------
    num_slots : int
        Number of slots, ``>= 1``.
    snr_db : float
        Signal-to-noise ratio of busy slots in dB.
    duty_cycle : float
        Probability that a slot is busy, in (0, 1).
    seed : int
        Seed for ``numpy.random.default_rng``.
    noise_sigma : float
        Standard deviation of the underlying Gaussian noise.
    first_slot : int
        Slot number of the first generated slot.
    """
    if num_slots < 1:
        raise ValueError("num_slots must be >= 1")
    if not 0.0 < duty_cycle < 1.0:
        raise ValueError(f"duty_cycle must lie in (0, 1), got {duty_cycle}")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    rng = np.random.default_rng(seed)
    labels = (rng.random(num_slots) < duty_cycle).astype(np.int64)
    amps = np.abs(rng.normal(0.0, noise_sigma, size=(num_slots, N_BINS)))

    mask = occupancy_mask()
    support = mask > 0
    signal_power = noise_sigma**2 * 10.0 ** (snr_db / 10.0)
    scale = np.sqrt(signal_power / np.mean(mask[support] ** 2))
    amps[labels == 1] += scale * mask

    slots = np.arange(first_slot, first_slot + num_slots)
    return SpectraMatrix(slots, amps, labels)


def save_csv(matrix: SpectraMatrix, path) -> None:
    """Write ``slot,label,f01..f23`` rows with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s, l, row in zip(matrix.slot_index, matrix.labels, matrix.amplitudes):
            writer.writerow([int(s), int(l)] + [format(v, ".17g") for v in row])


def load_csv(path) -> SpectraMatrix:
    """Read a dataset written by :func:`save_csv`.

    An empty file gives an empty matrix. Malformed rows raise ``ValueError``
    naming the 1-based line number.
    """
    ncol = len(CSV_HEADER)
    slots, labels, amps = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and row[0].strip() == "slot":
                if [c.strip() for c in row] != CSV_HEADER:
                    raise ValueError(f"line 1: unexpected header {row}")
                continue
            if len(row) != ncol:
                raise ValueError(f"line {lineno}: expected {ncol} columns, got {len(row)}")
            try:
                slot = int(row[0])
                label = int(row[1])
                values = [float(c) for c in row[2:]]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: non-numeric cell ({exc})") from None
            if label not in (0, 1):
                raise ValueError(f"line {lineno}: label must be 0 or 1, got {label}")
            slots.append(slot)
            labels.append(label)
            amps.append(values)
    if not slots:
        return SpectraMatrix.empty()
    return SpectraMatrix(np.array(slots), np.array(amps, dtype=float), np.array(labels))


@dataclass(frozen=True)
class WindowSpec:
    """Contiguous frequency window around bin 12.

    ``dim = m + n + 1`` bins, ``m`` below and ``n`` above the centre, with
    ``0 <= n - m <= 1``.
    """

    dim: int

    def __post_init__(self):
        if not 1 <= self.dim <= 13:
            raise ValueError(f"window dimension must be in [1, 13], got {self.dim}")

    @property
    def m(self) -> int:
        return (self.dim - 1) // 2

    @property
    def n(self) -> int:
        return self.dim - 1 - self.m

    def bins(self) -> np.ndarray:
        """1-based bin numbers covered by the window."""
        return np.arange(CENTER_BIN - self.m, CENTER_BIN + self.n + 1)


def window(matrix, spec) -> np.ndarray:
    """Feature matrix with one row per slot and ``spec.dim`` columns.

    ``matrix`` may be a :class:`SpectraMatrix` or a raw ``(M, 23)`` array;
    ``spec`` may be a :class:`WindowSpec` or an int.
    """
    if not isinstance(spec, WindowSpec):
        spec = WindowSpec(int(spec))
    amps = matrix.amplitudes if isinstance(matrix, SpectraMatrix) else np.asarray(matrix)
    return amps[:, spec.bins() - 1]


@dataclass(frozen=True)
class SplitSpec:
    train_count: int
    test_count: int
    seed: int = 0

    def __post_init__(self):
        if self.train_count < 1 or self.test_count < 1:
            raise ValueError("train and test counts must be positive")


def split(matrix, spec: SplitSpec, max_attempts: int = 100):
    """Draw disjoint train/test index sets uniformly without replacement.

    Both sets must contain each label at least once; otherwise the draw is
    repeated, up to ``max_attempts`` times.

    Returns
    -------
    train_idx, test_idx : ndarray of int
    """
    labels = matrix.labels if isinstance(matrix, SpectraMatrix) else np.asarray(matrix)
    total = len(labels)
    need = spec.train_count + spec.test_count
    if need > total:
        raise ValueError(
            f"split needs {need} slots (train {spec.train_count} + test "
            f"{spec.test_count}) but only {total} are available"
        )
    rng = np.random.default_rng(spec.seed)
    for _ in range(max_attempts):
        perm = rng.permutation(total)[:need]
        train, test = perm[: spec.train_count], perm[spec.train_count :]
        if len(np.unique(labels[train])) == 2 and len(np.unique(labels[test])) == 2:
            return train, test
    raise RuntimeError(
        f"could not draw a split with both labels in train and test after {max_attempts} attempts"
    )
