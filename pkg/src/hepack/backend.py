"""Exact SIMD-slot ciphertext simulator with modulus budget accounting.

Every value is a vector of `slots` float64 numbers. Arithmetic is exact
(no encryption noise); what is modeled is the leveled-scheme bookkeeping:
each ciphertext carries a remaining modulus budget in bits, a
ciphertext-ciphertext product burns `delta_bits`, a plaintext-mask product
burns `delta_c_bits`, and rotations and additions are free. A shared
ledger counts every operation so schedules can be audited.

The simulator is the only backend shipped here, but everything above it
talks to the small `SimdBackend` interface, so a real leveled scheme can
be dropped in behind the same six operations.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np


class CapacityError(ValueError):
    """Raised when a message or mask does not fit the slot count."""


class DepthExhaustedError(RuntimeError):
    """Raised when an operation would drive a ciphertext budget negative."""


@dataclass(frozen=True)
class BackendParams:
    """Scheme-level parameters.

    log_n: ring degree exponent; the slot count is 2**(log_n - 1).
    log_q: fresh ciphertext modulus budget in bits.
    delta_bits: bits consumed by one ciphertext-ciphertext multiply.
    delta_c_bits: bits consumed by one plaintext-mask multiply.
    """

    log_n: int = 16
    log_q: int = 1200
    delta_bits: int = 45
    delta_c_bits: int = 20

    def __post_init__(self):
        if self.log_n < 1:
            raise ValueError("log_n must be positive")
        if not (self.log_q > self.delta_bits > self.delta_c_bits > 0):
            raise ValueError(
                "need log_q > delta_bits > delta_c_bits > 0, got "
                f"{self.log_q}/{self.delta_bits}/{self.delta_c_bits}"
            )

    @property
    def slots(self) -> int:
        return 1 << (self.log_n - 1)

    @classmethod
    def for_slots(cls, slots: int, **kw) -> "BackendParams":
        """Params with exactly `slots` slots (must be a power of two)."""
        n = int(slots).bit_length()
        if slots <= 0 or (1 << (n - 1)) != slots:
            raise ValueError(f"slot count must be a power of two, got {slots}")
        return cls(log_n=n, **kw)


@dataclass(frozen=True)
class CipherVec:
    """A simulated ciphertext: slot vector plus remaining budget bits.

    Instances are immutable; backend operations return new ones. The
    slot array is marked read-only to keep accidental in-place edits out.
    """

    slots: np.ndarray
    budget_bits: int

    def __post_init__(self):
        if self.budget_bits < 0:
            raise DepthExhaustedError("budget_bits must be >= 0")
        self.slots.flags.writeable = False

    def __len__(self) -> int:
        return self.slots.shape[0]


@dataclass
class ModulusLedger:
    """Shared operation counter. Safe to bump from worker threads."""

    delta_bits: int
    delta_c_bits: int
    count_mul: int = 0
    count_cmul: int = 0
    count_rot: int = 0
    count_add: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, kind: str):
        with self._lock:
            setattr(self, "count_" + kind, getattr(self, "count_" + kind) + 1)

    @property
    def consumed_bits(self) -> int:
        """Total rescale work: every mul and cmul summed, not depth."""
        return self.count_mul * self.delta_bits + self.count_cmul * self.delta_c_bits

    def snapshot(self) -> dict:
        return {
            "mul": self.count_mul,
            "cmul": self.count_cmul,
            "rot": self.count_rot,
            "add": self.count_add,
            "consumed_bits": self.consumed_bits,
        }

    def reset(self):
        with self._lock:
            self.count_mul = self.count_cmul = self.count_rot = self.count_add = 0


class SimdBackend(ABC):
    """The six operations the rest of the library is written against."""

    params: BackendParams
    ledger: ModulusLedger

    @abstractmethod
    def encrypt(self, message) -> CipherVec: ...

    @abstractmethod
    def decrypt(self, ct: CipherVec) -> np.ndarray: ...

    @abstractmethod
    def add(self, a: CipherVec, b: CipherVec) -> CipherVec: ...

    @abstractmethod
    def mul(self, a: CipherVec, b: CipherVec) -> CipherVec: ...

    @abstractmethod
    def cmul(self, a: CipherVec, mask) -> CipherVec: ...

    @abstractmethod
    def rot(self, a: CipherVec, amount: int) -> CipherVec: ...


class SlotSimulator(SimdBackend):
    """Exact plaintext simulator of a leveled SIMD scheme."""

    def __init__(self, params: BackendParams | None = None):
        self.params = params or BackendParams()
        self.ledger = ModulusLedger(self.params.delta_bits, self.params.delta_c_bits)

    def _pad(self, values, what: str) -> np.ndarray:
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        n = self.params.slots
        if arr.shape[0] > n:
            raise CapacityError(
                f"{what} has {arr.shape[0]} values but backend has {n} slots"
            )
        if arr.shape[0] < n:
            arr = np.concatenate([arr, np.zeros(n - arr.shape[0])])
        return arr

    def encrypt(self, message) -> CipherVec:
        """Fresh ciphertext at full budget; short messages are zero-padded."""
        return CipherVec(self._pad(message, "message"), self.params.log_q)

    def decrypt(self, ct: CipherVec) -> np.ndarray:
        return ct.slots.copy()

    def add(self, a: CipherVec, b: CipherVec) -> CipherVec:
        self.ledger.bump("add")
        return CipherVec(a.slots + b.slots, min(a.budget_bits, b.budget_bits))

    def mul(self, a: CipherVec, b: CipherVec) -> CipherVec:
        lvl = min(a.budget_bits, b.budget_bits)
        if lvl < self.params.delta_bits:
            raise DepthExhaustedError(
                f"mul needs {self.params.delta_bits} bits, only {lvl} left"
            )
        self.ledger.bump("mul")
        return CipherVec(a.slots * b.slots, lvl - self.params.delta_bits)

    def cmul(self, a: CipherVec, mask) -> CipherVec:
        """Product with a plaintext mask (vector, zero-padded, or scalar)."""
        if a.budget_bits < self.params.delta_c_bits:
            raise DepthExhaustedError(
                f"cmul needs {self.params.delta_c_bits} bits, only {a.budget_bits} left"
            )
        if np.isscalar(mask):
            m = float(mask)
        else:
            m = self._pad(mask, "mask")
        self.ledger.bump("cmul")
        return CipherVec(a.slots * m, a.budget_bits - self.params.delta_c_bits)

    def rot(self, a: CipherVec, amount: int) -> CipherVec:
        """Cyclic rotation; positive moves slot i+amount into slot i."""
        self.ledger.bump("rot")
        return CipherVec(np.roll(a.slots, -amount), a.budget_bits)
