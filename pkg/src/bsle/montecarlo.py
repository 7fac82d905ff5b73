"""Chunked Monte Carlo runner with order-independent results and checkpoints.

Paths are split into fixed-size chunks of consecutive streams. Each chunk is
reduced to its raw moments (count, sum, sum of outer products); chunks are
merged strictly in chunk order, so the floating-point result does not depend on
how many workers ran them or in which order they finished. A checkpoint stores
the merged moments (as exact hex floats) after every wave of chunks.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["Moments", "Runner", "Checkpoint", "CheckpointError", "Interrupted", "canonical_json"]

CHECKPOINT_FORMAT = 1


class CheckpointError(RuntimeError):
    """Checkpoint file unreadable, tampered with, or from a different run."""


class Interrupted(RuntimeError):
    """Run stopped on purpose after a given number of chunks (resume test aid)."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _hex(a) -> list:
    return [float(v).hex() for v in np.ravel(a)]


def _unhex(vals, shape) -> np.ndarray:
    return np.array([float.fromhex(v) for v in vals], dtype=np.float64).reshape(shape)


@dataclass
class Moments:
    """Raw moments of a k-dimensional per-path sample."""

    n: int
    s1: np.ndarray
    s2: np.ndarray

    @classmethod
    def zeros(cls, k: int) -> "Moments":
        return cls(0, np.zeros(k), np.zeros((k, k)))

    @classmethod
    def from_samples(cls, x) -> "Moments":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        return cls(x.shape[0], x.sum(axis=0), x.T @ x)

    def merge(self, other: "Moments") -> "Moments":
        return Moments(self.n + other.n, self.s1 + other.s1, self.s2 + other.s2)

    @property
    def k(self) -> int:
        return self.s1.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.s1 / self.n

    @property
    def cov(self) -> np.ndarray:
        """Unbiased sample covariance of one path."""
        if self.n < 2:
            return np.full((self.k, self.k), math.nan)
        m = self.mean
        return (self.s2 - self.n * np.outer(m, m)) / (self.n - 1)

    @property
    def cov_mean(self) -> np.ndarray:
        return self.cov / self.n

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.cov_mean), 0.0))

    def to_state(self) -> dict:
        return {"n": self.n, "k": self.k, "s1": _hex(self.s1), "s2": _hex(self.s2)}

    @classmethod
    def from_state(cls, st) -> "Moments":
        k = int(st["k"])
        return cls(int(st["n"]), _unhex(st["s1"], (k,)), _unhex(st["s2"], (k, k)))


class Checkpoint:
    """JSON snapshot of finished stages and in-progress moments, sealed by a sha256 digest."""

    def __init__(self, path: str | os.PathLike, run_key: str):
        self.path = os.fspath(path)
        self.run_key = run_key
        self.stages: dict = {}
        self.partial: dict = {}

    @staticmethod
    def _digest(body: dict) -> str:
        return hashlib.sha256(canonical_json(body).encode()).hexdigest()

    @classmethod
    def open(cls, path, run_key: str) -> "Checkpoint":
        ck = cls(path, run_key)
        if not os.path.exists(ck.path):
            return ck
        try:
            with open(ck.path, encoding="utf-8") as fh:
                doc = json.load(fh)
            body = doc["body"]
            ok = doc["sha256"] == cls._digest(body)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CheckpointError(f"checkpoint {ck.path} is unreadable ({exc}); delete it and start fresh") from None
        if not ok:
            raise CheckpointError(f"checkpoint {ck.path} failed its integrity check; delete it and start fresh")
        if body.get("format") != CHECKPOINT_FORMAT or body.get("run_key") != run_key:
            raise CheckpointError(f"checkpoint {ck.path} belongs to a different run; delete it and start fresh")
        ck.stages = body["stages"]
        ck.partial = body["partial"]
        return ck

    def save(self):
        body = {"format": CHECKPOINT_FORMAT, "run_key": self.run_key, "stages": self.stages,
                "partial": self.partial}
        doc = {"body": body, "sha256": self._digest(body)}
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(canonical_json(doc))
        os.replace(tmp, self.path)


@dataclass
class Runner:
    """Executes chunked estimators; owns the thread pool and the optional checkpoint.

    The compiled kernels release the GIL, so threads give real parallelism.
    ``stop_after_chunks`` interrupts the run after that many newly computed
    chunks (after the checkpoint is written); it exists to test resuming.
    """

    workers: int = 1
    chunk: int = 1000
    checkpoint: Checkpoint | None = None
    stop_after_chunks: int | None = None
    _computed: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")

    def _map(self, fn, items):
        if self.workers == 1 or len(items) == 1:
            return [fn(it) for it in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def moments(self, key: str, sample: Callable[[int, int], np.ndarray], n: int) -> Moments:
        """Moments of ``sample(start, count)`` over streams 0..n-1 (relative to the estimator).

        ``sample`` must return a (count, k) or (count,) array and be a pure
        function of its arguments.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        ck = self.checkpoint
        acc = None
        done = 0
        if ck is not None and key in ck.partial:
            st = ck.partial[key]
            acc = Moments.from_state(st["moments"])
            done = int(st["chunks"])
        n_chunks = -(-n // self.chunk)
        wave = max(1, self.workers)
        while done < n_chunks:
            idx = list(range(done, min(n_chunks, done + wave)))

            def run(c):
                start = c * self.chunk
                return Moments.from_samples(sample(start, min(self.chunk, n - start)))

            for m in self._map(run, idx):
                acc = m if acc is None else acc.merge(m)
            done = idx[-1] + 1
            self._computed += len(idx)
            if ck is not None:
                ck.partial[key] = {"chunks": done, "moments": acc.to_state()}
                ck.save()
            if self.stop_after_chunks is not None and self._computed >= self.stop_after_chunks \
                    and done < n_chunks:
                raise Interrupted(f"stopped after {self._computed} chunks")
        return acc

    def samples(self, sample: Callable[[int, int], np.ndarray], n: int) -> np.ndarray:
        """All per-path values, concatenated in stream order (no checkpointing)."""
        n_chunks = -(-n // self.chunk)

        def run(c):
            start = c * self.chunk
            return np.asarray(sample(start, min(self.chunk, n - start)))

        return np.concatenate(self._map(run, list(range(n_chunks))), axis=0)

    def stage(self, key: str, compute: Callable[[], dict]) -> dict:
        """Run a whole stage once; its JSON-able result is cached in the checkpoint."""
        ck = self.checkpoint
        if ck is not None and key in ck.stages:
            return ck.stages[key]
        out = json.loads(canonical_json(compute()))
        if ck is not None:
            ck.stages[key] = out
            ck.partial = {k: v for k, v in ck.partial.items() if not k.startswith(key + "/")}
            ck.save()
        return out
