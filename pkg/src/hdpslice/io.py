"""File formats and run configuration.

Dataset, token mode::

    tokens W=<int> J=<int>
    <one line per group: space-separated 1-based token ids>

Dataset, vector mode::

    vectors d=<int> J=<int>
    <one line per observation: group-id v1 ... vd>   (group ids 1..J, ascending)

Truth labels use the token-line shape (one line per group, integer
cluster ids).  Traces are CSV with header
``iter,nmi,active_dishes,K,maxT,t_cap_max,k_cap,restarts,log_joint``;
floats carry 6 significant digits and `nmi` is empty when no truth was
supplied.  Configs are JSON with the exact key set of `RunConfig`;
unknown keys are rejected.
"""

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, DataFormatError
from .kernels import make_kernel
from .state import GroupedDataset, Hyperparams

TRACE_HEADER = "iter,nmi,active_dishes,K,maxT,t_cap_max,k_cap,restarts,log_joint"


def write_dataset(data, path):
    with open(path, "w") as fh:
        if data.kind == "tokens":
            fh.write(f"tokens W={data.vocab_size} J={data.num_groups}\n")
            for g in data.groups:
                fh.write(" ".join(str(int(t)) for t in g) + "\n")
        else:
            fh.write(f"vectors d={data.dim} J={data.num_groups}\n")
            for j, g in enumerate(data.groups, start=1):
                for row in g:
                    fh.write(str(j) + " " + " ".join(f"{x:.17g}" for x in row) + "\n")


def read_dataset(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty dataset file")
    head = lines[0].split()
    try:
        kind = head[0]
        meta = dict(part.split("=", 1) for part in head[1:])
        if kind == "tokens":
            vocab, J = int(meta["W"]), int(meta["J"])
        elif kind == "vectors":
            dim, J = int(meta["d"]), int(meta["J"])
        else:
            raise KeyError(kind)
    except (KeyError, ValueError, IndexError):
        raise DataFormatError(f"{path}: bad header line {lines[0]!r}") from None

    body = [ln for ln in lines[1:] if ln.strip()]
    try:
        if kind == "tokens":
            if len(body) != J:
                raise DataFormatError(f"{path}: expected {J} group lines, got {len(body)}")
            groups = [np.array([int(t) for t in ln.split()], dtype=np.int64) for ln in body]
            return GroupedDataset(groups, "tokens", vocab_size=vocab)
        rows = [[float(x) for x in ln.split()] for ln in body]
        gid = np.array([int(r[0]) for r in rows])
        if gid.size == 0 or (np.diff(gid) < 0).any() or gid[0] != 1 or gid[-1] != J:
            raise DataFormatError(f"{path}: group ids must run 1..{J} in ascending order")
        groups = [np.array([r[1:] for r, g in zip(rows, gid) if g == j])
                  for j in range(1, J + 1)]
        return GroupedDataset(groups, "vectors", dim=dim)
    except DataFormatError:
        raise
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_labels(per_group, path):
    """Labels in the token-line shape: one line per group."""
    with open(path, "w") as fh:
        for g in per_group:
            fh.write(" ".join(str(int(x)) for x in g) + "\n")


def read_labels(path):
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty labels file")
    try:
        return [np.array([int(x) for x in ln.split()], dtype=np.int64) for ln in lines]
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def format_trace_row(rec):
    nmi_cell = "" if math.isnan(rec.nmi) else f"{rec.nmi:.6g}"
    return (f"{rec.iteration},{nmi_cell},{rec.active_dishes},{rec.K},{rec.max_T},"
            f"{rec.t_cap_max},{rec.k_cap},{rec.restarts},{rec.log_joint:.6g}")


class TraceWriter:
    """Writes the trace CSV one row per accepted iteration."""

    def __init__(self, path):
        self._fh = open(path, "w")
        self._fh.write(TRACE_HEADER + "\n")

    def write(self, rec):
        self._fh.write(format_trace_row(rec) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_KERNEL_KEYS = {"kernel", "d", "tau_phi2", "tau_y2", "W", "alpha_w"}


@dataclass
class RunConfig:
    """Validated configuration for the CLI commands.

    Every field can come from the JSON config file or be overridden by the
    CLI flag of the same name; `seed` must be given explicitly for
    `generate` and `fit`.
    """

    gamma0: float = 3.0
    alpha0: float = 1.0
    initial_t_cap: int = 10
    initial_k_cap: int = 10
    growth_factor: float = 1.5
    max_iterations: int = 100
    seed: int = None
    max_restarts: int = 50
    kernel: str = "multinomial"
    d: int = None
    tau_phi2: float = 1.0
    tau_y2: float = 1.0
    W: int = None
    alpha_w: float = None
    dataset: str = None
    truth_labels: str = None
    out_trace: str = None
    out_labels: str = None
    out_checkpoint: str = None
    workers: int = 1
    labels_every: int = 0
    groups: int = 10
    group_size: int = 30
    resume: str = None

    def hyperparams(self):
        if self.seed is None:
            raise ConfigError("--seed is required")
        try:
            return Hyperparams(gamma0=self.gamma0, alpha0=self.alpha0,
                               initial_t_cap=self.initial_t_cap,
                               initial_k_cap=self.initial_k_cap,
                               growth_factor=self.growth_factor,
                               max_iterations=self.max_iterations,
                               seed=self.seed, max_restarts=self.max_restarts)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def make_kernel(self):
        try:
            if self.kernel == "gaussian":
                if self.d is None:
                    raise ConfigError("gaussian kernel needs d")
                return make_kernel("gaussian", dim=self.d,
                                   tau_phi2=self.tau_phi2, tau_y2=self.tau_y2)
            if self.kernel == "multinomial":
                if self.W is None:
                    raise ConfigError("multinomial kernel needs W")
                alpha = self.alpha_w if self.alpha_w is not None else 1.0 / self.W
                return make_kernel("multinomial", vocab_size=self.W, alpha=alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        raise ConfigError(f"unknown kernel {self.kernel!r}")


def load_config(path=None, overrides=None):
    """Build a RunConfig from an optional JSON file plus CLI overrides."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config fields {sorted(unknown)}")
        values.update(doc)
    for key, val in (overrides or {}).items():
        if val is not None:
            if key not in known:
                raise ConfigError(f"unknown config field {key!r}")
            values[key] = val
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
