"""Binary columnar storage for homodyne record ensembles.

Layout (all little-endian):

    magic      5 bytes  b"SPLT1"
    sample_rate f64
    pulse_T    f64
    n_cycles   u64
    n_samples  u64
    seed       u64
    data       n_cycles * 2 * n_samples f64, cycle-major, pc then ps

A one-line JSON sidecar (`<file>.json`) carries the full configuration for
provenance and re-running.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .couplings import SwapParams
from .gaussian import GaussianState
from .homodyne import AcquisitionConfig, RecordEnsemble

MAGIC = b"SPLT1"
_HEADER = struct.Struct("<5sddQQQ")


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_records(path: str | Path, ensemble: RecordEnsemble) -> Path:
    """Write an ensemble and its JSON sidecar; returns the data path."""
    path = Path(path)
    header = _HEADER.pack(
        MAGIC,
        ensemble.acq.sample_rate_Hz,
        ensemble.acq.pulse_T_s,
        ensemble.n_cycles,
        ensemble.n_samples,
        int(ensemble.seed),
    )
    data = np.stack([ensemble.pc, ensemble.ps], axis=1)  # (cycles, 2, samples)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())

    sidecar = {
        "format": MAGIC.decode(),
        "seed": int(ensemble.seed),
        "domain": int(ensemble.domain),
        "quadrature": ensemble.quadrature,
        "calibration": ensemble.calibration,
        "acquisition": dataclasses.asdict(ensemble.acq),
        "params": dataclasses.asdict(ensemble.params) if ensemble.params else None,
        "initial_state": (
            ensemble.initial_state.as_dict() if ensemble.initial_state else None
        ),
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, sort_keys=True) + "\n")
    return path


def read_records(path: str | Path) -> RecordEnsemble:
    """Read an ensemble written by `write_records`.

    The sidecar is used when present; otherwise the acquisition config is
    reconstructed from the binary header with default detection settings.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, rate, pulse_T, n_cycles, n_samples, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + n_cycles * 2 * n_samples * 8
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} does not match header ({expected})")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    data = data.reshape(n_cycles, 2, n_samples)

    domain = 0
    quadrature = "P"
    calibration = 1.0
    params = None
    initial_state = None
    sidecar_path = _sidecar_path(path)
    if sidecar_path.exists():
        meta = json.loads(sidecar_path.read_text())
        acq = AcquisitionConfig(**meta["acquisition"])
        domain = meta.get("domain", 0)
        quadrature = meta.get("quadrature", "P")
        calibration = meta.get("calibration", 1.0)
        if meta.get("params"):
            params = SwapParams(**meta["params"])
        if meta.get("initial_state"):
            initial_state = GaussianState.from_dict(meta["initial_state"])
    else:
        acq = AcquisitionConfig(
            sample_rate_Hz=rate,
            pulse_T_s=pulse_T,
            n_cycles=max(int(n_cycles), 2),
            rng_seed=int(seed),
        )
    return RecordEnsemble(
        pc=np.ascontiguousarray(data[:, 0, :]),
        ps=np.ascontiguousarray(data[:, 1, :]),
        acq=acq,
        seed=int(seed),
        domain=domain,
        quadrature=quadrature,  # type: ignore[arg-type]
        params=params,
        initial_state=initial_state,
        calibration=calibration,
    )
