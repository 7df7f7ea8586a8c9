"""Scenario configuration: schema, validation diagnostics, bundled presets.

A scenario is a YAML document with nested sections; physical fields carry
unit suffixes. Either a direct coupling set or an atomic-physics section may
drive the run:

    name: my_run
    seed: 123
    quadrature: P
    interaction:
      swap: {gamma_sw_per_s: 175.44, xi: 0.3984, gamma_dec_per_s: 0.0}
      # or atomic: {a1: ..., a2: ..., photon_flux_per_s: ..., ...}
    acquisition:
      sample_rate_Hz: 12500.0
      pulse_T_s: 0.015
      n_cycles: 10000
      detection_bandwidth_Hz: 600.0
      shot_noise_ref_cycles: 10000
      detection_efficiency: 1.0
    displacement: {cell: 1, dx: 8.0, dp: 8.0}     # optional RF offset
    analysis: {whitening: true, mode_count: 10, bootstrap_resamples: 200}
    products: [records, mode_spectrum, duan]

Bundled presets live in the package's `scenario_files/` directory and can be
referenced by bare name from the command line.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .couplings import AtomicConfig, SwapParams, couplings_from_physics
from .gaussian import GaussianState, RegimeError
from .homodyne import ACCURACY_GUARD, AcquisitionConfig, displaced_css

KNOWN_PRODUCTS = (
    "records",
    "mean_decay",
    "spectrum",
    "mode_spectrum",
    "duan",
    "mode_shape",
)

DEFAULT_SAMPLE_RATE = 12500.0
DEFAULT_PULSE_T = 0.015
DEFAULT_SEED = 12345


class ConfigError(ValueError):
    """Scenario configuration failed validation."""


@dataclass(frozen=True)
class Diagnostic:
    severity: str          # "error" | "warning" | "info"
    field: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.field}: {self.message}"


@dataclass(frozen=True)
class AnalysisOptions:
    whitening: bool = True
    mode_count: int = 10
    bootstrap_resamples: int = 200
    duan_mode: str = "leading"            # or "exponential"
    duan_rate_per_s: float | None = None  # rate for the fixed exponential mode


@dataclass(frozen=True)
class DriveProfile:
    kind: str                    # "constant" | "flat_top"
    gamma0_per_s: float
    grid_points: int = 2000
    duration_s: float = DEFAULT_PULSE_T


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    quadrature: str
    acquisition: AcquisitionConfig
    params: SwapParams | None
    atomic: AtomicConfig | None
    displacement: GaussianState | None
    analysis: AnalysisOptions
    products: tuple[str, ...]
    drive_profile: DriveProfile | None
    calibration_note: str | None
    raw: dict

    def describe(self) -> str:
        kind = "decoupled" if self.params is None else (
            f"gamma_sw={self.params.gamma_sw_per_s:.4g}/s xi={self.params.xi:.4g} "
            f"gamma_dec={self.params.gamma_dec_per_s:.4g}/s"
        )
        return f"{self.name}: {kind}, {self.acquisition.n_cycles} cycles"


def bundled_scenario_names() -> list[str]:
    files = resources.files("swaplight").joinpath("scenario_files")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario_path(ref: str | Path) -> Path:
    """Map a bare bundled name or a filesystem path to a YAML file path."""
    path = Path(ref)
    if path.exists():
        return path
    candidate = resources.files("swaplight").joinpath(f"scenario_files/{ref}.yaml")
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(
        f"scenario {ref!r} is neither a readable file nor a bundled name "
        f"(bundled: {', '.join(bundled_scenario_names())})"
    )


def _check_section(doc: dict, key: str, diags: list[Diagnostic]) -> dict:
    section = doc.get(key)
    if section is None:
        return {}
    if not isinstance(section, dict):
        diags.append(Diagnostic("error", key, "must be a mapping"))
        return {}
    return section


def validate_config(path: str | Path) -> list[Diagnostic]:
    """Validate a scenario file, returning every diagnostic found.

    Error-severity items make the config unusable; `load_scenario` raises on
    them. Info items record applied defaults.
    """
    path = Path(path)
    diags: list[Diagnostic] = []
    try:
        text = path.read_text()
    except OSError as exc:
        return [Diagnostic("error", str(path), f"unreadable: {exc}")]
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        return [Diagnostic("error", str(path), f"YAML parse error: {exc}")]
    if not isinstance(doc, dict):
        return [Diagnostic("error", str(path), "top level must be a mapping")]

    known_top = {
        "name", "seed", "quadrature", "interaction", "acquisition",
        "displacement", "analysis", "products", "drive_profile",
        "calibration_note",
    }
    for key in doc:
        if key not in known_top:
            diags.append(Diagnostic("warning", key, "unknown top-level field"))

    name = doc.get("name")
    if not name or not isinstance(name, str):
        diags.append(Diagnostic("error", "name", "missing or not a string"))
    elif any(ch in name for ch in "/\\ \t"):
        diags.append(Diagnostic("error", "name", "must be filesystem-safe"))

    if "seed" not in doc:
        diags.append(Diagnostic("info", "seed", f"defaulted to {DEFAULT_SEED}"))
    quad = doc.get("quadrature", "P")
    if quad not in ("X", "P"):
        diags.append(Diagnostic("error", "quadrature", f"must be X or P, got {quad!r}"))

    acq_doc = _check_section(doc, "acquisition", diags)
    if "sample_rate_Hz" not in acq_doc:
        diags.append(Diagnostic(
            "info", "acquisition.sample_rate_Hz", f"defaulted to {DEFAULT_SAMPLE_RATE}"
        ))
    acq = None
    try:
        acq = _build_acquisition(acq_doc, doc.get("seed", DEFAULT_SEED))
    except (ValueError, TypeError) as exc:
        diags.append(Diagnostic("error", "acquisition", str(exc)))

    params = None
    interaction = _check_section(doc, "interaction", diags)
    if interaction:
        try:
            params, _ = _build_interaction(interaction, acq)
        except RegimeError as exc:
            diags.append(Diagnostic("error", "interaction", str(exc)))
        except (ValueError, TypeError) as exc:
            diags.append(Diagnostic("error", "interaction", str(exc)))

    if params is not None and acq is not None:
        worst = max(params.gamma_sw_per_s, params.gamma_total_per_s)
        if worst * acq.dt > ACCURACY_GUARD:
            diags.append(Diagnostic(
                "error", "acquisition.sample_rate_Hz",
                f"accuracy guard: relaxation rate * dt = {worst * acq.dt:.3f} "
                f"exceeds {ACCURACY_GUARD}; raise the sample rate",
            ))

    products = doc.get("products", ["records"])
    if not isinstance(products, list) or not products:
        diags.append(Diagnostic("error", "products", "must be a nonempty list"))
    else:
        for product in products:
            if product not in KNOWN_PRODUCTS:
                diags.append(Diagnostic(
                    "error", "products", f"unknown product {product!r} "
                    f"(known: {', '.join(KNOWN_PRODUCTS)})"
                ))
        if "mean_decay" in products and "displacement" not in doc:
            diags.append(Diagnostic(
                "warning", "displacement", "mean_decay without a displacement is zero"
            ))
        if "mode_shape" in products and "drive_profile" not in doc:
            diags.append(Diagnostic("error", "drive_profile",
                                    "required by the mode_shape product"))

    displacement = _check_section(doc, "displacement", diags)
    if displacement:
        if displacement.get("cell", 1) not in (1, 2):
            diags.append(Diagnostic("error", "displacement.cell", "must be 1 or 2"))

    drive = _check_section(doc, "drive_profile", diags)
    if drive:
        if drive.get("kind", "constant") not in ("constant", "flat_top"):
            diags.append(Diagnostic("error", "drive_profile.kind",
                                    "must be constant or flat_top"))
        gamma0 = drive.get("gamma0_per_s", 0.0)
        duration = drive.get("duration_s", DEFAULT_PULSE_T)
        if gamma0 <= 0:
            diags.append(Diagnostic("error", "drive_profile.gamma0_per_s",
                                    "must be positive"))
        elif drive.get("kind") == "flat_top" and gamma0 * duration >= 1.0:
            diags.append(Diagnostic(
                "error", "drive_profile.gamma0_per_s",
                "flat-top profile requires gamma0 * duration < 1",
            ))

    analysis = _check_section(doc, "analysis", diags)
    if analysis.get("duan_mode", "leading") not in ("leading", "exponential"):
        diags.append(Diagnostic("error", "analysis.duan_mode",
                                "must be leading or exponential"))
    return diags


def _build_acquisition(acq_doc: dict, seed: int) -> AcquisitionConfig:
    return AcquisitionConfig(
        sample_rate_Hz=float(acq_doc.get("sample_rate_Hz", DEFAULT_SAMPLE_RATE)),
        pulse_T_s=float(acq_doc.get("pulse_T_s", DEFAULT_PULSE_T)),
        n_cycles=int(acq_doc.get("n_cycles", 10000)),
        rng_seed=int(seed),
        detection_bandwidth_Hz=(
            None if acq_doc.get("detection_bandwidth_Hz", 600.0) is None
            else float(acq_doc.get("detection_bandwidth_Hz", 600.0))
        ),
        shot_noise_ref_cycles=int(acq_doc.get("shot_noise_ref_cycles", 10000)),
        detection_efficiency=float(acq_doc.get("detection_efficiency", 1.0)),
    )


def _build_interaction(
    section: dict, acq: AcquisitionConfig | None
) -> tuple[SwapParams | None, AtomicConfig | None]:
    pulse_T = acq.pulse_T_s if acq is not None else DEFAULT_PULSE_T
    if "swap" in section and section["swap"] is not None:
        swap = dict(section["swap"])
        return SwapParams(
            gamma_sw_per_s=float(swap["gamma_sw_per_s"]),
            xi=float(swap["xi"]),
            pulse_T_s=pulse_T,
            larmor_Hz=float(swap.get("larmor_Hz", 322e3)),
            gamma_dec_per_s=float(swap.get("gamma_dec_per_s", 0.0)),
        ), None
    if "atomic" in section and section["atomic"] is not None:
        atomic = AtomicConfig(**{k: float(v) for k, v in section["atomic"].items()})
        params = couplings_from_physics(atomic, pulse_T_s=pulse_T)
        gamma_dec = float(section.get("gamma_dec_per_s", 0.0))
        if gamma_dec:
            params = params.with_decoherence(gamma_dec)
        return params, atomic
    raise ValueError("interaction section needs a 'swap' or 'atomic' subsection")


def load_scenario(ref: str | Path) -> Scenario:
    """Load and validate a scenario by bundled name or path."""
    path = resolve_scenario_path(ref)
    diags = validate_config(path)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ConfigError(
            f"{path}: " + "; ".join(f"{d.field}: {d.message}" for d in errors)
        )
    doc = yaml.safe_load(path.read_text())
    seed = int(doc.get("seed", DEFAULT_SEED))
    acq = _build_acquisition(doc.get("acquisition") or {}, seed)
    params = atomic = None
    if doc.get("interaction"):
        params, atomic = _build_interaction(doc["interaction"], acq)
    displacement = None
    if doc.get("displacement"):
        d = doc["displacement"]
        displacement = displaced_css(
            int(d.get("cell", 1)), float(d.get("dx", 0.0)), float(d.get("dp", 0.0))
        )
    analysis_doc = doc.get("analysis") or {}
    analysis = AnalysisOptions(
        whitening=bool(analysis_doc.get("whitening", True)),
        mode_count=int(analysis_doc.get("mode_count", 10)),
        bootstrap_resamples=int(analysis_doc.get("bootstrap_resamples", 200)),
        duan_mode=str(analysis_doc.get("duan_mode", "leading")),
        duan_rate_per_s=(
            None if analysis_doc.get("duan_rate_per_s") is None
            else float(analysis_doc["duan_rate_per_s"])
        ),
    )
    drive = None
    if doc.get("drive_profile"):
        dp = doc["drive_profile"]
        drive = DriveProfile(
            kind=str(dp.get("kind", "constant")),
            gamma0_per_s=float(dp["gamma0_per_s"]),
            grid_points=int(dp.get("grid_points", 2000)),
            duration_s=float(dp.get("duration_s", acq.pulse_T_s)),
        )
    return Scenario(
        name=doc["name"],
        seed=seed,
        quadrature=doc.get("quadrature", "P"),
        acquisition=acq,
        params=params,
        atomic=atomic,
        displacement=displacement,
        analysis=analysis,
        products=tuple(doc.get("products", ["records"])),
        drive_profile=drive,
        calibration_note=doc.get("calibration_note"),
        raw=doc,
    )


def scenario_fingerprint(scenario: Scenario) -> str:
    """Stable content hash of the resolved configuration."""
    import hashlib
    import json

    resolved = {
        "name": scenario.name,
        "seed": scenario.seed,
        "quadrature": scenario.quadrature,
        "acquisition": dataclasses.asdict(scenario.acquisition),
        "params": dataclasses.asdict(scenario.params) if scenario.params else None,
        "atomic": dataclasses.asdict(scenario.atomic) if scenario.atomic else None,
        "displacement": (
            scenario.displacement.mean.tolist() if scenario.displacement else None
        ),
        "analysis": dataclasses.asdict(scenario.analysis),
        "products": list(scenario.products),
        "drive_profile": (
            dataclasses.asdict(scenario.drive_profile) if scenario.drive_profile else None
        ),
    }
    payload = json.dumps(resolved, sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()
