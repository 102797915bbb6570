"""End-to-end protocol orchestration with file-based stage isolation.

Each stage reads only the declared artifacts of its predecessors inside one
output directory, so any stage can be re-run standalone and must reproduce
its outputs byte-for-byte given the same config:

    simulate   -> counts.txt, alice_tags.bin, bob_tags.bin, raw_bits.bin
    tomo       -> assemblage.txt, tomography.json      (from counts.txt)
    certify    -> certification.txt                    (from assemblage.txt
                                                        [+ counts.txt])
    extract    -> extracted_bits.bin, extractor_params.txt, [seed.bin]
                                                       (from certification.txt
                                                        + raw_bits.bin)

``run`` chains the stages, applies the protocol gate (certified min-entropy
above the floor and at least one extractable bit), and writes a
deterministic report.json/report.txt plus wall-clock timings in a separate
timings.json so the deterministic artifacts stay byte-comparable.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import assemblage as asm
from . import extractor as ext
from . import simulate as sim
from .certify import certify as certify_assemblage
from .certify import load_certification, save_certification

CONFIG_FORMAT = "steerqrng-config-v1"

EXIT_OK = 0
EXIT_CERTIFICATION = 2
EXIT_PARAMETERS = 3
EXIT_IO = 4
EXIT_NUMERICAL = 5

COUNTS_FILE = "counts.txt"
ALICE_TAGS_FILE = "alice_tags.bin"
BOB_TAGS_FILE = "bob_tags.bin"
GROUND_TRUTH_FILE = "ground_truth.npy"
RAW_BITS_FILE = "raw_bits.bin"
ASSEMBLAGE_FILE = "assemblage.txt"
TOMO_REPORT_FILE = "tomography.json"
CERTIFICATION_FILE = "certification.txt"
SEED_FILE = "seed.bin"
EXTRACTED_FILE = "extracted_bits.bin"
EXTRACTOR_REPORT_FILE = "extractor_params.txt"
REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"
TIMINGS_FILE = "timings.json"
SWEEP_TSV = "sweep.tsv"
SWEEP_JSON = "sweep.json"


class ConfigError(ValueError):
    """The run configuration is malformed."""


class StageInputError(RuntimeError):
    """A stage's declared input artifact is missing or unreadable."""


@dataclass
class CertificationSettings:
    x_star: str = "auto"          # "auto" | "X" | "Z"
    resamples: int = 0
    bootstrap_seed: int = 1
    min_entropy_floor: float = 1e-6
    validation_tolerance: float = 1e-7

    def validate(self):
        if self.x_star not in ("auto",) + asm.SETTINGS:
            raise ConfigError(f"x_star must be 'auto' or one of {asm.SETTINGS}")
        if self.resamples < 0:
            raise ConfigError("resamples must be non-negative")
        if self.min_entropy_floor <= 0:
            raise ConfigError("min_entropy_floor must be positive")
        if self.validation_tolerance <= 0:
            raise ConfigError("validation_tolerance must be positive")
        return self


@dataclass
class ExtractionSettings:
    epsilon: float = 1e-6
    block_bits: int = 20_000
    seed_file: str | None = None
    seed_rng: int = 7
    field_width: int | None = None

    def validate(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.block_bits < 1:
            raise ConfigError("block_bits must be positive")
        if self.field_width is not None and (
            self.field_width < 1 or self.field_width & (self.field_width - 1)
        ):
            raise ConfigError("field_width must be a power of two")
        return self


@dataclass
class PipelineConfig:
    experiment: sim.ExperimentConfig = field(default_factory=sim.ExperimentConfig)
    certification: CertificationSettings = field(default_factory=CertificationSettings)
    extraction: ExtractionSettings = field(default_factory=ExtractionSettings)
    measurement: str = "default-xz"
    output_dir: str | None = None

    def validate(self):
        self.experiment.validate()
        self.certification.validate()
        self.extraction.validate()
        if self.measurement != "default-xz":
            raise ConfigError(
                f"unknown measurement set {self.measurement!r}; only 'default-xz' is built in"
            )
        return self

    def to_dict(self) -> dict:
        data = {
            "format": CONFIG_FORMAT,
            "experiment": self.experiment.to_dict(),
            "certification": asdict(self.certification),
            "extraction": asdict(self.extraction),
            "measurement": self.measurement,
        }
        if self.output_dir is not None:
            data["output_dir"] = self.output_dir
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        fmt = data.get("format")
        if fmt != CONFIG_FORMAT:
            raise ConfigError(f"config format must be {CONFIG_FORMAT!r}, got {fmt!r}")
        known = {"format", "experiment", "certification", "extraction", "measurement", "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")

        def build(section, dc_type):
            payload = data.get(section, {})
            if not isinstance(payload, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            fields = set(dc_type.__dataclass_fields__)
            bad = set(payload) - fields
            if bad:
                raise ConfigError(f"unknown keys in {section!r}: {sorted(bad)}")
            return dc_type(**payload)

        try:
            experiment = sim.ExperimentConfig.from_dict(data.get("experiment", {}))
        except ValueError as exc:
            raise ConfigError(f"experiment section: {exc}") from exc
        config = cls(
            experiment=experiment,
            certification=build("certification", CertificationSettings),
            extraction=build("extraction", ExtractionSettings),
            measurement=data.get("measurement", "default-xz"),
            output_dir=data.get("output_dir"),
        )
        return config.validate()

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise StageInputError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_file(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _write_json(path: str, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(path: str, stage: str) -> str:
    if not os.path.exists(path):
        raise StageInputError(f"{stage}: missing input artifact {path}")
    return path


# ---------------------------------------------------------------------------
# stages


def stage_simulate(config: PipelineConfig, out_dir: str, *, write_ground_truth: bool = False) -> dict:
    """Produce certification counts and the randomness-stage raw bits."""
    os.makedirs(out_dir, exist_ok=True)
    counts = sim.simulate_tomography(config.experiment)
    asm.save_counts(counts, os.path.join(out_dir, COUNTS_FILE))

    streams = sim.simulate_streams(config.experiment)
    header = {
        "seed": config.experiment.rng_seed,
        "visibility": config.experiment.visibility,
        "eta_alice": config.experiment.eta_alice,
        "eta_bob": config.experiment.eta_bob,
        "pair_rate": config.experiment.pair_rate,
        "duration_rng": config.experiment.duration_rng,
    }
    sim.save_timetags(streams.alice_tags, os.path.join(out_dir, ALICE_TAGS_FILE),
                      dict(header, party="alice"))
    sim.save_timetags(streams.bob_tags, os.path.join(out_dir, BOB_TAGS_FILE),
                      dict(header, party="bob"))
    if write_ground_truth:
        np.save(os.path.join(out_dir, GROUND_TRUTH_FILE), streams.ground_truth)

    pairs = sim.coincidences(streams.alice_tags, streams.bob_tags,
                             config.experiment.coincidence_window)
    bits = sim.raw_bits(pairs)
    ext.save_bits(bits, os.path.join(out_dir, RAW_BITS_FILE))
    return {
        "counts_total": sum(counts.totals.values()),
        "alice_tags": int(len(streams.alice_tags)),
        "bob_tags": int(len(streams.bob_tags)),
        "coincidences": int(len(pairs)),
        "raw_bits": len(bits),
    }


def stage_tomo(config: PipelineConfig, out_dir: str) -> dict:
    """Reconstruct the assemblage from the recorded counts."""
    counts = asm.load_counts(_require(os.path.join(out_dir, COUNTS_FILE), "tomo"))
    reconstruction = asm.ml_reconstruct(counts)
    asm.save_assemblage(reconstruction.assemblage, os.path.join(out_dir, ASSEMBLAGE_FILE))
    summary = {
        "log_likelihood": reconstruction.log_likelihood,
        "log_likelihood_per_trial": reconstruction.log_likelihood_per_trial,
        "iterations": reconstruction.iterations,
        "converged": reconstruction.converged,
        "start_log_likelihoods": list(reconstruction.start_log_likelihoods),
    }
    _write_json(os.path.join(out_dir, TOMO_REPORT_FILE), summary)
    return summary


def stage_certify(config: PipelineConfig, out_dir: str) -> dict:
    """Certify min-entropy (and the steering functional) from the assemblage."""
    assemblage = asm.load_assemblage(_require(os.path.join(out_dir, ASSEMBLAGE_FILE), "certify"))
    settings = config.certification
    counts = None
    if settings.resamples > 0:
        counts = asm.load_counts(_require(os.path.join(out_dir, COUNTS_FILE), "certify"))
    x_star = None if settings.x_star == "auto" else settings.x_star
    result = certify_assemblage(
        assemblage,
        x_star=x_star,
        counts=counts,
        resamples=settings.resamples,
        seed=settings.bootstrap_seed,
    )
    save_certification(result, os.path.join(out_dir, CERTIFICATION_FILE))
    summary = {
        "x_star": result.x_star,
        "p_guess": result.p_guess,
        "h_min": result.h_min,
        "mu": result.mu,
        "beta": result.beta,
    }
    if result.uncertainty is not None:
        summary["h_min_mean"] = result.uncertainty.h_min_mean
        summary["h_min_std"] = result.uncertainty.h_min_std
        summary["bootstrap_failed"] = result.uncertainty.failed
    return summary


class ExtractionParameterError(RuntimeError):
    """The certified rate leaves nothing to extract (protocol parameter fail)."""


def stage_extract(config: PipelineConfig, out_dir: str) -> dict:
    """Run the extractor over the raw bits using the certified rate.

    Expects the protocol gate to have been checked by the caller; still
    refuses to extract when the parameter arithmetic yields no output bits.
    """
    result = load_certification(_require(os.path.join(out_dir, CERTIFICATION_FILE), "extract"))
    raw = ext.load_bits(_require(os.path.join(out_dir, RAW_BITS_FILE), "extract"))
    settings = config.extraction

    params = ext.ExtractorParams.for_source(
        settings.block_bits, result.h_min, settings.epsilon, s=settings.field_width
    )
    with open(os.path.join(out_dir, EXTRACTOR_REPORT_FILE), "w", encoding="ascii") as fh:
        fh.write(ext.params_report(params))
    if not params.passes:
        raise ExtractionParameterError(
            f"no extractable bits: m = 0 at block_bits={settings.block_bits}, "
            f"h_min={result.h_min:.6g}, epsilon={settings.epsilon}"
        )
    if len(raw) < settings.block_bits:
        raise ExtractionParameterError(
            f"raw stream of {len(raw)} bits is shorter than one "
            f"{settings.block_bits}-bit block"
        )

    if settings.seed_file is not None:
        seed = ext.ingest_seed(settings.seed_file, params.d)
    else:
        seed = ext.generate_seed(params.d, settings.seed_rng)
        ext.save_bits(seed, os.path.join(out_dir, SEED_FILE))

    block = ext.block_extract(
        raw, seed, result.h_min, settings.epsilon,
        block_bits=settings.block_bits, s=settings.field_width,
    )
    ext.save_bits(block.bits, os.path.join(out_dir, EXTRACTED_FILE))
    return {
        "blocks": block.n_blocks,
        "bits_per_block": block.params.m,
        "total_bits": len(block.bits),
        "discarded_raw_bits": block.discarded_bits,
        "seed_bits": block.params.d,
        "field_width": block.params.s,
    }


@dataclass
class RunReport:
    config: dict
    certification: dict
    pass_flag: bool
    exit_code: int
    gate: str
    extraction: dict | None
    artifacts: dict
    simulation: dict | None = None
    tomography: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "simulation": self.simulation,
            "tomography": self.tomography,
            "certification": self.certification,
            "pass": self.pass_flag,
            "gate": self.gate,
            "exit_code": self.exit_code,
            "extraction": self.extraction,
            "artifacts": self.artifacts,
        }


def _render_text_report(report: dict) -> str:
    lines = ["steerqrng run report", "===================="]
    certification = report.get("certification") or {}
    if certification:
        lines.append(f"setting x*        : {certification.get('x_star', '?')}")
        p = certification.get("p_guess")
        h = certification.get("h_min")
        lines.append(f"guessing prob.    : {p:.9f}" if p is not None else "guessing prob.    : absent")
        lines.append(f"min-entropy rate  : {h:.9f}" if h is not None else "min-entropy rate  : absent")
        if certification.get("mu") is not None:
            lines.append(f"lhs slack mu      : {certification['mu']:+.9f}")
        if certification.get("beta") is not None:
            lines.append(f"steering beta     : {certification['beta']:+.9f}")
        if "h_min_std" in certification:
            lines.append(
                "bootstrap         : "
                f"{certification['h_min_mean']:.9f} +/- {certification['h_min_std']:.9f}"
            )
    else:
        lines.append("certification     : absent")
    lines.append(f"protocol gate     : {report.get('gate', 'not evaluated')}")
    lines.append(f"pass              : {'yes' if report.get('pass') else 'no'}")
    extraction = report.get("extraction")
    if extraction:
        lines.append(
            "extraction        : "
            f"{extraction['total_bits']} bits in {extraction['blocks']} blocks "
            f"({extraction['bits_per_block']} per block, seed {extraction['seed_bits']} bits)"
        )
    else:
        lines.append("extraction        : absent")
    artifacts = report.get("artifacts") or {}
    if artifacts:
        lines.append("artifacts:")
        for name in sorted(artifacts):
            lines.append(f"  {name}: {artifacts[name]}")
    return "\n".join(lines) + "\n"


def run(config: PipelineConfig, out_dir: str, *, write_ground_truth: bool = False) -> RunReport:
    """Execute the full protocol and write all artifacts plus the report."""
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    timings: dict[str, float] = {}
    artifacts: dict[str, str] = {}

    t0 = time.perf_counter()
    sim_summary = stage_simulate(config, out_dir, write_ground_truth=write_ground_truth)
    timings["simulate"] = time.perf_counter() - t0
    artifacts.update({
        "counts": COUNTS_FILE,
        "alice_tags": ALICE_TAGS_FILE,
        "bob_tags": BOB_TAGS_FILE,
        "raw_bits": RAW_BITS_FILE,
    })
    if write_ground_truth:
        artifacts["ground_truth"] = GROUND_TRUTH_FILE

    t0 = time.perf_counter()
    tomo_summary = stage_tomo(config, out_dir)
    timings["tomo"] = time.perf_counter() - t0
    artifacts["assemblage"] = ASSEMBLAGE_FILE
    artifacts["tomography"] = TOMO_REPORT_FILE

    t0 = time.perf_counter()
    cert_summary = stage_certify(config, out_dir)
    timings["certify"] = time.perf_counter() - t0
    artifacts["certification"] = CERTIFICATION_FILE

    floor = config.certification.min_entropy_floor
    extraction_summary = None
    if cert_summary["h_min"] <= floor:
        pass_flag = False
        exit_code = EXIT_CERTIFICATION
        gate = (
            f"certification failed: h_min = {cert_summary['h_min']:.6g} "
            f"<= floor {floor:.6g}"
        )
    else:
        t0 = time.perf_counter()
        try:
            extraction_summary = stage_extract(config, out_dir)
        except ExtractionParameterError as exc:
            timings["extract"] = time.perf_counter() - t0
            pass_flag = False
            exit_code = EXIT_PARAMETERS
            gate = f"parameter check failed: {exc}"
            artifacts["extractor_params"] = EXTRACTOR_REPORT_FILE
        else:
            timings["extract"] = time.perf_counter() - t0
            pass_flag = True
            exit_code = EXIT_OK
            gate = "passed"
            artifacts["extractor_params"] = EXTRACTOR_REPORT_FILE
            artifacts["extracted_bits"] = EXTRACTED_FILE
            if config.extraction.seed_file is None:
                artifacts["seed"] = SEED_FILE

    report = RunReport(
        config=config.to_dict(),
        simulation=sim_summary,
        tomography=tomo_summary,
        certification=cert_summary,
        pass_flag=pass_flag,
        exit_code=exit_code,
        gate=gate,
        extraction=extraction_summary,
        artifacts=artifacts,
    )
    _write_json(os.path.join(out_dir, REPORT_JSON), report.to_dict())
    with open(os.path.join(out_dir, REPORT_TEXT), "w", encoding="utf-8") as fh:
        fh.write(_render_text_report(report.to_dict()))
    _write_json(os.path.join(out_dir, TIMINGS_FILE), {"seconds": timings})
    return report


def load_report(out_dir: str) -> dict:
    """Summaries for a completed or partial run directory.

    Prefers report.json; otherwise assembles what the present artifacts
    allow, marking the absent stages, so interrupted runs still render.
    """
    path = os.path.join(out_dir, REPORT_JSON)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    if not os.path.isdir(out_dir):
        raise StageInputError(f"run directory not found: {out_dir}")

    report: dict = {"artifacts": {}, "certification": {}, "extraction": None, "pass": None,
                    "gate": "not evaluated (partial run)"}
    cert_path = os.path.join(out_dir, CERTIFICATION_FILE)
    if os.path.exists(cert_path):
        result = load_certification(cert_path)
        report["certification"] = {
            "x_star": result.x_star,
            "p_guess": result.p_guess,
            "h_min": result.h_min,
            "mu": result.mu,
            "beta": result.beta,
        }
        report["artifacts"]["certification"] = CERTIFICATION_FILE
    extracted = os.path.join(out_dir, EXTRACTED_FILE)
    if os.path.exists(extracted):
        bits = ext.load_bits(extracted)
        report["extraction"] = {"total_bits": len(bits), "blocks": None,
                                "bits_per_block": None, "seed_bits": None}
        report["artifacts"]["extracted_bits"] = EXTRACTED_FILE
    for name, fname in (
        ("counts", COUNTS_FILE),
        ("assemblage", ASSEMBLAGE_FILE),
        ("raw_bits", RAW_BITS_FILE),
    ):
        if os.path.exists(os.path.join(out_dir, fname)):
            report["artifacts"][name] = fname
    if not report["artifacts"]:
        raise StageInputError(f"{out_dir}: no run artifacts found")
    return report


def render_report(out_dir: str) -> str:
    report = load_report(out_dir)
    text = _render_text_report(report)
    if report.get("extraction") and report["extraction"].get("blocks") is None:
        # Partial-run rendering has less to say about extraction internals.
        text = text.replace(
            f"{report['extraction']['total_bits']} bits in None blocks "
            "(None per block, seed None bits)",
            f"{report['extraction']['total_bits']} bits",
        )
    return text


def sweep(
    config: PipelineConfig,
    out_dir: str,
    eta_values,
    visibility_values=None,
) -> list[dict]:
    """Certification sweep over ideal assemblages on an eta (x visibility) grid.

    Emits plot-ready rows (one per grid point) with the certified rate and
    the steering quantities, written as both TSV and JSON.
    """
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    if visibility_values is None:
        visibility_values = [config.experiment.visibility]
    measurements = asm.default_measurements()
    x_star = config.certification.x_star

    rows = []
    for visibility in visibility_values:
        rho = sim.werner_state(visibility)
        for eta in eta_values:
            ideal = asm.ideal_assemblage(rho, measurements, eta=eta)
            result = certify_assemblage(ideal, x_star=None if x_star == "auto" else x_star)
            rows.append({
                "visibility": float(visibility),
                "eta": float(eta),
                "x_star": result.x_star,
                "p_guess": result.p_guess,
                "h_min": result.h_min,
                "mu": result.mu,
                "beta": result.beta,
            })

    columns = ["visibility", "eta", "x_star", "p_guess", "h_min", "mu", "beta"]
    with open(os.path.join(out_dir, SWEEP_TSV), "w", encoding="ascii") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(
                row[c] if isinstance(row[c], str) else f"{row[c]:.12g}" for c in columns
            ) + "\n")
    _write_json(os.path.join(out_dir, SWEEP_JSON), {"rows": rows})
    return rows
