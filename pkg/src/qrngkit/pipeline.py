"""End-to-end orchestration: simulate -> quantize -> estimate -> extract -> validate.

Conditioned bits are persisted only when the validation battery passes;
failing runs are quarantined to a separate path (with their failing report)
rather than deleted. Every run emits a deterministic provenance record with
all parameters and artifact digests, so reruns with the same seeds are
byte-comparable; wall-clock timings are returned to the caller but kept out
of all persisted artifacts.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import time
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .entropy import BinStats, bin_histogram
from .extract import (
    Construction,
    ExtractionResult,
    ExtractorParams,
    extract_stream,
    random_seed_bits,
    seed_bits_from_file,
    seed_length,
)
from .formats import write_bits, write_timestamps
from .presets import PAPER_2022, source_config
from .quantize import BinConfig, bin_indices, pack_indices
from .source import SourceConfig, simulate, simulate_detections
from .stats import TestReport, run_battery

__all__ = [
    "PipelineError",
    "ExtractorSettings",
    "BatterySettings",
    "PipelineConfig",
    "PipelineResult",
    "paper_2022_config",
    "run_pipeline",
]


class PipelineError(RuntimeError):
    """A stage failure; carries the failing stage name."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExtractorSettings:
    input_bits_n: int
    output_bits_m: int
    epsilon_log2: int
    declared_h_min_per_bit: float
    construction: Construction = Construction.LFSR
    feedback_polynomial: int | None = None
    extractor_seed: int | None = None
    seed_file: str | None = None

    def __post_init__(self):
        if self.extractor_seed is None and self.seed_file is None:
            raise ValueError("either extractor_seed or seed_file must be provided")

    def seed_bits(self) -> np.ndarray:
        need = seed_length(
            self.construction, self.output_bits_m, self.input_bits_n, self.feedback_polynomial
        )
        if self.seed_file is not None:
            return seed_bits_from_file(self.seed_file, need)
        rng = np.random.default_rng(self.extractor_seed)
        return random_seed_bits(
            self.construction,
            self.output_bits_m,
            self.input_bits_n,
            self.feedback_polynomial,
            rng,
        )

    def params(self) -> ExtractorParams:
        return ExtractorParams(
            input_bits_n=self.input_bits_n,
            output_bits_m=self.output_bits_m,
            epsilon_log2=self.epsilon_log2,
            seed_bits=self.seed_bits(),
            construction=self.construction,
            feedback_polynomial=self.feedback_polynomial,
            declared_h_min_per_bit=self.declared_h_min_per_bit,
        )


@dataclass(frozen=True)
class BatterySettings:
    max_lag: int = 100
    allowed_excursions: int = 3


@dataclass(frozen=True)
class PipelineConfig:
    source: SourceConfig
    bins: BinConfig
    extractor: ExtractorSettings | None
    battery: BatterySettings = field(default_factory=BatterySettings)
    blocks: int | None = None        # extraction blocks to produce, or ...
    duration_ps: int | None = None   # ... a fixed acquisition duration
    skip_extraction: bool = False    # bias studies: battery runs on raw bits
    out_dir: str | None = None
    write_raw: bool = True
    write_timestamp_file: bool = False

    def __post_init__(self):
        if self.bins.clock_period_ps != self.source.clock_period_ps:
            raise ValueError("bins.clock_period_ps must match source.clock_period_ps")
        if self.bins.bin_count != self.source.bin_count:
            raise ValueError("bins.bin_count must match source.bin_count")
        if (self.blocks is None) == (self.duration_ps is None):
            raise ValueError("exactly one of blocks or duration_ps must be set")
        if self.blocks is not None and self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.blocks is not None and self.skip_extraction:
            raise ValueError("volume in blocks requires extraction; use duration_ps")
        if self.extractor is None:
            if not self.skip_extraction:
                raise ValueError("extractor settings required unless skip_extraction")
        else:
            # Fail early on an unsatisfiable extractor rather than mid-run.
            self.extractor.params()


def paper_2022_config(
    sim_seed: int,
    extractor_seed: int,
    scale: float = 0.01,
    out_dir: str | None = None,
    jitter_sigma_ps: float = 0.0,
    **overrides,
) -> PipelineConfig:
    """paper-2022 pipeline at a fraction of the full 9712-block volume."""
    p = PAPER_2022
    blocks = max(1, math.ceil(p.full_block_count * scale))
    return PipelineConfig(
        source=source_config(sim_seed, jitter_sigma_ps),
        bins=BinConfig(p.clock_period_ps, p.bin_count),
        extractor=ExtractorSettings(
            input_bits_n=p.block_input_bits,
            output_bits_m=p.output_bits,
            epsilon_log2=p.epsilon_log2,
            declared_h_min_per_bit=p.declared_h_min_per_bit,
            construction=p.construction,
            feedback_polynomial=p.feedback_polynomial,
            extractor_seed=extractor_seed,
        ),
        blocks=blocks,
        out_dir=out_dir,
        **overrides,
    )


@dataclass(frozen=True)
class PipelineResult:
    detections: int
    dark_count: int
    bin_stats: BinStats
    extraction: ExtractionResult | None  # None when extraction was skipped
    conditioned_bits: np.ndarray
    report: TestReport
    provenance: str
    passed: bool
    paths: dict
    timings: dict


def _digest(packed: bytes) -> str:
    return hashlib.sha256(packed).hexdigest()


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    timings: dict[str, float] = {}
    paths: dict[str, Path] = {}

    def stage(name):
        timings[name] = time.perf_counter()

    def done(name):
        timings[name] = time.perf_counter() - timings[name]

    src, bins = config.source, config.bins

    stage("simulate")
    try:
        if config.duration_ps is not None:
            stream = simulate(src, config.duration_ps)
        else:
            per_block = config.extractor.input_bits_n / bins.bits_per_detection
            stream = simulate_detections(src, math.ceil(config.blocks * per_block))
    except (ValueError, RuntimeError) as e:
        raise PipelineError("simulate", str(e)) from e
    done("simulate")

    stage("quantize")
    if stream.count == 0:
        raise PipelineError("quantize", "empty stream")
    try:
        indices = bin_indices(stream, bins)
        raw_block = pack_indices(indices, bins)
    except ValueError as e:
        raise PipelineError("quantize", str(e)) from e
    done("quantize")

    stage("entropy")
    try:
        bin_stats = bin_histogram(indices, bins.bin_count)
    except ValueError as e:
        raise PipelineError("entropy", str(e)) from e
    done("entropy")

    stage("extract")
    if config.skip_extraction:
        params, extraction = None, None
        conditioned_bits = raw_block.bits()
    else:
        try:
            params = config.extractor.params()
            extraction = extract_stream(
                raw_block.bits(), params, measured_h_min_per_bit=bin_stats.h_min_per_bit
            )
        except ValueError as e:
            raise PipelineError("extract", str(e)) from e
        conditioned_bits = extraction.bits
    done("extract")

    stage("validate")
    conditioned_packed = np.packbits(conditioned_bits).tobytes()
    conditioned_digest = _digest(conditioned_packed)
    try:
        report = run_battery(
            conditioned_bits,
            max_lag=config.battery.max_lag,
            allowed_excursions=config.battery.allowed_excursions,
            digest=conditioned_digest,
        )
    except ValueError as e:
        raise PipelineError("validate", str(e)) from e
    done("validate")

    seed_digest = "" if params is None else _digest(np.packbits(params.seed_bits).tobytes())
    raw_digest = _digest(raw_block.data)
    provenance = _provenance(
        config, stream, bin_stats, extraction, report,
        raw_digest, conditioned_digest, seed_digest,
    )

    if config.out_dir is not None:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if params is None:
            metadata = {"extraction": "skipped"}
        else:
            metadata = {
                "n": str(params.input_bits_n),
                "m": str(params.output_bits_m),
                "epsilon_log2": str(params.epsilon_log2),
                "construction": params.construction.value,
                "polynomial": hex(params.feedback_polynomial or 0),
                "seed_digest": seed_digest,
            }
        if config.write_timestamp_file:
            paths["timestamps"] = out_dir / "timestamps.qrts"
            write_timestamps(
                paths["timestamps"], src.clock_period_ps, src.bin_count, stream.timestamps_ps
            )
        if config.write_raw:
            paths["raw"] = out_dir / "raw.qrrb"
            write_bits(paths["raw"], raw_block.bits())
        if report.passed:
            paths["conditioned"] = out_dir / "conditioned.qrrb"
        else:
            quarantine = out_dir / "quarantine"
            quarantine.mkdir(exist_ok=True)
            paths["conditioned"] = quarantine / "conditioned.qrrb"
        write_bits(paths["conditioned"], conditioned_bits, metadata)
        paths["report"] = out_dir / "report.txt"
        paths["report"].write_text(report.to_text() + "\n" + report.to_records() + "\n")
        paths["provenance"] = out_dir / "provenance.txt"
        paths["provenance"].write_text(provenance)

    return PipelineResult(
        detections=stream.count,
        dark_count=stream.dark_count,
        bin_stats=bin_stats,
        extraction=extraction,
        conditioned_bits=conditioned_bits,
        report=report,
        provenance=provenance,
        passed=report.passed,
        paths=paths,
        timings=timings,
    )


def _provenance(config, stream, bin_stats, extraction, report,
                raw_digest, conditioned_digest, seed_digest) -> str:
    lines = ["[parameters]"]
    for f in dataclass_fields(SourceConfig):
        lines.append(f"source.{f.name} = {getattr(config.source, f.name)!r}")
    lines.append(f"bins.clock_period_ps = {config.bins.clock_period_ps}")
    lines.append(f"bins.bin_count = {config.bins.bin_count}")
    ex = config.extractor
    lines.append(f"extractor.enabled = {not config.skip_extraction}")
    if ex is not None:
        lines.append(f"extractor.input_bits_n = {ex.input_bits_n}")
        lines.append(f"extractor.output_bits_m = {ex.output_bits_m}")
        lines.append(f"extractor.epsilon_log2 = {ex.epsilon_log2}")
        lines.append(f"extractor.declared_h_min_per_bit = {ex.declared_h_min_per_bit!r}")
        lines.append(f"extractor.construction = {ex.construction.value}")
        poly = ex.feedback_polynomial
        lines.append(f"extractor.feedback_polynomial = {hex(poly) if poly else ''}")
        lines.append(f"extractor.extractor_seed = {'' if ex.extractor_seed is None else ex.extractor_seed}")
        lines.append(f"extractor.seed_file = {ex.seed_file or ''}")
    lines.append(f"battery.max_lag = {config.battery.max_lag}")
    lines.append(f"battery.allowed_excursions = {config.battery.allowed_excursions}")
    lines.append(f"volume.blocks = {'' if config.blocks is None else config.blocks}")
    lines.append(f"volume.duration_ps = {'' if config.duration_ps is None else config.duration_ps}")
    lines.append("")
    lines.append("[measured]")
    lines.append(f"detections = {stream.count}")
    lines.append(f"dark_counts = {stream.dark_count}")
    lines.append(f"h_min_per_symbol = {bin_stats.h_min_per_symbol!r}")
    lines.append(f"h_min_per_bit = {bin_stats.h_min_per_bit!r}")
    lines.append(f"cov = {bin_stats.cov!r}")
    lines.append(f"raw_bits = {stream.count * config.bins.bits_per_detection}")
    if extraction is not None:
        lines.append(f"blocks_extracted = {extraction.block_count}")
        lines.append(f"dropped_bits = {extraction.dropped_bits}")
        lines.append(f"conditioned_bits = {extraction.bits.size}")
        lines.append(f"extraction_ratio = {extraction.extraction_ratio!r}")
    lines.append(f"battery_passed = {report.passed}")
    lines.append("")
    lines.append("[digests]")
    lines.append(f"raw_sha256 = {raw_digest}")
    lines.append(f"conditioned_sha256 = {conditioned_digest}")
    lines.append(f"extractor_seed_sha256 = {seed_digest}")
    return "\n".join(lines) + "\n"


# --- flat key = value config files ---

def config_to_ini(config: PipelineConfig) -> str:
    cp = configparser.ConfigParser()
    cp["source"] = {
        f.name: repr(getattr(config.source, f.name)) if isinstance(getattr(config.source, f.name), float)
        else str(getattr(config.source, f.name))
        for f in dataclass_fields(SourceConfig)
    }
    cp["bins"] = {
        "clock_period_ps": str(config.bins.clock_period_ps),
        "bin_count": str(config.bins.bin_count),
    }
    ex = config.extractor
    if ex is not None:
        cp["extractor"] = {
            "enabled": str(not config.skip_extraction),
            "input_bits_n": str(ex.input_bits_n),
            "output_bits_m": str(ex.output_bits_m),
            "epsilon_log2": str(ex.epsilon_log2),
            "declared_h_min_per_bit": repr(ex.declared_h_min_per_bit),
            "construction": ex.construction.value,
            "feedback_polynomial": hex(ex.feedback_polynomial) if ex.feedback_polynomial else "",
            "extractor_seed": "" if ex.extractor_seed is None else str(ex.extractor_seed),
            "seed_file": ex.seed_file or "",
        }
    else:
        cp["extractor"] = {"enabled": "False"}
    cp["battery"] = {
        "max_lag": str(config.battery.max_lag),
        "allowed_excursions": str(config.battery.allowed_excursions),
    }
    cp["volume"] = {
        "blocks": "" if config.blocks is None else str(config.blocks),
        "duration_ps": "" if config.duration_ps is None else str(config.duration_ps),
    }
    cp["io"] = {
        "out_dir": config.out_dir or "",
        "write_raw": str(config.write_raw),
        "write_timestamp_file": str(config.write_timestamp_file),
    }
    import io as _io

    buf = _io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def config_from_ini(path) -> PipelineConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ValueError(f"could not read config file {path}")
    s = cp["source"]
    source = SourceConfig(
        photon_rate_hz=s.getfloat("photon_rate_hz"),
        detector_efficiency=s.getfloat("detector_efficiency"),
        dead_time_ps=s.getint("dead_time_ps"),
        dark_rate_hz=s.getfloat("dark_rate_hz"),
        jitter_sigma_ps=s.getfloat("jitter_sigma_ps"),
        clock_period_ps=s.getint("clock_period_ps"),
        bin_count=s.getint("bin_count"),
        sim_seed=s.getint("sim_seed"),
        allow_short_dead_time=s.getboolean("allow_short_dead_time", fallback=False),
    )
    b = cp["bins"]
    bins = BinConfig(b.getint("clock_period_ps"), b.getint("bin_count"))
    e = cp["extractor"] if cp.has_section("extractor") else {}
    enabled = str(e.get("enabled", "True")).lower() in ("1", "true", "yes")
    if enabled:
        extractor = ExtractorSettings(
            input_bits_n=e.getint("input_bits_n"),
            output_bits_m=e.getint("output_bits_m"),
            epsilon_log2=e.getint("epsilon_log2"),
            declared_h_min_per_bit=e.getfloat("declared_h_min_per_bit"),
            construction=Construction(e.get("construction", "lfsr")),
            feedback_polynomial=int(e["feedback_polynomial"], 0) if e.get("feedback_polynomial") else None,
            extractor_seed=e.getint("extractor_seed") if e.get("extractor_seed") else None,
            seed_file=e.get("seed_file") or None,
        )
    else:
        extractor = None
    bt = cp["battery"] if cp.has_section("battery") else {}
    battery = BatterySettings(
        max_lag=int(bt.get("max_lag", 100)),
        allowed_excursions=int(bt.get("allowed_excursions", 3)),
    )
    v = cp["volume"] if cp.has_section("volume") else {}
    io_sec = cp["io"] if cp.has_section("io") else {}
    return PipelineConfig(
        source=source,
        bins=bins,
        extractor=extractor,
        battery=battery,
        blocks=int(v["blocks"]) if v.get("blocks") else None,
        duration_ps=int(v["duration_ps"]) if v.get("duration_ps") else None,
        skip_extraction=not enabled,
        out_dir=io_sec.get("out_dir") or None,
        write_raw=str(io_sec.get("write_raw", "True")).lower() in ("1", "true", "yes"),
        write_timestamp_file=str(io_sec.get("write_timestamp_file", "False")).lower()
        in ("1", "true", "yes"),
    )
