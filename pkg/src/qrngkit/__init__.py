"""Desk-scale photon-arrival-time QRNG pipeline.

Simulated single-photon detection with realistic detector imperfections,
clock-referenced time-bin quantization, min-entropy and uniformity
estimation, leftover-hash-sized LFSR-Toeplitz extraction, and an in-repo
statistical validation battery with export hooks for the external suites.
"""

from .entropy import BinStats, bin_histogram, coefficient_of_variance, min_entropy
from .extract import (
    Construction,
    ExtractorParams,
    ToeplitzSpec,
    build_toeplitz,
    extract_stream,
    lhl_output_length,
    toeplitz_hash,
)
from .lfsr import lfsr_sequence
from .pipeline import PipelineConfig, PipelineError, paper_2022_config, run_pipeline
from .presets import PAPER_2022
from .quantize import BinConfig, RawBitBlock, bin_index, phase_extract, quantize_stream
from .source import (
    ArrivalStream,
    DetectionEvent,
    SourceConfig,
    apply_detector,
    arrival_density_gamma,
    generate_photon_arrivals,
    sample_interarrival,
    simulate,
)
from .stats import (
    AutocorrResult,
    TestReport,
    autocorrelation,
    ent_report,
    export_for_external,
    monobit_and_runs,
    nist_proportion_interval,
    run_battery,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalStream",
    "AutocorrResult",
    "BinConfig",
    "BinStats",
    "Construction",
    "DetectionEvent",
    "ExtractorParams",
    "PAPER_2022",
    "PipelineConfig",
    "PipelineError",
    "RawBitBlock",
    "SourceConfig",
    "TestReport",
    "ToeplitzSpec",
    "apply_detector",
    "arrival_density_gamma",
    "autocorrelation",
    "bin_histogram",
    "bin_index",
    "build_toeplitz",
    "coefficient_of_variance",
    "ent_report",
    "export_for_external",
    "extract_stream",
    "generate_photon_arrivals",
    "lfsr_sequence",
    "lhl_output_length",
    "min_entropy",
    "monobit_and_runs",
    "nist_proportion_interval",
    "paper_2022_config",
    "phase_extract",
    "quantize_stream",
    "run_battery",
    "run_pipeline",
    "sample_interarrival",
    "simulate",
    "toeplitz_hash",
]
