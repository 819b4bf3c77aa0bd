"""Command-line surface: each pipeline stage runnable standalone on files.

Stages communicate through the documented containers, so externally produced
data (e.g. real hardware timestamps in the timestamp container) can enter at
any point. ``run`` executes the whole pipeline with pass/fail-gated
persistence. The default preset directory for ``run --config NAME`` can be
set with the QRNGKIT_PRESET_DIR environment variable.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import entropy as entropy_mod
from . import stats as stats_mod
from .extract import Construction, ExtractorParams, extract_stream, lhl_output_length
from .formats import read_bits, read_timestamps, write_bits, write_timestamps
from .lfsr import DEFAULT_POLYNOMIAL
from .pipeline import (
    ExtractorSettings,
    PipelineError,
    config_from_ini,
    paper_2022_config,
    run_pipeline,
)
from .presets import PAPER_2022, TABLE1_REFERENCE_COV, TABLE1_ROWS, source_config
from .quantize import BinConfig, bin_indices, pack_indices
from .source import SourceConfig, simulate, simulate_detections

_PRESET_ENV = "QRNGKIT_PRESET_DIR"


def _add_source_flags(p: argparse.ArgumentParser) -> None:
    d = PAPER_2022
    p.add_argument("--photon-rate-hz", type=float, default=d.photon_rate_hz,
                   help="photon arrival rate at the detector input")
    p.add_argument("--detector-efficiency", type=float, default=d.detector_efficiency)
    p.add_argument("--dead-time-ps", type=int, default=d.dead_time_ps)
    p.add_argument("--dark-rate-hz", type=float, default=d.dark_rate_hz)
    p.add_argument("--jitter-sigma-ps", type=float, default=0.0)
    p.add_argument("--clock-period-ps", type=int, default=d.clock_period_ps)
    p.add_argument("--bin-count", type=int, default=d.bin_count)
    p.add_argument("--sim-seed", type=int, default=1)
    p.add_argument("--allow-short-dead-time", action="store_true")


def _source_from_args(args) -> SourceConfig:
    return SourceConfig(
        photon_rate_hz=args.photon_rate_hz,
        detector_efficiency=args.detector_efficiency,
        dead_time_ps=args.dead_time_ps,
        dark_rate_hz=args.dark_rate_hz,
        jitter_sigma_ps=args.jitter_sigma_ps,
        clock_period_ps=args.clock_period_ps,
        bin_count=args.bin_count,
        sim_seed=args.sim_seed,
        allow_short_dead_time=args.allow_short_dead_time,
    )


def _cmd_simulate(args) -> int:
    config = _source_from_args(args)
    if (args.duration_ps is None) == (args.detections is None):
        raise SystemExit("simulate: provide exactly one of --duration-ps / --detections")
    if args.duration_ps is not None:
        stream = simulate(config, args.duration_ps)
    else:
        stream = simulate_detections(config, args.detections)
    write_timestamps(args.out, config.clock_period_ps, config.bin_count, stream.timestamps_ps)
    print(f"wrote {stream.count} timestamps ({stream.dark_count} dark) to {args.out}")
    return 0


def _cmd_quantize(args) -> int:
    header, ts = read_timestamps(args.infile)
    period = args.clock_period_ps or header.clock_period_ps
    bins = args.bin_count or header.bin_count
    config = BinConfig(period, bins)
    block = pack_indices(bin_indices(ts, config), config)
    write_bits(args.out, block.bits())
    print(f"quantized {block.source_detection_count} detections -> {block.bit_count} raw bits")
    return 0


def _load_bits(path: str, fmt: str) -> np.ndarray:
    if fmt == "qrrb":
        return read_bits(path)[0]
    return stats_mod.import_external(path, fmt)


def _cmd_analyze(args) -> int:
    bits = _load_bits(args.infile, args.format)
    report = stats_mod.run_battery(
        bits, max_lag=args.max_lag, allowed_excursions=args.allowed_excursions
    )
    if args.histogram_bins:
        k = args.histogram_bins.bit_length() - 1
        if 1 << k != args.histogram_bins:
            raise SystemExit("analyze: --histogram-bins must be a power of two")
        usable = bits.size // k * k
        weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
        symbols = bits[:usable].reshape(-1, k).astype(np.int64) @ weights
        stats = entropy_mod.bin_histogram(symbols, args.histogram_bins)
        print(f"h_min/symbol={stats.h_min_per_symbol:.6f} h_min/bit={stats.h_min_per_bit:.6f} "
              f"cov={stats.cov:.9f}")
    print(report.to_text())
    if args.report_out:
        Path(args.report_out).write_text(report.to_text() + "\n" + report.to_records() + "\n")
    return 0 if report.passed else 1


def _cmd_extract(args) -> int:
    bits, _ = read_bits(args.infile)
    if args.preset == "paper-2022":
        n = args.n or PAPER_2022.block_input_bits
        m = args.m or PAPER_2022.output_bits
        eps = args.epsilon_log2 or PAPER_2022.epsilon_log2
        hmin = args.hmin if args.hmin is not None else PAPER_2022.declared_h_min_per_bit
    else:
        if args.n is None or args.epsilon_log2 is None:
            raise SystemExit("extract: --n and --epsilon-log2 required without --preset")
        n, eps = args.n, args.epsilon_log2
        hmin = args.hmin if args.hmin is not None else 1.0
        m = args.m or lhl_output_length(n, hmin, eps)
    settings = ExtractorSettings(
        input_bits_n=n,
        output_bits_m=m,
        epsilon_log2=eps,
        declared_h_min_per_bit=hmin,
        construction=Construction(args.construction),
        feedback_polynomial=(
            int(args.polynomial, 0) if args.polynomial else
            (DEFAULT_POLYNOMIAL if Construction(args.construction) is Construction.LFSR else None)
        ),
        extractor_seed=args.extractor_seed,
        seed_file=args.seed_file,
    )
    params = settings.params()
    result = extract_stream(bits, params)
    metadata = {
        "n": str(n), "m": str(m), "epsilon_log2": str(eps),
        "construction": params.construction.value,
        "polynomial": hex(params.feedback_polynomial or 0),
    }
    write_bits(args.out, result.bits, metadata)
    print(
        f"extracted {result.block_count} blocks -> {result.bits.size} bits "
        f"(ratio {result.extraction_ratio:.4f}, {result.dropped_bits} trailing bits dropped)"
    )
    return 0


def _cmd_sweep(args) -> int:
    if args.preset != "table1":
        raise SystemExit(f"sweep: unknown preset {args.preset!r}")
    template = source_config(args.sim_seed, jitter_sigma_ps=args.jitter_sigma_ps)
    rows = entropy_mod.sweep_configurations(
        template, TABLE1_ROWS,
        samples_per_row=args.samples_per_row,
        reference_covs=TABLE1_REFERENCE_COV,
    )
    text = entropy_mod.sweep_table_text(rows)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n\n" + entropy_mod.sweep_records(rows))
    return 0


def _cmd_export(args) -> int:
    bits, _ = read_bits(args.infile)
    written = stats_mod.export_for_external(bits, args.format, args.out)
    print(f"exported {bits.size} bits as {args.format} ({written} bytes) to {args.out}")
    return 0


def _cmd_run(args) -> int:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            preset_dir = os.environ.get(_PRESET_ENV)
            if preset_dir and (Path(preset_dir) / args.config).exists():
                path = Path(preset_dir) / args.config
        config = config_from_ini(path)
    elif args.preset == "paper-2022":
        config = paper_2022_config(
            sim_seed=args.sim_seed,
            extractor_seed=args.extractor_seed,
            scale=args.scale,
            out_dir=args.out_dir,
            jitter_sigma_ps=args.jitter_sigma_ps,
            write_timestamp_file=args.write_timestamps,
        )
        if args.no_extract:
            if args.duration_ps is None:
                raise SystemExit("run: --no-extract requires --duration-ps")
            config = dataclasses.replace(
                config, skip_extraction=True, blocks=None, duration_ps=args.duration_ps
            )
        elif args.duration_ps is not None:
            config = dataclasses.replace(config, blocks=None, duration_ps=args.duration_ps)
    else:
        raise SystemExit(f"run: unknown preset {args.preset!r}")
    try:
        result = run_pipeline(config)
    except PipelineError as e:
        print(f"pipeline failed at stage {e.stage}: {e.cause}", file=sys.stderr)
        return 2
    total = sum(result.timings.values())
    print(result.report.to_text())
    print(
        f"detections={result.detections} h_min/bit={result.bin_stats.h_min_per_bit:.4f} "
        f"cov={result.bin_stats.cov:.6f} conditioned_bits={result.conditioned_bits.size}"
    )
    print(
        f"throughput (desk-scale, informational): "
        f"{result.conditioned_bits.size / total / 1e6:.2f} Mbit/s conditioned over {total:.2f} s"
    )
    for name, p in result.paths.items():
        print(f"{name}: {p}")
    if not result.passed:
        print("battery FAILED; conditioned output quarantined", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrngkit",
        description="Photon-arrival-time QRNG pipeline: simulate, quantize, analyze, extract.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate detector timestamps")
    _add_source_flags(p)
    p.add_argument("--duration-ps", type=int, default=None)
    p.add_argument("--detections", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("quantize", help="timestamps -> raw bits")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clock-period-ps", type=int, default=None,
                   help="override the value recorded in the timestamp file")
    p.add_argument("--bin-count", type=int, default=None)
    p.set_defaults(func=_cmd_quantize)

    p = sub.add_parser("analyze", help="run the statistical battery on a bit stream")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["qrrb", "raw-binary", "ascii-01"], default="qrrb")
    p.add_argument("--max-lag", type=int, default=100)
    p.add_argument("--allowed-excursions", type=int, default=3)
    p.add_argument("--histogram-bins", type=int, default=None,
                   help="also report min-entropy/CoV over symbols of log2(bins) bits")
    p.add_argument("--report-out", default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("extract", help="Toeplitz-hash raw bits into conditioned bits")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=["paper-2022"], default=None)
    p.add_argument("--n", type=int, default=None, help="input bits per block")
    p.add_argument("--m", type=int, default=None,
                   help="output bits per block (default: leftover-hash bound)")
    p.add_argument("--epsilon-log2", type=int, default=None)
    p.add_argument("--hmin", type=float, default=None, help="declared min-entropy per bit")
    p.add_argument("--construction", choices=["lfsr", "explicit"], default="lfsr")
    p.add_argument("--polynomial", default=None, help="feedback polynomial mask, e.g. 0x100400007")
    p.add_argument("--extractor-seed", type=int, default=None)
    p.add_argument("--seed-file", default=None)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("sweep", help="CoV / min-entropy across clock configurations")
    p.add_argument("--preset", default="table1")
    p.add_argument("--samples-per-row", type=int, default=1_000_000)
    p.add_argument("--jitter-sigma-ps", type=float, default=100.0)
    p.add_argument("--sim-seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("export", help="write bits for an external test suite")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["raw-binary", "ascii-01"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("run", help="full pipeline with gated persistence")
    p.add_argument("--preset", default="paper-2022")
    p.add_argument("--config", default=None, help="pipeline config file (key = value sections)")
    p.add_argument("--scale", type=float, default=0.01,
                   help="fraction of the full 9712-block volume")
    p.add_argument("--duration-ps", type=int, default=None,
                   help="acquire for a fixed duration instead of a block count")
    p.add_argument("--no-extract", action="store_true",
                   help="bias studies: run the battery on raw bits")
    p.add_argument("--sim-seed", type=int, default=1)
    p.add_argument("--extractor-seed", type=int, default=2)
    p.add_argument("--jitter-sigma-ps", type=float, default=0.0)
    p.add_argument("--write-timestamps", action="store_true")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
