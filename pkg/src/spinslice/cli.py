"""Command-line runner.

One configuration file describes the beam, the device, the numerical
grid and the run mode; the runner prints a one-screen summary and
writes a self-contained output bundle (spinor dumps, 16-bit PGM
rasters, metrics.csv, provenance.json). Identical configurations
produce byte-identical metrics and provenance, which makes runs easy
to diff.

Modes: near_field (exit-plane wave), far_field (adds the focal-plane
picture and separability bookkeeping), fringe_only (same with the
device core removed), ray_trace (classical cross-check), sweep
(conversion survey over field strength), check_only (sampling verdict,
no propagation).
"""

from __future__ import annotations

import argparse
import csv
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .analysis import EnergySpectrum, SamplingError, anisotropy_harmonics, \
    conversion_fraction, energy_spread_run, far_ring_radius, lg_ray_bundle, \
    point_moments, ray_histogram, ray_trace, separability_metric
from .config import ConfigError, RunConfig, load_config
from .constants import EV
from .estimator import MultisliceSimulator
from .io import write_field, write_intensity_pgm, write_metrics, \
    write_phase_pgm, write_provenance
from .propagation import far_field
from .wavefield import LGParams, SpinorField, make_lg_beam, total_norm

FAR_PAD = 4
SWEEP_FIELDS_MT = (0.3, 1.0, 3.0, 10.0)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinslice",
        description="Propagate spin-1/2 beams through a compensated"
                    " multipole filter.")
    parser.add_argument("--config", required=True,
                        help="run configuration file")
    parser.add_argument("--output-dir", default=None,
                        help="override the configured output directory")
    parser.add_argument("--override-sampling", action="store_true",
                        help="run even if the phase-step check fails")
    parser.add_argument("--threads", type=int, default=None,
                        help="FFT worker threads (default: single-threaded)")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved for stochastic extensions; the"
                             " standard modes are deterministic")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        context = sfft.set_workers(args.threads) if args.threads \
            else nullcontext()
        with context:
            lines = _dispatch(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SamplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.report.summary(), file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(lines))
    return 0


def _dispatch(cfg: RunConfig, args) -> list[str]:
    override = cfg.override_sampling or args.override_sampling
    core_length = cfg.core_length
    if cfg.mode == "fringe_only":
        if cfg.fringe_length <= 0:
            raise ConfigError("fringe_only mode needs fringe_cm > 0")
        core_length = 0.0

    sim = MultisliceSimulator(
        energy_ev=cfg.energy_ev, q=cfg.q, b0=cfg.b0, r0=cfg.r0, beta=cfg.beta,
        core_length=core_length, fringe_length=cfg.fringe_length,
        compensation_offset=cfg.compensation_offset, n=cfg.n,
        extent=cfg.extent, n_slices=cfg.n_slices,
        relativistic_correction=cfg.relativistic_correction,
        override_sampling=override or cfg.mode == "check_only")
    sim.fit()

    out_dir = Path(args.output_dir if args.output_dir else cfg.output_dir)
    lines = _summary_header(cfg, sim, out_dir)

    bundle = _Bundle(out_dir, cfg.formats)
    report = sim.report_
    bundle.metrics["sampling_ok"] = report.ok
    bundle.metrics["sampling_az_product"] = report.az_product
    bundle.metrics["sampling_a2_phase"] = report.a2_phase

    if cfg.mode == "check_only":
        lines.extend("  " + line for line in report.summary().splitlines())
    else:
        runner = {"near_field": _run_near, "far_field": _run_far,
                  "fringe_only": _run_far, "ray_trace": _run_rays,
                  "sweep": _run_sweep}[cfg.mode]
        lines.extend(runner(cfg, sim, bundle))

    bundle.finish(cfg)
    lines.append(f"wrote {len(bundle.files)} files to {out_dir}/")
    return lines


def _summary_header(cfg: RunConfig, sim: MultisliceSimulator,
                    out_dir: Path) -> list[str]:
    poles = 2 * (1 + abs(cfg.q))
    pole_name = {4: "quadrupole", 6: "hexapole", 8: "octupole"}.get(
        poles, f"{poles}-pole")
    fringes = "hard edges" if cfg.fringe_length == 0 \
        else f"{cfg.fringe_length * 100:g} cm ramps"
    report = sim.report_
    margin = min(report.az_margin, report.a2_margin)
    lines = [
        f"device: {pole_name}, B0 {cfg.b0 * 1e3:g} mT at r0"
        f" {cfg.r0 * 1e6:g} um, core {cfg.core_length * 100:g} cm, {fringes}",
        f"beam:   {cfg.energy_ev / 1e3:g} keV, winding {cfg.ell:+d}, waist"
        f" {cfg.waist * 1e6:.4g} um, spin {cfg.spin}",
        f"grid:   {cfg.n} x {cfg.n}, extent {cfg.extent * 1e6:g} um"
        f" (pixel {sim.grid_.dx * 1e9:.1f} nm), {cfg.n_slices} slices",
        f"check:  {'ok' if report.ok else 'FAILED'}"
        f" (binding {report.binding}, margin {margin:.3g}x)",
        f"mode:   {cfg.mode} -> {out_dir}/",
    ]
    if cfg.compensation_offset != 0.0:
        lines.insert(1, f"        compensation detuned by"
                        f" {cfg.compensation_offset:+.3e}")
    if cfg.sigma_ev > 0:
        lines.insert(2, f"        energy spread sigma {cfg.sigma_ev:g} eV,"
                        f" {cfg.spectrum_samples} samples")
    return lines


def _input_spins(cfg: RunConfig) -> tuple[str, ...]:
    return ("up", "down") if cfg.spin == "both" else (cfg.spin,)


def _make_input(cfg: RunConfig, sim: MultisliceSimulator,
                spin: str) -> SpinorField:
    return make_lg_beam(sim.grid_, LGParams(ell=cfg.ell, w=cfg.waist,
                                            spin=spin))


def _record_conversion(bundle: "_Bundle", spin: str,
                       exit_field: SpinorField) -> list[str]:
    report = conversion_fraction(exit_field, spin)
    p_up, p_down = total_norm(exit_field)
    prefix = f"in_{spin}"
    bundle.metrics[f"{prefix}_norm_up"] = p_up
    bundle.metrics[f"{prefix}_norm_down"] = p_down
    bundle.metrics[f"{prefix}_flipped_fraction"] = report.flipped_fraction
    m = report.oam_flipped.dominant()
    fraction = report.oam_flipped.fraction(m)
    bundle.metrics[f"{prefix}_flipped_dominant_m"] = m
    bundle.metrics[f"{prefix}_flipped_dominant_fraction"] = fraction
    return [f"  {spin} input: flipped fraction {report.flipped_fraction:.3e},"
            f" dominant flipped winding m={m:+d} ({fraction:.1%})"]


def _run_near(cfg: RunConfig, sim: MultisliceSimulator,
              bundle: "_Bundle") -> list[str]:
    lines = []
    for spin in _input_spins(cfg):
        exit_field = sim.transform(_make_input(cfg, sim, spin))
        lines.extend(_record_conversion(bundle, spin, exit_field))
        bundle.dump(f"exit_{spin}.spsl", exit_field)
        for channel in ("up", "down"):
            component = exit_field.component(channel)
            bundle.image(f"near_{spin}_{channel}.pgm",
                         np.abs(component) ** 2)
            bundle.phase_image(f"near_{spin}_{channel}_phase.pgm",
                               np.angle(component))
    return lines


def _run_far(cfg: RunConfig, sim: MultisliceSimulator,
             bundle: "_Bundle") -> list[str]:
    lines = []
    ring = far_ring_radius(cfg.waist)
    bundle.metrics["ring_radius_per_m"] = ring
    channels: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    far_grid = None
    for spin in _input_spins(cfg):
        beam = _make_input(cfg, sim, spin)
        exit_field = sim.transform(beam)
        lines.extend(_record_conversion(bundle, spin, exit_field))
        bundle.dump(f"exit_{spin}.spsl", exit_field)
        if cfg.sigma_ev > 0:
            spectrum = EnergySpectrum.gaussian(cfg.energy_ev * EV,
                                               cfg.sigma_ev,
                                               cfg.spectrum_samples)
            averaged = energy_spread_run(
                beam, sim.filter_, sim.scheme_, sim.beam_, spectrum,
                pad=FAR_PAD,
                relativistic_correction=cfg.relativistic_correction)
            far_grid, up_i, down_i = averaged.grid, averaged.up, averaged.down
        else:
            far = far_field(exit_field, pad=FAR_PAD)
            far_grid = far.grid
            up_i = np.abs(far.up) ** 2
            down_i = np.abs(far.down) ** 2
        channels[spin] = (up_i, down_i)
        bundle.image(f"far_{spin}_up.pgm", up_i)
        bundle.image(f"far_{spin}_down.pgm", down_i)
    if cfg.spin == "both":
        mixed_up = 0.5 * (channels["up"][0] + channels["down"][0])
        mixed_down = 0.5 * (channels["up"][1] + channels["down"][1])
        sep_up = separability_metric(mixed_up, far_grid, ring)
        sep_down = separability_metric(mixed_down, far_grid, ring)
        bundle.metrics["separability_up"] = sep_up
        bundle.metrics["separability_down"] = sep_down
        lines.append(f"  separability (mixed input): up {sep_up:.3f},"
                     f" down {sep_down:.3f}")
    return lines


def _run_rays(cfg: RunConfig, sim: MultisliceSimulator,
              bundle: "_Bundle") -> list[str]:
    rays = lg_ray_bundle(cfg.waist, ell=cfg.ell)
    traced, dropped = ray_trace(sim.filter_, rays, sim.beam_,
                                bound=cfg.extent / 2.0)
    histogram = ray_histogram(traced, sim.grid_)
    moments = point_moments(traced.positions[:, 0], traced.positions[:, 1])
    harmonics = anisotropy_harmonics(histogram, sim.grid_)
    bundle.metrics["rays_total"] = len(rays)
    bundle.metrics["rays_dropped"] = dropped
    bundle.metrics["rays_centroid_x"] = moments.cx
    bundle.metrics["rays_centroid_y"] = moments.cy
    bundle.metrics["rays_rms_radius"] = moments.rms_radius
    bundle.metrics["rays_mxx"] = moments.mxx
    bundle.metrics["rays_myy"] = moments.myy
    bundle.metrics["rays_mxy"] = moments.mxy
    for k in range(1, len(harmonics)):
        bundle.metrics[f"rays_harmonic_{k}"] = harmonics[k]
    bundle.image("rays.pgm", histogram)
    return [f"  traced {len(rays)} rays ({dropped} left the grid),"
            f" rms radius {moments.rms_radius * 1e6:.3f} um,"
            f" fourfold harmonic {harmonics[4]:.3f}"]


def _run_sweep(cfg: RunConfig, sim: MultisliceSimulator,
               bundle: "_Bundle") -> list[str]:
    spin = "down" if cfg.spin == "both" else cfg.spin
    rows = []
    for b_mt in SWEEP_FIELDS_MT:
        for corrected in (True, False):
            params = sim.get_params()
            params.update(b0=b_mt * 1e-3, relativistic_correction=corrected,
                          override_sampling=True)
            run = MultisliceSimulator(**params).fit()
            exit_field = run.transform(_make_input(cfg, run, spin))
            fraction = conversion_fraction(exit_field, spin).flipped_fraction
            rows.append((b_mt, corrected, fraction))
    bundle.table("sweep.csv", ["b0_mt", "corrected", "flipped_fraction"],
                 [(f"{b:g}", str(int(c)), f"{f:.12e}") for b, c, f in rows])
    bundle.metrics["sweep_cells"] = len(rows)
    lines = [f"  conversion survey, {spin} input:"]
    for b_mt, corrected, fraction in rows:
        tag = "corrected" if corrected else "uncorrected"
        lines.append(f"    {b_mt:5.1f} mT  {tag:11s}  {fraction:.3e}")
    return lines


class _Bundle:
    """Collects output files and metrics for one run directory."""

    def __init__(self, directory: Path, formats: tuple[str, ...]) -> None:
        self.directory = directory
        self.formats = formats
        self.metrics: dict[str, float] = {}
        self.files: list[str] = []
        directory.mkdir(parents=True, exist_ok=True)

    def dump(self, name: str, field: SpinorField) -> None:
        if "spsl" not in self.formats:
            return
        write_field(self.directory / name, field)
        self.files.append(name)

    def image(self, name: str, raster: np.ndarray) -> None:
        if "pgm" not in self.formats:
            return
        factor = write_intensity_pgm(self.directory / name, raster)
        self.metrics[f"pgm_scale_{Path(name).stem}"] = factor
        self.files.append(name)

    def phase_image(self, name: str, raster: np.ndarray) -> None:
        if "pgm" not in self.formats:
            return
        write_phase_pgm(self.directory / name, raster)
        self.files.append(name)

    def table(self, name: str, header: list[str],
              rows: list[tuple[str, ...]]) -> None:
        with open(self.directory / name, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
        self.files.append(name)

    def finish(self, cfg: RunConfig) -> None:
        write_metrics(self.directory / "metrics.csv", self.metrics)
        write_provenance(self.directory / "provenance.json",
                         cfg.as_provenance())
        self.files.extend(["metrics.csv", "provenance.json"])


if __name__ == "__main__":
    sys.exit(main())
