import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import typer

from spad_sim.core.bitstream import (
    CountImage,
    accumulate,
    format_exposure,
    iter_windows,
    read_stream,
    to_intensity,
    write_stream,
)
from spad_sim.core.data_access.atomic_output import atomic_output
from spad_sim.core.data_access.portable_maps import write_pgm
from spad_sim.core.data_access.run_config import RunConfig, default_output_dir
from spad_sim.core.experiments import SweepEngine, write_sweep_csv
from spad_sim.core.metrics import IntensityImage, report_batch, write_reports_jsonl
from spad_sim.core.photon_model import SensorConfig
from spad_sim.core.reconstruction import ExposureStack, estimate_flux_image, hdr_fuse, recommend_binary_exposure
from spad_sim.core.reconstruction.hdr_fusion import MASK_NONCONVERGED
from spad_sim.core.simulator import (
    ConventionalCameraConfig,
    FluxMap,
    SceneSpec,
    generate_scene,
    simulate_conventional,
    simulate_spad,
)
from spad_sim.errors import DomainError

logger = logging.getLogger(__name__)

app = typer.Typer(help="Single-photon camera simulation, reconstruction and image-quality toolkit.")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
DATA_ERRORS = (ValueError, OSError, KeyError, IndexError)

SENSOR_DEFAULTS = SensorConfig()


@app.callback()
def configure(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")):
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _output_path(output_dir: Optional[Path], name: str) -> Path:
    """Resolve an output file name, refusing anything that escapes the output directory."""
    base = (output_dir or default_output_dir()).resolve()
    target = (base / name).resolve()
    if base != target.parent and base not in target.parents:
        raise typer.BadParameter(f"output '{name}' escapes the output directory {base}")
    return target


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def _write_sidecar(path: Path, doc: Dict[str, Any]) -> None:
    with atomic_output(_sidecar_path(path), mode="w") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _read_sidecar(path: Path) -> Dict[str, Any]:
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        return {}
    return json.loads(sidecar.read_text(encoding="utf-8"))


def _require_input(path: Path) -> None:
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")


@app.command()
def scene(
    spec_file: Path = typer.Argument(..., help="Scene spec (JSON or YAML)."),
    width: Optional[int] = typer.Option(None, help="Overrides the spec's width."),
    height: Optional[int] = typer.Option(None, help="Overrides the spec's height."),
    seed: int = typer.Option(0),
    out: str = typer.Option("flux.pfm", help="Output PFM name."),
    output_dir: Optional[Path] = typer.Option(None, help="Defaults to $SPAD_SIM_OUTPUT_DIR or data/output."),
):
    """Render a synthetic scene to a flux map (PFM)."""
    target = _output_path(output_dir, out)
    spec = SceneSpec.load(spec_file)
    flux = generate_scene(spec, width, height, seed=seed)
    flux.save_pfm(target)
    _write_sidecar(target, {"scene": spec.to_dict(), "width": flux.width, "height": flux.height, "seed": seed})
    logger.info(f"Wrote flux map {target}")


@app.command()
def simulate(
    flux_file: Path = typer.Argument(..., help="Ground-truth flux map (PFM)."),
    frames: int = typer.Option(..., "--frames", "-n", help="Number of binary frames."),
    seed: int = typer.Option(0),
    eta: float = typer.Option(SENSOR_DEFAULTS.eta),
    dark_rate: float = typer.Option(SENSOR_DEFAULTS.dark_rate),
    tau_bin: float = typer.Option(SENSOR_DEFAULTS.tau_bin, help="Binary exposure per frame, seconds."),
    workers: int = typer.Option(1),
    out: str = typer.Option("stream.sbs"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Sample a SPAD binary frame stream (.sbs) from a flux map."""
    target = _output_path(output_dir, out)
    _require_input(flux_file)
    flux = FluxMap.load_pfm(flux_file)
    cfg = SensorConfig(eta=eta, dark_rate=dark_rate, tau_bin=tau_bin, width=flux.width, height=flux.height)
    stream = simulate_spad(flux, cfg, frames, seed, workers=workers)
    write_stream(stream, target)
    _write_sidecar(
        target,
        {
            "flux": str(flux_file),
            "sensor": cfg.to_dict(),
            "frames": frames,
            "seed": seed,
            "exposure": format_exposure(frames * tau_bin),
        },
    )


@app.command("accumulate")
def accumulate_cmd(
    stream_file: Path = typer.Argument(..., help="Binary frame stream (.sbs)."),
    first: int = typer.Option(0, help="First frame of the window."),
    frames: Optional[int] = typer.Option(None, help="Frames per window; defaults to the rest of the stream."),
    bit_depth: int = typer.Option(8, help="Output gray-level depth."),
    all_windows: bool = typer.Option(False, help="Write every consecutive window of --frames frames."),
    counts_out: Optional[str] = typer.Option(None, help="Also write raw counts (PGM with maxval = frames)."),
    workers: int = typer.Option(1),
    out: str = typer.Option("intensity.pgm"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Sum binary frames into an intensity image of arbitrary bit depth."""
    target = _output_path(output_dir, out)
    counts_target = _output_path(output_dir, counts_out) if counts_out else None
    _require_input(stream_file)
    stream = read_stream(stream_file)
    cfg = stream.sensor_config

    if all_windows:
        if frames is None:
            raise typer.BadParameter("--all-windows needs --frames")
        windows = list(iter_windows(stream, frames, workers=workers))
        if not windows:
            raise DomainError(f"{stream_file} has {stream.frame_count} frames, fewer than one window of {frames}")
    else:
        windows = [accumulate(stream, first, frames, workers=workers)]

    for index, ci in enumerate(windows):
        path = target.with_name(f"{target.stem}_w{index:04d}{target.suffix}") if all_windows else target
        to_intensity(ci, bit_depth).save_pgm(path)
        window_first = index * ci.n_frames if all_windows else first
        doc = {
            "stream": str(stream_file),
            "first_frame": window_first,
            "frames": ci.n_frames,
            "bit_depth": bit_depth,
            "exposure_s": ci.n_frames * cfg.tau_bin,
            "exposure": format_exposure(ci.n_frames * cfg.tau_bin),
            "sensor": cfg.to_dict(),
        }
        _write_sidecar(path, doc)
        if counts_target is not None and not all_windows:
            ci.save_pgm(counts_target)
            _write_sidecar(counts_target, doc)
        logger.info(f"Wrote {path} ({ci.n_frames} frames, {doc['exposure']} total exposure)")


def _sensor_for_counts(counts_file: Path, ci: CountImage, eta, dark_rate, tau_bin) -> SensorConfig:
    """CLI options win; otherwise the count image's sidecar; otherwise defaults."""
    sensor_doc = _read_sidecar(counts_file).get("sensor", {})
    overrides = {"eta": eta, "dark_rate": dark_rate, "tau_bin": tau_bin}
    sensor_doc.update({k: v for k, v in overrides.items() if v is not None})
    sensor_doc.update({"width": ci.width, "height": ci.height})
    return SensorConfig.from_dict(sensor_doc)


@app.command()
def estimate(
    counts_file: Path = typer.Argument(..., help="Count image (PGM with maxval = frames)."),
    eta: Optional[float] = typer.Option(None),
    dark_rate: Optional[float] = typer.Option(None),
    tau_bin: Optional[float] = typer.Option(None),
    confidence: float = typer.Option(0.95),
    out: str = typer.Option("estimate.pfm"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Per-pixel maximum-likelihood flux from detection counts."""
    target = _output_path(output_dir, out)
    mask_target = target.with_name(f"{target.stem}_saturated.pgm")
    _require_input(counts_file)
    ci = CountImage.load_pgm(counts_file)
    cfg = _sensor_for_counts(counts_file, ci, eta, dark_rate, tau_bin)
    image = estimate_flux_image(ci, cfg, confidence)
    image.flux.save_pfm(target)
    write_pgm(image.saturated_mask.astype("uint8"), 1, mask_target)
    _write_sidecar(
        target,
        {
            "counts": str(counts_file),
            "frames": ci.n_frames,
            "sensor": cfg.to_dict(),
            "confidence": confidence,
            "saturated_pixels": int(image.saturated_mask.sum()),
            "saturation_mask": mask_target.name,
        },
    )


@app.command()
def hdr(
    stream_files: List[Path] = typer.Argument(..., help="Streams of the same scene at different exposures."),
    workers: int = typer.Option(1),
    out: str = typer.Option("hdr.pfm"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Fuse several exposures into one HDR flux map by joint maximum likelihood."""
    target = _output_path(output_dir, out)
    mask_target = target.with_name(f"{target.stem}_mask.pgm")
    for path in stream_files:
        _require_input(path)
    stack = ExposureStack.from_streams(stream_files, workers=workers)
    result = hdr_fuse(stack)
    result.flux.save_pfm(target)
    write_pgm(result.mask_labels(), MASK_NONCONVERGED, mask_target)
    _write_sidecar(
        target,
        {
            "streams": [str(p) for p in stream_files],
            "exposures": [{"tau_bin": e.tau_bin, "frames": e.n_frames} for e in stack.entries],
            "mask": mask_target.name,
            "mask_labels": {"valid": 0, "saturated": 1, "underflow": 2, "nonconverged": 3},
            "solver": result.solver_stats(),
        },
    )
    if result.dynamic_range_db is not None:
        logger.info(f"Dynamic range {result.dynamic_range_db:.1f} dB")


@app.command()
def conventional(
    flux_file: Path = typer.Argument(..., help="Ground-truth flux map (PFM)."),
    exposure: float = typer.Option(..., help="Exposure time, seconds."),
    eta_c: float = typer.Option(0.7),
    full_well: float = typer.Option(10000.0),
    read_noise: float = typer.Option(2.5),
    bit_depth: int = typer.Option(8),
    optics_match: float = typer.Option(1.0, help="Light-collection ratio relative to the SPAD optics."),
    seed: int = typer.Option(0),
    out: str = typer.Option("conventional.pgm"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Render the reference conventional-camera frame."""
    target = _output_path(output_dir, out)
    _require_input(flux_file)
    flux = FluxMap.load_pfm(flux_file)
    ccfg = ConventionalCameraConfig(eta_c=eta_c, full_well=full_well, read_noise=read_noise, bit_depth=bit_depth)
    simulate_conventional(flux, ccfg, exposure, optics_match, seed).save_pgm(target)
    _write_sidecar(
        target,
        {
            "flux": str(flux_file),
            "camera": ccfg.to_dict(),
            "exposure_s": exposure,
            "exposure": format_exposure(exposure),
            "optics_match": optics_match,
            "seed": seed,
        },
    )


@app.command()
def metrics(
    images: List[Path] = typer.Argument(..., help="PGM images to measure."),
    reference: Optional[Path] = typer.Option(None, help="Reference PGM for MS-SSIM and PSNR."),
    out: str = typer.Option("metrics.jsonl"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Image-quality report, one JSON line per image."""
    target = _output_path(output_dir, out)
    ref = None
    if reference is not None:
        _require_input(reference)
        ref = IntensityImage.load_pgm(reference)
    entries = report_batch(images, ref)
    write_reports_jsonl(entries, target)
    failed = sum(1 for e in entries if "error" in e)
    if failed:
        logger.warning(f"{failed} of {len(entries)} image(s) could not be measured")


@app.command()
def sweep(
    config: Path = typer.Option(..., "--config", "-c", help="Run config (JSON or YAML)."),
    overrides: Optional[List[str]] = typer.Option(None, "--set", help="Override a config value: key.path=value."),
    workers: Optional[int] = typer.Option(None),
    out: str = typer.Option("sweep.csv"),
    output_dir: Optional[Path] = typer.Option(None),
):
    """Run an illumination x exposure x camera sweep and write a metrics CSV."""
    _require_input(config)
    try:
        run = RunConfig.load(config, overrides or [])
    except DomainError as e:
        if overrides:
            raise typer.BadParameter(str(e), param_hint="--set") from e
        raise
    target = _output_path(output_dir or run.output_dir, out)
    table = SweepEngine(run, max_workers=workers).run()
    write_sweep_csv(table, target)
    _write_sidecar(target, {"config": str(config), "overrides": list(overrides or []), "run": run.to_dict()})


@app.command()
def exposure(
    counts_file: Path = typer.Argument(..., help="Count image (PGM with maxval = frames)."),
    percentile: float = typer.Option(50.0, help="Flux percentile to place at the information optimum."),
    eta: Optional[float] = typer.Option(None),
    dark_rate: Optional[float] = typer.Option(None),
    tau_bin: Optional[float] = typer.Option(None),
):
    """Recommend the binary exposure that maximizes flux precision."""
    _require_input(counts_file)
    ci = CountImage.load_pgm(counts_file)
    cfg = _sensor_for_counts(counts_file, ci, eta, dark_rate, tau_bin)
    tau = recommend_binary_exposure(ci, cfg, percentile)
    typer.echo(json.dumps({"tau_bin": tau, "label": format_exposure(tau), "percentile": percentile}))


def main(argv: List[str] = None) -> int:
    try:
        result = app(args=argv, prog_name="spad-sim", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except DATA_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_DATA
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
