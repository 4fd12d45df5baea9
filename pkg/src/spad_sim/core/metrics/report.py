import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from spad_sim.core.data_access.atomic_output import atomic_output
from spad_sim.core.metrics.image_quality import entropy, ms_ssim_with_scales, psnr, rms_contrast, sharpness
from spad_sim.core.metrics.intensity_image import IntensityImage

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCHEMA_VERSION = "1"
# JSON has no infinity; identical images report this PSNR
INFINITE_PSNR = "inf"


@dataclass(frozen=True)
class MetricsReport:
    """One image's metric record; field order is the JSON and CSV column order."""

    source: Optional[str]
    width: int
    height: int
    bit_depth: int
    contrast: float
    entropy_bits: float
    sharpness: float
    ms_ssim: Optional[float] = None
    ms_ssim_scales: Optional[int] = None
    psnr_db: Optional[float] = None
    exposure_s: Optional[float] = None
    exposure_label: Optional[str] = None
    config: Dict[str, Any] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        if doc["psnr_db"] is not None and math.isinf(doc["psnr_db"]):
            doc["psnr_db"] = INFINITE_PSNR
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "MetricsReport":
        doc = dict(doc)
        if doc.get("psnr_db") == INFINITE_PSNR:
            doc["psnr_db"] = math.inf
        return cls(**doc)


def build_report(
    img: IntensityImage,
    reference: IntensityImage = None,
    source: str = None,
    exposure_s: float = None,
    exposure_label: str = None,
    config: Dict[str, Any] = None,
) -> MetricsReport:
    ms_value = scales = psnr_value = None
    if reference is not None:
        ms_value, scales = ms_ssim_with_scales(img, reference)
        psnr_value = psnr(img, reference)
    return MetricsReport(
        source=source,
        width=img.width,
        height=img.height,
        bit_depth=img.bit_depth,
        contrast=rms_contrast(img),
        entropy_bits=entropy(img),
        sharpness=sharpness(img),
        ms_ssim=ms_value,
        ms_ssim_scales=scales,
        psnr_db=psnr_value,
        exposure_s=exposure_s,
        exposure_label=exposure_label,
        config=dict(config or {}),
    )


def report_batch(paths: Iterable[PathLike], reference: IntensityImage = None) -> List[Dict[str, Any]]:
    """
    One entry per input PGM: a report dict, or {"source", "error"} when the
    file could not be read or measured. The batch never stops early.
    """
    entries: List[Dict[str, Any]] = []
    for path in paths:
        try:
            img = IntensityImage.load_pgm(path)
            entries.append(build_report(img, reference, source=str(path)).to_dict())
        except (OSError, ValueError) as e:
            logger.warning(f"Skipping {path}: {e}")
            entries.append({"source": str(path), "error": str(e), "schema_version": SCHEMA_VERSION})
    return entries


def write_reports_jsonl(entries: Iterable[Dict[str, Any]], path: PathLike) -> None:
    with atomic_output(path, mode="w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
    logger.info(f"Wrote metrics report {path}")


def read_reports_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
