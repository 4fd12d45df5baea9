from spad_sim.core.metrics.image_quality import entropy, ms_ssim, ms_ssim_with_scales, psnr, rms_contrast, sharpness
from spad_sim.core.metrics.intensity_image import MAX_BIT_DEPTH, IntensityImage, is_usable
from spad_sim.core.metrics.report import (
    SCHEMA_VERSION,
    MetricsReport,
    build_report,
    read_reports_jsonl,
    report_batch,
    write_reports_jsonl,
)

__all__ = [
    "MAX_BIT_DEPTH",
    "SCHEMA_VERSION",
    "IntensityImage",
    "MetricsReport",
    "build_report",
    "entropy",
    "is_usable",
    "ms_ssim",
    "ms_ssim_with_scales",
    "psnr",
    "read_reports_jsonl",
    "report_batch",
    "rms_contrast",
    "sharpness",
    "write_reports_jsonl",
]
