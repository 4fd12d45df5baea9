import logging
import time

import numpy as np

from spad_sim.core.bitstream import BitplaneStream, StreamHeader, accumulate, row_bytes

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


def benchmark_accumulate(frames: int = 256, width: int = 512, height: int = 512, repeats: int = 5, workers: int = 1):
    rng = np.random.default_rng(0)
    # random packed bytes; width is a multiple of 8 so there is no row padding
    payload = rng.integers(0, 256, size=(frames, height, row_bytes(width)), dtype=np.uint8)
    header = StreamHeader(width, height, frames, 1e-5, 0.5, 100.0, 0)
    stream = BitplaneStream(header=header, payload=payload)

    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        accumulate(stream, workers=workers)
        timings.append(time.perf_counter() - start)

    best = min(timings)
    megabytes = payload.nbytes / 1e6
    logger.info(
        f"accumulate {frames} x {width}x{height} ({megabytes:.1f} MB, {workers} worker(s)): "
        f"best {best * 1e3:.1f} ms, {megabytes / best:.0f} MB/s"
    )
    return best


if __name__ == "__main__":
    benchmark_accumulate()
    benchmark_accumulate(workers=4)
