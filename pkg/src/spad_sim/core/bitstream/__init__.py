from spad_sim.core.bitstream.accumulator import (
    CountImage,
    FrameAccumulator,
    accumulate,
    equivalent_bit_depth,
    equivalent_exposure,
    format_exposure,
    frame_popcounts,
    frames_for_exposure,
    iter_windows,
    to_intensity,
)
from spad_sim.core.bitstream.frames import BinaryFrame, pack_frame, pack_frames, row_bytes, unpack_frame
from spad_sim.core.bitstream.stream_io import (
    BitplaneStream,
    StreamHeader,
    iter_frame_chunks,
    read_stream,
    write_stream,
)

__all__ = [
    "BinaryFrame",
    "BitplaneStream",
    "CountImage",
    "FrameAccumulator",
    "StreamHeader",
    "accumulate",
    "equivalent_bit_depth",
    "equivalent_exposure",
    "format_exposure",
    "frame_popcounts",
    "frames_for_exposure",
    "iter_frame_chunks",
    "iter_windows",
    "pack_frame",
    "pack_frames",
    "read_stream",
    "row_bytes",
    "to_intensity",
    "unpack_frame",
    "write_stream",
]
