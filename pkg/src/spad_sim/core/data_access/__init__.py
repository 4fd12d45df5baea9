from spad_sim.core.data_access.atomic_output import atomic_output
from spad_sim.core.data_access.portable_maps import read_pfm, read_pgm, write_pfm, write_pgm

__all__ = ["atomic_output", "read_pfm", "read_pgm", "write_pfm", "write_pgm"]
