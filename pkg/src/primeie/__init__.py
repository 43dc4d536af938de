"""primeie: desk-scale event extraction with query-primed encoder inputs."""
import os

# Tiny-matrix workloads: BLAS threading only adds overhead and jitter.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

__version__ = "0.1.0"
