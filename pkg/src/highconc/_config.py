"""Shared tolerances and runtime switches."""

import os

# geometry
UNIT_NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
ROUNDTRIP_TOL = 1e-10
ZERO_NORM_TOL = 1e-14

# quadrature
QUAD_ATOL = 1e-12
QUAD_RTOL = 1e-10
QUAD_MAX_PANELS = 2**15

# sampling
CDF_KNOTS = 4097
TRANSFORM_THRESHOLD = 20.0

# dataset ingestion
DATASET_UNIT_TOL = 1e-10
INGEST_NORM_TOL = 1e-3
INGEST_MIN_NORM = 1e-8

SCHEMA_VERSION = 1
SEED_ENV = "HIGHCONC_SEED"


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


# HIGHCONC_DISABLE_JIT=1 forces the pure-numpy kernels
DISABLE_JIT = _flag("HIGHCONC_DISABLE_JIT")
