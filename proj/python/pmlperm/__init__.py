"""Permanent approximations and approximate profile maximum likelihood."""

from ._core import (
    DimensionError,
    Error,
    InvalidArgument,
    PmlResult,
    Profile,
    SizeLimitError,
    all_profiles,
    approximate_pml,
    estimate_property,
    exact_pml_oracle,
    log_bethe,
    log_permanent,
    log_scaled_sinkhorn,
    log_sinkhorn,
    permanent,
    profile_of_sequence,
    profile_of_string,
    profile_probability,
    run_cli,
)

__all__ = [
    "DimensionError",
    "Error",
    "InvalidArgument",
    "PmlResult",
    "Profile",
    "SizeLimitError",
    "all_profiles",
    "approximate_pml",
    "estimate_property",
    "exact_pml_oracle",
    "log_bethe",
    "log_permanent",
    "log_scaled_sinkhorn",
    "log_sinkhorn",
    "main",
    "permanent",
    "profile_of_sequence",
    "profile_of_string",
    "profile_probability",
    "run_cli",
]


def main(argv=None):
    """Console entry point mirroring the C++ command-line tool."""
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
