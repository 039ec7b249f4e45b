"""
Utility functions shared across leobeam modules.

This module contains the decibel conversion, human readable formatting of bit
counts, output directory validation and the argparse options shared by the
subcommands.
"""

import argparse
import os

import numpy as np
from numpy.typing import ArrayLike


def db_to_linear(value_db: ArrayLike) -> np.ndarray:
    """Convert decibels to a linear power ratio."""
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def format_bits(bits: float) -> str:
    """Format a bit count to human readable format."""
    if bits == 0:
        return "0 b"

    size_names = ["b", "kb", "Mb", "Gb", "Tb"]
    i = 0
    size = float(bits)

    while abs(size) >= 1000.0 and i < len(size_names) - 1:
        size /= 1000.0
        i += 1

    if i == 0:
        return f"{size:.0f} {size_names[i]}"
    else:
        return f"{size:.2f} {size_names[i]}"


def validate_output_directory(directory_path: str, create: bool = True) -> tuple[bool, str]:
    """
    Validate that an output directory exists or can be created.

    Args:
        directory_path: Path to validate
        create: Create the directory (and parents) when it is missing

    Returns:
        Tuple of (is_valid, absolute_path)
        If invalid, absolute_path will be empty string
    """
    abs_path = os.path.abspath(directory_path)

    if os.path.exists(abs_path) and not os.path.isdir(abs_path):
        print(f"Error: Cannot write outputs - '{abs_path}' is not a directory.")
        return False, ""

    if not os.path.exists(abs_path):
        if not create:
            print(f"Error: Cannot write outputs - directory '{abs_path}' does not exist.")
            return False, ""
        try:
            os.makedirs(abs_path, exist_ok=True)
        except OSError as e:
            print(f"Error: Cannot create output directory '{abs_path}': {e}")
            return False, ""

    return True, abs_path


def add_common_arguments(parser: argparse.ArgumentParser, include_scenario: bool = True):
    """Add arguments shared across the run and sweep subcommands."""
    if include_scenario:
        parser.add_argument(
            "-s",
            "--scenario",
            metavar="FILE",
            help="Scenario TOML file (default: built-in reference scenario)",
        )

        parser.add_argument(
            "--set",
            dest="overrides",
            metavar="KEY=VALUE",
            action="append",
            default=[],
            help="Override a scenario value by dotted key, e.g. handover.sigma0=0.5 (repeatable)",
        )

        parser.add_argument(
            "--policy",
            dest="policies",
            metavar="STAGE=NAME",
            action="append",
            default=[],
            help="Select a policy per stage, e.g. handover=load_balance (repeatable)",
        )

        parser.add_argument("--epochs", type=int, metavar="N", help="Number of epochs to simulate")

        parser.add_argument(
            "--full-scale",
            action="store_true",
            help="Simulate the full-length horizon (20000 epochs)",
        )

    parser.add_argument("-v", "--verbose", action="store_true", help="Show debug logging")

    parser.add_argument("--no-color", action="store_true", help="Disable colored output")
