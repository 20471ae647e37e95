#!/usr/bin/env python3
"""
Script to run the orthoreg integration tests.

These train real (toy-sized) models over several seeds and take minutes
rather than seconds. Pass --fast to skip the multi-seed experiments.
"""

import os
import subprocess
import sys
from pathlib import Path


def main():
    """Run integration tests."""
    project_root = Path(__file__).parent.parent
    os.chdir(project_root)

    marker = "integration and not slow" if "--fast" in sys.argv[1:] else "integration"
    cmd = [
        sys.executable,
        "-m",
        "pytest",
        "tests/integration/",
        "-m",
        marker,
        "--verbose",
        "--tb=short",
        "--strict-markers",
    ]

    print("Running integration tests...")
    print(f"Command: {' '.join(cmd)}")
    print("-" * 50)

    try:
        subprocess.run(cmd, check=True)
        print("-" * 50)
        print("Integration tests passed")
        return 0
    except subprocess.CalledProcessError as e:
        print("-" * 50)
        print(f"Integration tests failed with exit code {e.returncode}")
        return e.returncode


if __name__ == "__main__":
    sys.exit(main())
