#!/usr/bin/env python3
"""
Test runner script for the duplex toolkit.
"""

import sys
import subprocess
import os


def _pytest(target, extra=()):
    os.environ.setdefault("DUPLEX_ENV", "testing")

    try:
        result = subprocess.run([
            sys.executable, "-m", "pytest",
            target,
            "-v",
            "--tb=short",
            *extra,
        ], capture_output=True, text=True)

        print(result.stdout)
        if result.stderr:
            print("Errors:", result.stderr)

        return result.returncode == 0

    except FileNotFoundError:
        print("Error: pytest not found. Please install test dependencies:")
        print("pip install -r requirements.txt")
        return False


def run_tests(fast=False):
    """Run the test suite, optionally without the slow property suites."""
    print("Running duplex toolkit tests...")
    return _pytest("tests/", ("-m", "not slow") if fast else ())


def run_specific_test(test_name):
    """Run one test, given as file::Class::test or a bare node id."""
    print(f"Running specific test: {test_name}")
    target = test_name if test_name.startswith("tests/") else f"tests/{test_name}"
    return _pytest(target)


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "--fast":
        success = run_tests(fast=True)
    elif len(sys.argv) > 1:
        success = run_specific_test(sys.argv[1])
    else:
        success = run_tests()

    sys.exit(0 if success else 1)
