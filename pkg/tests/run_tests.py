"""
Non-interactive test runner - runs every test module and prints a summary.
"""

import sys
import os

# Add parent directory to path to import core modules
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

# Use test configuration
sys.path.insert(0, os.path.dirname(__file__))
import config_test

import pytest

TEST_MODULES = [
    ("Linear algebra core", "test_linalg_core.py"),
    ("Subalgebras", "test_algebra.py"),
    ("States and entropies", "test_states_entropy.py"),
    ("Recovery maps", "test_recovery.py"),
    ("Stability bounds", "test_stability.py"),
    ("Fixed-point structure", "test_petz_structure.py"),
    ("GNS projection", "test_gns_conditional.py"),
    ("Classical oracle and SSA", "test_classical_ssa.py"),
    ("Input validation", "test_data_validation.py"),
    ("Command line", "test_cli.py"),
]


def run_all_tests():
    """Run all test modules"""
    here = os.path.dirname(os.path.abspath(__file__))
    results_summary = []

    for name, module in TEST_MODULES:
        print("\n" + "="*80)
        print(f"TEST: {name}")
        print("="*80)

        try:
            code = pytest.main(["-q", os.path.join(here, module)])
            results_summary.append((name, code == 0))
        except Exception as e:
            print(f"\n[ERROR] UNEXPECTED ERROR: {str(e)}")
            results_summary.append((name, False))

        print("\n" + "-"*80)

    # Print summary
    print("\n" + "="*80)
    print("TEST SUMMARY")
    print("="*80)
    for name, success in results_summary:
        status = "[PASS]" if success else "[FAIL]"
        print(f"{status:8s} - {name}")
    print("="*80 + "\n")
    return all(success for _, success in results_summary)


if __name__ == "__main__":
    sys.exit(0 if run_all_tests() else 1)
