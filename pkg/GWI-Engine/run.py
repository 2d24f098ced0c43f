"""
GWI Engine Runner Script

Convenience entry point for the command-line application.
Run this file directly: python run.py --help

Examples:
- python run.py moments --scenario scenarios/poisson-critical.json
- python run.py converge --scenario scenarios/poisson-critical.json --threads 8
- GWI_SEED=7 python run.py simulate --scenario scenarios/twopoint-bounded.json --format binary
"""

from app.main import cli

if __name__ == "__main__":
    cli()
